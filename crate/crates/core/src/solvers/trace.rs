use std::io::Write;

use serde::Serialize;

use super::Method;
use crate::scalar::Scalar;

/// Iterations written in full before file rows are thinned to every 10th.
pub const FULL_RESOLUTION_ITERS: usize = 1000;

pub const CSV_HEADER: [&str; 7] = [
    "k",
    "dist",
    "cost_gap",
    "agg_grad_norm",
    "err_norm",
    "err_bound_rhs",
    "thm1_bound",
];

/// Per-iteration record. Optional columns are empty where the quantity is
/// undefined for the method (IG has no aggregate error, for instance).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow<T: Scalar> {
    pub k: usize,
    /// `‖x^k − x*‖`
    pub dist: T,
    /// `f(x^k) − f*`
    pub cost_gap: T,
    /// `‖g^k‖`, or `‖∇f(x^k)‖` for methods without a table.
    pub agg_grad_norm: T,
    /// `‖e^k‖`
    pub err_norm: Option<T>,
    /// Right-hand side of the method's gradient-error bound at `k`.
    pub err_bound_rhs: Option<T>,
    /// Predicted distance bound at `k`.
    pub thm1_bound: Option<T>,
}

/// Full in-memory history of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace<T: Scalar> {
    pub method: Method,
    pub gamma: T,
    pub beta: T,
    pub delay_bound: usize,
    pub components: usize,
    pub rows: Vec<TraceRow<T>>,
    /// Whether the stopping tolerance was reached (as opposed to the
    /// iteration cap).
    pub converged: bool,
}

impl<T: Scalar> Trace<T> {
    pub fn dists(&self) -> Vec<T> {
        self.rows.iter().map(|r| r.dist).collect()
    }

    pub fn final_row(&self) -> &TraceRow<T> {
        self.rows.last().expect("trace has at least one row")
    }

    pub fn final_k(&self) -> usize {
        self.final_row().k
    }

    /// Rows kept in trace files: every iteration up to
    /// [`FULL_RESOLUTION_ITERS`], then every 10th, plus the final row.
    pub fn file_rows(&self) -> impl Iterator<Item = &TraceRow<T>> + '_ {
        let last = self.rows.len().saturating_sub(1);
        self.rows
            .iter()
            .enumerate()
            .filter(move |(idx, r)| {
                r.k <= FULL_RESOLUTION_ITERS || r.k % 10 == 0 || *idx == last
            })
            .map(|(_, r)| r)
    }

    /// Writes the down-sampled trace as CSV with the fixed header.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        self.write_csv_labeled(out, None)
    }

    /// Same as [`Trace::write_csv`] with a leading `method` column when a
    /// label is given (used for combined comparison files).
    pub fn write_csv_labeled<W: Write>(&self, out: W, label: Option<&str>) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        write_rows(&mut w, std::slice::from_ref(self), label.map(|l| vec![l]), true)?;
        w.flush()?;
        Ok(())
    }
}

fn fmt_opt<T: Scalar>(v: Option<T>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

pub(crate) fn write_rows<W: Write, T: Scalar>(
    w: &mut csv::Writer<W>,
    traces: &[Trace<T>],
    labels: Option<Vec<&str>>,
    header: bool,
) -> csv::Result<()> {
    if header {
        let mut h: Vec<&str> = Vec::new();
        if labels.is_some() {
            h.push("method");
        }
        h.extend(CSV_HEADER);
        w.write_record(&h)?;
    }
    for (t, trace) in traces.iter().enumerate() {
        for r in trace.file_rows() {
            let mut rec = Vec::with_capacity(8);
            if let Some(labels) = &labels {
                rec.push(labels[t].to_string());
            }
            rec.push(r.k.to_string());
            rec.push(format!("{:e}", r.dist));
            rec.push(format!("{:e}", r.cost_gap));
            rec.push(format!("{:e}", r.agg_grad_norm));
            rec.push(fmt_opt(r.err_norm));
            rec.push(fmt_opt(r.err_bound_rhs));
            rec.push(fmt_opt(r.thm1_bound));
            w.write_record(&rec)?;
        }
    }
    Ok(())
}

/// Combined CSV of several traces with a leading `method` column.
pub fn write_combined_csv<W: Write, T: Scalar>(
    out: W,
    traces: &[Trace<T>],
    labels: &[&str],
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    write_rows(&mut w, traces, Some(labels.to_vec()), true)?;
    w.flush()?;
    Ok(())
}

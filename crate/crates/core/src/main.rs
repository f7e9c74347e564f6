use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use iag_core::harness::{self, config::ExperimentConfig, suite, HarnessError};
use iag_core::solvers::write_combined_csv;

#[derive(Parser)]
#[command(name = "iag", version, about = "Incremental aggregated gradient experiments and rate certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment; writes a trace CSV and a report JSON.
    Run(ExperimentArgs),
    /// Run several methods on one problem; writes a combined CSV and a report.
    Compare(ExperimentArgs),
    /// Print the rate certificate for (mu, L, K) as JSON.
    Certify {
        #[arg(long)]
        mu: f64,
        #[arg(long = "L")]
        l: f64,
        #[arg(long = "K")]
        k: usize,
        /// Defaults to gamma* (or 2/(mu+L) when K = 0).
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Run the acceptance suite.
    Suite,
    /// Finite-difference check of the configured problem's gradients.
    Gradcheck(ExperimentArgs),
}

#[derive(clap::Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: current directory).
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl ExperimentArgs {
    fn load(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), HarnessError> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn prepare(out: &Path, file: &Path) -> Result<PathBuf, HarnessError> {
    let path = out.join(file);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(path)
}

fn failed_checks(report: &harness::report::Report) -> Vec<String> {
    report
        .runs
        .iter()
        .flat_map(|r| r.checks.iter().filter(|c| !c.ok).map(move |c| format!("{}: {}", r.label, c.name)))
        .collect()
}

fn cmd_run(args: &ExperimentArgs) -> Result<bool, HarnessError> {
    let cfg = args.load()?;
    let exp = cfg.resolve()?;
    let out = harness::run_experiment(&exp)?;
    let trace_path = prepare(&args.out, &cfg.output.trace)?;
    let report_path = prepare(&args.out, &cfg.output.report)?;
    out.trace.write_csv(fs::File::create(&trace_path)?)?;
    write_json(&report_path, &out.report)?;
    let run = &out.report.runs[0];
    println!(
        "{}: k = {}, dist = {:.3e}, converged = {}, checks {}",
        run.method,
        run.final_k,
        run.final_dist,
        run.converged,
        if out.report.passed { "passed" } else { "FAILED" }
    );
    for f in failed_checks(&out.report) {
        eprintln!("failed check {f}");
    }
    Ok(out.report.passed)
}

fn cmd_compare(args: &ExperimentArgs) -> Result<bool, HarnessError> {
    let cfg = args.load()?;
    let exp = cfg.resolve()?;
    let out = harness::compare(&exp)?;
    let trace_path = prepare(&args.out, &cfg.output.trace)?;
    let report_path = prepare(&args.out, &cfg.output.report)?;
    let labels: Vec<&str> = out.labels.iter().map(String::as_str).collect();
    write_combined_csv(fs::File::create(&trace_path)?, &out.traces, &labels)?;
    write_json(&report_path, &out.report)?;
    for r in &out.report.runs {
        println!(
            "{:<8} k = {:>8}  dist = {:.3e}  reached tolerance: {}",
            r.label, r.final_k, r.final_dist, r.converged
        );
    }
    if let Some(cmp) = &out.report.comparison {
        println!("ranking: {}", cmp.ranking.join(" < "));
        if let Some(v) = &cmp.iag_vs_ig {
            println!(
                "IAG reached tolerance: {}; IG stalled at dist {:.3e}",
                v.iag_reached_tolerance, v.ig_final_dist
            );
        }
    }
    for f in failed_checks(&out.report) {
        eprintln!("failed check {f}");
    }
    Ok(out.report.passed)
}

fn cmd_gradcheck(args: &ExperimentArgs) -> Result<bool, HarnessError> {
    let cfg = args.load()?;
    let exp = cfg.resolve()?;
    let report = harness::gradcheck(&exp.problem, cfg.seed, harness::gradcheck::GRADCHECK_POINTS);
    let path = prepare(&args.out, Path::new("gradcheck.json"))?;
    write_json(&path, &report)?;
    for c in &report.components {
        println!("component {:>3}: max relative error {:.3e}", c.index, c.max_rel_error);
    }
    println!("gradcheck {}", if report.passed { "passed" } else { "FAILED" });
    Ok(report.passed)
}

fn cmd_certify(mu: f64, l: f64, k: usize, gamma: Option<f64>) -> Result<bool, HarnessError> {
    let report = harness::certify(mu, l, k, gamma)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(report.passed)
}

fn cmd_suite() -> Result<bool, HarnessError> {
    let report = suite::run_suite();
    for line in report.lines() {
        println!("{line}");
    }
    if !report.passed {
        let failed: Vec<String> = report
            .criteria
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.id.to_string())
            .chain((!report.within_time_budget).then(|| "wall time".to_string()))
            .collect();
        eprintln!("failed: {}", failed.join(", "));
    }
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
        Command::Certify { mu, l, k, gamma } => cmd_certify(*mu, *l, *k, *gamma),
        Command::Suite => cmd_suite(),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

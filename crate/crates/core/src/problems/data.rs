use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use super::ProblemError;
use crate::scalar::Scalar;

/// Labeled samples: row-major features and ±1 labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T: Scalar> {
    n_features: usize,
    features: Vec<T>,
    labels: Vec<T>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(n_features: usize, features: Vec<T>, labels: Vec<T>) -> Result<Self, ProblemError> {
        if n_features == 0 {
            return Err(ProblemError::InvalidParameter("need at least one feature".into()));
        }
        if features.len() != n_features * labels.len() {
            return Err(ProblemError::DimensionMismatch {
                expected: n_features * labels.len(),
                got: features.len(),
            });
        }
        Ok(Self {
            n_features,
            features,
            labels,
        })
    }

    /// Gaussian features with labels from a noisy random linear model.
    pub fn random<R: Rng>(rng: &mut R, samples: usize, n_features: usize) -> Self {
        let truth: Vec<f64> = (0..n_features).map(|_| rng.sample(StandardNormal)).collect();
        let mut features = Vec::with_capacity(samples * n_features);
        let mut labels = Vec::with_capacity(samples);
        for _ in 0..samples {
            let row: Vec<f64> = (0..n_features).map(|_| rng.sample(StandardNormal)).collect();
            let noise: f64 = rng.sample(StandardNormal);
            let score: f64 = row.iter().zip(&truth).map(|(a, b)| a * b).sum::<f64>() + noise;
            labels.push(if score >= 0.0 { T::one() } else { -T::one() });
            features.extend(row.into_iter().map(T::lit));
        }
        Self {
            n_features,
            features,
            labels,
        }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self) -> &[T] {
        &self.features
    }

    pub fn labels(&self) -> &[T] {
        &self.labels
    }
}

/// Reads a CSV with header `label,x1,...,xn`; labels must be ±1.
pub fn load_labeled_csv(path: impl AsRef<Path>) -> Result<Dataset<f64>, ProblemError> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| ProblemError::Data(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| ProblemError::Data(e.to_string()))?
        .clone();
    if headers.get(0) != Some("label") || headers.len() < 2 {
        return Err(ProblemError::Data(format!(
            "{}: header must be `label,x1,...,xn`",
            path.display()
        )));
    }
    let n = headers.len() - 1;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| ProblemError::Data(e.to_string()))?;
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| ProblemError::Data(format!("row {row}: `{s}`: {e}")))
        };
        let label = parse(&record[0])?;
        if label != 1.0 && label != -1.0 {
            return Err(ProblemError::InvalidLabel { row, value: label });
        }
        labels.push(label);
        for field in record.iter().skip(1) {
            features.push(parse(field)?);
        }
    }
    Dataset::new(n, features, labels)
}

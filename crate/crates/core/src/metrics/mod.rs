// SPDX-License-Identifier: Apache-2.0

//! Regression metrics, confidence intervals, the train/test split and the
//! per-model validation report.
//!
//! Variances are population variances (divide by n). Confidence intervals
//! use the normal approximation `mean ± 1.96 · s / √n` with the sample
//! standard deviation `s`.

mod plot;

use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;

pub use plot::{scatter_svg, sorted_overlay_svg};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: {0} targets vs {1} predictions")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    EmptyInput,
    #[error("targets have zero variance")]
    ZeroVariance,
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("train fraction {0} must lie strictly between 0 and 1")]
    InvalidFraction(f64),
}

fn check(y: &[f64], y_hat: &[f64]) -> Result<(), MetricsError> {
    if y.len() != y_hat.len() {
        return Err(MetricsError::LengthMismatch(y.len(), y_hat.len()));
    }
    if y.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn population_variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

pub fn mse(y: &[f64], y_hat: &[f64]) -> Result<f64, MetricsError> {
    check(y, y_hat)?;
    Ok(y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64)
}

/// Coefficient of determination.
pub fn r2(y: &[f64], y_hat: &[f64]) -> Result<f64, MetricsError> {
    check(y, y_hat)?;
    let m = mean(y);
    let total: f64 = y.iter().map(|v| (v - m) * (v - m)).sum();
    if total == 0.0 {
        return Err(MetricsError::ZeroVariance);
    }
    let residual: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(1.0 - residual / total)
}

/// Explained variance score, `1 − Var(y − ŷ) / Var(y)`.
pub fn evs(y: &[f64], y_hat: &[f64]) -> Result<f64, MetricsError> {
    check(y, y_hat)?;
    let var_y = population_variance(y);
    if var_y == 0.0 {
        return Err(MetricsError::ZeroVariance);
    }
    let residual: Vec<f64> = y.iter().zip(y_hat).map(|(a, b)| a - b).collect();
    Ok(1.0 - population_variance(&residual) / var_y)
}

/// `(mean, lo, hi)` of the 95% normal-approximation interval.
pub fn mean_ci95(values: &[f64]) -> Result<(f64, f64, f64), MetricsError> {
    let n = values.len();
    if n < 2 {
        return Err(MetricsError::TooFewSamples(n));
    }
    let m = mean(values);
    let s = (values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64).sqrt();
    let half = 1.96 * s / (n as f64).sqrt();
    Ok((m, m - half, m + half))
}

/// Number of training samples: `round(train_fraction · n)` with halves
/// rounded up, kept within `1..n` so neither side is empty.
pub fn train_size(n: usize, train_fraction: f64) -> usize {
    let k = (train_fraction * n as f64 + 0.5).floor() as usize;
    k.clamp(1, n.saturating_sub(1).max(1))
}

/// Seeded shuffle of `0..n`, split into sorted train and test index lists.
pub fn split_dataset(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), MetricsError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(MetricsError::InvalidFraction(train_fraction));
    }
    if n < 2 {
        return Err(MetricsError::TooFewSamples(n));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::rng(seed, &[0x7370_6c74]));
    let k = train_size(n, train_fraction);
    let mut train = idx[..k].to_vec();
    let mut test = idx[k..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub train_fraction: f64,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub model: String,
    pub n_test: usize,
    pub mse: f64,
    pub r2: f64,
    pub evs: f64,
    pub mean_true: f64,
    pub mean_pred: f64,
    pub ci95_true: (f64, f64),
    pub ci95_pred: (f64, f64),
    pub split: SplitManifest,
}

impl RegressionReport {
    pub fn new(model: &str, y_true: &[f64], y_pred: &[f64], split: SplitManifest) -> Result<Self, MetricsError> {
        let (mean_true, tlo, thi) = mean_ci95(y_true)?;
        let (mean_pred, plo, phi) = mean_ci95(y_pred)?;
        Ok(RegressionReport {
            model: model.to_string(),
            n_test: split.test.len(),
            mse: mse(y_true, y_pred)?,
            r2: r2(y_true, y_pred)?,
            evs: evs(y_true, y_pred)?,
            mean_true,
            mean_pred,
            ci95_true: (tlo, thi),
            ci95_pred: (plo, phi),
            split,
        })
    }

    pub const CSV_HEADER: &'static str =
        "model,n_test,mse,r2,evs,mean_true,mean_pred,ci95_true_lo,ci95_true_hi,ci95_pred_lo,ci95_pred_hi";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.model,
            self.n_test,
            self.mse,
            self.r2,
            self.evs,
            self.mean_true,
            self.mean_pred,
            self.ci95_true.0,
            self.ci95_true.1,
            self.ci95_pred.0,
            self.ci95_pred.1
        )
    }
}

/// Per-sample `label,y_true,y_pred` rows.
pub fn write_predictions_csv<W: Write>(
    labels: &[String],
    y_true: &[f64],
    y_pred: &[f64],
    out: W,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "y_true", "y_pred"])?;
    for ((l, t), p) in labels.iter().zip(y_true).zip(y_pred) {
        w.write_record([l.clone(), t.to_string(), p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_examples() {
        assert_eq!(mse(&[0.0, 2.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(r2(&[0.0, 1.0, 2.0], &[0.0, 1.0, 1.0]).unwrap(), 0.5);
        assert!((evs(&[0.0, 1.0, 2.0], &[0.0, 1.0, 1.0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let y = [0.2, 0.9, 0.4];
        assert_eq!(r2(&y, &y).unwrap(), 1.0);
        assert_eq!(evs(&y, &y).unwrap(), 1.0);
        let m = mean(&y);
        assert!(r2(&y, &[m; 3]).unwrap().abs() < 1e-15);
        let shifted: Vec<f64> = y.iter().map(|v| v + 0.5).collect();
        assert!((evs(&y, &shifted).unwrap() - 1.0).abs() < 1e-15);
        assert!(r2(&y, &shifted).unwrap() < 1.0);
    }

    #[test]
    fn errors() {
        assert_eq!(mse(&[1.0], &[1.0, 2.0]), Err(MetricsError::LengthMismatch(1, 2)));
        assert_eq!(mse(&[], &[]), Err(MetricsError::EmptyInput));
        assert_eq!(r2(&[1.0, 1.0], &[0.0, 2.0]), Err(MetricsError::ZeroVariance));
        assert_eq!(evs(&[1.0, 1.0], &[0.0, 2.0]), Err(MetricsError::ZeroVariance));
        assert_eq!(mean_ci95(&[1.0]), Err(MetricsError::TooFewSamples(1)));
        assert!(split_dataset(10, 1.0, 0).is_err());
    }

    #[test]
    fn intervals() {
        let (m, lo, hi) = mean_ci95(&[0.0, 1.0]).unwrap();
        assert_eq!(m, 0.5);
        assert!((lo + 0.48).abs() < 1e-12 && (hi - 1.48).abs() < 1e-12);
        assert_eq!(mean_ci95(&[0.7; 5]).unwrap(), (0.7, 0.7, 0.7));
        let (m, lo, hi) = mean_ci95(&[-2.0, -1.0, 1.0, 2.0]).unwrap();
        assert_eq!(m, 0.0);
        assert!((lo + hi).abs() < 1e-15);
    }

    #[test]
    fn splits() {
        let (tr, te) = split_dataset(10, 0.6, 4).unwrap();
        assert_eq!((tr.len(), te.len()), (6, 4));
        let mut all: Vec<usize> = tr.iter().chain(&te).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        let (tr, te) = split_dataset(1202, 0.6, 0).unwrap();
        assert_eq!((tr.len(), te.len()), (721, 481));
        assert_eq!(split_dataset(50, 0.6, 9).unwrap(), split_dataset(50, 0.6, 9).unwrap());
        assert_ne!(split_dataset(50, 0.6, 9).unwrap(), split_dataset(50, 0.6, 10).unwrap());
        assert_eq!(train_size(5, 0.5), 3);
    }

    #[test]
    fn report_row() {
        let split = SplitManifest { seed: 1, train_fraction: 0.6, train: vec![0, 1, 2], test: vec![3, 4] };
        let r = RegressionReport::new("svr", &[0.0, 1.0], &[0.0, 1.0], split).unwrap();
        assert_eq!(r.n_test, 2);
        assert_eq!(r.csv_row().split(',').count(), RegressionReport::CSV_HEADER.split(',').count());
        assert!(r.ci95_true.0 <= r.mean_true && r.mean_true <= r.ci95_true.1);
    }

    proptest! {
        #[test]
        fn evs_dominates_r2(pairs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..40)) {
            let (y, y_hat): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            prop_assume!(population_variance(&y) > 1e-9);
            let (e, r) = (evs(&y, &y_hat).unwrap(), r2(&y, &y_hat).unwrap());
            prop_assert!(e >= r - 1e-12);
            let mean_res = mean(&y.iter().zip(&y_hat).map(|(a, b)| a - b).collect::<Vec<_>>());
            if mean_res.abs() > 1e-6 {
                prop_assert!(e > r);
            }
            prop_assert!(mse(&y, &y_hat).unwrap() >= 0.0);
            prop_assert_eq!(mse(&y, &y).unwrap(), 0.0);
        }

        #[test]
        fn mse_translation_invariant(pairs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..20), shift in -3.0f64..3.0) {
            let (y, y_hat): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let ys: Vec<f64> = y.iter().map(|v| v + shift).collect();
            let hs: Vec<f64> = y_hat.iter().map(|v| v + shift).collect();
            prop_assert!((mse(&y, &y_hat).unwrap() - mse(&ys, &hs).unwrap()).abs() < 1e-9);
        }
    }
}

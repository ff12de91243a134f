// SPDX-License-Identifier: Apache-2.0

//! Regressors from feature vectors to derating factors: an RBF ε-SVR
//! solved by SMO, and a fully connected ReLU network trained with Adam.
//!
//! Data matrices are slices of rows; every row must have the same width.

mod io;
mod mlp;
mod svr;

use thiserror::Error;

pub use io::{read_mlp, read_svr, write_mlp, write_svr, MlpSummary, SvrSummary};
pub use mlp::{
    count_parameters, fit_mlp, fit_mlp_with_report, predict_mlp, Activation, Adam, Dense, MlpFit,
    MlpModel, MlpParams,
};
pub use svr::{
    dual_objective, fit_svr, fit_svr_with_report, kkt_violations, predict_svr, rbf_kernel, SvrFit,
    SvrModel, SvrParams,
};

#[derive(Debug, Error)]
pub enum RegressError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{x_rows} feature rows but {y_len} targets")]
    LengthMismatch { x_rows: usize, y_len: usize },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("training data contains a non-finite value")]
    NonFiniteInput,
    #[error("invalid hyperparameter: {0}")]
    InvalidParam(String),
    #[error("training loss became non-finite in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("malformed model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Shape and finiteness checks shared by both fitters. Returns the width.
fn check_training_data(x: &[Vec<f64>], y: &[f64], min_rows: usize) -> Result<usize, RegressError> {
    if x.len() != y.len() {
        return Err(RegressError::LengthMismatch { x_rows: x.len(), y_len: y.len() });
    }
    if x.len() < min_rows {
        return Err(RegressError::TooFewSamples { needed: min_rows, got: x.len() });
    }
    let d = x[0].len();
    check_width(x, d)?;
    if !y.iter().chain(x.iter().flatten()).all(|v| v.is_finite()) {
        return Err(RegressError::NonFiniteInput);
    }
    Ok(d)
}

fn check_width(x: &[Vec<f64>], d: usize) -> Result<(), RegressError> {
    match x.iter().find(|r| r.len() != d) {
        Some(r) => Err(RegressError::DimensionMismatch { expected: d, found: r.len() }),
        None => Ok(()),
    }
}

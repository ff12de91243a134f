// SPDX-License-Identifier: Apache-2.0

//! ε-SVR with an RBF kernel.
//!
//! The dual is solved in the 2n-variable form used by LIBSVM: variables
//! `a[0..n]` carry α (sign +1) and `a[n..2n]` carry α* (sign −1), and we
//! minimise `½ aᵀQa + pᵀa` with `Q_st = y_s y_t K(s mod n, t mod n)`,
//! `p = [ε − y; ε + y]`, `Σ y_t a_t = 0`, `0 ≤ a ≤ C`. Each step updates
//! the maximally violating pair analytically.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_training_data, check_width, RegressError};

/// `exp(-gamma * |x - x2|^2)`.
pub fn rbf_kernel(x: &[f64], x2: &[f64], gamma: f64) -> Result<f64, RegressError> {
    if x.len() != x2.len() {
        return Err(RegressError::DimensionMismatch { expected: x.len(), found: x2.len() });
    }
    Ok(rbf(x, x2, gamma))
}

fn rbf(x: &[f64], x2: &[f64], gamma: f64) -> f64 {
    let d2: f64 = x.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvrParams {
    pub gamma: f64,
    pub epsilon: f64,
    pub c: f64,
    pub kkt_tol: f64,
    /// Iteration cap, in units of the training-set size.
    pub max_passes: usize,
    /// Unused by the deterministic solver; kept so configs round-trip.
    pub seed: u64,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams { gamma: 0.01, epsilon: 0.0125, c: 10.0, kkt_tol: 1e-3, max_passes: 10_000, seed: 0 }
    }
}

impl SvrParams {
    fn check(&self) -> Result<(), RegressError> {
        let bad = |m: &str| Err(RegressError::InvalidParam(m.into()));
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad("gamma must be >= 0");
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be >= 0");
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad("c must be > 0");
        }
        if !(self.kkt_tol > 0.0) {
            return bad("kkt_tol must be > 0");
        }
        if self.max_passes == 0 {
            return bad("max_passes must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvrModel {
    pub gamma: f64,
    pub support_vectors: Vec<Vec<f64>>,
    /// `α_i − α_i*` per support vector.
    pub dual_coefficients: Vec<f64>,
    pub bias: f64,
    /// Feature width; kept separately so an empty support set still checks input.
    pub dim: usize,
}

/// Solver diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrFit {
    pub iterations: usize,
    pub converged: bool,
    /// True when every target was identical and the constant model was returned.
    pub degenerate: bool,
    pub max_kkt_violation: f64,
    /// Dual objective in maximisation form; 0 at the all-zero start.
    pub dual_objective: f64,
    /// `α_i − α_i*` for every training point, support vector or not.
    pub train_coefficients: Vec<f64>,
}

pub fn fit_svr(x: &[Vec<f64>], y: &[f64], params: &SvrParams) -> Result<SvrModel, RegressError> {
    fit_svr_with_report(x, y, params).map(|(m, _)| m)
}

pub fn fit_svr_with_report(
    x: &[Vec<f64>],
    y: &[f64],
    params: &SvrParams,
) -> Result<(SvrModel, SvrFit), RegressError> {
    params.check()?;
    let d = check_training_data(x, y, 2)?;
    let n = x.len();

    if y.iter().all(|&v| v == y[0]) {
        log::warn!("all {n} targets equal {}; fitting a constant model", y[0]);
        let model = SvrModel { gamma: params.gamma, support_vectors: vec![], dual_coefficients: vec![], bias: y[0], dim: d };
        let fit = SvrFit {
            iterations: 0,
            converged: true,
            degenerate: true,
            max_kkt_violation: 0.0,
            dual_objective: 0.0,
            train_coefficients: vec![0.0; n],
        };
        return Ok((model, fit));
    }

    let kernel: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|ij| rbf(&x[ij / n], &x[ij % n], params.gamma))
        .collect();
    let k = |i: usize, j: usize| kernel[(i % n) * n + (j % n)];
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let c = params.c;

    let mut a = vec![0.0f64; 2 * n];
    let mut grad: Vec<f64> = (0..2 * n)
        .map(|t| if t < n { params.epsilon - y[t] } else { params.epsilon + y[t - n] })
        .collect();

    let max_iter = params.max_passes.saturating_mul(n).max(1);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        // Maximal violating pair.
        let (mut i, mut gmax) = (usize::MAX, f64::NEG_INFINITY);
        let (mut j, mut gmin) = (usize::MAX, f64::INFINITY);
        for t in 0..2 * n {
            let yt = sign(t);
            let v = -yt * grad[t];
            let up = if yt > 0.0 { a[t] < c } else { a[t] > 0.0 };
            let low = if yt > 0.0 { a[t] > 0.0 } else { a[t] < c };
            if up && v > gmax {
                gmax = v;
                i = t;
            }
            if low && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < params.kkt_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let (yi, yj) = (sign(i), sign(j));
        let qij = yi * yj * k(i, j);
        let (old_i, old_j) = (a[i], a[j]);
        if yi != yj {
            let quad = (k(i, i) + k(j, j) + 2.0 * qij).max(1e-12);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = a[i] - a[j];
            a[i] += delta;
            a[j] += delta;
            if diff > 0.0 {
                if a[j] < 0.0 {
                    a[j] = 0.0;
                    a[i] = diff;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = -diff;
            }
            if diff > 0.0 {
                if a[i] > c {
                    a[i] = c;
                    a[j] = c - diff;
                }
            } else if a[j] > c {
                a[j] = c;
                a[i] = c + diff;
            }
        } else {
            let quad = (k(i, i) + k(j, j) - 2.0 * qij).max(1e-12);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = a[i] + a[j];
            a[i] -= delta;
            a[j] += delta;
            if sum > c {
                if a[i] > c {
                    a[i] = c;
                    a[j] = sum - c;
                }
            } else if a[j] < 0.0 {
                a[j] = 0.0;
                a[i] = sum;
            }
            if sum > c {
                if a[j] > c {
                    a[j] = c;
                    a[i] = sum - c;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = sum;
            }
        }

        let (di, dj) = (a[i] - old_i, a[j] - old_j);
        for t in 0..2 * n {
            let yt = sign(t);
            grad[t] += yt * (yi * k(i, t) * di + yj * k(j, t) * dj);
        }
    }
    if !converged {
        log::warn!("SMO stopped after {iterations} iterations without meeting kkt_tol");
    }

    let rho = offset(&a, &grad, c, n);
    let coefs: Vec<f64> = (0..n).map(|i| a[i] - a[i + n]).collect();
    let decision: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| coefs[j] * kernel[i * n + j]).sum::<f64>() - rho)
        .collect();
    let violations = kkt_violations(&coefs, &decision, y, params.epsilon, c);
    let max_kkt_violation = violations.iter().cloned().fold(0.0, f64::max);

    let support: Vec<usize> = (0..n).filter(|&i| coefs[i] != 0.0).collect();
    let model = SvrModel {
        gamma: params.gamma,
        support_vectors: support.iter().map(|&i| x[i].clone()).collect(),
        dual_coefficients: support.iter().map(|&i| coefs[i]).collect(),
        bias: -rho,
        dim: d,
    };
    let fit = SvrFit {
        iterations,
        converged,
        degenerate: false,
        max_kkt_violation,
        dual_objective: dual_objective(&coefs, &kernel, y, params.epsilon),
        train_coefficients: coefs,
    };
    Ok((model, fit))
}

/// The threshold ρ: mean of `y_t G_t` over free variables, else the
/// midpoint of the feasible interval.
fn offset(a: &[f64], grad: &[f64], c: f64, n: usize) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum, mut free) = (0.0, 0usize);
    for t in 0..2 * n {
        let yt = if t < n { 1.0 } else { -1.0 };
        let yg = yt * grad[t];
        if a[t] >= c {
            if yt < 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else if a[t] <= 0.0 {
            if yt > 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else {
            free += 1;
            sum += yg;
        }
    }
    if free > 0 { sum / free as f64 } else { (ub + lb) / 2.0 }
}

/// Per-point KKT violation given coefficients `β = α − α*` and the
/// decision values on the training set.
///
/// `β = 0` needs `|r| ≤ ε`, `0 < β < C` needs `r = ε`, `β = C` needs
/// `r ≥ ε` (mirrored for negative β), where `r = y − f(x)`.
pub fn kkt_violations(coefs: &[f64], decision: &[f64], y: &[f64], epsilon: f64, c: f64) -> Vec<f64> {
    coefs
        .iter()
        .zip(decision)
        .zip(y)
        .map(|((&b, &f), &yi)| {
            let r = yi - f;
            if b == 0.0 {
                (r.abs() - epsilon).max(0.0)
            } else if b >= c {
                (epsilon - r).max(0.0)
            } else if b <= -c {
                (r + epsilon).max(0.0)
            } else if b > 0.0 {
                (r - epsilon).abs()
            } else {
                (r + epsilon).abs()
            }
        })
        .collect()
}

/// `Σ y_i β_i − ε Σ |β_i| − ½ βᵀKβ` for a row-major n×n kernel matrix.
pub fn dual_objective(coefs: &[f64], kernel: &[f64], y: &[f64], epsilon: f64) -> f64 {
    let n = coefs.len();
    let linear: f64 = coefs.iter().zip(y).map(|(b, yi)| b * yi - epsilon * b.abs()).sum();
    let mut quad = 0.0;
    for i in 0..n {
        if coefs[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += coefs[i] * coefs[j] * kernel[i * n + j];
        }
    }
    linear - 0.5 * quad
}

pub fn predict_svr(model: &SvrModel, x: &[Vec<f64>]) -> Result<Vec<f64>, RegressError> {
    check_width(x, model.dim)?;
    Ok(x
        .par_iter()
        .map(|row| {
            model
                .support_vectors
                .iter()
                .zip(&model.dual_coefficients)
                .map(|(sv, b)| b * rbf(sv, row, model.gamma))
                .sum::<f64>()
                + model.bias
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ramp() -> (Vec<Vec<f64>>, Vec<f64>) {
        let xs: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        (xs.iter().map(|&v| vec![v]).collect(), xs)
    }

    #[test]
    fn kernel_values() {
        assert_eq!(rbf_kernel(&[0.3, 1.0], &[0.3, 1.0], 0.01).unwrap(), 1.0);
        assert_eq!(rbf_kernel(&[0.0, 5.0], &[100.0, -3.0], 0.0).unwrap(), 1.0);
        assert!((rbf_kernel(&[0.0], &[1.0], 0.01).unwrap() - 0.990_049_833_749_168).abs() < 1e-15);
        assert!(matches!(rbf_kernel(&[0.0], &[1.0, 2.0], 1.0), Err(RegressError::DimensionMismatch { .. })));
    }

    #[test]
    fn constant_targets() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0]];
        let (m, fit) = fit_svr_with_report(&x, &[0.3; 3], &SvrParams::default()).unwrap();
        assert!(fit.degenerate);
        assert!(m.support_vectors.is_empty());
        assert_eq!(predict_svr(&m, &[vec![7.0], vec![-1.0]]).unwrap(), vec![0.3, 0.3]);
    }

    #[test]
    fn hand_built_models() {
        let m = SvrModel { gamma: 0.5, support_vectors: vec![vec![1.0, 2.0]], dual_coefficients: vec![1.0], bias: 0.0, dim: 2 };
        assert_eq!(predict_svr(&m, &[vec![1.0, 2.0]]).unwrap(), vec![1.0]);
        assert!(matches!(predict_svr(&m, &[vec![1.0]]), Err(RegressError::DimensionMismatch { .. })));
    }

    #[test]
    fn ramp_fits_inside_tube() {
        // gamma = 1: with gamma = 0.01 and |coef| <= 10 an RBF mixture on
        // [0, 1] cannot reach slope 1 (the curvature term is too small).
        let (x, y) = ramp();
        let params = SvrParams { gamma: 1.0, ..SvrParams::default() };
        let (m, fit) = fit_svr_with_report(&x, &y, &params).unwrap();
        assert!(fit.converged);
        let pred = predict_svr(&m, &x).unwrap();
        for (p, t) in pred.iter().zip(&y) {
            assert!((p - t).abs() <= params.epsilon + 0.01, "{p} vs {t}");
        }
    }

    #[test]
    fn default_gamma_on_ramp_still_converges() {
        let (x, y) = ramp();
        let (_, fit) = fit_svr_with_report(&x, &y, &SvrParams::default()).unwrap();
        assert!(fit.converged);
        assert!(fit.max_kkt_violation < 1e-3);
        assert!(fit.train_coefficients.iter().all(|b| b.abs() <= 10.0));
    }

    #[test]
    fn random_dataset_improves_dual() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<Vec<f64>> = (0..50).map(|_| (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let y: Vec<f64> = (0..50).map(|_| rng.gen()).collect();
        let params = SvrParams::default();
        let (_, fit) = fit_svr_with_report(&x, &y, &params).unwrap();
        assert!(fit.dual_objective >= 0.0);
        assert!(fit.converged && fit.max_kkt_violation < params.kkt_tol);
        assert!((fit.train_coefficients.iter().sum::<f64>()).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        let p = SvrParams::default();
        assert!(matches!(fit_svr(&[vec![0.0]], &[1.0], &p), Err(RegressError::TooFewSamples { .. })));
        assert!(matches!(fit_svr(&[vec![0.0], vec![f64::NAN]], &[1.0, 0.0], &p), Err(RegressError::NonFiniteInput)));
        assert!(matches!(
            fit_svr(&[vec![0.0], vec![1.0]], &[1.0, 0.0], &SvrParams { c: 0.0, ..p }),
            Err(RegressError::InvalidParam(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn kernel_symmetric(a in prop::collection::vec(-3.0f64..3.0, 1..6), seed in any::<u64>(), gamma in 0.0f64..2.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b: Vec<f64> = a.iter().map(|_| rng.gen_range(-3.0..3.0)).collect();
            let kab = rbf_kernel(&a, &b, gamma).unwrap();
            prop_assert_eq!(kab, rbf_kernel(&b, &a, gamma).unwrap());
            prop_assert!(kab > 0.0 && kab <= 1.0);
            prop_assert_eq!(rbf_kernel(&a, &a, gamma).unwrap(), 1.0);
        }

        #[test]
        fn coefficients_in_box(seed in any::<u64>(), n in 2usize..25, c in 0.1f64..20.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let params = SvrParams { c, gamma: 0.5, ..SvrParams::default() };
            let (m, fit) = fit_svr_with_report(&x, &y, &params).unwrap();
            prop_assert!(m.dual_coefficients.iter().all(|b| b.abs() <= c + 1e-12));
            prop_assert!(fit.converged);
            prop_assert!(fit.max_kkt_violation < params.kkt_tol);
            prop_assert_eq!(fit_svr(&x, &y, &params).unwrap(), m);
        }
    }
}

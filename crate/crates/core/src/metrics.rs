//! Estimation error metrics and small summary statistics.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::LatentModel;

/// Orthonormality slack accepted by [`subspace_distance`].
pub const SUBSPACE_ORTHONORMAL_TOL: f64 = 1e-6;

/// Operator 2-norm of `P_Û − P_U` for orthonormal frames of equal shape.
pub fn subspace_distance(u_hat: &DMatrix<f64>, u: &DMatrix<f64>) -> Result<f64> {
    if u_hat.shape() != u.shape() {
        return Err(Error::DimensionMismatch(format!(
            "subspace distance between {:?} and {:?} frames",
            u_hat.shape(),
            u.shape()
        )));
    }
    linalg::check_orthonormal(u_hat, SUBSPACE_ORTHONORMAL_TOL)?;
    linalg::check_orthonormal(u, SUBSPACE_ORTHONORMAL_TOL)?;
    let diff = u_hat * u_hat.transpose() - u * u.transpose();
    Ok(linalg::symmetric_spectral_norm(&diff)?.min(1.0))
}

/// `(1/K) Σₖ ‖f(U Λᵏ Uᵀ) − Û Λ̂ᵏ Ûᵀ‖_F²`. The estimate is not passed
/// through the link.
pub fn adjacency_error(truth: &LatentModel, estimate: &LatentModel) -> Result<f64> {
    if truth.n() != estimate.n() || truth.graphs() != estimate.graphs() {
        return Err(Error::DimensionMismatch(format!(
            "true model has n={}, K={}; estimate has n={}, K={}",
            truth.n(),
            truth.graphs(),
            estimate.n(),
            estimate.graphs()
        )));
    }
    let reconstructions = (0..estimate.graphs())
        .map(|k| estimate.weight_matrix(k))
        .collect::<Result<Vec<_>>>()?;
    adjacency_error_with(truth, &reconstructions)
}

/// [`adjacency_error`] against arbitrary per-graph reconstructions.
pub fn adjacency_error_with(truth: &LatentModel, reconstructions: &[DMatrix<f64>]) -> Result<f64> {
    if reconstructions.len() != truth.graphs() {
        return Err(Error::DimensionMismatch(format!(
            "{} reconstructions for {} graphs",
            reconstructions.len(),
            truth.graphs()
        )));
    }
    if truth.graphs() == 0 {
        return Err(Error::InvalidArgument("adjacency error of an empty model".into()));
    }
    let n = truth.n();
    let mut total = 0.0;
    for (k, recon) in reconstructions.iter().enumerate() {
        if recon.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "reconstruction {k} is {:?}, expected ({n}, {n})",
                recon.shape()
            )));
        }
        total += (truth.edge_probabilities(k)? - recon).norm_squared();
    }
    Ok(total / truth.graphs() as f64)
}

/// Mean and standard error (sample sd / √count) of a sample. The standard
/// error of fewer than two values is reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub standard_error: f64,
    pub count: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let count = values.len();
        if count == 0 {
            return Self {
                mean: f64::NAN,
                standard_error: f64::NAN,
                count,
            };
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let standard_error = if count < 2 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
            (var / count as f64).sqrt()
        };
        Self {
            mean,
            standard_error,
            count,
        }
    }
}

/// One-sample Kolmogorov–Smirnov test against Uniform(0,1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsUniform {
    pub statistic: f64,
    pub p_value: f64,
}

impl KsUniform {
    pub fn of(sample: &[f64]) -> Self {
        let n = sample.len();
        if n == 0 {
            return Self {
                statistic: 0.0,
                p_value: 1.0,
            };
        }
        let mut sorted = sample.to_vec();
        sorted.sort_by(f64::total_cmp);
        let nf = n as f64;
        let statistic = sorted
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let x = x.clamp(0.0, 1.0);
                ((i + 1) as f64 / nf - x).max(x - i as f64 / nf)
            })
            .fold(0.0, f64::max);
        let sqrt_n = nf.sqrt();
        let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * statistic;
        Self {
            statistic,
            p_value: kolmogorov_survival(lambda),
        }
    }
}

/// `P(K > λ)` for the Kolmogorov distribution.
fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let term = (-2.0 * (j as f64).powi(2) * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Fraction of p-values strictly below `alpha`.
pub fn rejection_rate(p_values: &[f64], alpha: f64) -> f64 {
    if p_values.is_empty() {
        return f64::NAN;
    }
    p_values.iter().filter(|&&p| p < alpha).count() as f64 / p_values.len() as f64
}

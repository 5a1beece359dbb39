//! Estimation for the multi-RDPG model.
//!
//! All fits work on positive parts `A₊ᵏ` and minimize
//! `Σₖ ‖A₊ᵏ − U Λᵏ Uᵀ‖_F²` over orthonormal `U` and nonnegative diagonal
//! `Λᵏ`. Three solvers are provided:
//!
//! * [`fit_rdpg_single`]: one graph, closed form from the top-d eigenpairs.
//! * [`fit_common_lambda`]: all graphs share one `Λ`, closed form from the
//!   eigendecomposition of the mean positive part.
//! * [`fit_multi_rdpg`]: per-graph `Λᵏ`, alternating between a
//!   majorize-minimize Procrustes step for `U` ([`update_u`]) and the exact
//!   clamp step for the weights ([`update_lambda`]).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{positive_part, AdjacencyMatrix, PsdGraphMatrix};
use crate::init::{self, initializers};
use crate::linalg::{self, SymEigen};
use crate::model::{LatentModel, Link};

/// Options for [`fit_multi_rdpg`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub d: usize,
    pub max_iterations: usize,
    /// Stop once the relative objective decrease falls below this.
    pub tolerance: f64,
    /// Name of a registered [`init::Initializer`].
    pub init: String,
    /// Only used by seeded initializers.
    pub seed: u64,
}

impl FitOptions {
    pub const DEFAULT_MAX_ITERATIONS: usize = 1000;
    pub const DEFAULT_TOLERANCE: f64 = 1e-8;

    pub fn new(d: usize) -> Self {
        Self {
            d,
            max_iterations: Self::DEFAULT_MAX_ITERATIONS,
            tolerance: Self::DEFAULT_TOLERANCE,
            init: init::AVERAGE_SPECTRAL.to_string(),
            seed: 0,
        }
    }

    pub fn with_init(mut self, init: &str, seed: u64) -> Self {
        self.init = init.to_string();
        self.seed = seed;
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        check_rank(self.d, n)?;
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max-iterations must be positive".into()));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        initializers().get(&self.init)?;
        Ok(())
    }
}

/// Output of [`fit_multi_rdpg`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiRdpgFit {
    pub model: LatentModel,
    /// Objective at the initial point, then after every iteration.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl MultiRdpgFit {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace holds the initial objective")
    }
}

/// Output of [`fit_common_lambda`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommonLambdaFit {
    pub u: DMatrix<f64>,
    pub lambda: DVector<f64>,
    /// `Σₖ ‖A₊ᵏ − U Λ Uᵀ‖_F²`
    pub objective: f64,
}

impl CommonLambdaFit {
    /// The fit as a latent model with `graphs` identical weight vectors.
    pub fn to_model(&self, graphs: usize) -> LatentModel {
        LatentModel::new(self.u.clone(), vec![self.lambda.clone(); graphs], Link::Identity)
            .expect("eigenvectors are orthonormal and weights clamped")
    }
}

/// Output of [`fit_rdpg_single`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleFit {
    pub u: DMatrix<f64>,
    pub lambda: DVector<f64>,
    /// `‖A₊ − U diag(λ) Uᵀ‖_F²`
    pub objective: f64,
}

impl SingleFit {
    /// Latent positions `U diag(λ)^{1/2}`.
    pub fn latent_positions(&self) -> DMatrix<f64> {
        let mut x = self.u.clone();
        for (j, mut col) in x.column_iter_mut().enumerate() {
            col *= self.lambda[j].sqrt();
        }
        x
    }
}

fn check_rank(d: usize, n: usize) -> Result<()> {
    if d == 0 || d > n {
        return Err(Error::InvalidArgument(format!(
            "rank d = {d} must satisfy 1 <= d <= n = {n}"
        )));
    }
    Ok(())
}

fn shared_n(psd: &[PsdGraphMatrix]) -> Result<usize> {
    let first = psd
        .first()
        .ok_or_else(|| Error::InvalidArgument("at least one graph is required".into()))?;
    let n = first.n();
    if let Some((k, other)) = psd.iter().enumerate().find(|(_, a)| a.n() != n) {
        return Err(Error::DimensionMismatch(format!(
            "graph {k} has {} nodes, graph 0 has {n}",
            other.n()
        )));
    }
    Ok(n)
}

fn check_basis(psd: &[PsdGraphMatrix], u: &DMatrix<f64>) -> Result<usize> {
    let n = shared_n(psd)?;
    if u.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "basis has {} rows, graphs have {n} nodes",
            u.nrows()
        )));
    }
    Ok(n)
}

/// Positive parts of a list of graphs.
pub fn positive_parts(graphs: &[AdjacencyMatrix]) -> Result<Vec<PsdGraphMatrix>> {
    graphs.iter().map(positive_part).collect()
}

/// Closed-form single-graph fit: top-d eigenvectors and the positive parts
/// of the top-d eigenvalues.
pub fn fit_rdpg_single(aplus: &PsdGraphMatrix, d: usize) -> Result<SingleFit> {
    check_rank(d, aplus.n())?;
    let eig = SymEigen::new(aplus.as_matrix())?;
    let mut u = eig.top_vectors(d);
    linalg::canonicalize_signs(&mut u);
    let lambda = eig.top_values(d).map(|v| v.max(0.0));
    let objective = eig
        .values
        .iter()
        .enumerate()
        .map(|(j, &v)| if j < d { v.min(0.0).powi(2) } else { v * v })
        .sum();
    Ok(SingleFit { u, lambda, objective })
}

/// `Σₖ ‖A₊ᵏ − U Λᵏ Uᵀ‖_F²`, evaluated literally (no orthonormality assumed).
pub fn objective(psd: &[PsdGraphMatrix], u: &DMatrix<f64>, lambdas: &[DVector<f64>]) -> Result<f64> {
    check_basis(psd, u)?;
    check_weights(psd.len(), u.ncols(), lambdas)?;
    Ok(psd
        .iter()
        .zip(lambdas)
        .map(|(a, lambda)| (a.as_matrix() - reconstruct_unsymmetrized(u, lambda)).norm_squared())
        .sum())
}

fn reconstruct_unsymmetrized(u: &DMatrix<f64>, lambda: &DVector<f64>) -> DMatrix<f64> {
    let mut scaled = u.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= lambda[j];
    }
    scaled * u.transpose()
}

fn check_weights(graphs: usize, d: usize, lambdas: &[DVector<f64>]) -> Result<()> {
    if lambdas.len() != graphs {
        return Err(Error::DimensionMismatch(format!(
            "{} weight vectors for {graphs} graphs",
            lambdas.len()
        )));
    }
    if let Some((k, l)) = lambdas.iter().enumerate().find(|(_, l)| l.len() != d) {
        return Err(Error::DimensionMismatch(format!(
            "weight vector {k} has length {}, basis has {d} columns",
            l.len()
        )));
    }
    Ok(())
}

/// `g(U) = −2 Σₖ tr(U Λᵏ Uᵀ A₊ᵏ)`, the U-dependent part of the objective.
pub fn majorized_term(psd: &[PsdGraphMatrix], lambdas: &[DVector<f64>], u: &DMatrix<f64>) -> f64 {
    -2.0 * psd
        .iter()
        .zip(lambdas)
        .map(|(a, lambda)| (reconstruct_unsymmetrized(u, lambda) * a.as_matrix()).trace())
        .sum::<f64>()
}

/// `h(U | U′) = −g(U′) − 4 Σₖ tr(Λᵏ U′ᵀ A₊ᵏ U)`, the linear majorizer of
/// [`majorized_term`] touching it at `U′`.
pub fn majorizer(psd: &[PsdGraphMatrix], lambdas: &[DVector<f64>], u: &DMatrix<f64>, u_prime: &DMatrix<f64>) -> f64 {
    let linear: f64 = psd
        .iter()
        .zip(lambdas)
        .map(|(a, lambda)| {
            let lam = DMatrix::from_diagonal(lambda);
            (lam * u_prime.transpose() * a.as_matrix() * u).trace()
        })
        .sum();
    -majorized_term(psd, lambdas, u_prime) - 4.0 * linear
}

/// One majorize-minimize step for `U` with the weights held fixed:
/// `U_new = B Cᵀ` from the SVD of `M = Σₖ A₊ᵏ U_old Λᵏ`. Directions that
/// `M` leaves undetermined are taken from `U_old`; `M = 0` returns `U_old`.
pub fn update_u(psd: &[PsdGraphMatrix], u_old: &DMatrix<f64>, lambdas: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    check_basis(psd, u_old)?;
    check_weights(psd.len(), u_old.ncols(), lambdas)?;
    let products: Vec<DMatrix<f64>> = psd.iter().map(|a| a.as_matrix() * u_old).collect();
    procrustes_step(&products, u_old, lambdas)
}

fn procrustes_step(products: &[DMatrix<f64>], u_old: &DMatrix<f64>, lambdas: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(u_old.nrows(), u_old.ncols());
    for (au, lambda) in products.iter().zip(lambdas) {
        for (j, col) in au.column_iter().enumerate() {
            m.column_mut(j).axpy(lambda[j], &col, 1.0);
        }
    }
    linalg::procrustes(&m, u_old)
}

/// Exact minimizer over the weights for fixed orthonormal `U`:
/// `Λᵏⱼⱼ = max(0, (Uᵀ A₊ᵏ U)ⱼⱼ)`.
pub fn update_lambda(psd: &[PsdGraphMatrix], u: &DMatrix<f64>) -> Result<Vec<DVector<f64>>> {
    check_basis(psd, u)?;
    Ok(psd
        .iter()
        .map(|a| clamp_weights(&quadratic_diagonal(u, &(a.as_matrix() * u))))
        .collect())
}

/// `diag(Uᵀ (A U))` from a precomputed `A U`.
fn quadratic_diagonal(u: &DMatrix<f64>, au: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(u.ncols(), u.column_iter().zip(au.column_iter()).map(|(x, y)| x.dot(&y)))
}

fn clamp_weights(z: &DVector<f64>) -> DVector<f64> {
    z.map(|v| v.max(0.0))
}

/// Objective for orthonormal `U` from `‖A₊ᵏ‖²`, `zᵏ = diag(Uᵀ A₊ᵏ U)` and
/// the weights: `Σₖ ‖A₊ᵏ‖² − 2⟨λᵏ, zᵏ⟩ + ‖λᵏ‖²`.
fn expanded_objective(psd: &[PsdGraphMatrix], z: &[DVector<f64>], lambdas: &[DVector<f64>]) -> f64 {
    psd.iter()
        .zip(z)
        .zip(lambdas)
        .map(|((a, z), l)| a.norm_squared() - 2.0 * l.dot(z) + l.norm_squared())
        .sum()
}

/// Fits the multi-RDPG model to adjacency matrices.
pub fn fit_multi_rdpg(graphs: &[AdjacencyMatrix], options: &FitOptions) -> Result<MultiRdpgFit> {
    let psd = positive_parts(graphs)?;
    fit_multi_rdpg_psd(&psd, options)
}

/// Alternating minimization on precomputed positive parts.
///
/// The objective is recorded at the initial point and after each `U`/`Λ`
/// sweep; iteration stops once `(obj(t) − obj(t+1)) / max(obj(t), 1e-12)`
/// drops below `options.tolerance`. Columns of the returned basis are
/// ordered by total weight `Σₖ Λᵏⱼⱼ` (descending, stable) and each column's
/// largest-magnitude entry is made positive.
pub fn fit_multi_rdpg_psd(psd: &[PsdGraphMatrix], options: &FitOptions) -> Result<MultiRdpgFit> {
    let n = shared_n(psd)?;
    options.validate(n)?;
    let initializer = initializers().get(&options.init)?;
    let mut u = initializer.initial_basis(psd, options.d, options.seed)?;
    linalg::check_orthonormal(&u, 1e-8)?;

    let mut products: Vec<DMatrix<f64>> = psd.iter().map(|a| a.as_matrix() * &u).collect();
    let mut z: Vec<DVector<f64>> = products.iter().map(|au| quadratic_diagonal(&u, au)).collect();
    let mut lambdas: Vec<DVector<f64>> = z.iter().map(clamp_weights).collect();
    let mut trace = vec![expanded_objective(psd, &z, &lambdas)];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iterations {
        u = procrustes_step(&products, &u, &lambdas)?;
        products = psd.iter().map(|a| a.as_matrix() * &u).collect();
        z = products.iter().map(|au| quadratic_diagonal(&u, au)).collect();
        lambdas = z.iter().map(clamp_weights).collect();
        iterations += 1;

        let prev = *trace.last().expect("non-empty trace");
        let current = expanded_objective(psd, &z, &lambdas);
        if !current.is_finite() {
            return Err(Error::Numerical(format!(
                "objective became {current} at iteration {iterations}"
            )));
        }
        trace.push(current);
        if (prev - current) / prev.max(1e-12) < options.tolerance {
            converged = true;
            break;
        }
    }

    if !converged {
        log::warn!("alternating minimization stopped at the {iterations}-iteration cap before converging");
    }
    let (u, lambdas) = canonical_order(u, lambdas);
    let model = LatentModel::new(u, lambdas, Link::Identity)?;
    Ok(MultiRdpgFit {
        model,
        objective_trace: trace,
        converged,
        iterations,
    })
}

fn canonical_order(u: DMatrix<f64>, lambdas: Vec<DVector<f64>>) -> (DMatrix<f64>, Vec<DVector<f64>>) {
    let d = u.ncols();
    let totals: Vec<f64> = (0..d).map(|j| lambdas.iter().map(|l| l[j]).sum()).collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| totals[b].total_cmp(&totals[a]));
    let mut u = u.select_columns(order.iter());
    linalg::canonicalize_signs(&mut u);
    let lambdas = lambdas
        .iter()
        .map(|l| DVector::from_iterator(d, order.iter().map(|&j| l[j])))
        .collect();
    (u, lambdas)
}

/// Common-Λ fit on adjacency matrices.
pub fn fit_common_lambda(graphs: &[AdjacencyMatrix], d: usize) -> Result<CommonLambdaFit> {
    let psd = positive_parts(graphs)?;
    fit_common_lambda_psd(&psd, d)
}

/// Exact minimizer with `Λ¹ = … = Λᴷ`: the top-d eigenpairs of the mean
/// positive part.
pub fn fit_common_lambda_psd(psd: &[PsdGraphMatrix], d: usize) -> Result<CommonLambdaFit> {
    let n = shared_n(psd)?;
    check_rank(d, n)?;
    let eig = SymEigen::new(&init::mean_matrix(psd))?;
    let mut u = eig.top_vectors(d);
    linalg::canonicalize_signs(&mut u);
    // the mean of PSD matrices is PSD; clamp only rounding noise
    let lambda = eig.top_values(d).map(|v| v.max(0.0));
    let k = psd.len() as f64;
    let total_norm: f64 = psd.iter().map(PsdGraphMatrix::norm_squared).sum();
    let alpha = eig.top_values(d);
    let objective = total_norm - k * (2.0 * lambda.dot(&alpha) - lambda.norm_squared());
    Ok(CommonLambdaFit { u, lambda, objective })
}

//! Permutation test of `H₀: Λ¹ = … = Λᴷ`.
//!
//! The statistic is the gap between the best common-Λ fit and the best
//! per-graph fit, `T = min_common − min_separate`. Its null distribution is
//! obtained by shuffling, independently for every node pair, which graph
//! each observed entry belongs to.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_common_lambda_psd, fit_multi_rdpg_psd, positive_parts, FitOptions};
use crate::graph::{AdjacencyMatrix, PsdGraphMatrix};
use crate::rng;

/// Statistics below this are reported as a likely failed alternative fit.
pub const NEGATIVE_STATISTIC_TOL: f64 = -1e-6;

/// How the permutation p-value counts exceedances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PValueRule {
    /// `(1/B) Σ_b 1{T*_b ≥ T}`; may be exactly zero.
    #[default]
    Plain,
    /// `(1 + Σ_b 1{T*_b ≥ T}) / (B + 1)`; always positive.
    AddOne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOptions {
    /// Replicate count `B`.
    pub permutations: usize,
    pub seed: u64,
    /// Options of the per-graph (alternative) fit; `fit.d` is the rank.
    pub fit: FitOptions,
    #[serde(default)]
    pub p_value_rule: PValueRule,
}

impl TestOptions {
    pub const DEFAULT_PERMUTATIONS: usize = 1000;

    pub fn new(d: usize) -> Self {
        Self {
            permutations: Self::DEFAULT_PERMUTATIONS,
            seed: 0,
            fit: FitOptions::new(d),
            p_value_rule: PValueRule::Plain,
        }
    }

    pub fn with_permutations(mut self, permutations: usize) -> Self {
        self.permutations = permutations;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn d(&self) -> usize {
        self.fit.d
    }
}

/// `T` with the two objectives it is built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatisticParts {
    pub statistic: f64,
    pub null_objective: f64,
    pub alternative_objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub null_objective: f64,
    pub alternative_objective: f64,
    /// `T*_b` for `b = 1..=B`, in replicate order.
    pub null_statistics: Vec<f64>,
    pub p_value: f64,
    pub options: TestOptions,
}

impl TestResult {
    pub fn components(&self) -> (f64, f64) {
        (self.null_objective, self.alternative_objective)
    }

    pub fn min_statistic(&self) -> f64 {
        self.null_statistics.iter().copied().fold(self.statistic, f64::min)
    }
}

/// `T` for adjacency matrices.
pub fn test_statistic(graphs: &[AdjacencyMatrix], fit: &FitOptions) -> Result<StatisticParts> {
    check_graph_count(graphs.len())?;
    statistic_from_psd(&positive_parts(graphs)?, fit)
}

/// `T` for precomputed positive parts: the common-Λ objective (exact) minus
/// the alternating-minimization objective.
pub fn statistic_from_psd(psd: &[PsdGraphMatrix], fit: &FitOptions) -> Result<StatisticParts> {
    check_graph_count(psd.len())?;
    let null = fit_common_lambda_psd(psd, fit.d)?;
    let alternative = fit_multi_rdpg_psd(psd, fit)?;
    let parts = StatisticParts {
        statistic: null.objective - alternative.objective(),
        null_objective: null.objective,
        alternative_objective: alternative.objective(),
    };
    if parts.statistic < NEGATIVE_STATISTIC_TOL {
        log::warn!(
            "test statistic {:.3e} is negative: the alternative fit stopped above the common-lambda optimum",
            parts.statistic
        );
    }
    Ok(parts)
}

fn check_graph_count(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "the test needs at least two graphs, got {k}"
        )));
    }
    Ok(())
}

/// For every pair `i ≤ j`, shuffles the K values `(A¹ᵢⱼ, …, Aᴷᵢⱼ)` across
/// graphs and mirrors them into the lower triangle. Pairs are visited in
/// row-major order with one shuffle each.
pub fn permute_graphs(graphs: &[AdjacencyMatrix], seed: u64) -> Result<Vec<AdjacencyMatrix>> {
    let Some(first) = graphs.first() else {
        return Ok(Vec::new());
    };
    let n = first.n();
    if let Some(bad) = graphs.iter().find(|g| g.n() != n) {
        return Err(Error::DimensionMismatch(format!(
            "graphs have {} and {n} nodes",
            bad.n()
        )));
    }
    let k = graphs.len();
    let mut rng = rng::seeded(seed);
    let mut out: Vec<DMatrix<f64>> = vec![DMatrix::zeros(n, n); k];
    let mut values = vec![0.0; k];
    for i in 0..n {
        for j in i..n {
            for (slot, g) in values.iter_mut().zip(graphs) {
                *slot = g.as_matrix()[(i, j)];
            }
            values.shuffle(&mut rng);
            for (m, &v) in out.iter_mut().zip(&values) {
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
    }
    Ok(out.into_iter().map(AdjacencyMatrix::from_dense_unchecked).collect())
}

/// p-value of `observed` against replicate statistics.
pub fn p_value(observed: f64, null_statistics: &[f64], rule: PValueRule) -> f64 {
    let exceed = null_statistics.iter().filter(|&&t| t >= observed).count() as f64;
    let b = null_statistics.len() as f64;
    match rule {
        PValueRule::Plain => exceed / b,
        PValueRule::AddOne => (exceed + 1.0) / (b + 1.0),
    }
}

/// Full permutation test. Replicate `b` permutes with seed `seed ^ b`, so the
/// result does not depend on how replicates are scheduled across threads.
pub fn permutation_test(graphs: &[AdjacencyMatrix], options: &TestOptions) -> Result<TestResult> {
    check_graph_count(graphs.len())?;
    if options.permutations == 0 {
        return Err(Error::InvalidArgument(
            "number of permutations must be at least 1".into(),
        ));
    }
    let observed = test_statistic(graphs, &options.fit)?;
    let null_statistics = (1..=options.permutations)
        .into_par_iter()
        .map(|b| {
            let permuted = permute_graphs(graphs, rng::replicate_seed(options.seed, b))?;
            Ok(statistic_from_psd(&positive_parts(&permuted)?, &options.fit)?.statistic)
        })
        .collect::<Result<Vec<f64>>>()?;
    let p = p_value(observed.statistic, &null_statistics, options.p_value_rule);
    Ok(TestResult {
        statistic: observed.statistic,
        null_objective: observed.null_objective,
        alternative_objective: observed.alternative_objective,
        null_statistics,
        p_value: p,
        options: options.clone(),
    })
}

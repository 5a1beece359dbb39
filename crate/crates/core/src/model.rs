//! The multi-RDPG latent model `Wᵏ = U Λᵏ Uᵀ` and graph generation from it.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::AdjacencyMatrix;
use crate::linalg;
use crate::rng;

/// Entrywise tolerance for `UᵀU = I`.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// Rounding slack allowed on probabilities outside `[0,1]` before sampling
/// refuses them.
const PROBABILITY_SLACK: f64 = 1e-12;

/// Link from latent inner products to edge probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Link {
    /// `f(x) = x`; sampling requires `x ∈ [0,1]`.
    Identity,
    /// `f(x) = min(max(x, 0), 1)`.
    Clamp01,
    /// `f(x) = max(x, 0)`; sampling still requires `x ≤ 1`.
    PositivePart,
}

impl Link {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Link::Identity => x,
            Link::Clamp01 => x.clamp(0.0, 1.0),
            Link::PositivePart => x.max(0.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Link::Identity => "identity",
            Link::Clamp01 => "clamp01",
            Link::PositivePart => "positive-part",
        }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Link {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Link::Identity),
            "clamp01" => Ok(Link::Clamp01),
            "positive-part" | "relu" => Ok(Link::PositivePart),
            other => Err(Error::UnknownStrategy {
                kind: "link",
                name: other.to_string(),
                available: "identity, clamp01, positive-part".into(),
            }),
        }
    }
}

/// Shared orthonormal basis `U` (n×d) and one nonnegative diagonal weight
/// vector per graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentModel {
    u: DMatrix<f64>,
    lambdas: Vec<DVector<f64>>,
    link: Link,
}

impl LatentModel {
    pub fn new(u: DMatrix<f64>, lambdas: Vec<DVector<f64>>, link: Link) -> Result<Self> {
        linalg::check_orthonormal(&u, ORTHONORMAL_TOL)?;
        let d = u.ncols();
        for (k, lambda) in lambdas.iter().enumerate() {
            if lambda.len() != d {
                return Err(Error::DimensionMismatch(format!(
                    "lambda {k} has length {}, basis has {d} columns",
                    lambda.len()
                )));
            }
            for (j, &value) in lambda.iter().enumerate() {
                if !value.is_finite() || value < 0.0 {
                    return Err(Error::NegativeWeight {
                        graph: k,
                        dim: j,
                        value,
                    });
                }
            }
        }
        Ok(Self { u, lambdas, link })
    }

    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    pub fn d(&self) -> usize {
        self.u.ncols()
    }

    /// Number of graphs `K`.
    pub fn graphs(&self) -> usize {
        self.lambdas.len()
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn lambdas(&self) -> &[DVector<f64>] {
        &self.lambdas
    }

    pub fn lambda(&self, k: usize) -> Result<&DVector<f64>> {
        self.lambdas.get(k).ok_or(Error::IndexOutOfRange {
            index: k,
            limit: self.lambdas.len(),
        })
    }

    pub fn link(&self) -> Link {
        self.link
    }

    pub fn with_link(mut self, link: Link) -> Self {
        self.link = link;
        self
    }

    /// `U Λᵏ Uᵀ` (0-based `k`), before the link.
    pub fn weight_matrix(&self, k: usize) -> Result<DMatrix<f64>> {
        Ok(linalg::reconstruct(&self.u, self.lambda(k)?))
    }

    /// Latent positions `U (Λᵏ)^{1/2}` of graph `k`.
    pub fn latent_positions(&self, k: usize) -> Result<DMatrix<f64>> {
        let lambda = self.lambda(k)?;
        let mut x = self.u.clone();
        for (j, mut col) in x.column_iter_mut().enumerate() {
            col *= lambda[j].sqrt();
        }
        Ok(x)
    }

    /// `f(U Λᵏ Uᵀ)` entrywise.
    pub fn edge_probabilities(&self, k: usize) -> Result<DMatrix<f64>> {
        let mut w = self.weight_matrix(k)?;
        let link = self.link;
        w.apply(|x| *x = link.apply(*x));
        Ok(w)
    }

    /// Draws each pair `i < j` independently with probability `Pᵢⱼ`; the
    /// diagonal stays zero. Pairs are visited in row-major order.
    pub fn sample_graph(&self, k: usize, seed: u64) -> Result<AdjacencyMatrix> {
        let p = self.edge_probabilities(k)?;
        sample_from_probabilities(&p, seed)
    }
}

/// Bernoulli draw of an undirected graph from the upper triangle of `p`.
pub fn sample_from_probabilities(p: &DMatrix<f64>, seed: u64) -> Result<AdjacencyMatrix> {
    if !p.is_square() {
        return Err(Error::DimensionMismatch("probability matrix must be square".into()));
    }
    let n = p.nrows();
    let mut rng = rng::seeded(seed);
    let mut entries = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let prob = p[(i, j)];
            if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&prob) {
                return Err(Error::ProbabilityOutOfRange {
                    row: i,
                    col: j,
                    value: prob,
                });
            }
            if rng.random::<f64>() < prob {
                entries[(i, j)] = 1.0;
                entries[(j, i)] = 1.0;
            }
        }
    }
    Ok(AdjacencyMatrix::from_dense_unchecked(entries))
}

//! Starting bases for the alternating minimizer.

use std::sync::LazyLock;

use nalgebra::DMatrix;

use crate::error::Result;
use crate::graph::PsdGraphMatrix;
use crate::linalg::{self, SymEigen};
use crate::registry::{Named, Registry};
use crate::rng;

pub const AVERAGE_SPECTRAL: &str = "average-spectral";
pub const RANDOM_ORTHONORMAL: &str = "random-orthonormal";

/// Produces the initial n×d orthonormal basis; the weights are then set by
/// the exact Λ-update at that basis.
pub trait Initializer: Named + Send + Sync {
    fn initial_basis(&self, psd: &[PsdGraphMatrix], d: usize, seed: u64) -> Result<DMatrix<f64>>;
}

/// Top-d eigenvectors of the mean positive part, i.e. the common-Λ optimum.
/// Deterministic; ignores the seed.
pub struct AverageSpectral;

impl Named for AverageSpectral {
    fn name(&self) -> &'static str {
        AVERAGE_SPECTRAL
    }
}

impl Initializer for AverageSpectral {
    fn initial_basis(&self, psd: &[PsdGraphMatrix], d: usize, _seed: u64) -> Result<DMatrix<f64>> {
        let eig = SymEigen::new(&mean_matrix(psd))?;
        Ok(eig.top_vectors(d))
    }
}

/// Haar-random basis from a seeded Gaussian QR; for multi-start checks.
pub struct RandomOrthonormal;

impl Named for RandomOrthonormal {
    fn name(&self) -> &'static str {
        RANDOM_ORTHONORMAL
    }
}

impl Initializer for RandomOrthonormal {
    fn initial_basis(&self, psd: &[PsdGraphMatrix], d: usize, seed: u64) -> Result<DMatrix<f64>> {
        let n = psd.first().map_or(0, PsdGraphMatrix::n);
        linalg::random_orthonormal(n, d, &mut rng::seeded(seed))
    }
}

/// `(1/K) Σₖ A₊ᵏ`; callers guarantee a non-empty list of equal shapes.
pub(crate) fn mean_matrix(psd: &[PsdGraphMatrix]) -> DMatrix<f64> {
    let n = psd[0].n();
    let mut sum = DMatrix::zeros(n, n);
    for a in psd {
        sum += a.as_matrix();
    }
    sum / psd.len() as f64
}

static INITIALIZERS: LazyLock<Registry<dyn Initializer>> = LazyLock::new(|| {
    Registry::<dyn Initializer>::new("initializer")
        .with(Box::new(AverageSpectral))
        .with(Box::new(RandomOrthonormal))
});

/// The built-in initializers, keyed by name.
pub fn initializers() -> &'static Registry<dyn Initializer> {
    &INITIALIZERS
}

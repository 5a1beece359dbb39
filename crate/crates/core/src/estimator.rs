//! Competing estimators of `(U, Λ¹…Λᴷ)` used by the simulation studies.

use std::sync::LazyLock;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fit::{fit_common_lambda_psd, fit_multi_rdpg_psd, fit_rdpg_single, FitOptions};
use crate::graph::PsdGraphMatrix;
use crate::metrics;
use crate::model::{LatentModel, Link};
use crate::registry::{Named, Registry};

pub const MULTI_RDPG: &str = "multi-rdpg";
pub const RDPG_ALL: &str = "rdpg-all";
pub const RDPG_SEPARATE: &str = "rdpg-separate";

/// One or more fitted models covering the K input graphs. Graph `k` is
/// described by weight vector `slot` of component `component`.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub components: Vec<LatentModel>,
    pub assignment: Vec<(usize, usize)>,
}

impl Estimate {
    pub fn graphs(&self) -> usize {
        self.assignment.len()
    }

    /// `Û Λ̂ᵏ Ûᵀ` for graph `k`.
    pub fn reconstruction(&self, k: usize) -> Result<DMatrix<f64>> {
        let &(c, slot) = self.assignment.get(k).ok_or(Error::IndexOutOfRange {
            index: k,
            limit: self.assignment.len(),
        })?;
        self.components[c].weight_matrix(slot)
    }

    /// Subspace distance to `u`, averaged over components.
    pub fn subspace_distance(&self, u: &DMatrix<f64>) -> Result<f64> {
        let total = self
            .components
            .iter()
            .map(|m| metrics::subspace_distance(m.u(), u))
            .sum::<Result<f64>>()?;
        Ok(total / self.components.len() as f64)
    }

    pub fn adjacency_error(&self, truth: &LatentModel) -> Result<f64> {
        let recon = (0..self.graphs())
            .map(|k| self.reconstruction(k))
            .collect::<Result<Vec<_>>>()?;
        metrics::adjacency_error_with(truth, &recon)
    }
}

/// An estimator of the joint model from positive parts. `groups` partitions
/// the graph indices into sets believed to share a distribution; only
/// estimators that fit per group use it.
pub trait Estimator: Named + Send + Sync {
    fn estimate(&self, psd: &[PsdGraphMatrix], groups: &[Vec<usize>], fit: &FitOptions) -> Result<Estimate>;
}

/// Alternating minimization with per-graph weights.
pub struct MultiRdpg;

impl Named for MultiRdpg {
    fn name(&self) -> &'static str {
        MULTI_RDPG
    }
}

impl Estimator for MultiRdpg {
    fn estimate(&self, psd: &[PsdGraphMatrix], _groups: &[Vec<usize>], fit: &FitOptions) -> Result<Estimate> {
        let fitted = fit_multi_rdpg_psd(psd, fit)?;
        Ok(Estimate {
            components: vec![fitted.model],
            assignment: (0..psd.len()).map(|k| (0, k)).collect(),
        })
    }
}

/// One RDPG for every graph: the common-Λ fit on the mean positive part.
pub struct RdpgAll;

impl Named for RdpgAll {
    fn name(&self) -> &'static str {
        RDPG_ALL
    }
}

impl Estimator for RdpgAll {
    fn estimate(&self, psd: &[PsdGraphMatrix], _groups: &[Vec<usize>], fit: &FitOptions) -> Result<Estimate> {
        let common = fit_common_lambda_psd(psd, fit.d)?;
        Ok(Estimate {
            components: vec![common.to_model(1)],
            assignment: vec![(0, 0); psd.len()],
        })
    }
}

/// One RDPG per group; singleton groups use the closed-form single fit.
pub struct RdpgSeparate;

impl Named for RdpgSeparate {
    fn name(&self) -> &'static str {
        RDPG_SEPARATE
    }
}

impl Estimator for RdpgSeparate {
    fn estimate(&self, psd: &[PsdGraphMatrix], groups: &[Vec<usize>], fit: &FitOptions) -> Result<Estimate> {
        let mut assignment = vec![None; psd.len()];
        let mut components = Vec::with_capacity(groups.len());
        for (g, members) in groups.iter().enumerate() {
            let subset = members
                .iter()
                .map(|&k| {
                    psd.get(k).cloned().ok_or(Error::IndexOutOfRange {
                        index: k,
                        limit: psd.len(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let model = match subset.as_slice() {
                [] => return Err(Error::InvalidArgument(format!("group {g} is empty"))),
                [single] => {
                    let f = fit_rdpg_single(single, fit.d)?;
                    LatentModel::new(f.u, vec![f.lambda], Link::Identity)?
                }
                _ => fit_common_lambda_psd(&subset, fit.d)?.to_model(1),
            };
            components.push(model);
            for &k in members {
                if assignment[k].replace((g, 0)).is_some() {
                    return Err(Error::InvalidArgument(format!("graph {k} appears in two groups")));
                }
            }
        }
        let assignment = assignment
            .into_iter()
            .enumerate()
            .map(|(k, a)| a.ok_or_else(|| Error::InvalidArgument(format!("graph {k} is in no group"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Estimate { components, assignment })
    }
}

static ESTIMATORS: LazyLock<Registry<dyn Estimator>> = LazyLock::new(|| {
    Registry::<dyn Estimator>::new("estimator")
        .with(Box::new(MultiRdpg))
        .with(Box::new(RdpgAll))
        .with(Box::new(RdpgSeparate))
});

pub fn estimators() -> &'static Registry<dyn Estimator> {
    &ESTIMATORS
}

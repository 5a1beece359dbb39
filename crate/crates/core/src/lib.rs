//! Multiple random dot product graphs.
//!
//! K undirected graphs on a shared node set are modelled as
//! `P(Aᵏᵢⱼ = 1) = f((U Λᵏ Uᵀ)ᵢⱼ)` with one orthonormal basis `U` and
//! nonnegative diagonal weights `Λᵏ` per graph. The crate provides
//!
//! * graph containers, positive-semidefinite projection and edge-list I/O ([`graph`]),
//! * generation from the latent model ([`model`]),
//! * closed-form and alternating-minimization fits ([`fit`]),
//! * a permutation test of `Λ¹ = … = Λᴷ` ([`inference`]),
//! * error metrics and the simulation studies ([`metrics`], [`sim`]).
//!
//! Initializers, estimators and simulation scenarios are trait objects held
//! in name-keyed registries so callers can select them at runtime.

pub mod error;
pub mod estimator;
pub mod fit;
pub mod graph;
pub mod inference;
pub mod init;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod registry;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use fit::{
    fit_common_lambda, fit_multi_rdpg, fit_rdpg_single, update_lambda, update_u, CommonLambdaFit, FitOptions,
    MultiRdpgFit, SingleFit,
};
pub use graph::{
    downsample_edges, match_edge_counts, positive_part, read_edge_list, AdjacencyMatrix, EdgeList, EdgeListFormat,
    PsdGraphMatrix,
};
pub use inference::{permutation_test, permute_graphs, test_statistic, PValueRule, TestOptions, TestResult};
pub use metrics::{adjacency_error, subspace_distance};
pub use model::{LatentModel, Link};
pub use sim::{SimulationReport, SimulationSpec};

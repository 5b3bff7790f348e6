//! Probabilistic network: distribution families, the node registry, seeded
//! hierarchical sampling and closed-form conjugate posterior updates.

mod conjugate;
mod dist;
mod infer;
mod registry;
mod rng;

pub use conjugate::{
    posterior_update_beta, posterior_update_dirichlet, posterior_update_gamma_exponential,
    posterior_update_normal, GammaParams, NormalPrior,
};
pub use dist::{Concentration, DistributionSpec, Family, HyperparamFault, Realized, Value, REJECTION_CAP};
pub use infer::{load_observations, parse_observations, posterior_infer, NodeParams, Observation, ObservationSet};
pub use registry::{sample_hierarchical, NodeHandle, NodeRef, ParamTable, Registry, Sample};
pub use rng::RngStream;

pub(crate) use dist::{categorical, dirichlet};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProbError {
    #[error("duplicate node id `{0}`")]
    DuplicateId(String),
    #[error("node `{node}` names unknown parent `{parent}`")]
    UnknownParent { node: String, parent: String },
    #[error("cycle detected: {}", .0.join(" -> "))]
    CycleDetected(Vec<String>),
    #[error("node `{node}`: invalid hyperparameter `{field}`: {reason}")]
    InvalidHyperparam { node: String, field: String, reason: String },
    #[error("node `{node}` has no hyperparameters for template {template}")]
    MissingTemplateParam { node: String, template: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("negative count {value} at index {index}")]
    NegativeCount { index: usize, value: i64 },
    #[error("observation {value} lies below the location {location}")]
    ObservationBelowLocation { value: f64, location: f64 },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{node}`: family {family} has no conjugate update")]
    UnsupportedFamily { node: String, family: Family },
    #[error("node `{node}`: invalid observation: {reason}")]
    InvalidObservation { node: String, reason: String },
    #[error("observations line {line}: {message}")]
    Parse { line: usize, message: String },
}

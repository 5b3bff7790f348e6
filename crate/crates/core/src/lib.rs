//! Synthetic document layout generator.
//!
//! Documents are sampled from a Bayesian network whose hyperparameters come
//! from stochastic templates, composed onto pages, rendered, degraded and
//! annotated with ground-truth boxes.

pub mod annotate;
pub mod color;
pub mod defects;
pub mod fonts;
pub mod layout;
pub mod pipeline;
pub mod probnet;
pub mod render;
pub mod subnets;
pub mod templates;

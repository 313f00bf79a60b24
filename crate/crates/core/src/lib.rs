//! Soft-label positive-unlabelled learning.
//!
//! Samples carry a soft label `S` in `[0, 1]` instead of a binary one.
//! [`metrics`] evaluates scorers against `S` alone, [`soft_labeler`] turns
//! raw evidence into soft labels, [`trainer`] fits scorers to them, and
//! [`oracle`] checks the whole chain by brute force on finite domains.

// `!(x > 0.0)` style checks deliberately reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod oracle;
pub mod rng;
pub mod soft_labeler;
pub mod trainer;

pub use dataset::{SoftDataset, SoftSample};
pub use error::{Error, Result};
pub use metrics::{CurveKind, RocCurve};
pub use oracle::{DiscreteProblem, Frontier};
pub use trainer::{Architecture, ScoringModel, TrainConfig, TrainedModel};

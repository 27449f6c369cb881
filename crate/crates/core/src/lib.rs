//! Selective-emphasis temporal-difference learning with linear features:
//! per-sample learners, exact tabular ground truth, benchmark MDPs and
//! error metrics.

pub mod analysis;
pub mod envs;
pub mod error;
pub mod learners;
pub mod linalg;
pub mod metrics;
pub mod model;

pub use error::{Error, Result};
pub use learners::{Algorithm, Hyperparams, LearnerState, StepOutcome};
pub use metrics::GroundTruth;
pub use model::{FeatureVector, PolicyPair, TabularMdp, TransitionSample};

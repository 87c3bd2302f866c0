//! Poisson multi-Bernoulli mixture (PMBM) filtering for multi-target
//! tracking with the standard point-target measurement model.
//!
//! The crate is organised bottom-up:
//!
//! - [`gaussian`]: Kalman prediction/update, gating, moment matching.
//! - [`density`]: the PMBM data model and its structural transforms.
//! - [`assignment`]: optimal and k-best (Murty) assignment.
//! - [`filter`]: prediction, update and pruning.
//! - [`estimators`]: the three multi-target state extractors.
//! - [`metrics`]: OSPA and RMS aggregation.
//! - [`scenario`]: ground truth and measurement simulation.
//! - [`montecarlo`]: the OSPA benchmark harness.
//! - [`oracle`]: brute-force reference computations on tiny instances.
//! - [`validation`]: self-checks that compare the filter against the oracles.

pub mod assignment;
pub mod density;
pub mod error;
pub mod estimators;
pub mod filter;
pub mod gaussian;
pub mod metrics;
pub mod montecarlo;
pub mod oracle;
pub mod scenario;
pub mod validation;

pub use assignment::{murty_kbest, solve_optimal, Assignment, CostMatrix};
pub use density::{
    BernoulliComponent, CardinalityPmf, GlobalHypothesis, Mbm, Mbm01Component, MbmHypothesis,
    PmbmDensity, SingleTargetHypothesis, Track,
};
pub use error::{Error, Result};
pub use estimators::{estimate1, estimate2, estimate3, Estimator, StateEstimate};
pub use filter::{predict, prune, update, FilterParams};
pub use gaussian::{
    gate, kalman_predict, kalman_update, log_sum_exp, moment_match, CvModelConfig, Gaussian,
    GaussianMixture, LinearGaussianModel, WeightedGaussian,
};
pub use metrics::{ospa, rms_aggregate, OspaParams};
pub use scenario::{GroundTruth, MeasurementSet, ScenarioConfig};

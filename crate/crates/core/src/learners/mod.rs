//! Victim models for the stream-poisoning and co-option scenarios.
//!
//! None of these learners can read provenance flags or hidden goal values:
//! they are fed [`Observation`]s, raw rewards or labelled points only.

mod bandit;
mod events;
mod hill_climb;
mod linear;
mod threshold;

pub use bandit::{arm_choose, arm_update, ArmEstimator, RunningMean};
pub use events::{visible, EventRecord, Observation, Provenance};
pub use hill_climb::{hill_climb_step, ActionBox, HillClimbPolicy, RewardFn, RewardTamper};
pub use linear::{
    accuracy, apply_flips, choose_flips, epoch_orders, train_linear, FlipStrategy, LabeledPoint, LinearClassifier,
    TrainingHyper, TwoGaussianTask,
};
pub use threshold::{active_query, active_update, ThresholdLearner};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnerError {
    #[error("arm {arm} out of range for {arm_count} arms")]
    ArmOutOfRange { arm: usize, arm_count: usize },
    #[error("arm {0} has no observations yet")]
    UnobservedArm(usize),
    #[error("interval [{lo}, {hi}] is narrower than the resolution {resolution}")]
    DegenerateInterval { lo: f64, hi: f64, resolution: f64 },
    #[error("query {query} lies outside the interval [{lo}, {hi}]")]
    QueryOutsideInterval { query: f64, lo: f64, hi: f64 },
    #[error("training data must contain both classes")]
    SingleClass,
    #[error("flip budget {k} exceeds training set size {n}")]
    FlipBudget { k: usize, n: usize },
    #[error("{0} must be finite")]
    NonFinite(&'static str),
    #[error("{0}")]
    InvalidParameter(String),
}

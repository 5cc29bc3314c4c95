//! Deterministic randomness, candidate generation and selection operators.
//!
//! Optimization pressure is modelled as best-of-`n` sampling: an agent draws
//! `n` candidates from a [`CandidateGenerator`], scores them with its proxy
//! metric and applies a [`SelectionOperator`]. Larger `n` means harder
//! optimization of the proxy.

mod candidates;
mod rng;
mod selection;

pub use candidates::{sample_candidates, CandidateGenerator, NoisyProxy, PointMass, ScoredCandidate, UniformMenu};
pub use rng::{derive_seed, splitmix64, stream_id, Purpose, ReplicateStreams, RngStream};
pub use selection::{retained_count, select, SelectionOperator, SelectorKind};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("candidate list is empty")]
    EmptyCandidates,
    #[error("invalid selection operator: {0}")]
    InvalidOperator(String),
    #[error("invalid candidate generator: {0}")]
    InvalidGenerator(String),
    #[error("candidate scores must be finite")]
    NonFinite,
}

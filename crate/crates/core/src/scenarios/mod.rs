//! One runnable scenario per multi-agent overoptimization failure mode.
//!
//! Every scenario produces a [`RunTrace`]: per-step metric and goal values
//! for each agent, the provenance-tagged event log (when the scenario has a
//! data stream), terminal outcomes and scenario-specific details.

mod adversarial;
mod co_option;
mod contention;
mod regressional;
mod streams;
mod threshold;

pub use adversarial::{
    run_s3a_goal_poisoning, run_s3b_optimization_theft, theft_sample, PoisonPoolConfig, PoisoningOutcome, TheftConfig,
    TheftOutcome, TheftSample,
};
pub use co_option::{
    run_s5_co_option, CoOptionConfig, CoOptionOutcome, CoOptionVictim, HillClimbSetup, InterceptConfig,
    LabelFlipConfig, TamperConfig,
};
pub use contention::{
    coordinated_benchmark, run_s2_contention, shares, ContentionConfig, ContentionMode, ContentionOutcome,
    ContentionReport,
};
pub use regressional::{run_s0_regressional, RegressionalConfig};
pub use streams::{run_s4_stream_attacks, FilterConfig, InjectionConfig, StreamOutcome, StreamVictim, SybilConfig};
pub use threshold::{
    group_goal, run_s1a_group_overopt, run_s1b_catastrophic_threshold, threshold_goal, GroupOveroptConfig, Reversal,
    ThresholdConfig, ThresholdOutcome,
};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::engine::{EngineError, ReplicateStreams, SelectionOperator};
use crate::learners::{EventRecord, LearnerError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioId {
    S0,
    S1a,
    S1b,
    S2,
    S3a,
    S3b,
    S4a,
    S4b,
    S4c,
    S5,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 10] = [
        ScenarioId::S0,
        ScenarioId::S1a,
        ScenarioId::S1b,
        ScenarioId::S2,
        ScenarioId::S3a,
        ScenarioId::S3b,
        ScenarioId::S4a,
        ScenarioId::S4b,
        ScenarioId::S4c,
        ScenarioId::S5,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioId::S0 => "s0",
            ScenarioId::S1a => "s1a",
            ScenarioId::S1b => "s1b",
            ScenarioId::S2 => "s2",
            ScenarioId::S3a => "s3a",
            ScenarioId::S3b => "s3b",
            ScenarioId::S4a => "s4a",
            ScenarioId::S4b => "s4b",
            ScenarioId::S4c => "s4c",
            ScenarioId::S5 => "s5",
        }
    }

    /// Byte mixed into every stream id of this scenario.
    pub fn tag(&self) -> u8 {
        *self as u8 + 1
    }

    /// Whether the scenario's agents take a [`SelectionOperator`].
    pub fn accepts_pressure(&self) -> bool {
        matches!(self, ScenarioId::S0 | ScenarioId::S1a | ScenarioId::S1b)
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioId {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| ScenarioError::UnknownScenario(s.to_string()))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("unknown scenario id `{0}`")]
    UnknownScenario(String),
    #[error("invalid `{field}`: {message}")]
    Invariant { field: String, message: String },
    #[error("scenario {0} does not take a selection operator")]
    PressureUnsupported(ScenarioId),
    #[error("attack `{attack}` cannot target a {victim} victim")]
    KindMismatch { attack: &'static str, victim: &'static str },
    #[error("non-finite {what} at step {step}, agent {agent}")]
    NonFinite {
        what: &'static str,
        step: u64,
        agent: usize,
    },
    #[error("steps for agent {agent} are not strictly increasing at step {step}")]
    StepOrder { agent: usize, step: u64 },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
}

pub(crate) fn invariant(field: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invariant {
        field: field.to_string(),
        message: message.into(),
    }
}

/// One `(step, agent)` observation of metric and goal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub agent_id: usize,
    pub metric: f64,
    pub goal: f64,
}

/// An agent's metric and goal at the end of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentOutcome {
    pub agent_id: usize,
    pub metric: f64,
    pub goal: f64,
}

/// Scenario-specific results beyond the metric/goal series.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioDetails {
    Regressional { bias: f64 },
    GroupOveropt(ThresholdOutcome),
    Threshold(ThresholdOutcome),
    Contention(ContentionReport),
    Poisoning(PoisoningOutcome),
    Theft(TheftOutcome),
    Stream(StreamOutcome),
    CoOption(CoOptionOutcome),
}

/// Everything one replicate of one scenario produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub scenario: ScenarioId,
    pub replicate: u64,
    pub pressure: Option<usize>,
    pub steps: Vec<StepRecord>,
    pub events: Vec<EventRecord>,
    pub summary: Vec<AgentOutcome>,
    pub terminal_metric: f64,
    pub terminal_goal: f64,
    pub details: ScenarioDetails,
}

impl RunTrace {
    /// Checks that every value is finite and steps increase per agent.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut last: BTreeMap<usize, u64> = BTreeMap::new();
        for s in &self.steps {
            if !s.metric.is_finite() {
                return Err(ScenarioError::NonFinite {
                    what: "metric",
                    step: s.step,
                    agent: s.agent_id,
                });
            }
            if !s.goal.is_finite() {
                return Err(ScenarioError::NonFinite {
                    what: "goal",
                    step: s.step,
                    agent: s.agent_id,
                });
            }
            if let Some(prev) = last.insert(s.agent_id, s.step) {
                if s.step <= prev {
                    return Err(ScenarioError::StepOrder {
                        agent: s.agent_id,
                        step: s.step,
                    });
                }
            }
        }
        if !self.terminal_metric.is_finite() || !self.terminal_goal.is_finite() {
            return Err(ScenarioError::NonFinite {
                what: "terminal value",
                step: u64::MAX,
                agent: 0,
            });
        }
        Ok(())
    }

    /// Series of one agent, in step order.
    pub fn agent_steps(&self, agent_id: usize) -> impl Iterator<Item = &StepRecord> {
        self.steps.iter().filter(move |s| s.agent_id == agent_id)
    }

    /// Scenario-specific summary fields, keyed by output name.
    pub fn extras(&self) -> BTreeMap<String, Value> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: Value| {
            m.insert(k.to_string(), v);
        };
        match &self.details {
            ScenarioDetails::Regressional { bias } => put("bias", (*bias).into()),
            ScenarioDetails::GroupOveropt(t) => {
                put("reversal_step", t.crossing_step.into());
                put("peak_goal_step", t.peak_goal_step.into());
            }
            ScenarioDetails::Threshold(t) => {
                put("crossing_step", t.crossing_step.into());
                put("peak_goal_step", t.peak_goal_step.into());
                put("final_sum", t.final_sum.into());
            }
            ScenarioDetails::Contention(c) => {
                put("welfare_gap", c.welfare_gap().into());
                put("equilibrium_welfare", c.equilibrium.welfare.into());
                put("coordinated_welfare", c.coordinated.welfare.into());
                put("converged", c.converged.into());
                put("passes", c.passes.into());
            }
            ScenarioDetails::Poisoning(p) => {
                put("selected_true_value", p.selected_true_value.into());
                put("selected_observed_value", p.selected_observed_value.into());
                put("selected_injected", p.selected_injected.into());
                put("opponent_goal", (-p.selected_true_value).into());
            }
            ScenarioDetails::Theft(t) => {
                put("corr_full", t.corr_full.into());
                put("corr_selected", t.corr_selected.into());
                put("opponent_goal_selected", t.mean_opponent_goal.into());
                put("opponent_goal_selected_disabled", t.mean_opponent_goal_disabled.into());
                put("selected_count", t.selected_count.into());
            }
            ScenarioDetails::Stream(s) => match s {
                StreamOutcome::Injection {
                    final_choice,
                    regret,
                    injected_events,
                } => {
                    put("final_choice", (*final_choice).into());
                    put("regret", (*regret).into());
                    put("injected_events", (*injected_events).into());
                }
                StreamOutcome::Sybil {
                    final_error,
                    truth_in_interval,
                    sybil_answers,
                } => {
                    put("final_error", (*final_error).into());
                    put("truth_in_interval", (*truth_in_interval).into());
                    put("sybil_answers", (*sybil_answers).into());
                }
                StreamOutcome::Filter {
                    bias,
                    hidden_events,
                    visible_events,
                } => {
                    put("bias", (*bias).into());
                    put("hidden_events", (*hidden_events).into());
                    put("visible_events", (*visible_events).into());
                }
            },
            ScenarioDetails::CoOption(c) => match c {
                CoOptionOutcome::RewardTamper {
                    backdoor_occupancy,
                    final_true_reward,
                } => {
                    put("backdoor_occupancy", (*backdoor_occupancy).into());
                    put("final_true_reward", (*final_true_reward).into());
                }
                CoOptionOutcome::OutputIntercept {
                    mean_realized_goal,
                    mean_intended_goal,
                    intercepted_steps,
                } => {
                    put("mean_realized_goal", (*mean_realized_goal).into());
                    put("mean_intended_goal", (*mean_intended_goal).into());
                    put("intercepted_steps", (*intercepted_steps).into());
                }
                CoOptionOutcome::LabelFlip {
                    accuracy_clean,
                    accuracy_attacked,
                    flipped,
                } => {
                    put("accuracy_clean", (*accuracy_clean).into());
                    put("accuracy_attacked", (*accuracy_attacked).into());
                    put("flipped_count", flipped.len().into());
                }
            },
        }
        m
    }
}

/// A fully parameterized scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSpec {
    S0(RegressionalConfig),
    S1a(GroupOveroptConfig),
    S1b(ThresholdConfig),
    S2(ContentionConfig),
    S3a(PoisonPoolConfig),
    S3b(TheftConfig),
    S4a(InjectionConfig),
    S4b(SybilConfig),
    S4c(FilterConfig),
    S5(CoOptionConfig),
}

impl ScenarioSpec {
    pub fn id(&self) -> ScenarioId {
        match self {
            ScenarioSpec::S0(_) => ScenarioId::S0,
            ScenarioSpec::S1a(_) => ScenarioId::S1a,
            ScenarioSpec::S1b(_) => ScenarioId::S1b,
            ScenarioSpec::S2(_) => ScenarioId::S2,
            ScenarioSpec::S3a(_) => ScenarioId::S3a,
            ScenarioSpec::S3b(_) => ScenarioId::S3b,
            ScenarioSpec::S4a(_) => ScenarioId::S4a,
            ScenarioSpec::S4b(_) => ScenarioId::S4b,
            ScenarioSpec::S4c(_) => ScenarioId::S4c,
            ScenarioSpec::S5(_) => ScenarioId::S5,
        }
    }

    /// The scenario with every parameter at its documented default.
    ///
    /// `s5` defaults to the label-flipping attack.
    pub fn default_for(id: ScenarioId) -> Self {
        match id {
            ScenarioId::S0 => ScenarioSpec::S0(Default::default()),
            ScenarioId::S1a => ScenarioSpec::S1a(Default::default()),
            ScenarioId::S1b => ScenarioSpec::S1b(Default::default()),
            ScenarioId::S2 => ScenarioSpec::S2(Default::default()),
            ScenarioId::S3a => ScenarioSpec::S3a(Default::default()),
            ScenarioId::S3b => ScenarioSpec::S3b(Default::default()),
            ScenarioId::S4a => ScenarioSpec::S4a(Default::default()),
            ScenarioId::S4b => ScenarioSpec::S4b(Default::default()),
            ScenarioId::S4c => ScenarioSpec::S4c(Default::default()),
            ScenarioId::S5 => ScenarioSpec::S5(CoOptionConfig::LabelFlip(Default::default())),
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        match self {
            ScenarioSpec::S0(c) => c.validate(),
            ScenarioSpec::S1a(c) => c.validate(),
            ScenarioSpec::S1b(c) => c.validate(),
            ScenarioSpec::S2(c) => c.validate(),
            ScenarioSpec::S3a(c) => c.validate(),
            ScenarioSpec::S3b(c) => c.validate(),
            ScenarioSpec::S4a(c) => c.validate(),
            ScenarioSpec::S4b(c) => c.validate(),
            ScenarioSpec::S4c(c) => c.validate(),
            ScenarioSpec::S5(c) => c.validate(),
        }
    }

    /// Parameters as a JSON object (the `params` block of a config file).
    pub fn params(&self) -> Value {
        let v = match self {
            ScenarioSpec::S0(c) => serde_json::to_value(c),
            ScenarioSpec::S1a(c) => serde_json::to_value(c),
            ScenarioSpec::S1b(c) => serde_json::to_value(c),
            ScenarioSpec::S2(c) => serde_json::to_value(c),
            ScenarioSpec::S3a(c) => serde_json::to_value(c),
            ScenarioSpec::S3b(c) => serde_json::to_value(c),
            ScenarioSpec::S4a(c) => serde_json::to_value(c),
            ScenarioSpec::S4b(c) => serde_json::to_value(c),
            ScenarioSpec::S4c(c) => serde_json::to_value(c),
            ScenarioSpec::S5(c) => serde_json::to_value(c),
        };
        v.expect("scenario configs serialize to JSON")
    }

    /// Runs one replicate.
    ///
    /// `op` is the agents' selection operator for scenarios that accept one;
    /// passing it to any other scenario is an error. Streams are keyed by
    /// `(master_seed, scenario, replicate)` only, so runs that differ only in
    /// `op` share their random inputs.
    pub fn run(
        &self,
        op: Option<&SelectionOperator>,
        master_seed: u64,
        replicate: u64,
    ) -> Result<RunTrace, ScenarioError> {
        let id = self.id();
        if op.is_some() && !id.accepts_pressure() {
            return Err(ScenarioError::PressureUnsupported(id));
        }
        let streams = ReplicateStreams::new(master_seed, id.tag(), replicate);
        let trace = match self {
            ScenarioSpec::S0(c) => run_s0_regressional(c, op, &streams),
            ScenarioSpec::S1a(c) => run_s1a_group_overopt(c, op, &streams),
            ScenarioSpec::S1b(c) => run_s1b_catastrophic_threshold(c, op, &streams),
            ScenarioSpec::S2(c) => run_s2_contention(c, &streams),
            ScenarioSpec::S3a(c) => run_s3a_goal_poisoning(c, &streams),
            ScenarioSpec::S3b(c) => run_s3b_optimization_theft(c, &streams),
            ScenarioSpec::S4a(c) => {
                let (victim, attack, horizon) = c.parts();
                run_s4_stream_attacks(&victim, attack.as_ref(), horizon, &streams)
            }
            ScenarioSpec::S4b(c) => {
                let (victim, attack, horizon) = c.parts();
                run_s4_stream_attacks(&victim, attack.as_ref(), horizon, &streams)
            }
            ScenarioSpec::S4c(c) => {
                let (victim, attack, horizon) = c.parts();
                run_s4_stream_attacks(&victim, attack.as_ref(), horizon, &streams)
            }
            ScenarioSpec::S5(c) => {
                let (victim, attack) = c.parts();
                run_s5_co_option(&victim, attack.as_ref(), &streams)
            }
        }?;
        let mut trace = trace;
        trace.scenario = id;
        trace.replicate = replicate;
        trace.validate()?;
        Ok(trace)
    }
}

/// Attacks on a victim's data stream or on the victim itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttackConfig {
    /// Fabricated rewards for `target_arm` (default: the worst arm), one
    /// with probability `rate` per step, each worth the arm's true mean plus
    /// `inflation`.
    Inject {
        rate: f64,
        inflation: f64,
        target_arm: Option<usize>,
    },
    /// Each active-learning query is answered by an attacker-controlled
    /// source with probability `fraction`; those answers are inverted.
    Sybil { fraction: f64 },
    /// Each honest record below the true mean is hidden with probability `rate`.
    Filter { rate: f64 },
    /// Adds a bonus bump of height `weight` around a backdoor region.
    RewardTamper {
        weight: f64,
        centre: Vec<f64>,
        width: f64,
        region_radius: f64,
    },
    /// Replaces the victim's emitted action with `action` with probability
    /// `probability` per step.
    OutputIntercept { probability: f64, action: Vec<f64> },
    /// Flips `count` training labels chosen by `strategy`.
    LabelFlip {
        count: usize,
        strategy: crate::learners::FlipStrategy,
    },
}

impl AttackConfig {
    pub fn kind_name(&self) -> &'static str {
        match self {
            AttackConfig::Inject { .. } => "inject",
            AttackConfig::Sybil { .. } => "sybil",
            AttackConfig::Filter { .. } => "filter",
            AttackConfig::RewardTamper { .. } => "reward_tamper",
            AttackConfig::OutputIntercept { .. } => "output_intercept",
            AttackConfig::LabelFlip { .. } => "label_flip",
        }
    }

    /// The attacker's scalar budget (rate, fraction, weight, probability or
    /// flip count).
    pub fn budget(&self) -> f64 {
        match self {
            AttackConfig::Inject { rate, .. } => *rate,
            AttackConfig::Sybil { fraction } => *fraction,
            AttackConfig::Filter { rate } => *rate,
            AttackConfig::RewardTamper { weight, .. } => *weight,
            AttackConfig::OutputIntercept { probability, .. } => *probability,
            AttackConfig::LabelFlip { count, .. } => *count as f64,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let fraction = |field: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(invariant(field, format!("must lie in [0, 1], got {v}")))
            }
        };
        match self {
            AttackConfig::Inject { rate, inflation, .. } => {
                fraction("injection_rate", *rate)?;
                if !inflation.is_finite() {
                    return Err(invariant("inflation", "must be finite"));
                }
                Ok(())
            }
            AttackConfig::Sybil { fraction: f } => fraction("sybil_fraction", *f),
            AttackConfig::Filter { rate } => fraction("filter_rate", *rate),
            AttackConfig::RewardTamper {
                weight,
                width,
                region_radius,
                ..
            } => {
                if !(*weight >= 0.0 && weight.is_finite()) {
                    return Err(invariant("tamper_weight", "must be finite and >= 0"));
                }
                if !(*width > 0.0) {
                    return Err(invariant("bonus_width", "must be positive"));
                }
                if !(*region_radius > 0.0) {
                    return Err(invariant("backdoor_radius", "must be positive"));
                }
                Ok(())
            }
            AttackConfig::OutputIntercept { probability, .. } => fraction("intercept_probability", *probability),
            AttackConfig::LabelFlip { .. } => Ok(()),
        }
    }
}

pub(crate) fn mean_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.into_iter().collect();
    crate::stats::mean(&v)
}

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{Purpose, ReplicateStreams, RngStream, SelectionOperator};

use super::{invariant, mean_of, AgentOutcome, RunTrace, ScenarioDetails, ScenarioError, ScenarioId, StepRecord};

/// Shape of the goal beyond the reversal point `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Reversal {
    /// `G(M) = 2a - M`: the goal turns down without a jump.
    #[default]
    Continuous,
    /// `G(M) = a - M`: the goal drops by `a` as `M` crosses `a`.
    Literal,
}

/// Goal as a function of the shared metric.
pub fn group_goal(metric: f64, a: f64, reversal: Reversal) -> f64 {
    if metric <= a {
        metric
    } else {
        match reversal {
            Reversal::Continuous => 2.0 * a - metric,
            Reversal::Literal => a - metric,
        }
    }
}

/// Goal `a + S` while the collective total `S` stays at or below `T`, `a - S` beyond.
pub fn threshold_goal(total: f64, offset: f64, threshold: f64) -> f64 {
    if total <= threshold {
        offset + total
    } else {
        offset - total
    }
}

/// Agents share one metric `M = sum(alpha_i)` whose value stops helping past `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroupOveroptConfig {
    pub agent_count: usize,
    pub reversal_point: f64,
    pub step: f64,
    pub contribution_cap: f64,
    pub max_steps: u64,
    pub reversal: Reversal,
}

impl Default for GroupOveroptConfig {
    fn default() -> Self {
        Self {
            agent_count: 3,
            reversal_point: 1.0,
            step: 0.1,
            contribution_cap: 0.4,
            max_steps: 20,
            reversal: Reversal::Continuous,
        }
    }
}

impl GroupOveroptConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.agent_count < 2 {
            return Err(invariant("agent_count", "at least two agents are required"));
        }
        if self.max_steps == 0 {
            return Err(invariant("max_steps", "must be at least 1"));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(invariant("step", "must be positive and finite"));
        }
        if !self.reversal_point.is_finite() {
            return Err(invariant("reversal_point", "must be finite"));
        }
        if !(self.contribution_cap >= 0.0 && self.contribution_cap < self.reversal_point) {
            return Err(invariant(
                "contribution_cap",
                "each agent's cap must satisfy 0 <= cap < reversal_point",
            ));
        }
        if !(self.agent_count as f64 * self.contribution_cap > self.reversal_point) {
            return Err(invariant(
                "contribution_cap",
                "agent_count * contribution_cap must exceed reversal_point, \
                 otherwise no group can over-optimize",
            ));
        }
        Ok(())
    }
}

/// Agents each push a private variable; the shared goal collapses once the
/// total passes a threshold no agent watches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdConfig {
    pub agent_count: usize,
    pub offset: f64,
    pub threshold: f64,
    pub step: f64,
    pub max_steps: u64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            agent_count: 5,
            offset: 0.0,
            threshold: 10.0,
            step: 0.1,
            max_steps: 30,
        }
    }
}

impl ThresholdConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.agent_count < 2 {
            return Err(invariant("agent_count", "at least two agents are required"));
        }
        if self.max_steps == 0 {
            return Err(invariant("max_steps", "must be at least 1"));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(invariant("step", "must be positive and finite"));
        }
        if !self.offset.is_finite() {
            return Err(invariant("offset", "must be finite"));
        }
        if !self.threshold.is_finite() {
            return Err(invariant("threshold", "must be finite"));
        }
        Ok(())
    }
}

/// Where the goal peaked and where the trajectory crossed into harm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdOutcome {
    /// First step whose total is past the threshold (or reversal point).
    pub crossing_step: Option<u64>,
    /// First step at which the goal attains its maximum.
    pub peak_goal_step: u64,
    /// Total of all contributions at the last step.
    pub final_sum: f64,
}

/// Whether an agent with an operator raises this step. Each of the `n`
/// candidates is raise or hold with equal probability, scored by the metric
/// it would produce.
fn decide_raise(
    op: Option<&SelectionOperator>,
    raise_score: f64,
    hold_score: f64,
    cand_rng: &mut RngStream,
    sel_rng: &mut RngStream,
) -> Result<bool, ScenarioError> {
    let Some(op) = op else {
        return Ok(true);
    };
    let raises: Vec<bool> = (0..op.n()).map(|_| cand_rng.random_bool(0.5)).collect();
    let scores: Vec<f64> = raises
        .iter()
        .map(|&r| if r { raise_score } else { hold_score })
        .collect();
    Ok(raises[op.choose(&scores, sel_rng)?])
}

fn peak_step(goals: &[(u64, f64)]) -> u64 {
    let mut best = goals[0];
    for &g in &goals[1..] {
        if g.1 > best.1 {
            best = g;
        }
    }
    best.0
}

/// Contributions are tracked as integer counts of `step` so every agent's
/// value is exactly `count * step`.
pub fn run_s1a_group_overopt(
    cfg: &GroupOveroptConfig,
    op: Option<&SelectionOperator>,
    streams: &ReplicateStreams,
) -> Result<RunTrace, ScenarioError> {
    cfg.validate()?;
    let k = cfg.agent_count;
    let a = cfg.reversal_point;
    let alpha = |count: u64| (count as f64 * cfg.step).min(cfg.contribution_cap);
    let metric_of = |counts: &[u64]| counts.iter().fold(0.0, |acc, &c| acc + alpha(c));
    let mut cand_rng = streams.stream(Purpose::Candidates);
    let mut sel_rng = streams.stream(Purpose::Selection);

    let mut counts = vec![0u64; k];
    let mut steps = Vec::with_capacity(k * (cfg.max_steps as usize + 1));
    let mut goals = Vec::with_capacity(cfg.max_steps as usize + 1);
    let mut crossing_step = None;
    let mut record = |t: u64, counts: &[u64], steps: &mut Vec<StepRecord>| {
        let m = metric_of(counts);
        let g = group_goal(m, a, cfg.reversal);
        for agent_id in 0..k {
            steps.push(StepRecord {
                step: t,
                agent_id,
                metric: m,
                goal: g,
            });
        }
        if crossing_step.is_none() && m > a {
            crossing_step = Some(t);
        }
        (t, g)
    };
    goals.push(record(0, &counts, &mut steps));
    for t in 1..=cfg.max_steps {
        let hold = metric_of(&counts);
        let mut raise = vec![false; k];
        for (i, r) in raise.iter_mut().enumerate() {
            let mut next = counts.clone();
            next[i] += 1;
            *r = decide_raise(op, metric_of(&next), hold, &mut cand_rng, &mut sel_rng)?;
        }
        for (c, r) in counts.iter_mut().zip(raise) {
            if r && alpha(*c) < cfg.contribution_cap {
                *c += 1;
            }
        }
        goals.push(record(t, &counts, &mut steps));
    }
    let m = metric_of(&counts);
    let g = group_goal(m, a, cfg.reversal);
    Ok(RunTrace {
        scenario: ScenarioId::S1a,
        replicate: streams.replicate,
        pressure: op.map(|o| o.n()),
        steps,
        events: Vec::new(),
        summary: (0..k)
            .map(|agent_id| AgentOutcome {
                agent_id,
                metric: m,
                goal: g,
            })
            .collect(),
        terminal_metric: m,
        terminal_goal: g,
        details: ScenarioDetails::GroupOveropt(ThresholdOutcome {
            crossing_step,
            peak_goal_step: peak_step(&goals),
            final_sum: m,
        }),
    })
}

/// Each agent's metric is its own contribution `x_i`; all share the goal.
pub fn run_s1b_catastrophic_threshold(
    cfg: &ThresholdConfig,
    op: Option<&SelectionOperator>,
    streams: &ReplicateStreams,
) -> Result<RunTrace, ScenarioError> {
    cfg.validate()?;
    let k = cfg.agent_count;
    let x = |count: u64| count as f64 * cfg.step;
    let total = |counts: &[u64]| counts.iter().fold(0.0, |acc, &c| acc + x(c));
    let mut cand_rng = streams.stream(Purpose::Candidates);
    let mut sel_rng = streams.stream(Purpose::Selection);

    let mut counts = vec![0u64; k];
    let mut steps = Vec::with_capacity(k * (cfg.max_steps as usize + 1));
    let mut goals = Vec::with_capacity(cfg.max_steps as usize + 1);
    let mut crossing_step = None;
    let mut record = |t: u64, counts: &[u64], steps: &mut Vec<StepRecord>| {
        let s = total(counts);
        let g = threshold_goal(s, cfg.offset, cfg.threshold);
        for (agent_id, &c) in counts.iter().enumerate() {
            steps.push(StepRecord {
                step: t,
                agent_id,
                metric: x(c),
                goal: g,
            });
        }
        if crossing_step.is_none() && s > cfg.threshold {
            crossing_step = Some(t);
        }
        (t, g)
    };
    goals.push(record(0, &counts, &mut steps));
    for t in 1..=cfg.max_steps {
        let mut raise = vec![false; k];
        for (r, &c) in raise.iter_mut().zip(&counts) {
            *r = decide_raise(op, x(c + 1), x(c), &mut cand_rng, &mut sel_rng)?;
        }
        for (c, r) in counts.iter_mut().zip(raise) {
            *c += r as u64;
        }
        goals.push(record(t, &counts, &mut steps));
    }
    let s = total(&counts);
    let g = threshold_goal(s, cfg.offset, cfg.threshold);
    let summary: Vec<AgentOutcome> = counts
        .iter()
        .enumerate()
        .map(|(agent_id, &c)| AgentOutcome {
            agent_id,
            metric: x(c),
            goal: g,
        })
        .collect();
    Ok(RunTrace {
        scenario: ScenarioId::S1b,
        replicate: streams.replicate,
        pressure: op.map(|o| o.n()),
        terminal_metric: mean_of(summary.iter().map(|o| o.metric)),
        terminal_goal: g,
        steps,
        events: Vec::new(),
        summary,
        details: ScenarioDetails::Threshold(ThresholdOutcome {
            crossing_step,
            peak_goal_step: peak_step(&goals),
            final_sum: s,
        }),
    })
}

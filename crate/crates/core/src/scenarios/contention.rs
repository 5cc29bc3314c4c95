use serde::{Deserialize, Serialize};

use crate::engine::ReplicateStreams;
use crate::stats::CompensatedSum;

use super::{invariant, AgentOutcome, RunTrace, ScenarioDetails, ScenarioError, ScenarioId, StepRecord};

/// What each bidder maximizes in best response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ContentionMode {
    /// Own utility `R_i * ln(1 + s_i)`.
    #[default]
    Selfish,
    /// Total utility of all agents.
    Shared,
}

/// Agents split a resource in proportion to their bids and keep the
/// unbid remainder of their funds for exploitation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContentionConfig {
    pub funds: Vec<f64>,
    pub mode: ContentionMode,
    pub bid_grid_resolution: f64,
    /// Best-response passes before the run is reported as non-converged.
    pub max_passes: u64,
}

impl Default for ContentionConfig {
    fn default() -> Self {
        Self {
            funds: vec![10.0, 10.0],
            mode: ContentionMode::Selfish,
            bid_grid_resolution: 0.1,
            max_passes: 1000,
        }
    }
}

impl ContentionConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.funds.len() < 2 {
            return Err(invariant("funds", "at least two agents are required"));
        }
        if self.funds.iter().any(|f| !(*f >= 0.0 && f.is_finite())) {
            return Err(invariant("funds", "every agent's funds must be finite and >= 0"));
        }
        if !self.funds.iter().any(|f| *f > 0.0) {
            return Err(invariant("funds", "at least one agent must hold positive funds"));
        }
        if !(self.bid_grid_resolution > 0.0 && self.bid_grid_resolution.is_finite()) {
            return Err(invariant("bid_grid_resolution", "must be positive and finite"));
        }
        if self.max_passes == 0 {
            return Err(invariant("max_passes", "must be at least 1"));
        }
        if self.funds.iter().any(|f| f / self.bid_grid_resolution > 1e7) {
            return Err(invariant("bid_grid_resolution", "grid has more than 10^7 points"));
        }
        Ok(())
    }

    /// Number of grid points above zero that agent `i` can afford.
    pub fn grid_len(&self, i: usize) -> usize {
        (self.funds[i] / self.bid_grid_resolution + 1e-9).floor() as usize
    }

    pub fn bid(&self, i: usize, index: usize) -> f64 {
        (index as f64 * self.bid_grid_resolution).min(self.funds[i])
    }
}

/// Proportional shares `c_i / sum(c)`; equal shares when every bid is zero.
pub fn shares(bids: &[f64]) -> Vec<f64> {
    let mut total = CompensatedSum::default();
    for b in bids {
        total.add(*b);
    }
    let total = total.value();
    if total > 0.0 {
        bids.iter().map(|b| b / total).collect()
    } else {
        vec![1.0 / bids.len() as f64; bids.len()]
    }
}

/// Bids, shares and utilities at one bid profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentionOutcome {
    pub bid_index: Vec<usize>,
    pub bids: Vec<f64>,
    pub shares: Vec<f64>,
    pub utilities: Vec<f64>,
    pub welfare: f64,
}

impl ContentionOutcome {
    fn at(cfg: &ContentionConfig, bid_index: Vec<usize>) -> Self {
        let bids: Vec<f64> = bid_index.iter().enumerate().map(|(i, &j)| cfg.bid(i, j)).collect();
        let shares = shares(&bids);
        let utilities: Vec<f64> = (0..bids.len())
            .map(|i| shares[i] * (cfg.funds[i] - bids[i]).ln_1p())
            .collect();
        let welfare = utilities.iter().sum();
        Self {
            bid_index,
            bids,
            shares,
            utilities,
            welfare,
        }
    }

    fn objective(&self, i: usize, mode: ContentionMode) -> f64 {
        match mode {
            ContentionMode::Selfish => self.utilities[i],
            ContentionMode::Shared => self.welfare,
        }
    }
}

/// Both outcomes of one contention run.
#[derive(Debug, Clone, PartialEq)]
pub struct ContentionReport {
    pub mode: ContentionMode,
    pub equilibrium: ContentionOutcome,
    pub coordinated: ContentionOutcome,
    pub converged: bool,
    pub passes: u64,
}

impl ContentionReport {
    pub fn welfare_gap(&self) -> f64 {
        self.coordinated.welfare - self.equilibrium.welfare
    }
}

/// The welfare-maximizing profile on the bid grid.
///
/// Any profile with a positive bid gives welfare at most the best single
/// bidder's `ln(1 + f_i - resolution)`, so the optimum is either that or
/// all-zero bids.
pub fn coordinated_benchmark(cfg: &ContentionConfig) -> ContentionOutcome {
    let k = cfg.funds.len();
    let mut best = ContentionOutcome::at(cfg, vec![0; k]);
    for i in 0..k {
        if cfg.grid_len(i) >= 1 {
            let mut idx = vec![0; k];
            idx[i] = 1;
            let candidate = ContentionOutcome::at(cfg, idx);
            if candidate.welfare > best.welfare {
                best = candidate;
            }
        }
    }
    best
}

/// Round-robin best response from all-zero bids. An agent moves only to a
/// strictly better bid, the lowest one among equally good bids. The run
/// stops after a pass with no move or after `max_passes`.
pub fn run_s2_contention(cfg: &ContentionConfig, streams: &ReplicateStreams) -> Result<RunTrace, ScenarioError> {
    cfg.validate()?;
    let k = cfg.funds.len();
    let mut index = vec![0usize; k];
    let mut current = ContentionOutcome::at(cfg, index.clone());
    let mut steps = Vec::new();
    let record = |pass: u64, o: &ContentionOutcome, steps: &mut Vec<StepRecord>| {
        for agent_id in 0..k {
            steps.push(StepRecord {
                step: pass,
                agent_id,
                metric: o.objective(agent_id, cfg.mode),
                goal: o.welfare,
            });
        }
    };
    record(0, &current, &mut steps);
    let mut converged = false;
    let mut passes = 0;
    while passes < cfg.max_passes {
        passes += 1;
        let mut moved = false;
        for i in 0..k {
            let mut best_j = 0;
            let mut best_v = f64::NEG_INFINITY;
            let mut trial = index.clone();
            for j in 0..=cfg.grid_len(i) {
                trial[i] = j;
                let v = ContentionOutcome::at(cfg, trial.clone()).objective(i, cfg.mode);
                if v > best_v {
                    best_v = v;
                    best_j = j;
                }
            }
            if best_j != index[i] && best_v > current.objective(i, cfg.mode) {
                index[i] = best_j;
                current = ContentionOutcome::at(cfg, index.clone());
                moved = true;
            }
        }
        record(passes, &current, &mut steps);
        if !moved {
            converged = true;
            break;
        }
    }
    let coordinated = coordinated_benchmark(cfg);
    let summary: Vec<AgentOutcome> = (0..k)
        .map(|agent_id| AgentOutcome {
            agent_id,
            metric: current.objective(agent_id, cfg.mode),
            goal: current.welfare,
        })
        .collect();
    let terminal_metric = crate::stats::mean(&summary.iter().map(|o| o.metric).collect::<Vec<_>>());
    Ok(RunTrace {
        scenario: ScenarioId::S2,
        replicate: streams.replicate,
        pressure: None,
        steps,
        events: Vec::new(),
        summary,
        terminal_metric,
        terminal_goal: current.welfare,
        details: ScenarioDetails::Contention(ContentionReport {
            mode: cfg.mode,
            equilibrium: current,
            coordinated,
            converged,
            passes,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(cfg: &ContentionConfig) -> ContentionReport {
        let t = run_s2_contention(cfg, &ReplicateStreams::new(0, ScenarioId::S2.tag(), 0)).unwrap();
        match t.details {
            ScenarioDetails::Contention(r) => r,
            _ => unreachable!(),
        }
    }

    #[test]
    fn proportional_shares() {
        assert_eq!(shares(&[1.0, 1.0, 2.0]), vec![0.25, 0.25, 0.5]);
        assert_eq!(shares(&[0.0, 0.0, 0.0]), vec![1.0 / 3.0; 3]);
    }

    /// Every pure Nash profile of the grid game, by enumeration.
    fn nash_profiles(cfg: &ContentionConfig) -> Vec<Vec<usize>> {
        let (n0, n1) = (cfg.grid_len(0), cfg.grid_len(1));
        let u = |i: usize, c: &[f64]| {
            let t: f64 = c.iter().sum();
            let r = if t == 0.0 { 0.5 } else { c[i] / t };
            r * (cfg.funds[i] - c[i]).ln_1p()
        };
        let mut out = Vec::new();
        for a in 0..=n0 {
            for b in 0..=n1 {
                let c = [a as f64 * 0.1, b as f64 * 0.1];
                let stable = (0..2).all(|i| {
                    let here = u(i, &c);
                    (0..=[n0, n1][i]).all(|d| {
                        let mut cc = c;
                        cc[i] = d as f64 * 0.1;
                        u(i, &cc) <= here
                    })
                });
                if stable {
                    out.push(vec![a, b]);
                }
            }
        }
        out
    }

    #[test]
    fn symmetric_equilibrium_matches_enumeration() {
        let cfg = ContentionConfig::default();
        let ne = nash_profiles(&cfg);
        assert_eq!(ne, vec![vec![51, 51], vec![52, 52]]);
        let r = report(&cfg);
        assert!(r.converged);
        assert_eq!(r.equilibrium.bid_index, vec![51, 51]);
        assert_eq!(r.passes, 4);
        assert_eq!(r.coordinated.welfare, 11f64.ln());
        assert!(r.welfare_gap() > 0.6);
    }

    #[test]
    fn shared_mode_gap_not_worse() {
        let selfish = report(&ContentionConfig::default());
        let shared = report(&ContentionConfig {
            mode: ContentionMode::Shared,
            ..Default::default()
        });
        assert!(shared.welfare_gap() <= selfish.welfare_gap());
        assert!(shared.welfare_gap() >= 0.0);
    }

    #[test]
    fn single_effective_bidder_has_no_gap() {
        let r = report(&ContentionConfig {
            funds: vec![10.0, 0.0],
            ..Default::default()
        });
        assert_eq!(r.welfare_gap(), 0.0);
    }

    #[test]
    fn shares_sum_to_one() {
        let r = report(&ContentionConfig {
            funds: vec![3.0, 7.0, 12.5],
            ..Default::default()
        });
        let s: f64 = r.equilibrium.shares.iter().sum();
        assert!((s - 1.0).abs() <= 2f64.powi(-40));
        assert!(r.welfare_gap() >= -3.0 * 0.1);
    }
}

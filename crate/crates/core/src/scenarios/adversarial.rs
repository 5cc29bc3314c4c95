use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::engine::{retained_count, Purpose, ReplicateStreams, RngStream};
use crate::learners::{EventRecord, Provenance};
use crate::stats::{mean, pearson};

use super::{invariant, AgentOutcome, RunTrace, ScenarioDetails, ScenarioError, ScenarioId, StepRecord};

/// Lower decile of the standard normal.
const NORMAL_DECILE_LOW: f64 = -1.281_551_565_544_600_4;
const TOP_DECILE_Y: f64 = 0.9;

/// A victim picks the item with the largest noisy observation `X`, where the
/// noise grows with a nuisance feature `y`. An opponent replaces part of the
/// pool with low-value, high-noise items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoisonPoolConfig {
    pub pool_size: usize,
    /// Noise scale `sigma(y) = sigma_max * y`.
    pub sigma_max: f64,
    pub adversary_enabled: bool,
    pub adversary_fraction: f64,
}

impl Default for PoisonPoolConfig {
    fn default() -> Self {
        Self {
            pool_size: 1000,
            sigma_max: 3.0,
            adversary_enabled: true,
            adversary_fraction: 0.2,
        }
    }
}

impl PoisonPoolConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.pool_size == 0 {
            return Err(invariant("pool_size", "must be at least 1"));
        }
        if !(self.sigma_max >= 0.0 && self.sigma_max.is_finite()) {
            return Err(invariant("sigma_max", "must be finite and >= 0"));
        }
        if !(0.0..=1.0).contains(&self.adversary_fraction) {
            return Err(invariant("adversary_fraction", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Number of pool items the opponent replaces.
    pub fn planted(&self) -> usize {
        if !self.adversary_enabled {
            return 0;
        }
        let raw = self.adversary_fraction * self.pool_size as f64;
        ((raw + 1e-9).floor() as usize).min(self.pool_size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoisoningOutcome {
    pub selected_index: usize,
    pub selected_true_value: f64,
    pub selected_observed_value: f64,
    pub selected_injected: bool,
    pub planted: usize,
}

fn planted_item(rng: &mut RngStream) -> (f64, f64) {
    let y = rng.random_range(TOP_DECILE_Y..1.0);
    let x = loop {
        let x: f64 = rng.sample(StandardNormal);
        if x <= NORMAL_DECILE_LOW {
            break x;
        }
    };
    (x, y)
}

/// Honest items come from the environment stream and planted items from the
/// attacker stream, so the honest pool is the same with or without an attack.
pub fn run_s3a_goal_poisoning(cfg: &PoisonPoolConfig, streams: &ReplicateStreams) -> Result<RunTrace, ScenarioError> {
    cfg.validate()?;
    let mut env = streams.stream(Purpose::Environment);
    let mut attacker = streams.stream(Purpose::Attacker);
    let mut obs = streams.stream(Purpose::Observation);

    let mut items: Vec<(f64, f64)> = (0..cfg.pool_size)
        .map(|_| {
            let x: f64 = env.sample(StandardNormal);
            let y: f64 = env.random();
            (x, y)
        })
        .collect();
    let planted = cfg.planted();
    for item in items.iter_mut().take(planted) {
        *item = planted_item(&mut attacker);
    }
    let observed: Vec<f64> = items
        .iter()
        .map(|&(x, y)| {
            let z: f64 = obs.sample(StandardNormal);
            x + cfg.sigma_max * y * z
        })
        .collect();
    let mut best = 0;
    for (i, v) in observed.iter().enumerate() {
        if *v > observed[best] {
            best = i;
        }
    }
    let events = observed
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let provenance = if i < planted {
                Provenance::Injected
            } else {
                Provenance::Honest
            };
            EventRecord::new(i as u64, vec![v], None, provenance)
        })
        .collect();
    let (x, _) = items[best];
    let outcome = PoisoningOutcome {
        selected_index: best,
        selected_true_value: x,
        selected_observed_value: observed[best],
        selected_injected: best < planted,
        planted,
    };
    Ok(RunTrace {
        scenario: ScenarioId::S3a,
        replicate: streams.replicate,
        pressure: None,
        steps: vec![StepRecord {
            step: 0,
            agent_id: 0,
            metric: observed[best],
            goal: x,
        }],
        events,
        summary: vec![AgentOutcome {
            agent_id: 0,
            metric: observed[best],
            goal: x,
        }],
        terminal_metric: observed[best],
        terminal_goal: x,
        details: ScenarioDetails::Poisoning(outcome),
    })
}

/// States with independent standard normal `G_V`, `G_O` and `X`. The
/// opponent filters on `M_O = G_O * X`, a metric worthless on its own; the
/// victim then selects hard on `M_V = G_V + X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TheftConfig {
    pub population_size: usize,
    pub opponent_top_fraction: f64,
    pub victim_top_fraction: f64,
    pub opponent_enabled: bool,
}

impl Default for TheftConfig {
    fn default() -> Self {
        Self {
            population_size: 100_000,
            opponent_top_fraction: 0.5,
            victim_top_fraction: 0.01,
            opponent_enabled: true,
        }
    }
}

impl TheftConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.population_size < 100 {
            return Err(invariant("population_size", "must be at least 100"));
        }
        for (field, p) in [
            ("opponent_top_fraction", self.opponent_top_fraction),
            ("victim_top_fraction", self.victim_top_fraction),
        ] {
            if !(p > 0.0 && p <= 1.0) {
                return Err(invariant(field, format!("must lie in (0, 1], got {p}")));
            }
        }
        Ok(())
    }

    fn opponent_kept(&self) -> usize {
        if self.opponent_enabled {
            retained_count(self.opponent_top_fraction, self.population_size)
        } else {
            self.population_size
        }
    }
}

/// The raw states of one theft run plus the victim's final selection.
#[derive(Debug, Clone, PartialEq)]
pub struct TheftSample {
    pub victim_goal: Vec<f64>,
    pub opponent_goal: Vec<f64>,
    pub shared: Vec<f64>,
    /// Indices kept by the opponent, ascending.
    pub opponent_kept: Vec<usize>,
    /// Indices the victim finally selects, ascending.
    pub selected: Vec<usize>,
    /// Victim selection from the full population, ascending.
    pub selected_disabled: Vec<usize>,
}

impl TheftSample {
    pub fn opponent_metric(&self) -> Vec<f64> {
        self.opponent_goal
            .iter()
            .zip(&self.shared)
            .map(|(g, x)| g * x)
            .collect()
    }

    pub fn victim_metric(&self) -> Vec<f64> {
        self.victim_goal.iter().zip(&self.shared).map(|(g, x)| g + x).collect()
    }

    pub fn selection_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.shared.len()];
        for &i in &self.selected {
            mask[i] = true;
        }
        mask
    }
}

/// The `count` indices of `pool` with the largest `score`, ties to the
/// lowest index, returned in ascending index order.
fn top_by(pool: &[usize], score: &[f64], count: usize) -> Vec<usize> {
    let mut idx = pool.to_vec();
    let order = |a: &usize, b: &usize| score[*b].total_cmp(&score[*a]).then(a.cmp(b));
    if count < idx.len() {
        idx.select_nth_unstable_by(count, order);
        idx.truncate(count);
    }
    idx.sort_unstable();
    idx
}

pub fn theft_sample(cfg: &TheftConfig, streams: &ReplicateStreams) -> Result<TheftSample, ScenarioError> {
    cfg.validate()?;
    let n = cfg.population_size;
    let mut env = streams.stream(Purpose::Environment);
    let mut victim_goal = Vec::with_capacity(n);
    let mut opponent_goal = Vec::with_capacity(n);
    let mut shared = Vec::with_capacity(n);
    for _ in 0..n {
        victim_goal.push(env.sample::<f64, _>(StandardNormal));
        opponent_goal.push(env.sample::<f64, _>(StandardNormal));
        shared.push(env.sample::<f64, _>(StandardNormal));
    }
    let mut sample = TheftSample {
        victim_goal,
        opponent_goal,
        shared,
        opponent_kept: Vec::new(),
        selected: Vec::new(),
        selected_disabled: Vec::new(),
    };
    let all: Vec<usize> = (0..n).collect();
    let m_o = sample.opponent_metric();
    let m_v = sample.victim_metric();
    let kept = top_by(&all, &m_o, cfg.opponent_kept());
    let final_count = retained_count(cfg.victim_top_fraction, kept.len());
    sample.selected = top_by(&kept, &m_v, final_count);
    sample.selected_disabled = top_by(&all, &m_v, retained_count(cfg.victim_top_fraction, n));
    sample.opponent_kept = kept;
    Ok(sample)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheftOutcome {
    /// `corr(G_O, M_O)` over the whole population.
    pub corr_full: f64,
    /// `corr(G_O, M_O)` over the victim's final selection.
    pub corr_selected: f64,
    pub mean_opponent_goal: f64,
    pub mean_opponent_goal_disabled: f64,
    pub selected_count: usize,
}

fn pick(xs: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| xs[i]).collect()
}

/// Rows: step 0 is the full population, step 1 the opponent's kept set and
/// step 2 the victim's selection. Agent 0 is the victim (`M_V`, `G_V`),
/// agent 1 the opponent (`M_O`, `G_O`); each value is a mean over the set.
pub fn run_s3b_optimization_theft(cfg: &TheftConfig, streams: &ReplicateStreams) -> Result<RunTrace, ScenarioError> {
    let s = theft_sample(cfg, streams)?;
    let m_o = s.opponent_metric();
    let m_v = s.victim_metric();
    let all: Vec<usize> = (0..s.shared.len()).collect();
    let mut steps = Vec::with_capacity(6);
    for (step, set) in [&all, &s.opponent_kept, &s.selected].into_iter().enumerate() {
        steps.push(StepRecord {
            step: step as u64,
            agent_id: 0,
            metric: mean(&pick(&m_v, set)),
            goal: mean(&pick(&s.victim_goal, set)),
        });
        steps.push(StepRecord {
            step: step as u64,
            agent_id: 1,
            metric: mean(&pick(&m_o, set)),
            goal: mean(&pick(&s.opponent_goal, set)),
        });
    }
    let degenerate = |what: &str| invariant("population_size", format!("{what} has constant values"));
    let corr_full = pearson(&s.opponent_goal, &m_o).ok_or_else(|| degenerate("population"))?;
    let corr_selected = pearson(&pick(&s.opponent_goal, &s.selected), &pick(&m_o, &s.selected))
        .ok_or_else(|| degenerate("selection"))?;
    let outcome = TheftOutcome {
        corr_full,
        corr_selected,
        mean_opponent_goal: steps[5].goal,
        mean_opponent_goal_disabled: mean(&pick(&s.opponent_goal, &s.selected_disabled)),
        selected_count: s.selected.len(),
    };
    let summary = vec![
        AgentOutcome {
            agent_id: 0,
            metric: steps[4].metric,
            goal: steps[4].goal,
        },
        AgentOutcome {
            agent_id: 1,
            metric: steps[5].metric,
            goal: steps[5].goal,
        },
    ];
    Ok(RunTrace {
        scenario: ScenarioId::S3b,
        replicate: streams.replicate,
        pressure: None,
        terminal_metric: steps[4].metric,
        terminal_goal: steps[4].goal,
        steps,
        events: Vec::new(),
        summary,
        details: ScenarioDetails::Theft(outcome),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s3a(cfg: &PoisonPoolConfig, rep: u64) -> RunTrace {
        run_s3a_goal_poisoning(cfg, &ReplicateStreams::new(5, ScenarioId::S3a.tag(), rep)).unwrap()
    }

    fn theft(cfg: &TheftConfig, rep: u64) -> TheftOutcome {
        let t = run_s3b_optimization_theft(cfg, &ReplicateStreams::new(5, ScenarioId::S3b.tag(), rep)).unwrap();
        match t.details {
            ScenarioDetails::Theft(o) => o,
            _ => unreachable!(),
        }
    }

    #[test]
    fn noiseless_proxy_defeats_plants() {
        let cfg = PoisonPoolConfig {
            sigma_max: 0.0,
            ..Default::default()
        };
        for rep in 0..50 {
            let t = s3a(&cfg, rep);
            assert_eq!(t.terminal_metric, t.terminal_goal);
            let ScenarioDetails::Poisoning(o) = t.details else {
                unreachable!()
            };
            assert!(!o.selected_injected);
            assert!(t.terminal_goal > NORMAL_DECILE_LOW);
        }
    }

    #[test]
    fn zero_fraction_equals_disabled() {
        let zero = PoisonPoolConfig {
            adversary_fraction: 0.0,
            ..Default::default()
        };
        let off = PoisonPoolConfig {
            adversary_enabled: false,
            ..Default::default()
        };
        for rep in 0..20 {
            assert_eq!(s3a(&zero, rep), s3a(&off, rep));
        }
    }

    #[test]
    fn plants_lower_the_selected_goal() {
        let attacked = PoisonPoolConfig::default();
        let clean = PoisonPoolConfig {
            adversary_enabled: false,
            ..Default::default()
        };
        let reps = 400;
        let a: Vec<f64> = (0..reps).map(|r| s3a(&attacked, r).terminal_goal).collect();
        let c: Vec<f64> = (0..reps).map(|r| s3a(&clean, r).terminal_goal).collect();
        assert!(mean(&a) + 0.3 < mean(&c), "{} vs {}", mean(&a), mean(&c));
    }

    #[test]
    fn full_opponent_fraction_equals_disabled() {
        let cfg = TheftConfig {
            population_size: 5000,
            opponent_top_fraction: 1.0,
            ..Default::default()
        };
        let off = TheftConfig {
            opponent_enabled: false,
            ..cfg.clone()
        };
        let s = ReplicateStreams::new(1, ScenarioId::S3b.tag(), 0);
        assert_eq!(
            run_s3b_optimization_theft(&cfg, &s).unwrap(),
            run_s3b_optimization_theft(&off, &s).unwrap()
        );
    }

    #[test]
    fn theft_effect_at_moderate_scale() {
        let o = theft(&TheftConfig::default(), 0);
        assert_eq!(o.selected_count, 500);
        assert!(o.corr_full.abs() < 3.0 / (1e5f64).sqrt());
        assert!(o.mean_opponent_goal > 0.6, "{}", o.mean_opponent_goal);
        assert!(o.corr_selected > 0.7);
        assert!(o.mean_opponent_goal_disabled.abs() < 3.0 / (1000f64).sqrt());
    }

    #[test]
    fn top_by_breaks_ties_by_index() {
        let score = [1.0, 3.0, 3.0, 2.0, 3.0];
        assert_eq!(top_by(&[0, 1, 2, 3, 4], &score, 2), vec![1, 2]);
        assert_eq!(top_by(&[4, 3, 2], &score, 1), vec![2]);
    }
}

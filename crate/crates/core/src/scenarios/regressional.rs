use serde::{Deserialize, Serialize};

use crate::engine::{sample_candidates, select, NoisyProxy, Purpose, ReplicateStreams, SelectionOperator};

use super::{invariant, mean_of, AgentOutcome, RunTrace, ScenarioDetails, ScenarioError, ScenarioId, StepRecord};

/// Best-of-`n` selection on a noisy proxy: `g ~ N(0, 1)`, `m = g + N(0, noise_sd^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegressionalConfig {
    /// Standard deviation of the proxy noise.
    pub noise_sd: f64,
    /// Independent selections per replicate; terminal values are their means.
    pub rounds: usize,
}

impl Default for RegressionalConfig {
    fn default() -> Self {
        Self {
            noise_sd: 1.0,
            rounds: 16,
        }
    }
}

impl RegressionalConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(invariant(
                "noise_sd",
                format!("must be finite and >= 0, got {}", self.noise_sd),
            ));
        }
        if self.rounds == 0 {
            return Err(invariant("rounds", "must be at least 1"));
        }
        Ok(())
    }
}

/// Runs `rounds` independent selections. Without an operator the agent
/// takes a single unoptimized draw (`Maximizer(1)`).
pub fn run_s0_regressional(
    cfg: &RegressionalConfig,
    op: Option<&SelectionOperator>,
    streams: &ReplicateStreams,
) -> Result<RunTrace, ScenarioError> {
    cfg.validate()?;
    let default_op = SelectionOperator::maximizer(1)?;
    let op = op.unwrap_or(&default_op);
    let generator = NoisyProxy::standard(cfg.noise_sd);
    let mut cand_rng = streams.stream(Purpose::Candidates);
    let mut sel_rng = streams.stream(Purpose::Selection);

    let mut steps = Vec::with_capacity(cfg.rounds);
    for round in 0..cfg.rounds {
        let candidates = sample_candidates(&generator, op.n(), &mut cand_rng)?;
        let chosen = select(&candidates, op, &mut sel_rng)?;
        steps.push(StepRecord {
            step: round as u64,
            agent_id: 0,
            metric: chosen.metric_score,
            goal: chosen.hidden_goal,
        });
    }
    let terminal_metric = mean_of(steps.iter().map(|s| s.metric));
    let terminal_goal = mean_of(steps.iter().map(|s| s.goal));
    let bias = mean_of(steps.iter().map(|s| s.metric - s.goal));
    Ok(RunTrace {
        scenario: ScenarioId::S0,
        replicate: streams.replicate,
        pressure: Some(op.n()),
        steps,
        events: Vec::new(),
        summary: vec![AgentOutcome {
            agent_id: 0,
            metric: terminal_metric,
            goal: terminal_goal,
        }],
        terminal_metric,
        terminal_goal,
        details: ScenarioDetails::Regressional { bias },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn streams(rep: u64) -> ReplicateStreams {
        ReplicateStreams::new(42, ScenarioId::S0.tag(), rep)
    }

    fn bias(t: &RunTrace) -> f64 {
        match t.details {
            ScenarioDetails::Regressional { bias } => bias,
            _ => unreachable!(),
        }
    }

    #[test]
    fn perfect_proxy_has_no_bias() {
        let cfg = RegressionalConfig {
            noise_sd: 0.0,
            rounds: 8,
        };
        for n in [1, 7, 64] {
            let op = SelectionOperator::maximizer(n).unwrap();
            let t = run_s0_regressional(&cfg, Some(&op), &streams(3)).unwrap();
            for s in &t.steps {
                assert_eq!(s.metric, s.goal);
            }
            assert_eq!(bias(&t), 0.0);
        }
    }

    #[test]
    fn unpressured_bias_is_centred() {
        let cfg = RegressionalConfig {
            noise_sd: 1.0,
            rounds: 1,
        };
        let reps = 4000;
        let b: Vec<f64> = (0..reps)
            .map(|r| bias(&run_s0_regressional(&cfg, None, &streams(r)).unwrap()))
            .collect();
        let m = crate::stats::mean(&b);
        assert!(m.abs() < 3.0 * 2f64.sqrt() / (reps as f64).sqrt(), "{m}");
    }

    #[test]
    fn selection_inflates_metric_over_goal() {
        // E[m - g | best of 100] = E[max of 100 N(0,2)] / 2 ~ 2.5076 * sqrt(2) / 2.
        let cfg = RegressionalConfig {
            noise_sd: 1.0,
            rounds: 1,
        };
        let op = SelectionOperator::maximizer(100).unwrap();
        let b: Vec<f64> = (0..2000)
            .map(|r| bias(&run_s0_regressional(&cfg, Some(&op), &streams(r)).unwrap()))
            .collect();
        let m = crate::stats::mean(&b);
        assert!((m - 1.7732).abs() < 0.06, "{m}");
    }
}

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::engine::{Purpose, ReplicateStreams};
use crate::learners::{ArmEstimator, EventRecord, Observation, Provenance, RunningMean, ThresholdLearner};

use super::{invariant, AgentOutcome, AttackConfig, RunTrace, ScenarioDetails, ScenarioError, ScenarioId, StepRecord};

/// The learner under attack and the honest world it learns from.
#[derive(Debug, Clone, PartialEq)]
pub enum StreamVictim {
    /// Running-mean arm estimator fed a round-robin public reward stream.
    Bandit { arm_means: Vec<f64>, reward_sd: f64 },
    /// Bisection learner for a threshold `theta` in [0, 1].
    ActiveLearner { theta: f64, resolution: f64 },
    /// Sample mean of a `Normal(mean, sd^2)` stream.
    MeanEstimator { mean: f64, sd: f64 },
}

impl StreamVictim {
    fn name(&self) -> &'static str {
        match self {
            StreamVictim::Bandit { .. } => "bandit",
            StreamVictim::ActiveLearner { .. } => "active_learner",
            StreamVictim::MeanEstimator { .. } => "mean_estimator",
        }
    }

    fn scenario(&self) -> ScenarioId {
        match self {
            StreamVictim::Bandit { .. } => ScenarioId::S4a,
            StreamVictim::ActiveLearner { .. } => ScenarioId::S4b,
            StreamVictim::MeanEstimator { .. } => ScenarioId::S4c,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        match self {
            StreamVictim::Bandit { arm_means, reward_sd } => {
                if arm_means.len() < 2 {
                    return Err(invariant("arm_means", "at least two arms are required"));
                }
                if arm_means.iter().any(|m| !m.is_finite()) {
                    return Err(invariant("arm_means", "must be finite"));
                }
                if !(*reward_sd >= 0.0 && reward_sd.is_finite()) {
                    return Err(invariant("reward_sd", "must be finite and >= 0"));
                }
            }
            StreamVictim::ActiveLearner { theta, resolution } => {
                if !(0.0..=1.0).contains(theta) {
                    return Err(invariant("theta", "must lie in [0, 1]"));
                }
                if !(*resolution > 0.0 && resolution.is_finite()) {
                    return Err(invariant("resolution", "must be positive"));
                }
            }
            StreamVictim::MeanEstimator { mean, sd } => {
                if !mean.is_finite() {
                    return Err(invariant("true_mean", "must be finite"));
                }
                if !(*sd >= 0.0 && sd.is_finite()) {
                    return Err(invariant("sd", "must be finite and >= 0"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StreamOutcome {
    Injection {
        final_choice: usize,
        regret: f64,
        injected_events: usize,
    },
    Sybil {
        final_error: f64,
        truth_in_interval: bool,
        sybil_answers: usize,
    },
    Filter {
        bias: f64,
        hidden_events: usize,
        visible_events: usize,
    },
}

/// Input spoofing against an arm estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InjectionConfig {
    pub arm_means: Vec<f64>,
    pub reward_sd: f64,
    pub horizon: u64,
    pub attack_enabled: bool,
    pub injection_rate: f64,
    pub inflation: f64,
    /// Arm whose rewards are fabricated; the worst arm when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_arm: Option<usize>,
}

impl Default for InjectionConfig {
    fn default() -> Self {
        Self {
            arm_means: vec![0.2, 0.8],
            reward_sd: 1.0,
            horizon: 1000,
            attack_enabled: true,
            injection_rate: 0.3,
            inflation: 2.0,
            target_arm: None,
        }
    }
}

impl InjectionConfig {
    pub fn parts(&self) -> (StreamVictim, Option<AttackConfig>, u64) {
        let victim = StreamVictim::Bandit {
            arm_means: self.arm_means.clone(),
            reward_sd: self.reward_sd,
        };
        let attack = self.attack_enabled.then_some(AttackConfig::Inject {
            rate: self.injection_rate,
            inflation: self.inflation,
            target_arm: self.target_arm,
        });
        (victim, attack, self.horizon)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let (victim, attack, horizon) = self.parts();
        validate_parts(&victim, attack.as_ref(), horizon)
    }
}

/// Sybil answers to an active learner's queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SybilConfig {
    pub theta: f64,
    pub resolution: f64,
    pub horizon: u64,
    pub attack_enabled: bool,
    pub sybil_fraction: f64,
}

impl Default for SybilConfig {
    fn default() -> Self {
        Self {
            theta: 0.3,
            resolution: 1e-12,
            horizon: 40,
            attack_enabled: true,
            sybil_fraction: 0.2,
        }
    }
}

impl SybilConfig {
    pub fn parts(&self) -> (StreamVictim, Option<AttackConfig>, u64) {
        let victim = StreamVictim::ActiveLearner {
            theta: self.theta,
            resolution: self.resolution,
        };
        let attack = self.attack_enabled.then_some(AttackConfig::Sybil {
            fraction: self.sybil_fraction,
        });
        (victim, attack, self.horizon)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let (victim, attack, horizon) = self.parts();
        validate_parts(&victim, attack.as_ref(), horizon)
    }
}

/// Selective hiding of below-mean records from a mean estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    pub true_mean: f64,
    pub sd: f64,
    pub horizon: u64,
    pub attack_enabled: bool,
    pub filter_rate: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            true_mean: 0.0,
            sd: 1.0,
            horizon: 10_000,
            attack_enabled: true,
            filter_rate: 0.5,
        }
    }
}

impl FilterConfig {
    pub fn parts(&self) -> (StreamVictim, Option<AttackConfig>, u64) {
        let victim = StreamVictim::MeanEstimator {
            mean: self.true_mean,
            sd: self.sd,
        };
        let attack = self
            .attack_enabled
            .then_some(AttackConfig::Filter { rate: self.filter_rate });
        (victim, attack, self.horizon)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let (victim, attack, horizon) = self.parts();
        validate_parts(&victim, attack.as_ref(), horizon)
    }
}

fn validate_parts(victim: &StreamVictim, attack: Option<&AttackConfig>, horizon: u64) -> Result<(), ScenarioError> {
    victim.validate()?;
    if horizon == 0 {
        return Err(invariant("horizon", "must be at least 1"));
    }
    let Some(attack) = attack else {
        return Ok(());
    };
    attack.validate()?;
    match (victim, attack) {
        (StreamVictim::Bandit { arm_means, .. }, AttackConfig::Inject { target_arm, .. }) => {
            if let Some(arm) = target_arm {
                if *arm >= arm_means.len() {
                    return Err(invariant("target_arm", format!("arm {arm} does not exist")));
                }
            }
            Ok(())
        }
        (StreamVictim::ActiveLearner { .. }, AttackConfig::Sybil { .. })
        | (StreamVictim::MeanEstimator { .. }, AttackConfig::Filter { .. }) => Ok(()),
        (v, a) => Err(ScenarioError::KindMismatch {
            attack: a.kind_name(),
            victim: v.name(),
        }),
    }
}

fn worst_arm(means: &[f64]) -> usize {
    let mut worst = 0;
    for (i, m) in means.iter().enumerate() {
        if *m < means[worst] {
            worst = i;
        }
    }
    worst
}

fn best_arm(means: &[f64]) -> usize {
    let mut best = 0;
    for (i, m) in means.iter().enumerate() {
        if *m > means[best] {
            best = i;
        }
    }
    best
}

/// Runs a stream victim for `horizon` steps against an optional attack.
///
/// The honest stream is drawn from the environment stream and every attacker
/// decision from the attacker stream, so a zero-budget attack replays the
/// unattacked run exactly. Victims only ever receive [`Observation`]s.
pub fn run_s4_stream_attacks(
    victim: &StreamVictim,
    attack: Option<&AttackConfig>,
    horizon: u64,
    streams: &ReplicateStreams,
) -> Result<RunTrace, ScenarioError> {
    validate_parts(victim, attack, horizon)?;
    match victim {
        StreamVictim::Bandit { arm_means, reward_sd } => run_injection(arm_means, *reward_sd, attack, horizon, streams),
        StreamVictim::ActiveLearner { theta, resolution } => run_sybil(*theta, *resolution, attack, horizon, streams),
        StreamVictim::MeanEstimator { mean, sd } => run_filter(*mean, *sd, attack, horizon, streams),
    }
    .map(|mut t| {
        t.scenario = victim.scenario();
        t
    })
}

fn feed_bandit(est: &mut ArmEstimator, obs: &Observation) -> Result<(), ScenarioError> {
    est.update(obs.payload[0] as usize, obs.payload[1])?;
    Ok(())
}

fn run_injection(
    arm_means: &[f64],
    reward_sd: f64,
    attack: Option<&AttackConfig>,
    horizon: u64,
    streams: &ReplicateStreams,
) -> Result<RunTrace, ScenarioError> {
    let arms = arm_means.len();
    let (rate, inflation, target) = match attack {
        Some(AttackConfig::Inject {
            rate,
            inflation,
            target_arm,
        }) => (*rate, *inflation, target_arm.unwrap_or_else(|| worst_arm(arm_means))),
        _ => (0.0, 0.0, worst_arm(arm_means)),
    };
    let mut env = streams.stream(Purpose::Environment);
    let mut attacker = streams.stream(Purpose::Attacker);
    let mut est = ArmEstimator::new(arms)?;
    let mut events = Vec::new();
    let mut steps = Vec::new();
    let mut injected = 0;
    let mut choice = 0;
    for t in 0..horizon {
        let arm = (t % arms as u64) as usize;
        let z: f64 = env.sample(StandardNormal);
        let honest = EventRecord::new(
            t,
            vec![arm as f64, arm_means[arm] + reward_sd * z],
            None,
            Provenance::Honest,
        );
        feed_bandit(&mut est, &honest.observation().expect("honest records are visible"))?;
        events.push(honest);
        if attack.is_some() && attacker.random::<f64>() < rate {
            let fake = EventRecord::new(
                t,
                vec![target as f64, arm_means[target] + inflation],
                None,
                Provenance::Injected,
            );
            feed_bandit(&mut est, &fake.observation().expect("injected records are visible"))?;
            events.push(fake);
            injected += 1;
        }
        if est.counts().iter().all(|c| *c > 0) {
            choice = est.choose()?;
            steps.push(StepRecord {
                step: t,
                agent_id: 0,
                metric: est.mean(choice).expect("chosen arm is observed"),
                goal: arm_means[choice],
            });
        }
    }
    if steps.is_empty() {
        return Err(invariant("horizon", "must cover one warm-up pass over every arm"));
    }
    let last = *steps.last().expect("non-empty");
    Ok(RunTrace {
        scenario: ScenarioId::S4a,
        replicate: streams.replicate,
        pressure: None,
        steps,
        events,
        summary: vec![AgentOutcome {
            agent_id: 0,
            metric: last.metric,
            goal: last.goal,
        }],
        terminal_metric: last.metric,
        terminal_goal: last.goal,
        details: ScenarioDetails::Stream(StreamOutcome::Injection {
            final_choice: choice,
            regret: arm_means[best_arm(arm_means)] - arm_means[choice],
            injected_events: injected,
        }),
    })
}

/// Each query is answered by a sybil with probability `fraction`; sybils
/// invert the honest answer.
fn run_sybil(
    theta: f64,
    resolution: f64,
    attack: Option<&AttackConfig>,
    horizon: u64,
    streams: &ReplicateStreams,
) -> Result<RunTrace, ScenarioError> {
    let fraction = match attack {
        Some(AttackConfig::Sybil { fraction }) => *fraction,
        _ => 0.0,
    };
    let mut attacker = streams.stream(Purpose::Attacker);
    let mut learner = ThresholdLearner::new(resolution)?;
    let mut events = Vec::new();
    let mut steps = Vec::new();
    let mut sybil_answers = 0;
    let record = |t: u64, l: &ThresholdLearner, steps: &mut Vec<StepRecord>| {
        steps.push(StepRecord {
            step: t,
            agent_id: 0,
            metric: -l.width(),
            goal: -(l.estimate() - theta).abs(),
        });
    };
    record(0, &learner, &mut steps);
    for t in 1..=horizon {
        let Ok(q) = learner.query() else {
            break;
        };
        let honest = q > theta;
        let sybil = attack.is_some() && attacker.random::<f64>() < fraction;
        let (answer, provenance) = if sybil {
            sybil_answers += 1;
            (!honest, Provenance::Injected)
        } else {
            (honest, Provenance::Honest)
        };
        let event = EventRecord::new(t, vec![q], Some(answer), provenance);
        let obs = event.observation().expect("answers are visible");
        learner.update(obs.payload[0], obs.label.expect("answers carry a label"))?;
        events.push(event);
        record(t, &learner, &mut steps);
    }
    let (lo, hi) = learner.interval();
    let last = *steps.last().expect("non-empty");
    Ok(RunTrace {
        scenario: ScenarioId::S4b,
        replicate: streams.replicate,
        pressure: None,
        steps,
        events,
        summary: vec![AgentOutcome {
            agent_id: 0,
            metric: last.metric,
            goal: last.goal,
        }],
        terminal_metric: last.metric,
        terminal_goal: last.goal,
        details: ScenarioDetails::Stream(StreamOutcome::Sybil {
            final_error: (learner.estimate() - theta).abs(),
            truth_in_interval: lo <= theta && theta <= hi,
            sybil_answers,
        }),
    })
}

/// Records below the true mean are hidden with probability `rate`.
fn run_filter(
    mean: f64,
    sd: f64,
    attack: Option<&AttackConfig>,
    horizon: u64,
    streams: &ReplicateStreams,
) -> Result<RunTrace, ScenarioError> {
    let rate = match attack {
        Some(AttackConfig::Filter { rate }) => *rate,
        _ => 0.0,
    };
    let mut env = streams.stream(Purpose::Environment);
    let mut attacker = streams.stream(Purpose::Attacker);
    let mut est = RunningMean::default();
    let mut events = Vec::with_capacity(horizon as usize);
    let mut steps = Vec::with_capacity(horizon as usize);
    let mut hidden = 0;
    for t in 0..horizon {
        let z: f64 = env.sample(StandardNormal);
        let x = mean + sd * z;
        let u: f64 = attacker.random();
        let hide = attack.is_some() && x < mean && u < rate;
        let provenance = if hide {
            hidden += 1;
            Provenance::Hidden
        } else {
            Provenance::Honest
        };
        let event = EventRecord::new(t, vec![x], None, provenance);
        if let Some(obs) = event.observation() {
            est.push(obs.payload[0]);
        }
        events.push(event);
        if let Some(m) = est.mean() {
            steps.push(StepRecord {
                step: t,
                agent_id: 0,
                metric: m,
                goal: -(m - mean).abs(),
            });
        }
    }
    let Some(estimate) = est.mean() else {
        return Err(invariant("horizon", "every record was hidden"));
    };
    let last = *steps.last().expect("non-empty");
    Ok(RunTrace {
        scenario: ScenarioId::S4c,
        replicate: streams.replicate,
        pressure: None,
        steps,
        events,
        summary: vec![AgentOutcome {
            agent_id: 0,
            metric: last.metric,
            goal: last.goal,
        }],
        terminal_metric: last.metric,
        terminal_goal: last.goal,
        details: ScenarioDetails::Stream(StreamOutcome::Filter {
            bias: estimate - mean,
            hidden_events: hidden,
            visible_events: (horizon as usize) - hidden,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::ScenarioSpec;

    fn outcome(t: &RunTrace) -> StreamOutcome {
        match t.details {
            ScenarioDetails::Stream(o) => o,
            _ => unreachable!(),
        }
    }

    #[test]
    fn mismatched_attack_rejected() {
        let victim = StreamVictim::MeanEstimator { mean: 0.0, sd: 1.0 };
        let attack = AttackConfig::Sybil { fraction: 0.5 };
        let s = ReplicateStreams::new(0, 0, 0);
        assert!(matches!(
            run_s4_stream_attacks(&victim, Some(&attack), 10, &s),
            Err(ScenarioError::KindMismatch { .. })
        ));
    }

    #[test]
    fn zero_budgets_replay_baseline() {
        let pairs = [
            (
                ScenarioSpec::S4a(InjectionConfig {
                    injection_rate: 0.0,
                    ..Default::default()
                }),
                ScenarioSpec::S4a(InjectionConfig {
                    attack_enabled: false,
                    ..Default::default()
                }),
            ),
            (
                ScenarioSpec::S4b(SybilConfig {
                    sybil_fraction: 0.0,
                    ..Default::default()
                }),
                ScenarioSpec::S4b(SybilConfig {
                    attack_enabled: false,
                    ..Default::default()
                }),
            ),
            (
                ScenarioSpec::S4c(FilterConfig {
                    filter_rate: 0.0,
                    ..Default::default()
                }),
                ScenarioSpec::S4c(FilterConfig {
                    attack_enabled: false,
                    ..Default::default()
                }),
            ),
        ];
        for (a, b) in pairs {
            for rep in 0..3 {
                assert_eq!(a.run(None, 11, rep).unwrap(), b.run(None, 11, rep).unwrap());
            }
        }
    }

    #[test]
    fn honest_learner_keeps_truth() {
        let spec = ScenarioSpec::S4b(SybilConfig {
            attack_enabled: false,
            ..Default::default()
        });
        let t = spec.run(None, 1, 0).unwrap();
        let StreamOutcome::Sybil {
            final_error,
            truth_in_interval,
            ..
        } = outcome(&t)
        else {
            unreachable!()
        };
        assert!(truth_in_interval);
        assert!(final_error <= 2f64.powi(-40));
    }

    #[test]
    fn sybils_evict_truth() {
        let spec = ScenarioSpec::S4b(SybilConfig {
            sybil_fraction: 0.3,
            ..Default::default()
        });
        let evicted = (0..100)
            .filter(|&r| {
                let StreamOutcome::Sybil { truth_in_interval, .. } = outcome(&spec.run(None, 2, r).unwrap()) else {
                    unreachable!()
                };
                !truth_in_interval
            })
            .count();
        assert!(evicted > 95, "{evicted}");
    }

    #[test]
    fn injection_flips_choice() {
        let spec = ScenarioSpec::S4a(InjectionConfig::default());
        let worst = (0..200)
            .filter(|&r| {
                matches!(
                    outcome(&spec.run(None, 3, r).unwrap()),
                    StreamOutcome::Injection { final_choice: 0, .. }
                )
            })
            .count();
        assert!(worst > 180, "{worst}");
    }

    #[test]
    fn full_filter_gives_half_normal_bias() {
        let spec = ScenarioSpec::S4c(FilterConfig {
            filter_rate: 1.0,
            horizon: 100_000,
            ..Default::default()
        });
        let StreamOutcome::Filter { bias, .. } = outcome(&spec.run(None, 4, 0).unwrap()) else {
            unreachable!()
        };
        assert!((bias - (2.0 / std::f64::consts::PI).sqrt()).abs() < 0.008, "{bias}");
    }

    #[test]
    fn victim_ignores_provenance() {
        // Relabel every visible record and replay: the estimator ends identical.
        let spec = ScenarioSpec::S4a(InjectionConfig::default());
        let t = spec.run(None, 8, 0).unwrap();
        let replay = |events: &[EventRecord]| {
            let mut est = ArmEstimator::new(2).unwrap();
            for e in events {
                if let Some(o) = e.observation() {
                    feed_bandit(&mut est, &o).unwrap();
                }
            }
            (est.choose().unwrap(), est.mean(0), est.mean(1))
        };
        let mut scrambled = t.events.clone();
        for e in &mut scrambled {
            e.provenance = match e.provenance {
                Provenance::Honest => Provenance::Injected,
                _ => Provenance::Honest,
            };
        }
        assert_eq!(replay(&t.events), replay(&scrambled));
        let StreamOutcome::Injection { final_choice, .. } = outcome(&t) else {
            unreachable!()
        };
        assert_eq!(replay(&t.events).0, final_choice);
    }
}

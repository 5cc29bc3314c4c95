use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::engine::{Purpose, ReplicateStreams};
use crate::learners::{
    apply_flips, choose_flips, train_linear, ActionBox, FlipStrategy, HillClimbPolicy, RewardFn, RewardTamper,
    TrainingHyper, TwoGaussianTask,
};

use super::{
    invariant, mean_of, AgentOutcome, AttackConfig, RunTrace, ScenarioDetails, ScenarioError, ScenarioId, StepRecord,
};

/// A hill climber on `-|x - target|^2` inside `[lower, upper]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct HillClimbSetup {
    pub start: Vec<f64>,
    pub target: Vec<f64>,
    pub step_size: f64,
    pub steps: u64,
    pub bounds: ActionBox,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoOptionVictim {
    /// Learns from a reward an attacker may edit; occupancy of the ball
    /// `(centre, radius)` is monitored.
    RewardLearner {
        setup: HillClimbSetup,
        centre: Vec<f64>,
        radius: f64,
    },
    /// Emits actions an attacker may replace.
    Actuator(HillClimbSetup),
    /// Linear classifier trained on labels an attacker may flip.
    Classifier {
        task: TwoGaussianTask,
        train_size: usize,
        test_size: usize,
        learning_rate: f64,
        epochs: usize,
    },
}

impl CoOptionVictim {
    fn name(&self) -> &'static str {
        match self {
            CoOptionVictim::RewardLearner { .. } => "reward_learner",
            CoOptionVictim::Actuator(_) => "actuator",
            CoOptionVictim::Classifier { .. } => "classifier",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoOptionOutcome {
    RewardTamper {
        backdoor_occupancy: f64,
        final_true_reward: f64,
    },
    OutputIntercept {
        mean_realized_goal: f64,
        mean_intended_goal: f64,
        intercepted_steps: u64,
    },
    LabelFlip {
        accuracy_clean: f64,
        accuracy_attacked: f64,
        flipped: Vec<usize>,
    },
}

fn default_box() -> (f64, f64) {
    (-5.0, 5.0)
}

/// Reward tampering against a hill climber.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TamperConfig {
    pub start: Vec<f64>,
    pub target: Vec<f64>,
    pub step_size: f64,
    pub steps: u64,
    pub box_lower: f64,
    pub box_upper: f64,
    pub attack_enabled: bool,
    pub tamper_weight: f64,
    pub backdoor_centre: Vec<f64>,
    pub bonus_width: f64,
    pub backdoor_radius: f64,
}

impl Default for TamperConfig {
    fn default() -> Self {
        let (box_lower, box_upper) = default_box();
        Self {
            start: vec![0.0, 0.0],
            target: vec![0.0, 0.0],
            step_size: 0.25,
            steps: 10_000,
            box_lower,
            box_upper,
            attack_enabled: true,
            tamper_weight: 100.0,
            backdoor_centre: vec![3.0, 3.0],
            bonus_width: 2.0,
            backdoor_radius: 1.0,
        }
    }
}

/// Interception of a hill climber's emitted actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InterceptConfig {
    pub start: Vec<f64>,
    pub target: Vec<f64>,
    pub step_size: f64,
    pub steps: u64,
    pub box_lower: f64,
    pub box_upper: f64,
    pub attack_enabled: bool,
    pub intercept_probability: f64,
    pub adversarial_action: Vec<f64>,
}

impl Default for InterceptConfig {
    fn default() -> Self {
        let (box_lower, box_upper) = default_box();
        Self {
            start: vec![4.0, -3.0],
            target: vec![0.0, 0.0],
            step_size: 0.25,
            steps: 1000,
            box_lower,
            box_upper,
            attack_enabled: true,
            intercept_probability: 0.3,
            adversarial_action: vec![-5.0, -5.0],
        }
    }
}

/// Label flipping against a linear classifier on the two-Gaussian task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabelFlipConfig {
    pub train_size: usize,
    pub test_size: usize,
    pub dim: usize,
    pub separation: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub attack_enabled: bool,
    pub flip_count: usize,
    pub strategy: FlipStrategy,
}

impl Default for LabelFlipConfig {
    fn default() -> Self {
        Self {
            train_size: 200,
            test_size: 2000,
            dim: 2,
            separation: 1.0,
            learning_rate: 1.0,
            epochs: 10,
            attack_enabled: true,
            flip_count: 20,
            strategy: FlipStrategy::Greedy,
        }
    }
}

/// Goal co-option; the `attack` key picks the attack and its victim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "attack", rename_all = "snake_case")]
pub enum CoOptionConfig {
    RewardTamper(TamperConfig),
    OutputIntercept(InterceptConfig),
    LabelFlip(LabelFlipConfig),
}

impl CoOptionConfig {
    pub fn parts(&self) -> (CoOptionVictim, Option<AttackConfig>) {
        match self {
            CoOptionConfig::RewardTamper(c) => (
                CoOptionVictim::RewardLearner {
                    setup: HillClimbSetup {
                        start: c.start.clone(),
                        target: c.target.clone(),
                        step_size: c.step_size,
                        steps: c.steps,
                        bounds: ActionBox {
                            lower: c.box_lower,
                            upper: c.box_upper,
                        },
                    },
                    centre: c.backdoor_centre.clone(),
                    radius: c.backdoor_radius,
                },
                c.attack_enabled.then(|| AttackConfig::RewardTamper {
                    weight: c.tamper_weight,
                    centre: c.backdoor_centre.clone(),
                    width: c.bonus_width,
                    region_radius: c.backdoor_radius,
                }),
            ),
            CoOptionConfig::OutputIntercept(c) => (
                CoOptionVictim::Actuator(HillClimbSetup {
                    start: c.start.clone(),
                    target: c.target.clone(),
                    step_size: c.step_size,
                    steps: c.steps,
                    bounds: ActionBox {
                        lower: c.box_lower,
                        upper: c.box_upper,
                    },
                }),
                c.attack_enabled.then(|| AttackConfig::OutputIntercept {
                    probability: c.intercept_probability,
                    action: c.adversarial_action.clone(),
                }),
            ),
            CoOptionConfig::LabelFlip(c) => (
                CoOptionVictim::Classifier {
                    task: TwoGaussianTask {
                        dim: c.dim,
                        separation: c.separation,
                    },
                    train_size: c.train_size,
                    test_size: c.test_size,
                    learning_rate: c.learning_rate,
                    epochs: c.epochs,
                },
                c.attack_enabled.then_some(AttackConfig::LabelFlip {
                    count: c.flip_count,
                    strategy: c.strategy,
                }),
            ),
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let (victim, attack) = self.parts();
        validate_parts(&victim, attack.as_ref())
    }
}

fn validate_setup(s: &HillClimbSetup) -> Result<(), ScenarioError> {
    if !(s.bounds.lower < s.bounds.upper) {
        return Err(invariant("box_lower", "must be below box_upper"));
    }
    if s.start.is_empty() || !s.bounds.contains(&s.start) {
        return Err(invariant("start", "must be a point inside the action box"));
    }
    if s.target.len() != s.start.len() {
        return Err(invariant("target", "must have the dimension of start"));
    }
    if !(s.step_size > 0.0 && s.step_size.is_finite()) {
        return Err(invariant("step_size", "must be positive"));
    }
    if s.steps == 0 {
        return Err(invariant("steps", "must be at least 1"));
    }
    Ok(())
}

fn validate_parts(victim: &CoOptionVictim, attack: Option<&AttackConfig>) -> Result<(), ScenarioError> {
    match victim {
        CoOptionVictim::RewardLearner { setup, centre, radius } => {
            validate_setup(setup)?;
            if centre.len() != setup.start.len() {
                return Err(invariant("backdoor_centre", "must have the dimension of start"));
            }
            if !(*radius > 0.0) {
                return Err(invariant("backdoor_radius", "must be positive"));
            }
        }
        CoOptionVictim::Actuator(setup) => validate_setup(setup)?,
        CoOptionVictim::Classifier {
            task,
            train_size,
            test_size,
            learning_rate,
            epochs,
        } => {
            if task.dim == 0 {
                return Err(invariant("dim", "must be at least 1"));
            }
            if !(task.separation > 0.0 && task.separation.is_finite()) {
                return Err(invariant("separation", "must be positive"));
            }
            if *train_size < 2 {
                return Err(invariant("train_size", "needs at least one point per class"));
            }
            if *test_size == 0 {
                return Err(invariant("test_size", "must be at least 1"));
            }
            if !(*learning_rate > 0.0 && learning_rate.is_finite()) {
                return Err(invariant("learning_rate", "must be positive"));
            }
            if *epochs == 0 {
                return Err(invariant("epochs", "must be at least 1"));
            }
        }
    }
    let Some(attack) = attack else {
        return Ok(());
    };
    attack.validate()?;
    match (victim, attack) {
        (CoOptionVictim::RewardLearner { .. }, AttackConfig::RewardTamper { .. }) => Ok(()),
        (CoOptionVictim::Actuator(setup), AttackConfig::OutputIntercept { action, .. }) => {
            if action.len() != setup.start.len() || !setup.bounds.contains(action) {
                return Err(invariant("adversarial_action", "must be a point inside the action box"));
            }
            Ok(())
        }
        (CoOptionVictim::Classifier { train_size, .. }, AttackConfig::LabelFlip { count, .. }) => {
            if count > train_size {
                return Err(invariant(
                    "flip_count",
                    format!("{count} flips exceed the training set of {train_size}"),
                ));
            }
            Ok(())
        }
        (v, a) => Err(ScenarioError::KindMismatch {
            attack: a.kind_name(),
            victim: v.name(),
        }),
    }
}

/// Runs a co-option victim against an optional attack. The victim's own
/// randomness comes from the training stream and every attacker decision
/// from the attacker stream.
pub fn run_s5_co_option(
    victim: &CoOptionVictim,
    attack: Option<&AttackConfig>,
    streams: &ReplicateStreams,
) -> Result<RunTrace, ScenarioError> {
    validate_parts(victim, attack)?;
    match victim {
        CoOptionVictim::RewardLearner { setup, centre, radius } => run_tamper(setup, centre, *radius, attack, streams),
        CoOptionVictim::Actuator(setup) => run_intercept(setup, attack, streams),
        CoOptionVictim::Classifier {
            task,
            train_size,
            test_size,
            learning_rate,
            epochs,
        } => run_label_flip(*task, *train_size, *test_size, *learning_rate, *epochs, attack, streams),
    }
}

fn finish(steps: Vec<StepRecord>, streams: &ReplicateStreams, outcome: CoOptionOutcome) -> RunTrace {
    let last = *steps.last().expect("co-option traces are non-empty");
    RunTrace {
        scenario: ScenarioId::S5,
        replicate: streams.replicate,
        pressure: None,
        steps,
        events: Vec::new(),
        summary: vec![AgentOutcome {
            agent_id: 0,
            metric: last.metric,
            goal: last.goal,
        }],
        terminal_metric: last.metric,
        terminal_goal: last.goal,
        details: ScenarioDetails::CoOption(outcome),
    }
}

fn run_tamper(
    setup: &HillClimbSetup,
    centre: &[f64],
    radius: f64,
    attack: Option<&AttackConfig>,
    streams: &ReplicateStreams,
) -> Result<RunTrace, ScenarioError> {
    let tamper = match attack {
        Some(AttackConfig::RewardTamper {
            weight,
            centre,
            width,
            region_radius,
        }) => Some(RewardTamper {
            weight: *weight,
            centre: centre.clone(),
            width: *width,
            region_radius: *region_radius,
        }),
        _ => None,
    };
    let region = RewardTamper {
        weight: 0.0,
        centre: centre.to_vec(),
        width: 1.0,
        region_radius: radius,
    };
    let reward = RewardFn {
        target: setup.target.clone(),
        tamper,
    };
    let mut policy = HillClimbPolicy::new(setup.start.clone(), setup.step_size, setup.bounds, reward)?;
    let mut rng = streams.stream(Purpose::Training);
    let mut steps = Vec::with_capacity(setup.steps as usize + 1);
    let mut inside = 0u64;
    let row = |t: u64, p: &HillClimbPolicy| StepRecord {
        step: t,
        agent_id: 0,
        metric: p.reward().evaluate(p.position()),
        goal: p.reward().true_reward(p.position()),
    };
    steps.push(row(0, &policy));
    for t in 1..=setup.steps {
        policy.step(&mut rng);
        inside += region.in_region(policy.position()) as u64;
        steps.push(row(t, &policy));
    }
    let final_true_reward = policy.reward().true_reward(policy.position());
    Ok(finish(
        steps,
        streams,
        CoOptionOutcome::RewardTamper {
            backdoor_occupancy: inside as f64 / setup.steps as f64,
            final_true_reward,
        },
    ))
}

/// The victim climbs its own reward on the actions it intends; the world
/// sees the possibly replaced action.
fn run_intercept(
    setup: &HillClimbSetup,
    attack: Option<&AttackConfig>,
    streams: &ReplicateStreams,
) -> Result<RunTrace, ScenarioError> {
    let (probability, action) = match attack {
        Some(AttackConfig::OutputIntercept { probability, action }) => (*probability, Some(action)),
        _ => (0.0, None),
    };
    let reward = RewardFn::quadratic(setup.target.clone());
    let mut policy = HillClimbPolicy::new(setup.start.clone(), setup.step_size, setup.bounds, reward.clone())?;
    let mut rng = streams.stream(Purpose::Training);
    let mut attacker = streams.stream(Purpose::Attacker);
    let mut steps = Vec::with_capacity(setup.steps as usize);
    let mut intercepted = 0;
    for t in 1..=setup.steps {
        policy.step(&mut rng);
        let intended = policy.position();
        let realized = match action {
            Some(a) if attacker.random::<f64>() < probability => {
                intercepted += 1;
                a.as_slice()
            }
            _ => intended,
        };
        steps.push(StepRecord {
            step: t,
            agent_id: 0,
            metric: reward.true_reward(intended),
            goal: reward.true_reward(realized),
        });
    }
    let outcome = CoOptionOutcome::OutputIntercept {
        mean_realized_goal: mean_of(steps.iter().map(|s| s.goal)),
        mean_intended_goal: mean_of(steps.iter().map(|s| s.metric)),
        intercepted_steps: intercepted,
    };
    Ok(finish(steps, streams, outcome))
}

/// Step 0 is the classifier trained on clean labels, step 1 the one trained
/// on the labels the victim actually received. Metric is training accuracy
/// on the received labels; goal is accuracy on a clean test set.
fn run_label_flip(
    task: TwoGaussianTask,
    train_size: usize,
    test_size: usize,
    learning_rate: f64,
    epochs: usize,
    attack: Option<&AttackConfig>,
    streams: &ReplicateStreams,
) -> Result<RunTrace, ScenarioError> {
    let train = task.sample(train_size, &mut streams.stream(Purpose::Environment));
    let test = task.sample(test_size, &mut streams.stream(Purpose::Evaluation));
    let hyper = TrainingHyper {
        learning_rate,
        epochs,
        seed: streams.stream(Purpose::Training).next_u64(),
    };
    let flipped = match attack {
        Some(AttackConfig::LabelFlip { count, strategy }) => choose_flips(
            &train,
            *count,
            *strategy,
            &hyper,
            |w| task.population_accuracy(w),
            &mut streams.stream(Purpose::Attacker),
        )?,
        _ => Vec::new(),
    };
    let poisoned = apply_flips(&train, &flipped);
    let clean = train_linear(&train, &hyper)?;
    let attacked = train_linear(&poisoned, &hyper)?;
    let accuracy_clean = clean.accuracy(&test);
    let accuracy_attacked = attacked.accuracy(&test);
    let steps = vec![
        StepRecord {
            step: 0,
            agent_id: 0,
            metric: clean.accuracy(&train),
            goal: accuracy_clean,
        },
        StepRecord {
            step: 1,
            agent_id: 0,
            metric: attacked.accuracy(&poisoned),
            goal: accuracy_attacked,
        },
    ];
    Ok(finish(
        steps,
        streams,
        CoOptionOutcome::LabelFlip {
            accuracy_clean,
            accuracy_attacked,
            flipped,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::ScenarioSpec;

    fn run(c: CoOptionConfig, rep: u64) -> RunTrace {
        ScenarioSpec::S5(c).run(None, 17, rep).unwrap()
    }

    fn outcome(t: &RunTrace) -> CoOptionOutcome {
        match &t.details {
            ScenarioDetails::CoOption(o) => o.clone(),
            _ => unreachable!(),
        }
    }

    #[test]
    fn zero_budgets_replay_baseline() {
        let pairs = [
            (
                CoOptionConfig::RewardTamper(TamperConfig {
                    tamper_weight: 0.0,
                    steps: 500,
                    ..Default::default()
                }),
                CoOptionConfig::RewardTamper(TamperConfig {
                    attack_enabled: false,
                    steps: 500,
                    ..Default::default()
                }),
            ),
            (
                CoOptionConfig::OutputIntercept(InterceptConfig {
                    intercept_probability: 0.0,
                    ..Default::default()
                }),
                CoOptionConfig::OutputIntercept(InterceptConfig {
                    attack_enabled: false,
                    ..Default::default()
                }),
            ),
            (
                CoOptionConfig::LabelFlip(LabelFlipConfig {
                    flip_count: 0,
                    ..Default::default()
                }),
                CoOptionConfig::LabelFlip(LabelFlipConfig {
                    attack_enabled: false,
                    ..Default::default()
                }),
            ),
        ];
        for (a, b) in pairs {
            assert_eq!(run(a, 0), run(b, 0));
        }
    }

    #[test]
    fn full_interception_pins_goal_at_minimum() {
        let t = run(
            CoOptionConfig::OutputIntercept(InterceptConfig {
                intercept_probability: 1.0,
                ..Default::default()
            }),
            0,
        );
        assert!(t.steps.iter().all(|s| s.goal == -50.0));
    }

    #[test]
    fn strong_tamper_captures_climber() {
        let t = run(CoOptionConfig::RewardTamper(TamperConfig::default()), 0);
        let CoOptionOutcome::RewardTamper {
            backdoor_occupancy,
            final_true_reward,
        } = outcome(&t)
        else {
            unreachable!()
        };
        assert!(backdoor_occupancy > 0.9, "{backdoor_occupancy}");
        assert!(final_true_reward < -10.0);
        let clean = run(
            CoOptionConfig::RewardTamper(TamperConfig {
                attack_enabled: false,
                ..Default::default()
            }),
            0,
        );
        let CoOptionOutcome::RewardTamper { backdoor_occupancy, .. } = outcome(&clean) else {
            unreachable!()
        };
        assert_eq!(backdoor_occupancy, 0.0);
    }

    #[test]
    fn flips_hurt_accuracy() {
        let t = run(CoOptionConfig::LabelFlip(LabelFlipConfig::default()), 0);
        let CoOptionOutcome::LabelFlip {
            accuracy_clean,
            accuracy_attacked,
            flipped,
        } = outcome(&t)
        else {
            unreachable!()
        };
        assert_eq!(flipped.len(), 20);
        assert!(accuracy_attacked < accuracy_clean);
    }

    #[test]
    fn config_layout() {
        let c: CoOptionConfig =
            serde_json::from_str(r#"{"attack":"label_flip","flip_count":4,"strategy":"random"}"#).unwrap();
        let CoOptionConfig::LabelFlip(l) = &c else { panic!() };
        assert_eq!(l.flip_count, 4);
        assert_eq!(l.train_size, 200);
        assert!(serde_json::from_str::<CoOptionConfig>(r#"{"attack":"label_flip","flipcount":4}"#).is_err());
        assert!(serde_json::from_str::<CoOptionConfig>(r#"{"flip_count":4}"#).is_err());
        let too_many = CoOptionConfig::LabelFlip(LabelFlipConfig {
            flip_count: 201,
            ..Default::default()
        });
        assert!(too_many.validate().is_err());
    }
}

use rand::Rng;
use rand_distr::StandardNormal;

use super::{EngineError, RngStream};

/// One option an agent may take, scored by its proxy metric.
///
/// `hidden_goal` is the true value of the option. It is carried for analysis
/// only; selection operators receive metric scores and never see it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCandidate {
    pub action: Vec<f64>,
    pub metric_score: f64,
    pub hidden_goal: f64,
}

impl ScoredCandidate {
    pub fn new(action: Vec<f64>, metric_score: f64, hidden_goal: f64) -> Result<Self, EngineError> {
        if !metric_score.is_finite() || !hidden_goal.is_finite() {
            return Err(EngineError::NonFinite);
        }
        Ok(Self {
            action,
            metric_score,
            hidden_goal,
        })
    }
}

/// A joint distribution over `(action, metric_score, hidden_goal)`.
pub trait CandidateGenerator {
    fn validate(&self) -> Result<(), EngineError>;
    fn draw(&self, rng: &mut RngStream) -> ScoredCandidate;
}

/// Every draw is the same candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMass {
    pub action: Vec<f64>,
    pub metric_score: f64,
    pub hidden_goal: f64,
}

impl CandidateGenerator for PointMass {
    fn validate(&self) -> Result<(), EngineError> {
        if self.metric_score.is_finite() && self.hidden_goal.is_finite() {
            Ok(())
        } else {
            Err(EngineError::InvalidGenerator("point mass must be finite".into()))
        }
    }

    fn draw(&self, _rng: &mut RngStream) -> ScoredCandidate {
        ScoredCandidate {
            action: self.action.clone(),
            metric_score: self.metric_score,
            hidden_goal: self.hidden_goal,
        }
    }
}

/// Goal `g ~ Normal(goal_mean, goal_sd^2)`, metric `m = g + Normal(0, noise_sd^2)`.
///
/// The action is the one-element vector `[g]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisyProxy {
    pub goal_mean: f64,
    pub goal_sd: f64,
    pub noise_sd: f64,
}

impl NoisyProxy {
    pub fn standard(noise_sd: f64) -> Self {
        Self {
            goal_mean: 0.0,
            goal_sd: 1.0,
            noise_sd,
        }
    }
}

impl CandidateGenerator for NoisyProxy {
    fn validate(&self) -> Result<(), EngineError> {
        if !self.goal_mean.is_finite() {
            return Err(EngineError::InvalidGenerator("goal mean must be finite".into()));
        }
        if !(self.goal_sd >= 0.0 && self.goal_sd.is_finite()) {
            return Err(EngineError::InvalidGenerator(format!(
                "goal standard deviation must be non-negative, got {}",
                self.goal_sd
            )));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(EngineError::InvalidGenerator(format!(
                "noise standard deviation must be non-negative, got {}",
                self.noise_sd
            )));
        }
        Ok(())
    }

    fn draw(&self, rng: &mut RngStream) -> ScoredCandidate {
        let z_goal: f64 = rng.sample(StandardNormal);
        let z_noise: f64 = rng.sample(StandardNormal);
        let goal = self.goal_mean + self.goal_sd * z_goal;
        ScoredCandidate {
            action: vec![goal],
            metric_score: goal + self.noise_sd * z_noise,
            hidden_goal: goal,
        }
    }
}

/// Uniform choice among a finite menu of pre-scored options.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformMenu {
    pub options: Vec<ScoredCandidate>,
}

impl CandidateGenerator for UniformMenu {
    fn validate(&self) -> Result<(), EngineError> {
        if self.options.is_empty() {
            return Err(EngineError::InvalidGenerator("menu has no options".into()));
        }
        Ok(())
    }

    fn draw(&self, rng: &mut RngStream) -> ScoredCandidate {
        self.options[rng.random_range(0..self.options.len())].clone()
    }
}

/// `n` independent draws from `generator`.
pub fn sample_candidates<G: CandidateGenerator + ?Sized>(
    generator: &G,
    n: usize,
    rng: &mut RngStream,
) -> Result<Vec<ScoredCandidate>, EngineError> {
    if n == 0 {
        return Err(EngineError::InvalidOperator(
            "candidate count n must be at least 1".into(),
        ));
    }
    generator.validate()?;
    Ok((0..n).map(|_| generator.draw(rng)).collect())
}

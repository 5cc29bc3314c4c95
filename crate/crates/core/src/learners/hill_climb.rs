use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::RngStream;

use super::LearnerError;

/// Additive bonus an attacker splices into a victim's reward.
///
/// The bonus is a Gaussian bump `weight * exp(-|x - centre|^2 / (2 width^2))`;
/// its tails reach the victim's starting region so a local optimizer can
/// follow it. The backdoor region is the ball of `region_radius` around
/// `centre`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardTamper {
    pub weight: f64,
    pub centre: Vec<f64>,
    pub width: f64,
    pub region_radius: f64,
}

impl RewardTamper {
    pub fn bonus(&self, x: &[f64]) -> f64 {
        let d2 = squared_distance(x, &self.centre);
        self.weight * (-d2 / (2.0 * self.width * self.width)).exp()
    }

    pub fn in_region(&self, x: &[f64]) -> bool {
        squared_distance(x, &self.centre) <= self.region_radius * self.region_radius
    }
}

/// Reward `-|x - target|^2`, optionally tampered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardFn {
    pub target: Vec<f64>,
    pub tamper: Option<RewardTamper>,
}

impl RewardFn {
    pub fn quadratic(target: Vec<f64>) -> Self {
        Self { target, tamper: None }
    }

    /// The untampered reward: the victim designer's true objective.
    pub fn true_reward(&self, x: &[f64]) -> f64 {
        -squared_distance(x, &self.target)
    }

    /// The reward the victim actually optimizes. A zero-weight bump is no bump.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let base = self.true_reward(x);
        match &self.tamper {
            Some(t) if t.weight != 0.0 => base + t.bonus(x),
            _ => base,
        }
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Axis-aligned action box `[lower, upper]^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionBox {
    pub lower: f64,
    pub upper: f64,
}

impl ActionBox {
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().all(|v| self.lower <= *v && *v <= self.upper)
    }
}

/// Stochastic hill climber: proposes a uniform point in the ball of radius
/// `step_size` around the current position and moves only on strict
/// improvement of its reward.
#[derive(Debug, Clone, PartialEq)]
pub struct HillClimbPolicy {
    position: Vec<f64>,
    step_size: f64,
    bounds: ActionBox,
    reward: RewardFn,
}

impl HillClimbPolicy {
    pub fn new(position: Vec<f64>, step_size: f64, bounds: ActionBox, reward: RewardFn) -> Result<Self, LearnerError> {
        if !(step_size > 0.0 && step_size.is_finite()) {
            return Err(LearnerError::InvalidParameter(format!(
                "step size must be positive, got {step_size}"
            )));
        }
        if !(bounds.lower < bounds.upper) {
            return Err(LearnerError::InvalidParameter("empty action box".into()));
        }
        if position.is_empty() || !bounds.contains(&position) {
            return Err(LearnerError::InvalidParameter(
                "start position must lie inside the action box".into(),
            ));
        }
        if reward.target.len() != position.len() {
            return Err(LearnerError::InvalidParameter(
                "reward target dimension differs from the action space".into(),
            ));
        }
        Ok(Self {
            position,
            step_size,
            bounds,
            reward,
        })
    }

    pub fn position(&self) -> &[f64] {
        &self.position
    }

    pub fn reward(&self) -> &RewardFn {
        &self.reward
    }

    pub fn step(&mut self, rng: &mut RngStream) {
        let d = self.position.len();
        let offset = loop {
            let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
            if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
                break v;
            }
        };
        let proposal: Vec<f64> = self
            .position
            .iter()
            .zip(&offset)
            .map(|(p, o)| (p + self.step_size * o).clamp(self.bounds.lower, self.bounds.upper))
            .collect();
        if self.reward.evaluate(&proposal) > self.reward.evaluate(&self.position) {
            self.position = proposal;
        }
    }
}

pub fn hill_climb_step(mut policy: HillClimbPolicy, rng: &mut RngStream) -> HillClimbPolicy {
    policy.step(rng);
    policy
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box() -> ActionBox {
        ActionBox {
            lower: -5.0,
            upper: 5.0,
        }
    }

    #[test]
    fn optimum_is_a_fixed_point() {
        let mut p = HillClimbPolicy::new(vec![0.0, 0.0], 0.5, unit_box(), RewardFn::quadratic(vec![0.0, 0.0])).unwrap();
        let mut rng = RngStream::new(1, 1);
        for _ in 0..1000 {
            p = hill_climb_step(p, &mut rng);
        }
        assert_eq!(p.position(), &[0.0, 0.0]);
    }

    #[test]
    fn stays_in_box() {
        let reward = RewardFn::quadratic(vec![100.0, 100.0]);
        let mut p = HillClimbPolicy::new(vec![4.9, 4.9], 1.0, unit_box(), reward).unwrap();
        let mut rng = RngStream::new(2, 2);
        for _ in 0..500 {
            p.step(&mut rng);
            assert!(unit_box().contains(p.position()));
        }
    }

    #[test]
    fn zero_weight_tamper_matches_clean_trajectory() {
        let clean = RewardFn::quadratic(vec![0.0, 0.0]);
        let mut tampered = clean.clone();
        tampered.tamper = Some(RewardTamper {
            weight: 0.0,
            centre: vec![3.0, 3.0],
            width: 2.0,
            region_radius: 1.0,
        });
        let mut a = HillClimbPolicy::new(vec![2.0, -1.0], 0.3, unit_box(), clean).unwrap();
        let mut b = HillClimbPolicy::new(vec![2.0, -1.0], 0.3, unit_box(), tampered).unwrap();
        let (mut ra, mut rb) = (RngStream::new(5, 5), RngStream::new(5, 5));
        for _ in 0..2000 {
            a.step(&mut ra);
            b.step(&mut rb);
            assert_eq!(a.position(), b.position());
        }
    }

    #[test]
    fn invalid_parameters() {
        let r = RewardFn::quadratic(vec![0.0]);
        assert!(HillClimbPolicy::new(vec![0.0], 0.0, unit_box(), r.clone()).is_err());
        assert!(HillClimbPolicy::new(vec![9.0], 0.1, unit_box(), r.clone()).is_err());
        assert!(HillClimbPolicy::new(vec![0.0, 0.0], 0.1, unit_box(), r).is_err());
    }
}

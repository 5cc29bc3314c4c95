use crate::stats::CompensatedSum;

use super::LearnerError;

/// Running mean of a scalar stream.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningMean {
    count: u64,
    total: CompensatedSum,
}

impl RunningMean {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.total.add(x);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// `None` before the first observation.
    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.total.value() / self.count as f64)
    }
}

/// Per-arm reward estimates built from observed rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmEstimator {
    arms: Vec<RunningMean>,
}

impl ArmEstimator {
    pub fn new(arm_count: usize) -> Result<Self, LearnerError> {
        if arm_count < 2 {
            return Err(LearnerError::InvalidParameter(format!(
                "arm estimator needs at least 2 arms, got {arm_count}"
            )));
        }
        Ok(Self {
            arms: vec![RunningMean::default(); arm_count],
        })
    }

    pub fn arm_count(&self) -> usize {
        self.arms.len()
    }

    pub fn count(&self, arm: usize) -> u64 {
        self.arms[arm].count()
    }

    pub fn mean(&self, arm: usize) -> Option<f64> {
        self.arms[arm].mean()
    }

    pub fn counts(&self) -> Vec<u64> {
        self.arms.iter().map(RunningMean::count).collect()
    }

    /// Folds one observed reward into `arm`'s running mean.
    pub fn update(&mut self, arm: usize, reward: f64) -> Result<(), LearnerError> {
        if arm >= self.arms.len() {
            return Err(LearnerError::ArmOutOfRange {
                arm,
                arm_count: self.arms.len(),
            });
        }
        if !reward.is_finite() {
            return Err(LearnerError::NonFinite("reward"));
        }
        self.arms[arm].push(reward);
        Ok(())
    }

    /// Greedy choice: highest estimated mean, ties to the lowest index.
    pub fn choose(&self) -> Result<usize, LearnerError> {
        let mut best: Option<(usize, f64)> = None;
        for (arm, est) in self.arms.iter().enumerate() {
            let m = est.mean().ok_or(LearnerError::UnobservedArm(arm))?;
            match best {
                Some((_, b)) if m <= b => {}
                _ => best = Some((arm, m)),
            }
        }
        Ok(best.map(|(arm, _)| arm).unwrap_or(0))
    }
}

/// Functional form of [`ArmEstimator::update`].
pub fn arm_update(mut est: ArmEstimator, arm: usize, reward: f64) -> Result<ArmEstimator, LearnerError> {
    est.update(arm, reward)?;
    Ok(est)
}

pub fn arm_choose(est: &ArmEstimator) -> Result<usize, LearnerError> {
    est.choose()
}

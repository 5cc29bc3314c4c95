use super::LearnerError;

/// Noiseless bisection search for an unknown threshold in [0, 1].
///
/// An answer of `true` means the labeller reports the query as above the
/// threshold. Nothing stops an adversarial labeller from pushing the true
/// threshold out of the interval; the learner cannot tell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdLearner {
    lo: f64,
    hi: f64,
    query_count: u64,
    resolution: f64,
}

impl ThresholdLearner {
    pub fn new(resolution: f64) -> Result<Self, LearnerError> {
        Self::with_interval(0.0, 1.0, resolution)
    }

    pub fn with_interval(lo: f64, hi: f64, resolution: f64) -> Result<Self, LearnerError> {
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(LearnerError::InvalidParameter(format!(
                "interval [{lo}, {hi}] must satisfy 0 <= lo <= hi <= 1"
            )));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(LearnerError::InvalidParameter(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        Ok(Self {
            lo,
            hi,
            query_count: 0,
            resolution,
        })
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn query_count(&self) -> u64 {
        self.query_count
    }

    pub fn estimate(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// The maximum-uncertainty query: the interval midpoint.
    pub fn query(&self) -> Result<f64, LearnerError> {
        if self.width() < self.resolution {
            return Err(LearnerError::DegenerateInterval {
                lo: self.lo,
                hi: self.hi,
                resolution: self.resolution,
            });
        }
        Ok(self.estimate())
    }

    pub fn update(&mut self, query: f64, answer_above: bool) -> Result<(), LearnerError> {
        if !(self.lo <= query && query <= self.hi) {
            return Err(LearnerError::QueryOutsideInterval {
                query,
                lo: self.lo,
                hi: self.hi,
            });
        }
        if answer_above {
            self.hi = query;
        } else {
            self.lo = query;
        }
        self.query_count += 1;
        Ok(())
    }
}

pub fn active_query(learner: &ThresholdLearner) -> Result<f64, LearnerError> {
    learner.query()
}

pub fn active_update(
    mut learner: ThresholdLearner,
    query: f64,
    answer_above: bool,
) -> Result<ThresholdLearner, LearnerError> {
    learner.update(query, answer_above)?;
    Ok(learner)
}

#[cfg(test)]
mod tests {
    use super::*;

    const RES: f64 = 1e-12;

    #[test]
    fn midpoint_queries() {
        let l = ThresholdLearner::new(RES).unwrap();
        assert_eq!(active_query(&l).unwrap(), 0.5);
        let l = ThresholdLearner::with_interval(0.25, 0.5, RES).unwrap();
        assert_eq!(active_query(&l).unwrap(), 0.375);
    }

    #[test]
    fn bisection_step() {
        let l = active_update(ThresholdLearner::new(RES).unwrap(), 0.5, false).unwrap();
        assert_eq!(l.interval(), (0.5, 1.0));
    }

    #[test]
    fn adversarial_answer_evicts_truth() {
        let theta = 0.3;
        let l = active_update(ThresholdLearner::new(RES).unwrap(), 0.5, false).unwrap();
        let (lo, hi) = l.interval();
        assert!(!(lo <= theta && theta <= hi));
    }

    #[test]
    fn honest_bisection_halves_and_converges() {
        let theta = 0.3;
        let mut l = ThresholdLearner::new(RES).unwrap();
        for k in 1..=20 {
            let q = l.query().unwrap();
            l.update(q, q > theta).unwrap();
            assert_eq!(l.width(), 2f64.powi(-k));
            let (lo, hi) = l.interval();
            assert!(lo <= theta && theta <= hi);
        }
        assert!((l.estimate() - theta).abs() <= 2f64.powi(-20));
        assert_eq!(l.query_count(), 20);
    }

    #[test]
    fn degenerate_interval() {
        let l = ThresholdLearner::with_interval(0.5, 0.5, RES).unwrap();
        assert!(matches!(l.query(), Err(LearnerError::DegenerateInterval { .. })));
    }

    #[test]
    fn query_outside_interval() {
        let l = ThresholdLearner::with_interval(0.5, 1.0, RES).unwrap();
        assert!(active_update(l, 0.25, true).is_err());
    }
}

//! Small numerical helpers shared by scenarios and analysis.

use rand::Rng;

use crate::engine::RngStream;

/// One-sided standard normal critical value at alpha = 0.01.
pub const Z_ONE_SIDED_99: f64 = 2.326_347_874_040_841;
/// Two-sided standard normal critical value at 99% confidence.
pub const Z_TWO_SIDED_99: f64 = 2.575_829_303_548_901;

/// Compensated (Neumaier) running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

pub fn sum(xs: &[f64]) -> f64 {
    let mut acc = CompensatedSum::default();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    sum(xs) / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); zero for fewer than two values.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let mut acc = CompensatedSum::default();
    for &x in xs {
        acc.add((x - m) * (x - m));
    }
    (acc.value() / (xs.len() - 1) as f64).sqrt()
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Welch z statistic for `mean_b - mean_a`.
///
/// Returns `+inf` / `-inf` / `0` when both variances vanish.
pub fn welch_z(mean_a: f64, sd_a: f64, n_a: usize, mean_b: f64, sd_b: f64, n_b: usize) -> f64 {
    let se = (sd_a * sd_a / n_a as f64 + sd_b * sd_b / n_b as f64).sqrt();
    let diff = mean_b - mean_a;
    if se == 0.0 {
        if diff > 0.0 {
            f64::INFINITY
        } else if diff < 0.0 {
            f64::NEG_INFINITY
        } else {
            0.0
        }
    } else {
        diff / se
    }
}

/// Pearson correlation. `None` when either input is constant or lengths differ.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let mx = mean(xs);
    let my = mean(ys);
    let (mut sxy, mut sxx, mut syy) = (
        CompensatedSum::default(),
        CompensatedSum::default(),
        CompensatedSum::default(),
    );
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy.add(dx * dy);
        sxx.add(dx * dx);
        syy.add(dy * dy);
    }
    let (sxx, syy) = (sxx.value(), syy.value());
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy.value() / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Percentile-bootstrap confidence interval for the mean.
///
/// The interval is widened when necessary so that it always contains the
/// point estimate.
pub fn bootstrap_mean_ci(xs: &[f64], resamples: usize, confidence: f64, rng: &mut RngStream) -> (f64, f64) {
    let point = mean(xs);
    if xs.len() < 2 || resamples == 0 {
        return (point, point);
    }
    let n = xs.len();
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| {
            let mut acc = CompensatedSum::default();
            for _ in 0..n {
                acc.add(xs[rng.random_range(0..n)]);
            }
            acc.value() / n as f64
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let tail = (1.0 - confidence) / 2.0;
    let lo = percentile_sorted(&stats, tail);
    let hi = percentile_sorted(&stats, 1.0 - tail);
    (lo.min(point), hi.max(point))
}

/// Linear-interpolated percentile of an ascending slice, `p` in [0, 1].
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

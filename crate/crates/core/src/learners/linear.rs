use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::engine::RngStream;
use crate::stats::normal_cdf;

use super::LearnerError;

/// Stream id used to derive the example order from a training seed.
const ORDER_STREAM: u64 = 0x5348_5546_464c_4500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingHyper {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainingHyper {
    fn default() -> Self {
        Self {
            learning_rate: 1.0,
            epochs: 10,
            seed: 0,
        }
    }
}

/// A labelled training point.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPoint {
    pub x: Vec<f64>,
    pub label: bool,
}

/// Linear decision rule `w . x + b > 0`, trained by an averaged perceptron.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    /// `d` feature weights followed by the bias.
    pub weights: Vec<f64>,
    pub training_log: Vec<LabeledPoint>,
}

impl LinearClassifier {
    pub fn dim(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        decision(&self.weights, x)
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.decision(x) > 0.0
    }

    pub fn accuracy(&self, points: &[LabeledPoint]) -> f64 {
        accuracy(&self.weights, points)
    }
}

fn decision(weights: &[f64], x: &[f64]) -> f64 {
    let d = weights.len() - 1;
    let mut v = weights[d];
    for j in 0..d {
        v += weights[j] * x[j];
    }
    v
}

pub fn accuracy(weights: &[f64], points: &[LabeledPoint]) -> f64 {
    if points.is_empty() {
        return f64::NAN;
    }
    let correct = points
        .iter()
        .filter(|p| (decision(weights, &p.x) > 0.0) == p.label)
        .count();
    correct as f64 / points.len() as f64
}

/// The visit order of every epoch; a function of `(seed, n, epochs)` only.
pub fn epoch_orders(n: usize, hyper: &TrainingHyper) -> Vec<Vec<usize>> {
    let mut rng = RngStream::new(hyper.seed, ORDER_STREAM);
    let mut order: Vec<usize> = (0..n).collect();
    (0..hyper.epochs)
        .map(|_| {
            order.shuffle(&mut rng);
            order.clone()
        })
        .collect()
}

fn validate(points: &[LabeledPoint], hyper: &TrainingHyper) -> Result<usize, LearnerError> {
    let first = points.first().ok_or(LearnerError::SingleClass)?;
    let dim = first.x.len();
    if !points.iter().any(|p| p.label) || !points.iter().any(|p| !p.label) {
        return Err(LearnerError::SingleClass);
    }
    for p in points {
        if p.x.len() != dim {
            return Err(LearnerError::InvalidParameter(format!(
                "payload dimension {} differs from {dim}",
                p.x.len()
            )));
        }
        if p.x.iter().any(|v| !v.is_finite()) {
            return Err(LearnerError::NonFinite("payload"));
        }
    }
    if !(hyper.learning_rate > 0.0 && hyper.learning_rate.is_finite()) {
        return Err(LearnerError::InvalidParameter(format!(
            "learning rate must be positive, got {}",
            hyper.learning_rate
        )));
    }
    if hyper.epochs == 0 {
        return Err(LearnerError::InvalidParameter("epochs must be at least 1".into()));
    }
    Ok(dim)
}

/// Averaged-perceptron weights for `points` visited in `orders`.
///
/// `labels` overrides the points' own labels, so attacks can retrain on
/// altered labels without copying the data.
fn fit_weights(points: &[LabeledPoint], labels: &[bool], lr: f64, orders: &[Vec<usize>]) -> Vec<f64> {
    let d = points[0].x.len();
    let mut w = vec![0.0; d + 1];
    let mut acc = vec![0.0; d + 1];
    let mut steps = 0usize;
    for order in orders {
        for &i in order {
            let sign = if labels[i] { 1.0 } else { -1.0 };
            if sign * decision(&w, &points[i].x) <= 0.0 {
                let x = &points[i].x;
                for j in 0..d {
                    w[j] += lr * sign * x[j];
                }
                w[d] += lr * sign;
            }
            for j in 0..=d {
                acc[j] += w[j];
            }
            steps += 1;
        }
    }
    acc.iter().map(|a| a / steps as f64).collect()
}

/// Trains on `points` in a seed-derived shuffled order.
pub fn train_linear(points: &[LabeledPoint], hyper: &TrainingHyper) -> Result<LinearClassifier, LearnerError> {
    validate(points, hyper)?;
    let labels: Vec<bool> = points.iter().map(|p| p.label).collect();
    let orders = epoch_orders(points.len(), hyper);
    Ok(LinearClassifier {
        weights: fit_weights(points, &labels, hyper.learning_rate, &orders),
        training_log: points.to_vec(),
    })
}

/// Balanced two-class Gaussian task with identity covariance; class means at
/// `+separation` and `-separation` on every coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoGaussianTask {
    pub dim: usize,
    pub separation: f64,
}

impl Default for TwoGaussianTask {
    fn default() -> Self {
        Self {
            dim: 2,
            separation: 1.0,
        }
    }
}

impl TwoGaussianTask {
    /// `n` points, labels alternating `false, true, ...`.
    pub fn sample(&self, n: usize, rng: &mut RngStream) -> Vec<LabeledPoint> {
        (0..n)
            .map(|i| {
                let label = i % 2 == 1;
                let centre = if label { self.separation } else { -self.separation };
                let x = (0..self.dim)
                    .map(|_| centre + rng.sample::<f64, _>(StandardNormal))
                    .collect();
                LabeledPoint { x, label }
            })
            .collect()
    }

    /// Exact accuracy of a linear rule on the generating distribution.
    pub fn population_accuracy(&self, weights: &[f64]) -> f64 {
        let d = self.dim;
        let norm = weights[..d].iter().map(|w| w * w).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.5;
        }
        let along = self.separation * weights[..d].iter().sum::<f64>();
        let bias = weights[d];
        0.5 * normal_cdf((along + bias) / norm) + 0.5 * normal_cdf((along - bias) / norm)
    }
}

/// How an attacker picks the training labels to flip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlipStrategy {
    /// `k` distinct points uniformly at random.
    Random,
    /// The `k` points closest to the clean decision boundary.
    NearestBoundary,
    /// `k` rounds, each flipping the single point whose flip most lowers
    /// the attacker's damage objective after retraining.
    Greedy,
}

/// Indices of the labels to flip, ascending.
///
/// `objective` scores a retrained weight vector from the attacker's side
/// (lower means more damage); only [`FlipStrategy::Greedy`] consults it.
pub fn choose_flips<F>(
    points: &[LabeledPoint],
    k: usize,
    strategy: FlipStrategy,
    hyper: &TrainingHyper,
    objective: F,
    rng: &mut RngStream,
) -> Result<Vec<usize>, LearnerError>
where
    F: Fn(&[f64]) -> f64,
{
    validate(points, hyper)?;
    let n = points.len();
    if k > n {
        return Err(LearnerError::FlipBudget { k, n });
    }
    let mut flips = match strategy {
        FlipStrategy::Random => index::sample(rng, n, k).into_vec(),
        FlipStrategy::NearestBoundary => {
            let clean = train_linear(points, hyper)?;
            let mut idx: Vec<usize> = (0..n).collect();
            let dist: Vec<f64> = points.iter().map(|p| clean.decision(&p.x).abs()).collect();
            idx.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
            idx.truncate(k);
            idx
        }
        FlipStrategy::Greedy => {
            let orders = epoch_orders(n, hyper);
            let mut labels: Vec<bool> = points.iter().map(|p| p.label).collect();
            let mut chosen = Vec::with_capacity(k);
            let mut flipped = vec![false; n];
            for _ in 0..k {
                let mut best: Option<(usize, f64)> = None;
                for i in 0..n {
                    if flipped[i] {
                        continue;
                    }
                    labels[i] = !labels[i];
                    let score = objective(&fit_weights(points, &labels, hyper.learning_rate, &orders));
                    labels[i] = !labels[i];
                    if best.is_none_or(|(_, s)| score < s) {
                        best = Some((i, score));
                    }
                }
                let (i, _) = best.expect("k <= n leaves a candidate each round");
                flipped[i] = true;
                labels[i] = !labels[i];
                chosen.push(i);
            }
            chosen
        }
    };
    flips.sort_unstable();
    Ok(flips)
}

/// `points` with the labels at `flips` inverted.
pub fn apply_flips(points: &[LabeledPoint], flips: &[usize]) -> Vec<LabeledPoint> {
    let mut out = points.to_vec();
    for &i in flips {
        out[i].label = !out[i].label;
    }
    out
}

use std::cmp::Ordering;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{EngineError, RngStream, ScoredCandidate};

/// How the retained quantile set is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectorKind {
    /// Highest metric score, ties to the lowest index.
    Maximizer,
    /// Uniform draw from the top `ceil(q * len)` candidates by metric score.
    Quantilizer { q: f64 },
    /// Uniform draw from all candidates.
    Random,
}

/// An agent's rule for turning scored candidates into one choice, together
/// with the number of candidates `n` it evaluates (its optimization pressure).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSelection", into = "RawSelection")]
pub struct SelectionOperator {
    kind: SelectorKind,
    n: usize,
}

impl SelectionOperator {
    pub fn maximizer(n: usize) -> Result<Self, EngineError> {
        Self::new(SelectorKind::Maximizer, n)
    }

    pub fn quantilizer(n: usize, q: f64) -> Result<Self, EngineError> {
        Self::new(SelectorKind::Quantilizer { q }, n)
    }

    pub fn random(n: usize) -> Result<Self, EngineError> {
        Self::new(SelectorKind::Random, n)
    }

    pub fn new(kind: SelectorKind, n: usize) -> Result<Self, EngineError> {
        if n == 0 {
            return Err(EngineError::InvalidOperator(
                "candidate count n must be at least 1".into(),
            ));
        }
        if let SelectorKind::Quantilizer { q } = kind {
            if !(q > 0.0 && q <= 1.0) {
                return Err(EngineError::InvalidOperator(format!(
                    "quantile fraction q must lie in (0, 1], got {q}"
                )));
            }
        }
        Ok(Self { kind, n })
    }

    pub fn kind(&self) -> SelectorKind {
        self.kind
    }

    /// Number of candidates the agent evaluates per decision.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Index of the chosen entry in `scores`.
    ///
    /// Only metric scores are visible here; the hidden goal of a candidate
    /// can never influence the choice.
    pub fn choose(&self, scores: &[f64], rng: &mut RngStream) -> Result<usize, EngineError> {
        if scores.is_empty() {
            return Err(EngineError::EmptyCandidates);
        }
        match self.kind {
            SelectorKind::Maximizer => Ok(argmax(scores)),
            SelectorKind::Random => Ok(rng.random_range(0..scores.len())),
            SelectorKind::Quantilizer { q } => {
                let keep = retained_count(q, scores.len());
                if keep == 1 {
                    return Ok(argmax(scores));
                }
                let ranked = rank_descending(scores);
                Ok(ranked[rng.random_range(0..keep)])
            }
        }
    }
}

impl fmt::Display for SelectionOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SelectorKind::Maximizer => write!(f, "maximizer(n={})", self.n),
            SelectorKind::Quantilizer { q } => write!(f, "quantilizer(n={}, q={q})", self.n),
            SelectorKind::Random => write!(f, "random(n={})", self.n),
        }
    }
}

/// `ceil(q * len)` clamped to `[1, len]`.
///
/// Products that land within rounding error of an integer are snapped to it,
/// so `q = 0.1, len = 30` keeps 3 candidates rather than 4.
pub fn retained_count(q: f64, len: usize) -> usize {
    let exact = q * len as f64;
    let nearest = exact.round();
    let count = if (exact - nearest).abs() <= 1e-9 * (len as f64).max(1.0) {
        nearest
    } else {
        exact.ceil()
    };
    (count as usize).clamp(1, len.max(1))
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if s.total_cmp(&scores[best]) == Ordering::Greater {
            best = i;
        }
    }
    best
}

/// Indices sorted by score descending, ties by ascending index.
fn rank_descending(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

/// Applies `op` to `candidates`, exposing only their metric scores to it.
pub fn select<'a>(
    candidates: &'a [ScoredCandidate],
    op: &SelectionOperator,
    rng: &mut RngStream,
) -> Result<&'a ScoredCandidate, EngineError> {
    let scores: Vec<f64> = candidates.iter().map(|c| c.metric_score).collect();
    let idx = op.choose(&scores, rng)?;
    Ok(&candidates[idx])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSelection {
    kind: RawKind,
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawKind {
    Maximizer,
    Quantilizer,
    Random,
}

impl TryFrom<RawSelection> for SelectionOperator {
    type Error = EngineError;

    fn try_from(raw: RawSelection) -> Result<Self, Self::Error> {
        let kind = match (raw.kind, raw.q) {
            (RawKind::Maximizer, None) => SelectorKind::Maximizer,
            (RawKind::Random, None) => SelectorKind::Random,
            (RawKind::Quantilizer, Some(q)) => SelectorKind::Quantilizer { q },
            (RawKind::Quantilizer, None) => {
                return Err(EngineError::InvalidOperator(
                    "quantilizer requires a quantile fraction q".into(),
                ))
            }
            (_, Some(_)) => {
                return Err(EngineError::InvalidOperator(
                    "q is only meaningful for the quantilizer".into(),
                ))
            }
        };
        SelectionOperator::new(kind, raw.n)
    }
}

impl From<SelectionOperator> for RawSelection {
    fn from(op: SelectionOperator) -> Self {
        let (kind, q) = match op.kind {
            SelectorKind::Maximizer => (RawKind::Maximizer, None),
            SelectorKind::Quantilizer { q } => (RawKind::Quantilizer, Some(q)),
            SelectorKind::Random => (RawKind::Random, None),
        };
        RawSelection { kind, n: op.n, q }
    }
}

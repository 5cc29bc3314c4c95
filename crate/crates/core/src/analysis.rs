//! Pressure sweeps, divergence detection, conditional correlation, welfare
//! gaps and paired mitigation comparisons.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{EngineError, Purpose, ReplicateStreams, SelectionOperator};
use crate::scenarios::{RunTrace, ScenarioDetails, ScenarioError, ScenarioId, ScenarioSpec};
use crate::stats::{bootstrap_mean_ci, mean, pearson, sample_sd, welch_z, Z_ONE_SIDED_99};

pub const MIN_REPLICATES: usize = 30;
pub const BOOTSTRAP_RESAMPLES: usize = 2000;
pub const CONFIDENCE: f64 = 0.95;

/// Stream tag for bootstrap resampling, distinct from every scenario tag.
const BOOTSTRAP_TAG: u8 = 0xB0;
/// Bootstrap salt for paired differences; sweep salts stay far below it.
const PAIRED_SALT: u64 = 1 << 47;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("at least {MIN_REPLICATES} replicates are required, got {0}")]
    TooFewReplicates(usize),
    #[error("pressure grid is empty")]
    EmptyGrid,
    #[error("pressure grid must be strictly increasing and start at 1 or more")]
    GridNotIncreasing,
    #[error("divergence detection needs at least two grid points, got {0}")]
    TooFewGridPoints(usize),
    #[error("need at least two samples overall and two selected, got {total} and {selected}")]
    TooFewSamples { total: usize, selected: usize },
    #[error("sample, metric and mask lengths differ")]
    LengthMismatch,
    #[error("{0} has zero variance on the evaluated set")]
    DegenerateVariance(&'static str),
    #[error("expected a trace from {expected}, got {got}")]
    WrongScenario { expected: ScenarioId, got: ScenarioId },
    #[error("replicate {replicate}: {source}")]
    Scenario {
        replicate: u64,
        #[source]
        source: ScenarioError,
    },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Mean, sample standard deviation and percentile-bootstrap interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub sd: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
}

impl Estimate {
    fn of(xs: &[f64], rng_salt: u64, master_seed: u64) -> Self {
        let mut rng = ReplicateStreams::new(master_seed, BOOTSTRAP_TAG, rng_salt).stream(Purpose::Bootstrap);
        let (ci_lower, ci_upper) = bootstrap_mean_ci(xs, BOOTSTRAP_RESAMPLES, CONFIDENCE, &mut rng);
        Self {
            mean: mean(xs),
            sd: sample_sd(xs),
            ci_lower,
            ci_upper,
        }
    }
}

/// Terminal values of every replicate at one pressure, aggregated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub pressure: usize,
    pub replicates: usize,
    pub metric: Estimate,
    pub goal: Estimate,
    /// `terminal_metric - terminal_goal`.
    pub gap: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub scenario: ScenarioId,
    pub master_seed: u64,
    pub grid: Vec<usize>,
    pub points: Vec<SweepPoint>,
}

/// Which aggregated quantity to test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Metric,
    Goal,
    Gap,
}

impl SweepPoint {
    pub fn estimate(&self, q: Quantity) -> &Estimate {
        match q {
            Quantity::Metric => &self.metric,
            Quantity::Goal => &self.goal,
            Quantity::Gap => &self.gap,
        }
    }
}

impl SweepResult {
    /// Welch z for the increase of `q` between each pair of adjacent grid points.
    pub fn adjacent_increase_z(&self, q: Quantity) -> Vec<f64> {
        self.points
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0].estimate(q), w[1].estimate(q));
                welch_z(a.mean, a.sd, w[0].replicates, b.mean, b.sd, w[1].replicates)
            })
            .collect()
    }
}

fn check_grid(grid: &[usize]) -> Result<(), AnalysisError> {
    if grid.is_empty() {
        return Err(AnalysisError::EmptyGrid);
    }
    if grid[0] == 0 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(AnalysisError::GridNotIncreasing);
    }
    Ok(())
}

/// Runs every `(pressure, replicate)` cell with `Maximizer(n)`. Cells run in
/// parallel on the current rayon pool; the result is in grid order, then
/// replicate order.
pub fn sweep_traces(
    spec: &ScenarioSpec,
    grid: &[usize],
    replicates: usize,
    master_seed: u64,
) -> Result<Vec<Vec<RunTrace>>, AnalysisError> {
    check_grid(grid)?;
    if replicates < MIN_REPLICATES {
        return Err(AnalysisError::TooFewReplicates(replicates));
    }
    spec.validate()
        .map_err(|source| AnalysisError::Scenario { replicate: 0, source })?;
    let ops = grid
        .iter()
        .map(|&n| SelectionOperator::maximizer(n))
        .collect::<Result<Vec<_>, _>>()?;
    let cells: Vec<(usize, u64)> = (0..grid.len())
        .flat_map(|g| (0..replicates as u64).map(move |r| (g, r)))
        .collect();
    let traces = cells
        .par_iter()
        .map(|&(g, r)| {
            spec.run(Some(&ops[g]), master_seed, r)
                .map_err(|source| AnalysisError::Scenario { replicate: r, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut out: Vec<Vec<RunTrace>> = Vec::with_capacity(grid.len());
    let mut it = traces.into_iter();
    for _ in grid {
        out.push(it.by_ref().take(replicates).collect());
    }
    Ok(out)
}

/// Aggregates per-pressure traces (as produced by [`sweep_traces`]).
pub fn aggregate_sweep(
    scenario: ScenarioId,
    grid: &[usize],
    traces: &[Vec<RunTrace>],
    master_seed: u64,
) -> SweepResult {
    let cells: Vec<Vec<(f64, f64)>> = traces
        .iter()
        .map(|cell| cell.iter().map(|t| (t.terminal_metric, t.terminal_goal)).collect())
        .collect();
    aggregate_terminal(scenario, grid, &cells, master_seed)
}

/// Aggregates `(terminal_metric, terminal_goal)` pairs per grid point.
pub fn aggregate_terminal(
    scenario: ScenarioId,
    grid: &[usize],
    cells: &[Vec<(f64, f64)>],
    master_seed: u64,
) -> SweepResult {
    let points = grid
        .iter()
        .zip(cells)
        .enumerate()
        .map(|(g, (&pressure, cell))| {
            let metric: Vec<f64> = cell.iter().map(|c| c.0).collect();
            let goal: Vec<f64> = cell.iter().map(|c| c.1).collect();
            let gap: Vec<f64> = cell.iter().map(|c| c.0 - c.1).collect();
            let salt = 3 * g as u64;
            SweepPoint {
                pressure,
                replicates: cell.len(),
                metric: Estimate::of(&metric, salt, master_seed),
                goal: Estimate::of(&goal, salt + 1, master_seed),
                gap: Estimate::of(&gap, salt + 2, master_seed),
            }
        })
        .collect();
    SweepResult {
        scenario,
        master_seed,
        grid: grid.to_vec(),
        points,
    }
}

/// Runs the scenario under `Maximizer(n)` for every `n` in `grid` and
/// aggregates terminal metric and goal over `replicates` paired replicates.
pub fn pressure_sweep(
    spec: &ScenarioSpec,
    grid: &[usize],
    replicates: usize,
    master_seed: u64,
) -> Result<SweepResult, AnalysisError> {
    let traces = sweep_traces(spec, grid, replicates, master_seed)?;
    Ok(aggregate_sweep(spec.id(), grid, &traces, master_seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub found: bool,
    /// The first grid point where the goal fell and the metric rose.
    pub pressure: Option<usize>,
    pub goal_decrease_z: Option<f64>,
    pub metric_increase_z: Option<f64>,
}

/// The first grid point whose mean goal is significantly below the previous
/// point's while its mean metric is significantly above (one-sided Welch
/// tests at the 1% level).
pub fn detect_divergence(sweep: &SweepResult) -> Result<DivergenceReport, AnalysisError> {
    if sweep.points.len() < 2 {
        return Err(AnalysisError::TooFewGridPoints(sweep.points.len()));
    }
    let metric_z = sweep.adjacent_increase_z(Quantity::Metric);
    let goal_z = sweep.adjacent_increase_z(Quantity::Goal);
    for (i, w) in sweep.points.windows(2).enumerate() {
        let goal_falls = w[1].goal.mean < w[0].goal.mean && -goal_z[i] > Z_ONE_SIDED_99;
        let metric_rises = w[1].metric.mean > w[0].metric.mean && metric_z[i] > Z_ONE_SIDED_99;
        if goal_falls && metric_rises {
            return Ok(DivergenceReport {
                found: true,
                pressure: Some(w[1].pressure),
                goal_decrease_z: Some(-goal_z[i]),
                metric_increase_z: Some(metric_z[i]),
            });
        }
    }
    Ok(DivergenceReport {
        found: false,
        pressure: None,
        goal_decrease_z: None,
        metric_increase_z: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub r_full: f64,
    pub r_selected: f64,
    pub n_full: usize,
    pub n_selected: usize,
}

/// Pearson correlation of goal and metric over all samples and over the
/// masked subset.
pub fn conditional_correlation(
    goal: &[f64],
    metric: &[f64],
    mask: &[bool],
) -> Result<CorrelationReport, AnalysisError> {
    if goal.len() != metric.len() || goal.len() != mask.len() {
        return Err(AnalysisError::LengthMismatch);
    }
    let (sel_g, sel_m): (Vec<f64>, Vec<f64>) = goal
        .iter()
        .zip(metric)
        .zip(mask)
        .filter(|(_, keep)| **keep)
        .map(|((g, m), _)| (*g, *m))
        .unzip();
    if goal.len() < 2 || sel_g.len() < 2 {
        return Err(AnalysisError::TooFewSamples {
            total: goal.len(),
            selected: sel_g.len(),
        });
    }
    let r_full = pearson(goal, metric).ok_or(AnalysisError::DegenerateVariance("full population"))?;
    let r_selected = pearson(&sel_g, &sel_m).ok_or(AnalysisError::DegenerateVariance("selected subset"))?;
    Ok(CorrelationReport {
        r_full,
        r_selected,
        n_full: goal.len(),
        n_selected: sel_g.len(),
    })
}

/// Coordinated minus equilibrium total welfare of a contention trace.
pub fn welfare_gap(trace: &RunTrace) -> Result<f64, AnalysisError> {
    match &trace.details {
        ScenarioDetails::Contention(r) => Ok(r.welfare_gap()),
        _ => Err(AnalysisError::WrongScenario {
            expected: ScenarioId::S2,
            got: trace.scenario,
        }),
    }
}

/// Terminal goals of the same replicates under two operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    pub op_a: SelectionOperator,
    pub op_b: SelectionOperator,
    pub replicates: usize,
    pub mean_goal_a: f64,
    pub mean_goal_b: f64,
    /// Mean of `goal_b - goal_a` over replicates.
    pub mean_difference: f64,
    pub sd_difference: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    /// Paired z statistic of the mean difference.
    pub z: f64,
}

impl PairedComparison {
    /// Whether `op_b` gives a higher mean goal at one-sided level 1%.
    pub fn b_better_at_99(&self) -> bool {
        self.z > Z_ONE_SIDED_99
    }
}

/// Runs both operators on the same replicate streams and compares terminal goals.
pub fn mitigation_compare(
    spec: &ScenarioSpec,
    op_a: &SelectionOperator,
    op_b: &SelectionOperator,
    replicates: usize,
    master_seed: u64,
) -> Result<PairedComparison, AnalysisError> {
    let pairs = paired_traces(spec, op_a, op_b, replicates, master_seed)?;
    let a: Vec<f64> = pairs.iter().map(|(x, _)| x.terminal_goal).collect();
    let b: Vec<f64> = pairs.iter().map(|(_, y)| y.terminal_goal).collect();
    let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| y - x).collect();
    let diff = Estimate::of(&d, PAIRED_SALT, master_seed);
    let z = welch_z(0.0, 0.0, 1, diff.mean, diff.sd, d.len());
    Ok(PairedComparison {
        op_a: *op_a,
        op_b: *op_b,
        replicates,
        mean_goal_a: mean(&a),
        mean_goal_b: mean(&b),
        mean_difference: diff.mean,
        sd_difference: diff.sd,
        ci_lower: diff.ci_lower,
        ci_upper: diff.ci_upper,
        z,
    })
}

/// Replicate-aligned traces under two operators.
pub fn paired_traces(
    spec: &ScenarioSpec,
    op_a: &SelectionOperator,
    op_b: &SelectionOperator,
    replicates: usize,
    master_seed: u64,
) -> Result<Vec<(RunTrace, RunTrace)>, AnalysisError> {
    if replicates < MIN_REPLICATES {
        return Err(AnalysisError::TooFewReplicates(replicates));
    }
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let wrap = |source| AnalysisError::Scenario { replicate: r, source };
            Ok((
                spec.run(Some(op_a), master_seed, r).map_err(wrap)?,
                spec.run(Some(op_b), master_seed, r).map_err(wrap)?,
            ))
        })
        .collect()
}

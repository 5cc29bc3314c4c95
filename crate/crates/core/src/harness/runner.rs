use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{aggregate_terminal, detect_divergence, DivergenceReport, SweepResult};
use crate::engine::SelectionOperator;
use crate::scenarios::{RunTrace, ScenarioId};

use super::output::{
    file_sha256, write_event_rows, write_summary_row, write_trace_rows, OutputFile, EVENTS_FILE, EVENTS_HEADER,
    MANIFEST_FILE, SUMMARY_FILE, SWEEP_FILE, TRACE_FILE, TRACE_HEADER,
};
use super::{ExperimentConfig, HarnessError};

pub const CONFIG_FILE: &str = "config.json";

/// Replicates computed in parallel before their rows are written in order.
const CHUNK: u64 = 512;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the config's `output_dir`.
    pub output_dir: Option<PathBuf>,
    /// Worker threads; `None` uses every core.
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub scenario: ScenarioId,
    pub config_digest: String,
    pub master_seed: u64,
    pub replicates: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<usize>>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    /// File name to hex SHA-256 of its bytes.
    pub files: BTreeMap<String, String>,
    #[serde(skip)]
    pub output_dir: PathBuf,
}

/// Contents of `sweep.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFile {
    pub sweep: SweepResult,
    /// Absent for a single-point grid.
    pub divergence: Option<DivergenceReport>,
}

/// `runs/<scenario>-<first 8 hex digits of the config digest>`.
pub fn default_output_dir(cfg: &ExperimentConfig) -> PathBuf {
    Path::new("runs").join(format!("{}-{}", cfg.scenario(), &cfg.digest()[..8]))
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

struct Writers {
    dir: PathBuf,
    trace: OutputFile,
    summary: OutputFile,
    events: Option<OutputFile>,
}

impl Writers {
    fn create(dir: &Path) -> Result<Self, HarnessError> {
        let mut trace = OutputFile::create(dir, TRACE_FILE).map_err(HarnessError::io(dir.join(TRACE_FILE)))?;
        trace
            .line(TRACE_HEADER)
            .map_err(HarnessError::io(dir.join(TRACE_FILE)))?;
        let summary = OutputFile::create(dir, SUMMARY_FILE).map_err(HarnessError::io(dir.join(SUMMARY_FILE)))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            trace,
            summary,
            events: None,
        })
    }

    fn write(&mut self, t: &RunTrace) -> Result<(), HarnessError> {
        write_trace_rows(&mut self.trace, t).map_err(HarnessError::io(self.dir.join(TRACE_FILE)))?;
        write_summary_row(&mut self.summary, t).map_err(HarnessError::io(self.dir.join(SUMMARY_FILE)))?;
        if !t.events.is_empty() {
            let path = self.dir.join(EVENTS_FILE);
            if self.events.is_none() {
                let mut f = OutputFile::create(&self.dir, EVENTS_FILE).map_err(HarnessError::io(&path))?;
                f.line(EVENTS_HEADER).map_err(HarnessError::io(&path))?;
                self.events = Some(f);
            }
            let f = self.events.as_mut().expect("created above");
            write_event_rows(f, t).map_err(HarnessError::io(&path))?;
        }
        Ok(())
    }

    fn finish(self) -> Result<Vec<PathBuf>, HarnessError> {
        let mut out = Vec::new();
        for f in [Some(self.trace), Some(self.summary), self.events]
            .into_iter()
            .flatten()
        {
            out.push(f.finish().map_err(HarnessError::io(&self.dir))?);
        }
        Ok(out)
    }
}

/// Runs replicates `0..replicates` under `op`, handing each trace to `sink`
/// in replicate order.
fn run_replicates(
    cfg: &ExperimentConfig,
    op: Option<&SelectionOperator>,
    mut sink: impl FnMut(RunTrace) -> Result<(), HarnessError>,
) -> Result<(), HarnessError> {
    let total = cfg.replicates as u64;
    let mut start = 0;
    while start < total {
        let end = (start + CHUNK).min(total);
        let traces = (start..end)
            .into_par_iter()
            .map(|r| {
                cfg.spec
                    .run(op, cfg.master_seed, r)
                    .map_err(|source| HarnessError::Scenario { replicate: r, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        for t in traces {
            sink(t)?;
        }
        start = end;
    }
    Ok(())
}

fn execute(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut writers = Writers::create(dir)?;
    let mut written = Vec::new();
    match &cfg.sweep {
        None => run_replicates(cfg, cfg.selection.as_ref(), |t| writers.write(&t))?,
        Some(sweep) => {
            let mut cells = Vec::with_capacity(sweep.grid.len());
            for &n in &sweep.grid {
                let op = SelectionOperator::maximizer(n).map_err(crate::analysis::AnalysisError::from)?;
                let mut cell = Vec::with_capacity(cfg.replicates);
                run_replicates(cfg, Some(&op), |t| {
                    cell.push((t.terminal_metric, t.terminal_goal));
                    writers.write(&t)
                })?;
                cells.push(cell);
            }
            let result = aggregate_terminal(cfg.scenario(), &sweep.grid, &cells, cfg.master_seed);
            let divergence = if result.points.len() >= 2 {
                Some(detect_divergence(&result)?)
            } else {
                None
            };
            let path = dir.join(SWEEP_FILE);
            let json = serde_json::to_string_pretty(&SweepFile {
                sweep: result,
                divergence,
            })
            .expect("sweep results serialize");
            fs::write(&path, json + "\n").map_err(HarnessError::io(&path))?;
            written.push(path);
        }
    }
    written.extend(writers.finish()?);
    Ok(written)
}

/// Runs an experiment and writes its output files and manifest. Output is
/// byte-identical for any `jobs` value.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunManifest, HarnessError> {
    cfg.validate()?;
    let dir = opts
        .output_dir
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| default_output_dir(cfg));
    fs::create_dir_all(&dir).map_err(HarnessError::io(&dir))?;
    let started = now_ms();

    let config_path = dir.join(CONFIG_FILE);
    let mut canonical = cfg.clone();
    canonical.output_dir = None;
    fs::write(&config_path, canonical.to_json() + "\n").map_err(HarnessError::io(&config_path))?;

    let mut written = match opts.jobs {
        None => execute(cfg, &dir)?,
        Some(jobs) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.max(1))
                .build()
                .map_err(|e| HarnessError::Pool(e.to_string()))?;
            pool.install(|| execute(cfg, &dir))?
        }
    };
    written.push(config_path);

    let mut files = BTreeMap::new();
    for path in &written {
        let name = path
            .file_name()
            .expect("output files have names")
            .to_string_lossy()
            .into_owned();
        files.insert(name, file_sha256(path).map_err(HarnessError::io(path))?);
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: cfg.scenario(),
        config_digest: cfg.digest(),
        master_seed: cfg.master_seed,
        replicates: cfg.replicates,
        grid: cfg.sweep.as_ref().map(|s| s.grid.clone()),
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
        files,
        output_dir: dir.clone(),
    };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifests serialize");
    fs::write(&path, json + "\n").map_err(HarnessError::io(&path))?;
    Ok(manifest)
}

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde_json::Value;

use super::output::{file_sha256, MANIFEST_FILE, SUMMARY_FILE};
use super::{HarnessError, RunManifest};

/// Terminal values of the replicates run at one pressure.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureSummary {
    pub pressure: Option<usize>,
    pub replicates: usize,
    pub mean_metric: f64,
    pub mean_goal: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub manifest: RunManifest,
    pub groups: Vec<PressureSummary>,
}

fn corrupt(path: &Path, message: impl Into<String>) -> HarnessError {
    HarnessError::Corrupt {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Reads a run directory, checks every file against the manifest checksums
/// and summarizes `summary.jsonl` per pressure.
pub fn read_report(dir: &Path) -> Result<RunReport, HarnessError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).map_err(HarnessError::io(&manifest_path))?;
    let mut manifest: RunManifest = serde_json::from_str(&text).map_err(|e| corrupt(&manifest_path, e.to_string()))?;
    manifest.output_dir = dir.to_path_buf();
    for (name, expected) in &manifest.files {
        let path = dir.join(name);
        let actual = file_sha256(&path).map_err(HarnessError::io(&path))?;
        if &actual != expected {
            return Err(HarnessError::Checksum {
                file: name.clone(),
                expected: expected.clone(),
                actual,
            });
        }
    }

    let summary_path = dir.join(SUMMARY_FILE);
    let text = fs::read_to_string(&summary_path).map_err(HarnessError::io(&summary_path))?;
    let mut acc: BTreeMap<Option<usize>, (usize, f64, f64)> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let v: Value =
            serde_json::from_str(line).map_err(|e| corrupt(&summary_path, format!("line {}: {e}", i + 1)))?;
        let num = |k: &str| {
            v.get(k)
                .and_then(Value::as_f64)
                .ok_or_else(|| corrupt(&summary_path, format!("line {}: missing {k}", i + 1)))
        };
        let (m, g) = (num("terminal_metric")?, num("terminal_goal")?);
        let pressure = v.get("pressure").and_then(Value::as_u64).map(|p| p as usize);
        let e = acc.entry(pressure).or_insert((0, 0.0, 0.0));
        e.0 += 1;
        e.1 += m;
        e.2 += g;
    }
    let groups = acc
        .into_iter()
        .map(|(pressure, (n, m, g))| PressureSummary {
            pressure,
            replicates: n,
            mean_metric: m / n as f64,
            mean_goal: g / n as f64,
        })
        .collect();
    Ok(RunReport { manifest, groups })
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.manifest;
        writeln!(f, "scenario      {}", m.scenario)?;
        writeln!(f, "config digest {}", m.config_digest)?;
        writeln!(f, "master seed   {}", m.master_seed)?;
        writeln!(f, "tool          {} {}", m.tool, m.tool_version)?;
        writeln!(f, "checksums     ok ({} files)", m.files.len())?;
        writeln!(
            f,
            "{:>10} {:>10} {:>16} {:>16} {:>16}",
            "pressure", "replicates", "mean_metric", "mean_goal", "gap"
        )?;
        for g in &self.groups {
            let p = g.pressure.map(|p| p.to_string()).unwrap_or_else(|| "-".into());
            writeln!(
                f,
                "{:>10} {:>10} {:>16.6} {:>16.6} {:>16.6}",
                p,
                g.replicates,
                g.mean_metric,
                g.mean_goal,
                g.mean_metric - g.mean_goal
            )?;
        }
        Ok(())
    }
}

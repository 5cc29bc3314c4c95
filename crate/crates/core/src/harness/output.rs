use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::learners::Provenance;
use crate::scenarios::RunTrace;

pub const TRACE_FILE: &str = "trace.csv";
pub const SUMMARY_FILE: &str = "summary.jsonl";
pub const EVENTS_FILE: &str = "events.csv";
pub const SWEEP_FILE: &str = "sweep.json";
pub const MANIFEST_FILE: &str = "manifest.json";

pub const TRACE_HEADER: &str = "scenario,replicate,pressure,step,agent_id,metric_value,goal_value";
pub const EVENTS_HEADER: &str = "scenario,replicate,pressure,time,provenance,label,payload";

fn pressure_field(p: Option<usize>) -> String {
    p.map(|n| n.to_string()).unwrap_or_default()
}

/// Buffered writer for one output file.
pub struct OutputFile {
    path: PathBuf,
    out: BufWriter<File>,
}

impl OutputFile {
    pub fn create(dir: &Path, name: &str) -> io::Result<Self> {
        let path = dir.join(name);
        Ok(Self {
            out: BufWriter::new(File::create(&path)?),
            path,
        })
    }

    pub fn line(&mut self, s: &str) -> io::Result<()> {
        self.out.write_all(s.as_bytes())?;
        self.out.write_all(b"\n")
    }

    pub fn finish(mut self) -> io::Result<PathBuf> {
        self.out.flush()?;
        Ok(self.path)
    }
}

/// Trace CSV rows of one replicate. Floats use the shortest decimal that
/// parses back to the same value.
pub fn write_trace_rows(out: &mut OutputFile, t: &RunTrace) -> io::Result<()> {
    let pressure = pressure_field(t.pressure);
    for s in &t.steps {
        out.line(&format!(
            "{},{},{},{},{},{},{}",
            t.scenario, t.replicate, pressure, s.step, s.agent_id, s.metric, s.goal
        ))?;
    }
    Ok(())
}

/// Event log rows of one replicate; payload components are `;`-separated.
pub fn write_event_rows(out: &mut OutputFile, t: &RunTrace) -> io::Result<()> {
    let pressure = pressure_field(t.pressure);
    for e in &t.events {
        let provenance = match e.provenance {
            Provenance::Honest => "honest",
            Provenance::Injected => "injected",
            Provenance::Hidden => "hidden",
        };
        let label = match e.label {
            Some(true) => "1",
            Some(false) => "0",
            None => "",
        };
        let payload: Vec<String> = e.payload.iter().map(|v| v.to_string()).collect();
        out.line(&format!(
            "{},{},{},{},{},{},{}",
            t.scenario,
            t.replicate,
            pressure,
            e.time,
            provenance,
            label,
            payload.join(";")
        ))?;
    }
    Ok(())
}

/// The summary JSONL object of one replicate.
pub fn summary_record(t: &RunTrace) -> Value {
    let mut m = Map::new();
    m.insert("scenario".into(), t.scenario.as_str().into());
    m.insert("replicate".into(), t.replicate.into());
    m.insert("pressure".into(), t.pressure.into());
    m.insert("terminal_metric".into(), t.terminal_metric.into());
    m.insert("terminal_goal".into(), t.terminal_goal.into());
    for (k, v) in t.extras() {
        m.insert(k, v);
    }
    Value::Object(m)
}

pub fn write_summary_row(out: &mut OutputFile, t: &RunTrace) -> io::Result<()> {
    out.line(&serde_json::to_string(&summary_record(t)).map_err(io::Error::other)?)
}

/// Hex SHA-256 of a file's bytes.
pub fn file_sha256(path: &Path) -> io::Result<String> {
    Ok(hex::encode(Sha256::digest(std::fs::read(path)?)))
}

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::analysis::MIN_REPLICATES;
use crate::engine::SelectionOperator;
use crate::scenarios::{ScenarioError, ScenarioId, ScenarioSpec};

use super::ConfigError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub grid: Vec<usize>,
}

/// The on-disk layout of an experiment file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: String,
    #[serde(default = "empty_object")]
    params: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    selection: Option<SelectionOperator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sweep: Option<SweepSpec>,
    #[serde(default = "one")]
    replicates: usize,
    #[serde(default)]
    master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output_dir: Option<PathBuf>,
}

fn empty_object() -> Value {
    Value::Object(Map::new())
}

fn one() -> usize {
    1
}

/// A fully validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub spec: ScenarioSpec,
    /// Operator for every agent; only scenarios with selecting agents take one.
    pub selection: Option<SelectionOperator>,
    pub sweep: Option<SweepSpec>,
    pub replicates: usize,
    pub master_seed: u64,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(spec: ScenarioSpec) -> Self {
        Self {
            spec,
            selection: None,
            sweep: None,
            replicates: 1,
            master_seed: 0,
            output_dir: None,
        }
    }

    pub fn scenario(&self) -> ScenarioId {
        self.spec.id()
    }

    /// Checks every cross-field rule; scenario parameters are checked by the
    /// scenario's own validator.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.spec.validate().map_err(|e| scenario_error("params", e))?;
        let id = self.scenario();
        if self.replicates == 0 {
            return Err(ConfigError::invariant("replicates", "must be at least 1"));
        }
        if self.selection.is_some() && !id.accepts_pressure() {
            return Err(ConfigError::invariant(
                "selection",
                format!("scenario {id} has no selecting agents"),
            ));
        }
        if let Some(sweep) = &self.sweep {
            if !id.accepts_pressure() {
                return Err(ConfigError::invariant(
                    "sweep",
                    format!("scenario {id} has no selecting agents to put under pressure"),
                ));
            }
            if self.selection.is_some() {
                return Err(ConfigError::invariant(
                    "selection",
                    "a sweep sets the operator itself (Maximizer(n) per grid point)",
                ));
            }
            if sweep.grid.is_empty() {
                return Err(ConfigError::invariant("sweep.grid", "must not be empty"));
            }
            if sweep.grid[0] == 0 || sweep.grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(ConfigError::invariant(
                    "sweep.grid",
                    "must be strictly increasing and start at 1 or more",
                ));
            }
            if self.replicates < MIN_REPLICATES {
                return Err(ConfigError::invariant(
                    "replicates",
                    format!("a sweep needs at least {MIN_REPLICATES} replicates"),
                ));
            }
        }
        Ok(())
    }

    fn raw(&self, with_output: bool) -> RawConfig {
        RawConfig {
            scenario: self.scenario().to_string(),
            params: self.spec.params(),
            selection: self.selection,
            sweep: self.sweep.clone(),
            replicates: self.replicates,
            master_seed: self.master_seed,
            output_dir: if with_output { self.output_dir.clone() } else { None },
        }
    }

    /// The config as a JSON value with every default filled in.
    pub fn to_value(&self) -> Value {
        serde_json::to_value(self.raw(true)).expect("configs serialize to JSON")
    }

    /// Pretty JSON in the documented file layout.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("configs serialize to JSON")
    }

    /// Compact JSON with sorted keys and all defaults applied, excluding the
    /// output directory. Two files describing the same experiment give the
    /// same canonical form regardless of key order or omitted defaults.
    pub fn canonical_json(&self) -> String {
        let v = serde_json::to_value(self.raw(false)).expect("configs serialize to JSON");
        serde_json::to_string(&v).expect("values serialize")
    }

    /// SHA-256 of [`Self::canonical_json`], hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

fn scenario_error(prefix: &str, e: ScenarioError) -> ConfigError {
    match e {
        ScenarioError::Invariant { field, message } => ConfigError::Invariant {
            path: format!("{prefix}.{field}"),
            message,
        },
        other => ConfigError::Invariant {
            path: prefix.to_string(),
            message: other.to_string(),
        },
    }
}

fn typed<T: DeserializeOwned>(params: Value) -> Result<T, ConfigError> {
    serde_path_to_error::deserialize(params).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner == "." {
            "params".to_string()
        } else {
            format!("params.{inner}")
        };
        ConfigError::Schema {
            path,
            message: e.into_inner().to_string(),
        }
    })
}

fn spec_from(id: ScenarioId, params: Value) -> Result<ScenarioSpec, ConfigError> {
    if !params.is_object() {
        return Err(ConfigError::Schema {
            path: "params".into(),
            message: "expected an object".into(),
        });
    }
    Ok(match id {
        ScenarioId::S0 => ScenarioSpec::S0(typed(params)?),
        ScenarioId::S1a => ScenarioSpec::S1a(typed(params)?),
        ScenarioId::S1b => ScenarioSpec::S1b(typed(params)?),
        ScenarioId::S2 => ScenarioSpec::S2(typed(params)?),
        ScenarioId::S3a => ScenarioSpec::S3a(typed(params)?),
        ScenarioId::S3b => ScenarioSpec::S3b(typed(params)?),
        ScenarioId::S4a => ScenarioSpec::S4a(typed(params)?),
        ScenarioId::S4b => ScenarioSpec::S4b(typed(params)?),
        ScenarioId::S4c => ScenarioSpec::S4c(typed(params)?),
        ScenarioId::S5 => ScenarioSpec::S5(typed(params)?),
    })
}

/// Parses and validates experiment JSON text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let raw: RawConfig = serde_path_to_error::deserialize(value).map_err(|e| ConfigError::Schema {
        path: e.path().to_string(),
        message: e.into_inner().to_string(),
    })?;
    let id: ScenarioId = raw.scenario.parse().map_err(|_| ConfigError::Schema {
        path: "scenario".into(),
        message: format!(
            "unknown scenario `{}`; known ids: {}",
            raw.scenario,
            ScenarioId::ALL.map(|i| i.as_str()).join(", ")
        ),
    })?;
    let cfg = ExperimentConfig {
        spec: spec_from(id, raw.params)?,
        selection: raw.selection,
        sweep: raw.sweep,
        replicates: raw.replicates,
        master_seed: raw.master_seed,
        output_dir: raw.output_dir,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Reads, parses and validates an experiment file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

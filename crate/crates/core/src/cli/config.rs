//! JSON run configuration with defaults, overrides and field-level diagnostics.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::evolve::{InitialState, IntegratorConfig};
use crate::lindblad::DissipatorMode;
use crate::model::ModelParams;
use crate::observables::BatteryHamiltonianMode;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config error at `{path}` (line {line}, column {column}): {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// File stem for single runs.
    pub prefix: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            prefix: "run".into(),
        }
    }
}

/// Scanned `ModelParams` field and its values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub params: ModelParams,
    pub integrator: IntegratorConfig,
    pub t_end: f64,
    pub initial_state: InitialState,
    pub dissipator: DissipatorMode,
    pub battery_hamiltonian: BatteryHamiltonianMode,
    pub output: OutputConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepAxis>,
    /// Seeds randomized checks; the simulation itself is deterministic.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            params: ModelParams::default(),
            integrator: IntegratorConfig::default(),
            t_end: 500.0,
            initial_state: InitialState::default(),
            dissipator: DissipatorMode::Standard,
            battery_hamiltonian: BatteryHamiltonianMode::LocalPlusExchange,
            output: OutputConfig::default(),
            sweep: None,
            seed: 0,
        }
    }
}

fn parse_error(path: String, e: &serde_json::Error) -> ConfigError {
    ConfigError::Parse {
        path,
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            parse_error(path, e.inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Invalid(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.params
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("params: {e}")))?;
        self.integrator
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("integrator: {e}")))?;
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(ConfigError::Invalid(format!("t_end {} must be positive", self.t_end)));
        }
        if let Some(axis) = &self.sweep {
            self.sweep_points(axis)?;
        }
        Ok(())
    }

    /// Applies `key=value`. Dotted keys address nested fields; bare keys name a
    /// top-level field or else a model parameter.
    pub fn apply_override(&mut self, spec: &str) -> Result<(), ConfigError> {
        let (key, raw) = spec
            .split_once('=')
            .ok_or_else(|| ConfigError::Invalid(format!("override `{spec}` is not key=value")))?;
        let key = key.trim();
        let value: Value = serde_json::from_str(raw.trim())
            .unwrap_or_else(|_| Value::String(raw.trim().to_string()));
        let mut doc = serde_json::to_value(&*self).expect("config serializes");
        let path: Vec<&str> = if key.contains('.') || doc.get(key).is_some() {
            key.split('.').collect()
        } else {
            vec!["params", key]
        };
        let mut slot = &mut doc;
        for part in &path {
            slot = slot
                .as_object_mut()
                .and_then(|o| o.get_mut(*part))
                .ok_or_else(|| ConfigError::Invalid(format!("unknown override key `{key}`")))?;
        }
        *slot = value;
        let text = doc.to_string();
        let cfg = Self::from_json(&text)
            .map_err(|e| ConfigError::Invalid(format!("override `{spec}`: {e}")))?;
        *self = cfg;
        Ok(())
    }

    /// Parameter sets of a sweep, one per value.
    pub fn sweep_points(&self, axis: &SweepAxis) -> Result<Vec<ModelParams>, ConfigError> {
        if axis.values.is_empty() {
            return Err(ConfigError::Invalid("sweep.values is empty".into()));
        }
        axis.values
            .iter()
            .map(|&v| with_param(&self.params, &axis.parameter, v))
            .collect()
    }

    /// Everything that determines the physics, echoed into output headers.
    pub fn provenance(&self) -> String {
        let mut doc = serde_json::to_value(self).expect("config serializes");
        if let Some(o) = doc.as_object_mut() {
            o.remove("output");
        }
        doc.to_string()
    }
}

/// Copy of `p` with the numeric field `name` set to `value`.
pub fn with_param(p: &ModelParams, name: &str, value: f64) -> Result<ModelParams, ConfigError> {
    let mut doc = serde_json::to_value(p).expect("params serialize");
    let slot = doc
        .as_object_mut()
        .and_then(|o| o.get_mut(name))
        .ok_or_else(|| ConfigError::Invalid(format!("`{name}` is not a model parameter")))?;
    *slot = match slot {
        Value::Number(n) if n.is_u64() => {
            if value.fract() != 0.0 || value < 0.0 {
                return Err(ConfigError::Invalid(format!(
                    "`{name}` takes nonnegative integers, got {value}"
                )));
            }
            Value::from(value as u64)
        }
        Value::Number(_) => serde_json::Number::from_f64(value)
            .map(Value::Number)
            .ok_or_else(|| ConfigError::Invalid(format!("`{name}` = {value} is not finite")))?,
        _ => {
            return Err(ConfigError::Invalid(format!(
                "`{name}` is not a scalar parameter"
            )))
        }
    };
    let out: ModelParams = serde_json::from_value(doc)
        .map_err(|e| ConfigError::Invalid(format!("`{name}` = {value}: {e}")))?;
    out.validate()
        .map_err(|e| ConfigError::Invalid(format!("`{name}` = {value}: {e}")))?;
    Ok(out)
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    CmaybeScan,
    CmaybeConsensus,
    HolevoTilt,
    SpinEvolve,
    Pip,
    Redundancy,
    Theorem1,
    Lemma1,
    Theorem2Stress,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        ExperimentKind::CmaybeScan,
        ExperimentKind::CmaybeConsensus,
        ExperimentKind::HolevoTilt,
        ExperimentKind::SpinEvolve,
        ExperimentKind::Pip,
        ExperimentKind::Redundancy,
        ExperimentKind::Theorem1,
        ExperimentKind::Lemma1,
        ExperimentKind::Theorem2Stress,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::CmaybeScan => "cmaybe-scan",
            ExperimentKind::CmaybeConsensus => "cmaybe-consensus",
            ExperimentKind::HolevoTilt => "holevo-tilt",
            ExperimentKind::SpinEvolve => "spin-evolve",
            ExperimentKind::Pip => "pip",
            ExperimentKind::Redundancy => "redundancy",
            ExperimentKind::Theorem1 => "theorem1",
            ExperimentKind::Lemma1 => "lemma1",
            ExperimentKind::Theorem2Stress => "theorem2-stress",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = RunError;

    fn from_str(s: &str) -> Result<Self, RunError> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| RunError::Config(format!("unknown experiment kind '{s}'")))
    }
}

/// Overrides applied to the pass/fail columns of the check kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub identity: f64,
    pub bound: f64,
    pub nonnegativity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { identity: 1e-9, bound: 1e-9, nonnegativity: 1e-9 }
    }
}

/// A parsed experiment file. Model parameters stay as JSON until the kind's
/// own schema reads them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "empty_object")]
    pub params: Value,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    /// Write `<output>.json` with the full config next to the table.
    #[serde(default)]
    pub sidecar: bool,
}

fn empty_object() -> Value {
    Value::Object(Map::new())
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            seed: 0,
            params: empty_object(),
            tolerances: Tolerances::default(),
            output: None,
            sidecar: false,
        }
    }

    pub fn from_value(v: Value) -> Result<Self, RunError> {
        serde_json::from_value(v).map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn from_json_str(text: &str) -> Result<Self, RunError> {
        let v: Value = serde_json::from_str(text).map_err(|e| RunError::Config(format!("invalid JSON: {e}")))?;
        Self::from_value(v)
    }

    /// Parses `text` after applying `key=value` overrides to the raw JSON.
    pub fn from_json_with_overrides(text: &str, overrides: &[String]) -> Result<Self, RunError> {
        let mut v: Value = serde_json::from_str(text).map_err(|e| RunError::Config(format!("invalid JSON: {e}")))?;
        for o in overrides {
            apply_override(&mut v, o)?;
        }
        Self::from_value(v)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// Reads the kind-specific parameter block.
    pub fn params<T: for<'de> Deserialize<'de>>(&self) -> Result<T, RunError> {
        serde_json::from_value(self.params.clone())
            .map_err(|e| RunError::Config(format!("{} params: {e}", self.kind)))
    }
}

/// Sets a dotted key, e.g. `params.n=12` or `seed=3`. The value is parsed as
/// JSON when possible and kept as a string otherwise.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), RunError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| RunError::Config(format!("override '{assignment}' is not key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(RunError::Config(format!("override '{assignment}' has an empty key")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| RunError::Config(format!("override '{key}': '{part}' is inside a non-object")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj.entry(part.to_string()).or_insert_with(empty_object);
    }
    unreachable!("split always yields at least one part")
}

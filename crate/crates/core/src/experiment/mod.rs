//! Experiment runner: JSON configs in, CSV tables out.

mod config;
mod kinds;
mod table;

use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

pub use config::{apply_override, ExperimentConfig, ExperimentKind, Tolerances};
pub use kinds::{
    CmaybeConsensusParams, CmaybeScanParams, EnsembleParams, HolevoTiltParams, PipParams, RedundancyParams,
    Theorem2Params, TheoremParams, TimeGrid,
};
pub use table::{data_lines, parse_csv, Cell, Column, Metadata, ResultTable, CODE_VERSION};

use crate::error::QdcError;
use crate::par::ExecMode;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("compute error: {0}")]
    Compute(#[from] QdcError),
    #[error("io error: {0}")]
    Io(String),
}

impl RunError {
    pub fn code(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config_error",
            RunError::Compute(_) => "compute_error",
            RunError::Io(_) => "io_error",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Compute(_) => 3,
            RunError::Io(_) => 4,
        }
    }

    /// Machine-readable error record.
    pub fn to_json(&self) -> serde_json::Value {
        let detail = match self {
            RunError::Config(m) | RunError::Io(m) => m.clone(),
            RunError::Compute(e) => e.to_string(),
        };
        serde_json::json!({ "error": self.code(), "message": detail, "exit_code": self.exit_code() })
    }
}

/// Runs one experiment. Output depends only on the config, never on `mode`
/// or the thread count.
pub fn run(config: &ExperimentConfig, mode: ExecMode) -> Result<ResultTable, RunError> {
    let start = Instant::now();
    let mut table = kinds::dispatch(config, mode)?;
    table.metadata.kind = config.kind.name().into();
    table.metadata.seed = config.seed;
    table.metadata.config = config.to_value();
    table.metadata.wall_time_s = start.elapsed().as_secs_f64();
    Ok(table)
}

/// Writes the table to `path` and, when asked, the JSON sidecar to
/// `path.json`. Returns the files written.
pub fn emit(table: &ResultTable, path: &Path, sidecar: bool) -> Result<Vec<PathBuf>, RunError> {
    let io = |e: std::io::Error| RunError::Io(format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, table.to_csv()?).map_err(io)?;
    let mut written = vec![path.to_path_buf()];
    if sidecar {
        let mut side = path.as_os_str().to_owned();
        side.push(".json");
        let side = PathBuf::from(side);
        let text = serde_json::to_string_pretty(&table.sidecar()).expect("sidecar serializes");
        std::fs::write(&side, text).map_err(io)?;
        written.push(side);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_records() {
        let e = RunError::from(QdcError::DomainError("x".into()));
        assert_eq!(e.exit_code(), 3);
        assert_eq!(e.to_json()["error"], "compute_error");
        assert_eq!(RunError::Config("y".into()).exit_code(), 2);
        assert_eq!(RunError::Io("z".into()).code(), "io_error");
    }

    #[test]
    fn emit_writes_table_and_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::new(ExperimentKind::Theorem1);
        cfg.params = serde_json::json!({"instances": 3});
        let table = run(&cfg, ExecMode::Sequential).unwrap();
        let files = emit(&table, &dir.path().join("sub/out.csv"), true).unwrap();
        assert_eq!(files.len(), 2);
        let text = std::fs::read_to_string(&files[0]).unwrap();
        assert_eq!(data_lines(&text).len(), 4);
        let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&files[1]).unwrap()).unwrap();
        assert_eq!(side["config"]["params"]["instances"], 3);
    }
}

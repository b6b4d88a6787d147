use std::fmt;
use std::io::Write;

use serde_json::Value;

use super::RunError;
use crate::infotheory::snap_zero;

/// Crate version written into every table header.
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    UInt(u64),
    Float(f64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    /// An information quantity, snapped to zero near zero.
    pub fn info(x: f64) -> Cell {
        Cell::Float(snap_zero(x))
    }

    pub fn uint(x: usize) -> Cell {
        Cell::UInt(x as u64)
    }

    pub fn text(s: impl Into<String>) -> Cell {
        Cell::Text(s.into())
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Float(x) => Some(x),
            Cell::Int(x) => Some(x as f64),
            Cell::UInt(x) => Some(x as f64),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match *self {
            Cell::Bool(b) => Some(b),
            _ => None,
        }
    }
}

impl fmt::Display for Cell {
    /// Floats use 17 significant digits, which round-trip every `f64`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(x) => write!(f, "{x}"),
            Cell::UInt(x) => write!(f, "{x}"),
            Cell::Float(x) if x.is_finite() => write!(f, "{x:.16e}"),
            Cell::Float(x) => write!(f, "{x}"),
            Cell::Bool(b) => write!(f, "{b}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Empty => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    /// `bits`, `1` for dimensionless, `time` in units of 1/Δ_d, or empty for
    /// labels.
    pub unit: String,
}

impl Column {
    pub fn new(name: &str, unit: &str) -> Self {
        Column { name: name.into(), unit: unit.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    pub version: String,
    pub kind: String,
    pub seed: u64,
    pub config: Value,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
    pub metadata: Metadata,
}

impl ResultTable {
    pub fn new(columns: Vec<Column>) -> Self {
        ResultTable {
            columns,
            rows: Vec::new(),
            metadata: Metadata {
                version: CODE_VERSION.into(),
                kind: String::new(),
                seed: 0,
                config: Value::Null,
                wall_time_s: 0.0,
            },
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<(), RunError> {
        if row.len() != self.columns.len() {
            return Err(RunError::Config(format!(
                "row of {} cells for {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Values of one column, in row order.
    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    /// `#` lines: version, kind, seed, config echo, units, wall time.
    pub fn metadata_lines(&self) -> Vec<String> {
        let m = &self.metadata;
        let units: Vec<&str> = self.columns.iter().map(|c| c.unit.as_str()).collect();
        vec![
            format!("# qdc {}", m.version),
            format!("# kind: {}", m.kind),
            format!("# seed: {}", m.seed),
            format!("# config: {}", m.config),
            format!("# units: {}", units.join(",")),
            format!("# wall_time_s: {:.3}", m.wall_time_s),
        ]
    }

    /// Header and rows without the metadata block.
    pub fn data_section(&self) -> Result<String, RunError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| RunError::Io(e.to_string());
        w.write_record(self.columns.iter().map(|c| c.name.as_str())).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.to_string())).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| RunError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| RunError::Io(e.to_string()))
    }

    pub fn to_csv(&self) -> Result<String, RunError> {
        let mut out = self.metadata_lines().join("\n");
        out.push('\n');
        out.push_str(&self.data_section()?);
        Ok(out)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), RunError> {
        w.write_all(self.to_csv()?.as_bytes()).map_err(|e| RunError::Io(e.to_string()))
    }

    /// The full config and run information as JSON.
    pub fn sidecar(&self) -> Value {
        serde_json::json!({
            "version": self.metadata.version,
            "kind": self.metadata.kind,
            "seed": self.metadata.seed,
            "config": self.metadata.config,
            "wall_time_s": self.metadata.wall_time_s,
            "columns": self.columns.iter().map(|c| serde_json::json!({"name": c.name, "unit": c.unit})).collect::<Vec<_>>(),
            "rows": self.rows.len(),
        })
    }
}

/// Lines of a table file that are not metadata.
pub fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

/// Reads the header and rows of a table file as strings.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>), RunError> {
    let data = data_lines(text).join("\n");
    let mut r = csv::Reader::from_reader(data.as_bytes());
    let io = |e: csv::Error| RunError::Io(e.to_string());
    let header = r.headers().map_err(io)?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
        .collect::<Result<Vec<Vec<String>>, _>>()
        .map_err(io)?;
    Ok((header, rows))
}

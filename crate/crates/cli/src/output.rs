//! Output files and the metadata sidecar. Everything is built in memory first
//! and written only once a command has fully succeeded.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// A rectangular dataset with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    /// Shortest round-trip representation; NaN is written as an empty field.
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => format!("{v}"),
            Cell::Num(_) => String::new(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => json!(v),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::csv))?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let obj: Map<String, Value> = self.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// Files produced by one command, held until [`Output::write`].
pub struct Output {
    format: Format,
    files: Vec<(String, Vec<u8>)>,
}

fn pretty(v: &impl Serialize) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(v)?;
    bytes.push(b'\n');
    Ok(bytes)
}

impl Output {
    pub fn new(format: Format) -> Self {
        Self { format, files: Vec::new() }
    }

    /// Adds `stem.csv` or `stem.json` depending on the output format.
    pub fn table(&mut self, stem: &str, table: &Table) -> Result<(), CliError> {
        let file = match self.format {
            Format::Csv => (format!("{stem}.csv"), table.to_csv()?),
            Format::Json => (format!("{stem}.json"), pretty(&table.to_json())?),
        };
        self.files.push(file);
        Ok(())
    }

    /// A CSV file regardless of format; used for data that other tools read
    /// back, such as count records.
    pub fn csv_records<T: Serialize>(&mut self, name: &str, records: &[T]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in records {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        self.files.push((name.to_string(), bytes));
        Ok(())
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        self.files.push((name.to_string(), pretty(value)?));
        Ok(())
    }

    pub fn names(&self) -> Vec<String> {
        self.files.iter().map(|(n, _)| n.clone()).collect()
    }

    /// Writes every file plus `<command>.meta.json` into `dir`. Returns the
    /// written paths.
    pub fn write(self, dir: &Path, command: &str, cfg: &RunConfig, citations: &[String]) -> Result<Vec<PathBuf>, CliError> {
        let meta = metadata(command, cfg, citations, &self.names())?;
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        let mut written = Vec::new();
        let meta_file = (format!("{command}.meta.json"), pretty(&meta)?);
        for (name, bytes) in self.files.iter().chain(std::iter::once(&meta_file)) {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            written.push(path);
        }
        Ok(written)
    }
}

/// SHA-256 of the compact JSON of the resolved configuration.
pub fn config_hash(cfg: &RunConfig) -> Result<String, CliError> {
    let canonical = serde_json::to_vec(cfg)?;
    Ok(hex::encode(Sha256::digest(&canonical)))
}

fn metadata(command: &str, cfg: &RunConfig, citations: &[String], outputs: &[String]) -> Result<Value, CliError> {
    Ok(json!({
        "software": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": command,
        "config_sha256": config_hash(cfg)?,
        "seed": cfg.seed,
        "sellmeier": citations,
        "outputs": outputs,
        "config": cfg,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_cells_round_trip() {
        let mut t = Table::new(&["x", "n", "label"]);
        t.push(vec![0.1.into(), 3i64.into(), "a,b".into()]);
        t.push(vec![f64::NAN.into(), (-1i64).into(), "c".into()]);
        let text = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(text, "x,n,label\n0.1,3,\"a,b\"\n,-1,c\n");
    }

    #[test]
    fn hash_tracks_config() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
        b.seed += 1;
        assert_ne!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
        assert_eq!(config_hash(&a).unwrap().len(), 64);
    }
}

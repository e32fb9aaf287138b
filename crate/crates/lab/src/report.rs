//! CSV + JSON artifacts of a finished experiment.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::LabError;
use crate::table::{Column, ResultTable};

/// Trace digest of one simulation run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunDigest {
    pub label: String,
    pub seed: u64,
    /// Hex encoded, 16 digits.
    pub digest: String,
}

impl RunDigest {
    pub fn new(label: impl Into<String>, seed: u64, digest: u64) -> Self {
        Self {
            label: label.into(),
            seed,
            digest: format!("{digest:016x}"),
        }
    }
}

/// Everything an experiment produces before it touches the disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: ResultTable,
    pub runs: Vec<RunDigest>,
    pub aggregates: BTreeMap<String, f64>,
}

impl Outcome {
    pub fn new(table: ResultTable) -> Self {
        Self {
            table,
            runs: Vec::new(),
            aggregates: BTreeMap::new(),
        }
    }
}

#[derive(Serialize)]
struct JsonReport<'a> {
    name: &'a str,
    kind: &'a str,
    spec_hash: &'a str,
    tool_version: &'a str,
    csv: String,
    seeds: &'a [u64],
    parameters: BTreeMap<&'a str, &'a str>,
    columns: &'a [Column],
    rows: usize,
    aggregates: &'a BTreeMap<String, f64>,
    runs: &'a [RunDigest],
}

/// The JSON sibling of a CSV file: same stem, `.json` extension.
pub fn json_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn render_json(name: &str, kind: &str, csv: &Path, outcome: &Outcome) -> String {
    let meta = &outcome.table.metadata;
    let report = JsonReport {
        name,
        kind,
        spec_hash: &meta.config_hash,
        tool_version: &meta.tool_version,
        csv: csv
            .file_name()
            .map_or_else(|| csv.display().to_string(), |f| f.to_string_lossy().into_owned()),
        seeds: &meta.seeds,
        parameters: meta
            .parameters
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_str()))
            .collect(),
        columns: outcome.table.columns(),
        rows: outcome.table.rows().len(),
        aggregates: &outcome.aggregates,
        runs: &outcome.runs,
    };
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    text
}

/// Writes the CSV at `csv` and the JSON report next to it, creating parent
/// directories. Returns the JSON path.
pub fn write_artifacts(name: &str, kind: &str, csv: &Path, outcome: &Outcome) -> Result<PathBuf, LabError> {
    if let Some(dir) = csv.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    }
    fs::write(csv, outcome.table.to_csv()).map_err(|e| LabError::io(csv, e))?;
    let json = json_path(csv);
    fs::write(&json, render_json(name, kind, csv, outcome)).map_err(|e| LabError::io(&json, e))?;
    Ok(json)
}

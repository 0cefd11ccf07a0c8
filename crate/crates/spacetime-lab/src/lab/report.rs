use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, LabError};

/// One plot-ready table: a header row and rows of floats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Floats are written in shortest round-trip decimal form.
    pub fn write_csv(&self, path: &Path) -> Result<(), LabError> {
        let io = |e: csv::Error| LabError::Io(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        w.write_record(&self.columns).map_err(io)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| v.to_string())).map_err(io)?;
        }
        w.flush().map_err(|e| LabError::Io(format!("{}: {e}", path.display())))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub config: ExperimentConfig,
    pub constants: BTreeMap<String, f64>,
    pub verdicts: BTreeMap<String, bool>,
    pub pass: bool,
    /// The owning module's own report.
    pub details: serde_json::Value,
    pub series: Vec<Series>,
    /// Files written next to the report, relative to the output directory.
    pub artifacts: Vec<String>,
    pub elapsed_seconds: f64,
}

impl ExperimentReport {
    /// Everything except timing, serialised; identical configs give
    /// identical bytes.
    pub fn numeric_payload(&self) -> Result<String, LabError> {
        let v = serde_json::json!({
            "experiment": self.experiment,
            "constants": self.constants,
            "verdicts": self.verdicts,
            "pass": self.pass,
            "details": self.details,
            "series": self.series,
        });
        serde_json::to_string(&v).map_err(|e| LabError::Io(e.to_string()))
    }

    /// Writes `report.json`, `payload.json` and one CSV per series into
    /// `dir`, recording them in `artifacts`.
    pub fn write(&mut self, dir: &Path) -> Result<Vec<PathBuf>, LabError> {
        std::fs::create_dir_all(dir).map_err(|e| LabError::Io(format!("{}: {e}", dir.display())))?;
        let mut written = Vec::new();
        self.artifacts.clear();
        for s in &self.series {
            let name = format!("{}.csv", s.name);
            let p = dir.join(&name);
            s.write_csv(&p)?;
            self.artifacts.push(name);
            written.push(p);
        }
        let payload = dir.join("payload.json");
        std::fs::write(&payload, self.numeric_payload()?).map_err(|e| LabError::Io(format!("{}: {e}", payload.display())))?;
        self.artifacts.push("payload.json".into());
        written.push(payload);
        self.artifacts.push("report.json".into());
        let report = dir.join("report.json");
        let text = serde_json::to_string_pretty(self).map_err(|e| LabError::Io(e.to_string()))?;
        std::fs::write(&report, text).map_err(|e| LabError::Io(format!("{}: {e}", report.display())))?;
        written.push(report);
        Ok(written)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteItem {
    pub experiment: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<ExperimentReport>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub items: Vec<SuiteItem>,
    pub passed: usize,
    pub failed: usize,
    pub pass: bool,
}

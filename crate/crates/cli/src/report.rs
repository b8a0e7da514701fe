//! Run reports and the files a command produces.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

/// Whether a check bounds its value from above or below.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost,
    AtLeast,
}

/// One declared tolerance and its observed value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: Bound,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    /// Passes iff `value <= limit`; NaN fails.
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, bound: Bound::AtMost, limit, passed: value <= limit }
    }

    /// Passes iff `value >= limit`; NaN fails.
    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, bound: Bound::AtLeast, limit, passed: value >= limit }
    }
}

/// Deterministic summary of one command: nothing here depends on timing or threads.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub command: String,
    pub seed: u64,
    pub config: Value,
    pub metrics: Value,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl ExperimentReport {
    pub fn new(command: &str, seed: u64, config: Value, metrics: Value, checks: Vec<Check>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Self { command: command.to_string(), seed, config, metrics, checks, passed }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// A report plus the named text files that accompany it.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: ExperimentReport,
    pub files: Vec<(String, String)>,
}

impl Outcome {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, s)| s.as_str())
    }

    /// Writes `report.json` and every accompanying file into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(), CliError> {
        let io = |path: &Path, e: std::io::Error| CliError::Io { path: path.display().to_string(), message: e.to_string() };
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let report = dir.join("report.json");
        std::fs::write(&report, self.report.to_json()).map_err(|e| io(&report, e))?;
        for (name, body) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| io(&path, e))?;
        }
        Ok(())
    }
}

/// `null` for non-finite values, the number otherwise.
pub(crate) fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else {
        Value::Null
    }
}

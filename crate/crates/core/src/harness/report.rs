//! Tab-separated experiment reports and the (ε, δ) ledger.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::unlearn::{NoiseSpec, UnlearnConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub label: String,
    pub epsilon: f64,
    pub delta: f64,
    pub sigma: f64,
    pub sensitivity: f64,
    pub seed: u64,
}

/// Per-release privacy accounting. Budgets are recorded, never composed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PrivacyLedger {
    pub entries: Vec<LedgerEntry>,
}

impl PrivacyLedger {
    pub fn record(&mut self, label: &str, noise: &NoiseSpec, cfg: &UnlearnConfig) {
        self.entries.push(LedgerEntry {
            label: label.to_string(),
            epsilon: cfg.epsilon,
            delta: cfg.delta,
            sigma: noise.sigma,
            sensitivity: noise.delta_sensitivity,
            seed: noise.seed,
        });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentReport {
    pub title: String,
    /// Configuration echo, emitted as `# key = value` lines.
    pub config: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub ledger: PrivacyLedger,
}

impl ExperimentReport {
    pub fn new(title: &str, columns: &[&str]) -> Self {
        Self {
            title: title.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn echo(&mut self, key: &str, value: impl ToString) {
        self.config.push((key.to_string(), value.to_string()));
    }

    /// Echoes every field of an unlearning configuration.
    pub fn echo_config(&mut self, cfg: &UnlearnConfig) {
        if let Ok(serde_json::Value::Object(map)) = serde_json::to_value(cfg) {
            for (k, v) in map {
                self.echo(&k, v);
            }
        }
    }

    pub fn push_row(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::ShapeMismatch(format!(
                "row has {} fields, report has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {}", self.title);
        for (k, v) in &self.config {
            let _ = writeln!(s, "# {k} = {v}");
        }
        let _ = writeln!(s, "# {}", self.columns.join("\t"));
        for row in &self.rows {
            let _ = writeln!(s, "{}", row.join("\t"));
        }
        if !self.ledger.is_empty() {
            let _ = writeln!(s, "# ledger");
            let _ = writeln!(s, "# label\tepsilon\tdelta\tsigma\tsensitivity\tseed");
            for e in &self.ledger.entries {
                let _ = writeln!(
                    s,
                    "# {}\t{}\t{}\t{}\t{}\t{}",
                    e.label, e.epsilon, e.delta, e.sigma, e.sensitivity, e.seed
                );
            }
        }
        s
    }

    pub fn write(&self, path: Option<&Path>) -> Result<()> {
        match path {
            Some(p) => std::fs::write(p, self.to_tsv())?,
            None => print!("{}", self.to_tsv()),
        }
        Ok(())
    }
}

/// Shortest round-trip float formatting for report cells.
pub fn cell(v: f64) -> String {
    format!("{v}")
}

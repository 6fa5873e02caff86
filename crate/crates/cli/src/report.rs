//! Verification reports and their JSON and CSV forms.

use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::config::SCHEMA_VERSION;

/// One verified relation `lhs <relation> rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub relation: String,
    pub lhs: f64,
    pub rhs: f64,
    /// Signed amount by which the relation holds; negative means it fails.
    pub residual: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
    /// Points where the relation is tightest or fails, one per slot.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<Vec<f64>>>,
}

impl Check {
    /// `lhs <= rhs + tol`.
    pub fn le(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let residual = rhs + tol - lhs;
        Self::new(name, "<=", lhs, rhs, residual, residual >= 0.0)
    }

    /// `lhs >= rhs - tol`.
    pub fn ge(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let residual = lhs - rhs + tol;
        Self::new(name, ">=", lhs, rhs, residual, residual >= 0.0)
    }

    /// `|lhs - rhs| <= tol`.
    pub fn close(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let residual = tol - (lhs - rhs).abs();
        Self::new(name, "~=", lhs, rhs, residual, residual >= 0.0)
    }

    /// `|lhs / rhs - 1| <= tol`.
    pub fn rel(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let residual = tol - (lhs / rhs - 1.0).abs();
        Self::new(name, "~=rel", lhs, rhs, residual, residual >= 0.0)
    }

    /// A relation decided by the caller; `residual` is 1 or -1.
    pub fn holds(name: impl Into<String>, relation: &str, lhs: f64, rhs: f64, pass: bool) -> Self {
        Self::new(name, relation, lhs, rhs, if pass { 1.0 } else { -1.0 }, pass)
    }

    /// A check that could not be evaluated, e.g. because its input violates
    /// a hypothesis of the computation.
    pub fn failed(name: impl Into<String>, err: &santalo_core::Error) -> Self {
        let witness = match err {
            santalo_core::Error::Inadmissible { witness, .. } => Some(witness.clone()),
            _ => None,
        };
        let residual = match err {
            santalo_core::Error::Inadmissible { slack, .. } => *slack,
            _ => f64::NAN,
        };
        Self { witness, ..Self::new(name, "error", f64::NAN, f64::NAN, residual, false) }.with_detail(err.to_string())
    }

    fn new(name: impl Into<String>, relation: &str, lhs: f64, rhs: f64, residual: f64, pass: bool) -> Self {
        Self {
            name: name.into(),
            relation: relation.into(),
            lhs,
            rhs,
            residual,
            pass: pass && !residual.is_nan(),
            detail: String::new(),
            witness: None,
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn with_witness(mut self, witness: Vec<Vec<f64>>) -> Self {
        self.witness = Some(witness);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub experiment: String,
    pub builtin: Option<String>,
    /// Excluded from reproducibility comparisons.
    pub generated_at: String,
    /// The resolved configuration, with every default filled in.
    pub environment: serde_json::Value,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl Report {
    pub fn new(experiment: String, builtin: Option<String>, environment: serde_json::Value, checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Self {
            schema_version: SCHEMA_VERSION,
            experiment,
            builtin,
            generated_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            environment,
            checks,
            pass,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(dir.join("report.json"), json + "\n").context("writing report.json")?;
        let mut w = csv::Writer::from_path(dir.join("report.csv")).context("writing report.csv")?;
        w.write_record(["name", "relation", "lhs", "rhs", "residual", "pass", "detail", "witness"])?;
        for c in &self.checks {
            let witness = c.witness.as_ref().map(|w| serde_json::to_string(w).unwrap_or_default()).unwrap_or_default();
            w.write_record([
                c.name.clone(),
                c.relation.clone(),
                c.lhs.to_string(),
                c.rhs.to_string(),
                c.residual.to_string(),
                c.pass.to_string(),
                c.detail.clone(),
                witness,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

//! Run records: one JSON object per command or experiment.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use ratmin_core::FitReport;
use serde::Serialize;

/// What a check expects of its measured value.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Expectation {
    /// `|achieved - reference| <= rel_tol * |reference|`.
    Near { reference: f64, rel_tol: f64 },
    AtMost { bound: f64 },
    AtLeast { bound: f64 },
    /// A boolean property; `achieved` is 1 when it holds.
    Holds { property: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub quantity: String,
    pub expectation: Expectation,
    pub achieved: f64,
    pub pass: bool,
}

impl Check {
    pub fn near(quantity: impl Into<String>, achieved: f64, reference: f64, rel_tol: f64) -> Self {
        let pass = (achieved - reference).abs() <= rel_tol * reference.abs();
        Self { quantity: quantity.into(), expectation: Expectation::Near { reference, rel_tol }, achieved, pass }
    }

    pub fn at_most(quantity: impl Into<String>, achieved: f64, bound: f64) -> Self {
        Self { quantity: quantity.into(), expectation: Expectation::AtMost { bound }, achieved, pass: achieved <= bound }
    }

    pub fn at_least(quantity: impl Into<String>, achieved: f64, bound: f64) -> Self {
        Self { quantity: quantity.into(), expectation: Expectation::AtLeast { bound }, achieved, pass: achieved >= bound }
    }

    pub fn holds(quantity: impl Into<String>, property: impl Into<String>, ok: bool) -> Self {
        Self {
            quantity: quantity.into(),
            expectation: Expectation::Holds { property: property.into() },
            achieved: if ok { 1.0 } else { 0.0 },
            pass: ok,
        }
    }

    /// One-line human-readable summary.
    pub fn describe(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let want = match &self.expectation {
            Expectation::Near { reference, rel_tol } => format!("target {reference} ± {:.0}%", rel_tol * 100.0),
            Expectation::AtMost { bound } => format!("≤ {bound:e}"),
            Expectation::AtLeast { bound } => format!("≥ {bound:e}"),
            Expectation::Holds { property } => property.clone(),
        };
        match self.expectation {
            Expectation::Holds { .. } => format!("{verdict}  {}: {want}", self.quantity),
            _ => format!("{verdict}  {}: {:.6e} ({want})", self.quantity, self.achieved),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub command: String,
    pub params: serde_json::Value,
    /// Fit reports keyed by a label; a single-fit command uses `"fit"`.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub fits: BTreeMap<String, FitReport>,
    pub metrics: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    /// Wall-clock seconds; the only fields that vary between identical runs.
    pub timings: BTreeMap<String, f64>,
}

impl RunRecord {
    pub fn new(command: impl Into<String>, params: impl Serialize) -> Self {
        Self {
            command: command.into(),
            params: serde_json::to_value(params).expect("parameters serialize"),
            fits: BTreeMap::new(),
            metrics: BTreeMap::new(),
            checks: Vec::new(),
            timings: BTreeMap::new(),
        }
    }

    pub fn metric(&mut self, name: impl Into<String>, value: f64) -> &mut Self {
        self.metrics.insert(name.into(), value);
        self
    }

    pub fn add_fit(&mut self, label: impl Into<String>, report: FitReport) -> &mut Self {
        self.fits.insert(label.into(), report);
        self
    }

    pub fn timing(&mut self, name: impl Into<String>, seconds: f64) -> &mut Self {
        self.timings.insert(name.into(), seconds);
        self
    }

    pub fn check(&mut self, c: Check) -> &mut Self {
        self.checks.push(c);
        self
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("records serialize")
    }

    /// Writes through a temporary file so readers never see a partial record.
    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json().as_bytes())
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming onto {}", path.display()))?;
    Ok(())
}

/// CSV with a header row; values use shortest round-trip formatting.
pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn near_uses_relative_tolerance() {
        assert!(Check::near("e", 0.0055, 0.005, 0.15).pass);
        assert!(!Check::near("e", 0.0060, 0.005, 0.15).pass);
        assert!(Check::at_most("c", 100.0, 100.0).pass);
        assert!(!Check::at_least("c", 0.5, 1.0).pass);
        assert!(Check::holds("p", "monotone", true).describe().starts_with("PASS"));
    }

    #[test]
    fn record_json_has_stable_sections() {
        let mut r = RunRecord::new("fit", serde_json::json!({"deg": [4, 5]}));
        r.metric("uniform_error", 0.5).timing("fit", 1.0).check(Check::at_most("x", 1.0, 2.0));
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["command"], "fit");
        assert_eq!(v["metrics"]["uniform_error"], 0.5);
        assert_eq!(v["checks"][0]["expectation"]["kind"], "at_most");
        assert!(v.get("fits").is_none());
        assert!(r.passed());
    }

    #[test]
    fn csv_layout() {
        assert_eq!(csv_table(&["x", "y"], vec![vec![0.5, 1.0]]), "x,y\n0.5,1.0\n");
    }

    #[test]
    fn atomic_write() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        write_atomic(&p, b"{}").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "{}");
        assert!(!dir.path().join("r.partial").exists());
    }
}

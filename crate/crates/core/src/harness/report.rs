//! Suite execution, JSON reports and golden records.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::checks::{run_check, CheckOutcome, Provenance, SuiteContext, REGISTRY};
use super::config::ExperimentConfig;
use crate::error::{Error, Result};

pub const REPORT_SCHEMA: &str = "suite-report/1";
pub const GOLDEN_SCHEMA: &str = "golden/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub outcomes: Vec<CheckOutcome>,
    pub pass: bool,
}

impl SuiteReport {
    pub fn summary(&self) -> String {
        let mut s: String = self.outcomes.iter().map(|o| o.summary_line() + "\n").collect();
        let passed = self.outcomes.iter().filter(|o| o.pass).count();
        s.push_str(&format!("{passed}/{} checks passed\n", self.outcomes.len()));
        s
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let r: SuiteReport = serde_json::from_str(s)?;
        if r.schema != REPORT_SCHEMA {
            return Err(Error::ConfigInvalid(format!("unsupported report schema {}", r.schema)));
        }
        Ok(r)
    }
}

/// Runs the selected checks in registry order.
pub fn run_suite(cfg: &ExperimentConfig) -> Result<SuiteReport> {
    let ctx = SuiteContext::new(cfg.clone())?;
    let outcomes: Vec<CheckOutcome> = REGISTRY
        .iter()
        .filter(|c| cfg.checks.is_empty() || cfg.checks.iter().any(|id| id == c.id))
        .map(|c| run_check(c, &ctx))
        .collect();
    let pass = outcomes.iter().all(|o| o.pass);
    Ok(SuiteReport { schema: REPORT_SCHEMA.into(), config_hash: cfg.hash()?, config: cfg.clone(), outcomes, pass })
}

/// Writes report.json, golden.json and every table and plot under `dir`.
pub fn write_artifacts(report: &SuiteReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut report = report.clone();
    for o in &mut report.outcomes {
        for a in o.tables.iter_mut().chain(o.plots.iter_mut()) {
            let name = format!("{}_{}", o.id, a.name);
            std::fs::write(dir.join(&name), &a.content)?;
            a.name = name;
        }
    }
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    std::fs::write(dir.join("golden.json"), serde_json::to_string_pretty(&GoldenRecord::from_report(&report))?)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenValue {
    pub check: String,
    pub metric: String,
    pub expected: f64,
    /// Absolute tolerance for regression comparison.
    pub tolerance: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenRecord {
    pub schema: String,
    pub config_hash: String,
    pub values: Vec<GoldenValue>,
}

/// Relative tolerance of golden comparisons.
pub const GOLDEN_REL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenMismatch {
    pub check: String,
    pub expected: Option<f64>,
    pub found: Option<f64>,
}

impl GoldenRecord {
    pub fn from_report(report: &SuiteReport) -> Self {
        let values = report
            .outcomes
            .iter()
            .filter_map(|o| {
                o.value.map(|v| GoldenValue {
                    check: o.id.clone(),
                    metric: o.metric.clone(),
                    expected: v,
                    tolerance: GOLDEN_REL * v.abs() + 1e-300,
                    provenance: o.provenance.clone(),
                })
            })
            .collect();
        GoldenRecord { schema: GOLDEN_SCHEMA.into(), config_hash: report.config_hash.clone(), values }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let g: GoldenRecord = serde_json::from_str(s)?;
        if g.schema != GOLDEN_SCHEMA {
            return Err(Error::ConfigInvalid(format!("unsupported golden schema {}", g.schema)));
        }
        Ok(g)
    }

    /// Values that moved beyond their tolerance. A differing config hash is an error.
    pub fn compare(&self, report: &SuiteReport) -> Result<Vec<GoldenMismatch>> {
        if self.config_hash != report.config_hash {
            return Err(Error::ConfigInvalid(format!(
                "config hash {} does not match golden {}",
                report.config_hash, self.config_hash
            )));
        }
        let mut out = Vec::new();
        for g in &self.values {
            let found = report.outcomes.iter().find(|o| o.id == g.check).and_then(|o| o.value);
            let ok = found.is_some_and(|v| (v - g.expected).abs() <= g.tolerance);
            if !ok {
                out.push(GoldenMismatch { check: g.check.clone(), expected: Some(g.expected), found });
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> ExperimentConfig {
        ExperimentConfig {
            checks: vec!["path-count".into(), "gauss-convolution".into()],
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn quick_suite_passes_and_round_trips() {
        let r = run_suite(&quick()).unwrap();
        assert_eq!(r.outcomes.len(), 2);
        assert!(r.pass, "{}", r.summary());
        let text = serde_json::to_string(&r).unwrap();
        let back = SuiteReport::from_json_str(&text).unwrap();
        assert_eq!(back.outcomes[0].value, r.outcomes[0].value);
        let golden = GoldenRecord::from_report(&r);
        assert!(golden.compare(&back).unwrap().is_empty());
    }

    #[test]
    fn golden_rejects_other_config() {
        let r = run_suite(&quick()).unwrap();
        let mut g = GoldenRecord::from_report(&r);
        g.config_hash = "0".into();
        assert!(g.compare(&r).is_err());
    }
}

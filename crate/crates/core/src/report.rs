//! Machine-readable verdicts.
//!
//! Every check in the crate reports through [`InequalityReport`]: the two
//! sides of the inequality, the margin, a verdict and an echo of the inputs
//! and numeric settings that produced the numbers. Reports serialize to JSON
//! with a stable field order (maps are `BTreeMap`s), so identical runs
//! produce identical bytes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Version of the emitted report schema.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Fails,
    OutsideRegime,
}

impl Verdict {
    pub fn from_holds(holds: bool) -> Self {
        if holds {
            Verdict::Holds
        } else {
            Verdict::Fails
        }
    }

    pub fn is_holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }
}

/// Verdict and margin for one verified identity or inequality.
///
/// The orientation is fixed per report type: `verdict == Holds` means
/// `lhs <= rhs + tolerance`, and `margin = rhs - lhs`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub inputs: BTreeMap<String, String>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub verdict: Verdict,
    pub tolerance: f64,
    pub details: BTreeMap<String, f64>,
}

impl InequalityReport {
    pub fn new(name: &str, lhs: f64, rhs: f64, verdict: Verdict, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            inputs: BTreeMap::new(),
            lhs,
            rhs,
            margin: rhs - lhs,
            verdict,
            tolerance,
            details: BTreeMap::new(),
        }
    }

    /// Builds the report directly from the comparison `lhs <= rhs + tol`.
    pub fn compare(name: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self::new(
            name,
            lhs,
            rhs,
            Verdict::from_holds(lhs <= rhs + tolerance),
            tolerance,
        )
    }

    pub fn push_input(&mut self, key: &str, value: String) {
        self.inputs.insert(key.to_string(), value);
    }

    pub fn push_detail(&mut self, key: &str, value: f64) {
        self.details.insert(key.to_string(), value);
    }

    pub fn with_input(mut self, key: &str, value: String) -> Self {
        self.push_input(key, value);
        self
    }

    pub fn with_detail(mut self, key: &str, value: f64) -> Self {
        self.push_detail(key, value);
        self
    }
}

/// A bundle of reports plus the settings echo, as written to `report.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportBundle {
    pub schema_version: u32,
    pub command: String,
    pub field_digest: Option<String>,
    pub settings: BTreeMap<String, String>,
    pub reports: Vec<InequalityReport>,
}

impl ReportBundle {
    pub fn new(command: &str) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            command: command.to_string(),
            field_digest: None,
            settings: BTreeMap::new(),
            reports: Vec::new(),
        }
    }

    pub fn set_setting(&mut self, key: &str, value: impl ToString) {
        self.settings.insert(key.to_string(), value.to_string());
    }

    pub fn push(&mut self, report: InequalityReport) {
        self.reports.push(report);
    }

    pub fn all_hold(&self) -> bool {
        self.reports.iter().all(|r| r.verdict.is_holds())
    }

    pub fn any_failed(&self) -> bool {
        self.reports.iter().any(|r| r.verdict == Verdict::Fails)
    }

    pub fn any_outside_regime(&self) -> bool {
        self.reports.iter().any(|r| r.verdict == Verdict::OutsideRegime)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

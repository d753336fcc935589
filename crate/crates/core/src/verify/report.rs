use std::collections::BTreeMap;
use std::fmt::Write;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

/// Whether the property holds exactly on the lattice or only in the limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportKind {
    Exact,
    Convergence,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub name: String,
    pub kind: ReportKind,
    pub status: Status,
    pub metric: f64,
    pub tolerance: f64,
    pub detail: String,
    pub observations: BTreeMap<String, f64>,
    pub artifacts: Vec<String>,
}

impl PropertyReport {
    /// Pass iff `metric <= tolerance`; a NaN metric fails.
    pub fn measured(
        name: impl Into<String>,
        kind: ReportKind,
        metric: f64,
        tolerance: f64,
    ) -> Self {
        PropertyReport {
            name: name.into(),
            kind,
            status: if metric <= tolerance {
                Status::Pass
            } else {
                Status::Fail
            },
            metric,
            tolerance,
            detail: String::new(),
            observations: BTreeMap::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn inconclusive(
        name: impl Into<String>,
        kind: ReportKind,
        tolerance: f64,
        reason: impl Into<String>,
    ) -> Self {
        PropertyReport {
            name: name.into(),
            kind,
            status: Status::Inconclusive,
            metric: f64::NAN,
            tolerance,
            detail: reason.into(),
            observations: BTreeMap::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn observe(mut self, key: impl Into<String>, value: f64) -> Self {
        self.observations.insert(key.into(), value);
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Fixed-width text table of reports.
pub fn render_table(reports: &[PropertyReport]) -> String {
    let width = reports
        .iter()
        .map(|r| r.name.len())
        .max()
        .unwrap_or(4)
        .max(4);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:<11}  {:<12}  {:>12}  {:>12}",
        "name", "kind", "status", "metric", "tolerance"
    );
    for r in reports {
        let kind = match r.kind {
            ReportKind::Exact => "exact",
            ReportKind::Convergence => "convergence",
        };
        let status = match r.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Inconclusive => "inconclusive",
        };
        let _ = writeln!(
            out,
            "{:<width$}  {:<11}  {:<12}  {:>12.4e}  {:>12.4e}",
            r.name, kind, status, r.metric, r.tolerance
        );
    }
    out
}

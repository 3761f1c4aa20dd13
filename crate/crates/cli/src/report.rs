//! Machine-readable experiment reports.
//!
//! Reports hold no timing or host data, so identical configs give identical
//! bytes. Wall time goes to stderr.

use serde::Serialize;
use serde_json::Value as Json;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Exact,
    Certified,
    Heuristic,
}

/// A reported number with its certification status.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Quantity {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub status: Status,
}

impl Quantity {
    pub fn exact(x: f64) -> Self {
        Quantity { value: x, lower: x, upper: x, status: Status::Exact }
    }

    pub fn certified(value: f64, lower: f64, upper: f64) -> Self {
        Quantity { value, lower, upper, status: Status::Certified }
    }

    pub fn heuristic(value: f64, lower: f64, upper: f64) -> Self {
        Quantity { value, lower, upper, status: Status::Heuristic }
    }
}

/// One assertion. Soft checks are trends whose thresholds are empirical.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub soft: bool,
    pub value: f64,
    pub bound: f64,
    /// Which end of each interval the comparison used.
    pub safe_side: String,
    pub status: Status,
}

impl Check {
    /// value ≤ bound.
    pub fn le(name: impl Into<String>, value: f64, bound: f64, safe_side: &str, status: Status) -> Self {
        Check { name: name.into(), pass: value <= bound, soft: false, value, bound, safe_side: safe_side.into(), status }
    }

    /// value ≥ bound.
    pub fn ge(name: impl Into<String>, value: f64, bound: f64, safe_side: &str, status: Status) -> Self {
        Check { name: name.into(), pass: value >= bound, soft: false, value, bound, safe_side: safe_side.into(), status }
    }

    pub fn soft(mut self) -> Self {
        self.soft = true;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub experiment: String,
    pub config: Json,
    pub checks: Vec<Check>,
    pub results: Json,
    /// Plot-ready CSV for `--out csv`.
    #[serde(skip)]
    pub table: Option<String>,
}

impl Report {
    pub fn new(experiment: &str, config: Json) -> Self {
        Report { experiment: experiment.into(), config, checks: Vec::new(), results: Json::Null, table: None }
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn hard_passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass || c.soft)
    }

    /// 0 when every check passes, 2 otherwise; errors exit with 1 elsewhere.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            2
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// The experiment table, or the checks when there is none.
    pub fn to_csv(&self) -> String {
        if let Some(t) = &self.table {
            return t.clone();
        }
        let mut wr = csv::Writer::from_writer(Vec::new());
        wr.write_record(["check", "pass", "soft", "value", "bound", "safe_side", "status"]).expect("in memory");
        for c in &self.checks {
            let status = serde_json::to_value(c.status).expect("status").as_str().unwrap_or_default().to_string();
            wr.write_record([
                c.name.clone(),
                c.pass.to_string(),
                c.soft.to_string(),
                c.value.to_string(),
                c.bound.to_string(),
                c.safe_side.clone(),
                status,
            ])
            .expect("in memory");
        }
        String::from_utf8(wr.into_inner().expect("in memory")).expect("utf8")
    }

    /// "name: PASS|FAIL (k/n checks)" with the first failing check.
    pub fn summary(&self) -> String {
        let ok = self.checks.iter().filter(|c| c.pass).count();
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let mut s = format!("{}: {verdict} ({ok}/{} checks)", self.experiment, self.checks.len());
        if let Some(c) = self.checks.iter().find(|c| !c.pass) {
            s.push_str(&format!("; {} = {} vs {}", c.name, c.value, c.bound));
        }
        s
    }
}

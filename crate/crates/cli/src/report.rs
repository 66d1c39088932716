use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Comparison {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = "==")]
    Equal,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub value: f64,
    pub comparison: Comparison,
    pub threshold: f64,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Comparison::AtMost, threshold, value <= threshold)
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Comparison::AtLeast, threshold, value >= threshold)
    }

    pub fn equal(name: impl Into<String>, value: f64, expected: f64) -> Self {
        Self::new(name, value, Comparison::Equal, expected, value == expected)
    }

    /// A yes/no outcome, recorded as `1 == 1`.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::equal(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }

    fn new(name: impl Into<String>, value: f64, comparison: Comparison, threshold: f64, ok: bool) -> Self {
        let status = if ok { Status::Pass } else { Status::Fail };
        Self { name: name.into(), status, value, comparison, threshold }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub command: Vec<String>,
    pub checks: Vec<Check>,
    pub summary: Summary,
    pub wall_clock_seconds: f64,
    pub result: Value,
}

impl Report {
    pub fn new(command: Vec<String>, checks: Vec<Check>, result: Value, wall_clock_seconds: f64) -> Self {
        let passed = checks.iter().filter(|c| c.passed()).count();
        let summary = Summary { total: checks.len(), passed, failed: checks.len() - passed };
        Self { command, checks, summary, wall_clock_seconds, result }
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }
}

//! Machine-readable verdicts.

use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Error => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Error => "error",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub label: &'static str,
    /// The mathematical condition the check realises.
    pub condition: &'static str,
    pub passed: bool,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub check: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub scenario: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub status: Status,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub results: Map<String, Value>,
    pub artifacts: Vec<String>,
}

impl Report {
    pub fn new(command: &'static str, scenario: String) -> Self {
        Report {
            tool: "g2lab",
            version: env!("CARGO_PKG_VERSION"),
            command,
            scenario,
            model: None,
            seed: None,
            status: Status::Pass,
            checks: Vec::new(),
            witness: None,
            results: Map::new(),
            artifacts: Vec::new(),
        }
    }

    /// Records a check; the first failing check becomes the witness unless
    /// one is already set.
    pub fn check(&mut self, label: &'static str, condition: &'static str, passed: bool, value: f64, tolerance: Option<f64>) {
        if !passed && self.witness.is_none() {
            self.witness = Some(Witness {
                check: label.to_string(),
                index: None,
                t: None,
                value: Some(value),
                message: condition.to_string(),
            });
        }
        self.checks.push(Check {
            label,
            condition,
            passed,
            value,
            tolerance,
        });
    }

    /// Marks a check as failed at a specific sample.
    pub fn fail_at(&mut self, label: &'static str, condition: &'static str, index: Option<usize>, t: Option<f64>, value: f64, message: String) {
        self.checks.push(Check {
            label,
            condition,
            passed: false,
            value,
            tolerance: None,
        });
        if self.witness.is_none() {
            self.witness = Some(Witness {
                check: label.to_string(),
                index,
                t,
                value: Some(value),
                message,
            });
        }
    }

    pub fn result(&mut self, key: &str, value: impl Into<Value>) {
        self.results.insert(key.to_string(), value.into());
    }

    pub fn error(&mut self, message: String) {
        self.status = Status::Error;
        self.witness = Some(Witness {
            check: "input".to_string(),
            index: None,
            t: None,
            value: None,
            message,
        });
    }

    /// Settles the status from the recorded checks.
    pub fn finish(&mut self) {
        if self.status != Status::Error {
            self.status = if self.checks.iter().all(|c| c.passed) {
                Status::Pass
            } else {
                Status::Fail
            };
        }
    }

    /// One human-readable line per check.
    pub fn summary_lines(&self) -> Vec<String> {
        let mut lines: Vec<String> = self
            .checks
            .iter()
            .map(|c| {
                let tol = c.tolerance.map(|t| format!(" (tolerance {t:e})")).unwrap_or_default();
                format!(
                    "  [{}] {}: {} = {:e}{tol}",
                    if c.passed { "ok" } else { "FAIL" },
                    c.label,
                    c.condition,
                    c.value
                )
            })
            .collect();
        if let Some(w) = &self.witness {
            lines.push(format!("  witness: {} ({})", w.check, w.message));
        }
        lines
    }
}

//! Machine-readable check reports.

use serde::{Deserialize, Serialize};

/// Outcome of one identity check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    /// Short identity name.
    pub name: String,
    /// Identity tag used to audit the report.
    pub tag: String,
    pub samples: usize,
    pub max_residual: f64,
    pub tol: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: &str, tag: &str, samples: usize, max_residual: f64, tol: f64) -> Self {
        Check {
            name: name.to_string(),
            tag: tag.to_string(),
            samples,
            max_residual,
            tol,
            passed: max_residual.is_finite() && max_residual <= tol,
        }
    }

    /// A check whose outcome is a boolean fact rather than a residual.
    pub fn flag(name: &str, tag: &str, samples: usize, ok: bool) -> Self {
        Check {
            name: name.to_string(),
            tag: tag.to_string(),
            samples,
            max_residual: if ok { 0.0 } else { 1.0 },
            tol: 0.0,
            passed: ok,
        }
    }
}

/// Ordered list of checks with free-form numeric facts.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub checks: Vec<Check>,
    pub values: Vec<(String, f64)>,
}

impl Report {
    pub fn new(suite: &str) -> Self {
        Report { suite: suite.to_string(), ..Default::default() }
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn value(&mut self, key: &str, v: f64) {
        self.values.push((key.to_string(), v));
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
        self.values.extend(other.values);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn get_value(&self, key: &str) -> Option<f64> {
        self.values.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

use serde::{Deserialize, Serialize};

/// One inequality checked against an observed value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub bound: f64,
    pub observed: f64,
    pub pass: bool,
}

impl BoundCheck {
    /// Passes when `observed <= bound + slack`.
    pub fn at_most(name: impl Into<String>, observed: f64, bound: f64, slack: f64) -> Self {
        BoundCheck {
            name: name.into(),
            bound,
            observed,
            pass: observed <= bound + slack,
        }
    }

    /// Passes when `observed >= bound - slack`.
    pub fn at_least(name: impl Into<String>, observed: f64, bound: f64, slack: f64) -> Self {
        BoundCheck {
            name: name.into(),
            bound,
            observed,
            pass: observed >= bound - slack,
        }
    }

    /// A boolean condition; `bound` and `observed` are 1/0 flags.
    pub fn holds(name: impl Into<String>, pass: bool) -> Self {
        BoundCheck {
            name: name.into(),
            bound: 1.0,
            observed: if pass { 1.0 } else { 0.0 },
            pass,
        }
    }
}

/// JSON report emitted by `train`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub algorithm: String,
    pub params: serde_json::Value,
    pub update_count: usize,
    pub margin: f64,
    pub bound_checks: Vec<BoundCheck>,
    /// Checks that are reported but do not affect the exit status.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub informational: Vec<BoundCheck>,
}

impl TrainReport {
    pub fn all_pass(&self) -> bool {
        self.bound_checks.iter().all(|c| c.pass)
    }
}

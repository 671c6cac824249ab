//! Checks and per-scenario results.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::config::Kind;

/// One measured quantity compared against a threshold (`measured <= threshold`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    /// Acceptance criterion number, or the scenario's own check group.
    pub criterion: String,
    pub name: String,
    #[serde(serialize_with = "finite_or_null", deserialize_with = "null_as_nan")]
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Check {
    /// Passes when `measured` is finite and at most `threshold`.
    pub fn at_most(criterion: impl Into<String>, name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self {
            criterion: criterion.into(),
            name: name.into(),
            measured,
            threshold,
            pass: measured.is_finite() && measured <= threshold,
            detail: String::new(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    /// Multiplies the threshold by `scale` and re-evaluates.
    pub fn scaled(mut self, scale: f64) -> Self {
        self.threshold *= scale;
        self.reevaluate();
        self
    }

    pub fn reevaluate(&mut self) {
        self.pass = self.measured.is_finite() && self.measured <= self.threshold;
    }
}

fn finite_or_null<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_none()
    }
}

fn null_as_nan<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// Summary of one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub name: String,
    pub kind: Kind,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
    /// Named scalar results: residuals, drifts, norms. Non-finite values are
    /// stored as null.
    pub summary: BTreeMap<String, Option<f64>>,
    /// CSV files written, relative to the output directory.
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
}

impl RunResult {
    pub fn new(name: impl Into<String>, kind: Kind, seed: u64) -> Self {
        Self {
            name: name.into(),
            kind,
            seed,
            passed: true,
            checks: Vec::new(),
            summary: BTreeMap::new(),
            outputs: Vec::new(),
            wall_time_s: 0.0,
        }
    }

    pub fn record(&mut self, key: impl Into<String>, value: f64) {
        self.summary.insert(key.into(), value.is_finite().then_some(value));
    }

    pub fn check(&mut self, c: Check) {
        self.passed &= c.pass;
        self.checks.push(c);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_round_trips_as_null() {
        let mut r = RunResult::new("x", Kind::Quantize, 0);
        r.check(Check::at_most("9", "rms", f64::NAN, 0.05));
        r.record("norm", f64::INFINITY);
        assert!(!r.passed);
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("\"measured\":null"));
        let back: RunResult = serde_json::from_str(&text).unwrap();
        assert!(back.checks[0].measured.is_nan());
        assert_eq!(back.summary["norm"], None);
    }

    #[test]
    fn scaling_thresholds() {
        let c = Check::at_most("1", "h", 2e-10, 1e-10);
        assert!(!c.pass);
        assert!(c.scaled(3.0).pass);
    }
}

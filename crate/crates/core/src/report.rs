//! Experiment reports: every statistic with its gate, plus measures and
//! convergence series. Serialization is deterministic given the config.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Gate};
use crate::error::{Error, Result};
use crate::model::ModelKind;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// `None` when the statistic could not be computed.
    pub value: Option<f64>,
    pub std_error: Option<f64>,
    pub gate: Option<Gate>,
    pub pass: bool,
    pub margin: Option<f64>,
}

impl Estimate {
    pub fn new(value: f64, std_error: Option<f64>, gate: Option<Gate>) -> Self {
        let value = value.is_finite().then_some(value);
        let std_error = std_error.filter(|s| s.is_finite());
        let margin = match (&gate, value) {
            (Some(g), Some(v)) => Some(g.margin(v)),
            _ => None,
        };
        let pass = match (&gate, value) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(_), Some(_)) => margin.is_some_and(|m| m >= 0.0),
        };
        Estimate {
            value,
            std_error,
            gate,
            pass,
            margin,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureEntry {
    pub name: String,
    pub kind: String,
    /// Cylinder depth, or the chart for binned measures.
    pub chart_or_depth: serde_json::Value,
    pub entries: Vec<(String, f64)>,
}

/// A convergence diagnostic `y` against `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub kind: ModelKind,
    pub rank: usize,
    pub basepoint: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub version: String,
    /// Seconds; recorded only on request so that reports stay reproducible.
    pub wall_clock: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub command: String,
    pub config: ExperimentConfig,
    pub model: ModelSummary,
    pub estimates: BTreeMap<String, Estimate>,
    pub measures: Vec<MeasureEntry>,
    pub series: Vec<Series>,
    pub warnings: Vec<String>,
    pub provenance: Provenance,
}

impl ExperimentReport {
    pub fn all_pass(&self) -> bool {
        self.estimates.values().all(|e| e.pass)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.estimates
            .iter()
            .filter(|(_, e)| !e.pass)
            .map(|(k, _)| k.as_str())
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Io(format!("bad report: {e}")))
    }

    /// One line per estimate: name, value, error, gate and verdict.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for (name, e) in &self.estimates {
            let value = e.value.map_or("n/a".to_string(), |v| format!("{v:.6}"));
            let se = e.std_error.map_or(String::new(), |s| format!(" ± {s:.2e}"));
            let gate = e.gate.as_ref().map_or("-".to_string(), |g| g.to_string());
            let verdict = match (&e.gate, e.pass) {
                (None, _) => "info",
                (Some(_), true) => "PASS",
                (Some(_), false) => "FAIL",
            };
            out.push_str(&format!("{verdict:4}  {name:32} {value}{se}  [{gate}]\n"));
        }
        for w in &self.warnings {
            out.push_str(&format!("warn  {w}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_verdicts() {
        let e = Estimate::new(0.5, Some(0.01), Some(Gate::Within { lo: 0.49, hi: 0.51 }));
        assert!(e.pass);
        assert!((e.margin.unwrap() - 0.01).abs() < 1e-12);
        let e = Estimate::new(f64::NAN, None, Some(Gate::AtMost { bound: 1.0 }));
        assert!(!e.pass);
        assert_eq!(e.value, None);
        assert!(Estimate::new(3.0, None, None).pass);
    }
}

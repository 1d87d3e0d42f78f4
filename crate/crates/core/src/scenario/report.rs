use serde::Serialize;

use super::config::ScenarioConfig;
use crate::calculus::selftest::RuleCheck;
use crate::error::{Error, Result};
use crate::mild::SufficiencyReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = "<")]
    Below,
    #[serde(rename = ">=")]
    AtLeast,
}

impl Relation {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Self::AtMost => value <= threshold,
            Self::Below => value < threshold,
            Self::AtLeast => value >= threshold,
        }
    }
}

/// `value relation threshold`, with the outcome stored alongside.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub passed: bool,
}

impl Verdict {
    pub fn new(name: &str, value: f64, relation: Relation, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation,
            threshold,
            passed: relation.holds(value, threshold),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Header {
    pub command: String,
    pub outcome: String,
    pub seed: u64,
    pub verdicts_passed: usize,
    pub verdicts_total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearSection {
    pub conclusion: String,
    pub horizon_length: f64,
    pub m: f64,
    pub h_norm: f64,
    pub h_samples: usize,
    pub gramian_min: f64,
    pub gramian_max: f64,
    pub gramian: Vec<f64>,
    pub gamma_gram: f64,
    pub trials: usize,
    pub min_margin: f64,
    pub mode_ratio: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthesisSection {
    pub initial_norm: f64,
    pub final_state_norm: f64,
    pub simulated_final_state_norm: f64,
    pub control_norm: f64,
    pub time_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSection {
    pub operator: String,
    pub converged: bool,
    pub iterations: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub damping: f64,
    pub final_state_norm: f64,
    pub control_norm: f64,
    pub fixed_point_residual: f64,
    pub nonlocal_defect: f64,
    pub residual_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestSection {
    pub instances_per_rule: usize,
    pub checks_passed: usize,
    pub checks_total: usize,
    pub checks: Vec<RuleCheck>,
}

/// Machine-readable run summary. Every `passed` flag is recomputable from
/// the numbers stored next to it; the resolved config is embedded last.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub report: Header,
    pub verdicts: Vec<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linear: Option<LinearSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthesis: Option<SynthesisSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sufficiency: Option<SufficiencyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selftest: Option<SelftestSection>,
    pub config: ScenarioConfig,
}

impl Report {
    pub fn new(command: &str, config: ScenarioConfig, verdicts: Vec<Verdict>) -> Self {
        let passed = verdicts.iter().filter(|v| v.passed).count();
        let total = verdicts.len();
        Self {
            report: Header {
                command: command.into(),
                outcome: if passed == total { "pass" } else { "fail" }.into(),
                seed: config.numerics.seed,
                verdicts_passed: passed,
                verdicts_total: total,
            },
            verdicts,
            linear: None,
            synthesis: None,
            solve: None,
            sufficiency: None,
            selftest: None,
            config,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calculus::{FractionalOrder, ScalarFunction};
use crate::control::{ControlHorizon, Propagator, MIN_TIME_NODES};
use crate::error::{Error, Result};
use crate::mild::{DelaySpec, NonlinearitySpec, NonlocalProblem, NonlocalSpec};
use crate::spectral::{project, EvolutionSystem, SpectralState};

/// A complete scenario, as read from a TOML document.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub horizon: HorizonSection,
    #[serde(default)]
    pub nonlocal: NonlocalSpec,
    #[serde(default)]
    pub nonlinearity: NonlinearitySpec,
    #[serde(default)]
    pub delay: DelaySpec,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    #[serde(default = "defaults::alpha")]
    pub alpha: f64,
    #[serde(default = "defaults::modes")]
    pub modes: usize,
    #[serde(default = "defaults::potential")]
    pub potential: ScalarFunction,
    #[serde(default)]
    pub x0: InitialState,
}

/// Initial datum `x₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// Sine coefficients; missing trailing modes are zero.
    Coefficients { values: Vec<f64> },
    /// Samples of `x₀(x)` on a uniform grid of `[0, π]`, endpoints included.
    Samples { values: Vec<f64> },
}

impl Default for InitialState {
    fn default() -> Self {
        Self::Coefficients { values: vec![1.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonSection {
    /// Defaults to `1e-6 * t_end`.
    #[serde(default)]
    pub zeta: Option<f64>,
    #[serde(default = "defaults::t_end", alias = "tEnd")]
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    #[serde(default = "defaults::time_nodes")]
    pub time_nodes: usize,
    #[serde(default = "defaults::tol")]
    pub tol: f64,
    #[serde(default = "defaults::max_iter", alias = "maxIter")]
    pub max_iter: usize,
    #[serde(default = "defaults::seed")]
    pub seed: u64,
    /// Random unit states for the observability inequality.
    #[serde(default = "defaults::trials")]
    pub trials: usize,
    /// Random inputs for the `‖H‖` estimate.
    #[serde(default = "defaults::norm_samples")]
    pub norm_samples: usize,
    /// Iterate `Q_n` instead of `Q`.
    #[serde(default)]
    pub approximant: Option<usize>,
    #[serde(default)]
    pub damping: Option<f64>,
    /// Random instances per rule in `calculus-selftest`.
    #[serde(default = "defaults::selftest_instances")]
    pub selftest_instances: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "defaults::report")]
    pub report: String,
    #[serde(default = "defaults::trajectory")]
    pub trajectory: String,
}

mod defaults {
    use crate::calculus::ScalarFunction;

    pub fn alpha() -> f64 {
        1.0
    }
    pub fn modes() -> usize {
        crate::spectral::DEFAULT_MODES
    }
    pub fn potential() -> ScalarFunction {
        ScalarFunction::constant(0.0)
    }
    pub fn t_end() -> f64 {
        1.0
    }
    pub fn time_nodes() -> usize {
        crate::control::DEFAULT_TIME_NODES
    }
    pub fn tol() -> f64 {
        1e-10
    }
    pub fn max_iter() -> usize {
        200
    }
    pub fn seed() -> u64 {
        42
    }
    pub fn trials() -> usize {
        500
    }
    pub fn norm_samples() -> usize {
        crate::control::DEFAULT_NORM_SAMPLES
    }
    pub fn selftest_instances() -> usize {
        crate::calculus::selftest::DEFAULT_INSTANCES
    }
    pub fn report() -> String {
        "report.toml".into()
    }
    pub fn trajectory() -> String {
        "trajectory.csv".into()
    }
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            alpha: defaults::alpha(),
            modes: defaults::modes(),
            potential: defaults::potential(),
            x0: InitialState::default(),
        }
    }
}

impl Default for HorizonSection {
    fn default() -> Self {
        Self {
            zeta: None,
            t_end: defaults::t_end(),
        }
    }
}

impl Default for NumericsSection {
    fn default() -> Self {
        Self {
            time_nodes: defaults::time_nodes(),
            tol: defaults::tol(),
            max_iter: defaults::max_iter(),
            seed: defaults::seed(),
            trials: defaults::trials(),
            norm_samples: defaults::norm_samples(),
            approximant: None,
            damping: None,
            selftest_instances: defaults::selftest_instances(),
        }
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            report: defaults::report(),
            trajectory: defaults::trajectory(),
        }
    }
}

#[derive(Deserialize)]
struct ReportEnvelope {
    config: ScenarioConfig,
}

impl ScenarioConfig {
    /// Parses a config document, or the `[config]` table of a report.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let value: toml::Table = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut config: Self = if value.contains_key("report") && value.contains_key("config") {
            toml::from_str::<ReportEnvelope>(text)
                .map_err(|e| Error::Parse(e.to_string()))?
                .config
        } else {
            toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?
        };
        config.apply_defaults();
        config.validate()?;
        Ok(config)
    }

    /// Resolves defaults that depend on other fields.
    pub fn apply_defaults(&mut self) {
        if self.horizon.zeta.is_none() {
            self.horizon.zeta = Some(1e-6 * self.horizon.t_end);
        }
    }

    pub fn zeta(&self) -> f64 {
        self.horizon.zeta.unwrap_or(1e-6 * self.horizon.t_end)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Every violated precondition, each prefixed with its field path.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut push = |path: &str, msg: String| out.push(format!("{path}: {msg}"));
        let sys = &self.system;
        if !(sys.alpha > 0.0 && sys.alpha <= 1.0) {
            push("system.alpha", format!("alpha must lie in (0,1], got {}", sys.alpha));
        }
        if sys.modes == 0 {
            push("system.modes", "modes must be at least 1".into());
        }
        if let Err(e) = sys.potential.validate() {
            push("system.potential", e.to_string());
        }
        match &sys.x0 {
            InitialState::Coefficients { values } => {
                if values.len() > sys.modes {
                    push(
                        "system.x0.values",
                        format!("{} coefficients exceed modes = {}", values.len(), sys.modes),
                    );
                }
                if values.iter().any(|v| !v.is_finite()) {
                    push("system.x0.values", "coefficients must be finite".into());
                }
            }
            InitialState::Samples { values } => {
                if values.len() < 4 * sys.modes.max(1) {
                    push(
                        "system.x0.values",
                        format!("{} samples cannot resolve {} modes (need {})", values.len(), sys.modes, 4 * sys.modes),
                    );
                }
            }
        }
        let t_end = self.horizon.t_end;
        let zeta = self.zeta();
        if !(t_end > 0.0 && t_end.is_finite()) {
            push("horizon.t_end", format!("tEnd must be positive, got {t_end}"));
        }
        if !(zeta > 0.0) {
            push("horizon.zeta", format!("zeta must be positive, got {zeta}"));
        } else if !(zeta < t_end) {
            push("horizon.zeta", format!("zeta must be below tEnd = {t_end}, got {zeta}"));
        }
        if zeta > 0.0 && zeta < t_end {
            let (lo, hi) = sys.potential.support();
            if zeta < lo || t_end > hi {
                push(
                    "system.potential",
                    format!("defined on [{lo}, {hi}], which does not cover the horizon [{zeta}, {t_end}]"),
                );
            }
            for m in self.nonlocal.violations(zeta, t_end) {
                push("nonlocal", m);
            }
        }
        for m in self.nonlinearity.violations() {
            push("nonlinearity", m);
        }
        for m in self.delay.violations() {
            push("delay", m);
        }
        let num = &self.numerics;
        if num.time_nodes < MIN_TIME_NODES {
            push(
                "numerics.time_nodes",
                format!("at least {MIN_TIME_NODES} time nodes required, got {}", num.time_nodes),
            );
        }
        if num.seed > i64::MAX as u64 {
            push("numerics.seed", format!("seed must be at most {}, got {}", i64::MAX, num.seed));
        }
        if !(num.tol > 0.0) {
            push("numerics.tol", format!("tol must be positive, got {}", num.tol));
        }
        if num.max_iter == 0 {
            push("numerics.max_iter", "maxIter must be at least 1".into());
        }
        if num.trials == 0 {
            push("numerics.trials", "trials must be at least 1".into());
        }
        if num.norm_samples == 0 {
            push("numerics.norm_samples", "norm_samples must be at least 1".into());
        }
        if num.selftest_instances == 0 {
            push("numerics.selftest_instances", "selftest_instances must be at least 1".into());
        }
        if let Some(n) = num.approximant {
            if n == 0 {
                push("numerics.approximant", "approximant index must be at least 1".into());
            } else if zeta > 0.0 && (n as f64 + 1.0) * zeta / n as f64 > t_end {
                push("numerics.approximant", format!("(n+1)zeta/n exceeds tEnd for n = {n}"));
            }
        }
        if let Some(w) = num.damping {
            if !(w > 0.0 && w <= 1.0) {
                push("numerics.damping", format!("damping must lie in (0,1], got {w}"));
            }
        }
        for (path, name) in [("output.report", &self.output.report), ("output.trajectory", &self.output.trajectory)] {
            if name.is_empty() {
                push(path, "file name must not be empty".into());
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    pub fn order(&self) -> Result<FractionalOrder> {
        FractionalOrder::new(self.system.alpha)
    }

    pub fn system(&self) -> Result<EvolutionSystem> {
        EvolutionSystem::new(
            self.order()?,
            self.system.modes,
            self.system.potential.clone(),
            self.zeta(),
            self.horizon.t_end,
        )
    }

    pub fn propagator(&self) -> Result<Propagator> {
        let sys = self.system()?;
        let horizon = ControlHorizon::for_system(&sys, self.numerics.time_nodes)?;
        Propagator::new(&sys, &horizon)
    }

    pub fn initial_state(&self) -> Result<SpectralState> {
        let modes = self.system.modes;
        match &self.system.x0 {
            InitialState::Coefficients { values } => {
                if values.len() > modes {
                    return Err(Error::Shape(format!("{} coefficients exceed {modes} modes", values.len())));
                }
                let mut coeffs = values.clone();
                coeffs.resize(modes, 0.0);
                Ok(SpectralState::new(coeffs))
            }
            InitialState::Samples { values } => project(values, modes),
        }
    }

    pub fn problem(&self) -> Result<NonlocalProblem> {
        NonlocalProblem::new(
            self.propagator()?,
            self.initial_state()?,
            self.nonlocal.clone(),
            self.nonlinearity,
            self.delay,
        )
    }
}

/// Reads and validates a scenario file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    ScenarioConfig::from_toml_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "
[system]
alpha = 1.0
modes = 8

[horizon]
zeta = 1e-6
t_end = 1.0
";

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ScenarioConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.system.modes, 8);
        assert_eq!(cfg.numerics.seed, 42);
        assert_eq!(cfg.numerics.time_nodes, 256);
        assert_eq!(cfg.nonlinearity, NonlinearitySpec::Zero);
        assert_eq!(cfg.delay, DelaySpec::Identity);
        assert_eq!(cfg.initial_state().unwrap(), SpectralState::unit(8, 1));
    }

    #[test]
    fn empty_document_is_valid() {
        let cfg = ScenarioConfig::from_toml_str("").unwrap();
        assert_eq!(cfg.zeta(), 1e-6);
    }

    #[test]
    fn alpha_out_of_range() {
        let err = ScenarioConfig::from_toml_str("[system]\nalpha = 1.5\n").unwrap_err();
        let Error::Validation(msgs) = err else { panic!("{err:?}") };
        assert!(msgs.iter().any(|m| m.contains("alpha must lie in (0,1]")));
    }

    #[test]
    fn nonlocal_time_before_zeta() {
        let text = "[horizon]\nzeta = 0.1\n[nonlocal]\nweights = [0.1]\ntimes = [0.05]\n";
        let Error::Validation(msgs) = ScenarioConfig::from_toml_str(text).unwrap_err() else {
            panic!()
        };
        assert!(msgs.iter().any(|m| m.starts_with("nonlocal")), "{msgs:?}");
    }

    #[test]
    fn all_violations_are_reported() {
        let text = "[system]\nalpha = 0.0\nmodes = 0\n[numerics]\ntol = -1.0\ntime_nodes = 8\n";
        let Error::Validation(msgs) = ScenarioConfig::from_toml_str(text).unwrap_err() else {
            panic!()
        };
        for path in ["system.alpha", "system.modes", "numerics.tol", "numerics.time_nodes"] {
            assert!(msgs.iter().any(|m| m.starts_with(path)), "missing {path}: {msgs:?}");
        }
    }

    #[test]
    fn parse_error_carries_line() {
        let err = ScenarioConfig::from_toml_str("[system]\nalpha = = 1\n").unwrap_err();
        let Error::Parse(msg) = err else { panic!("{err:?}") };
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(matches!(
            ScenarioConfig::from_toml_str("[system]\nalhpa = 0.5\n"),
            Err(Error::Parse(_))
        ));
    }
}

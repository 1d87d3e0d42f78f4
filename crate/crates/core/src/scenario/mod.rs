//! Config-driven runs: load a scenario, execute one command, write a report
//! and, where applicable, a trajectory file.

pub mod config;
pub mod report;
pub mod table;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use config::{load_config, HorizonSection, InitialState, NumericsSection, OutputSection, ScenarioConfig, SystemSection};
pub use report::{Relation, Report, Verdict};
pub use table::{format_trajectory, parse_trajectory, read_trajectory, write_trajectory, TrajectoryTable};

use crate::calculus::selftest::run_rule_suite;
use crate::control::{
    check_null_controllable, gramian, operator_norm_h, simulate_linear, synthesize_control, ControlSignal,
    NormSampling, Propagator, SimulationOptions, RANK_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::mild::{
    check_sufficient_condition, default_damping, eval_g, solve_iteration, FixedPointOperator, NonlinearitySpec,
    NonlocalSpec, SolveOptions, Trajectory,
};
use report::{LinearSection, SelftestSection, SolveSection, SynthesisSection};

/// Bound on `‖x(t₂)‖ / (1 + ‖x₀‖)` for the propagated trajectory.
pub const FINAL_STATE_TOLERANCE: f64 = 1e-8;
/// Bound on `‖x(t₂)‖ / (1 + ‖x₀‖)` for the independent RK4 simulation.
pub const SIMULATED_FINAL_STATE_TOLERANCE: f64 = 1e-6;
pub const NONLOCAL_TOLERANCE: f64 = 1e-6;

const STREAM_OBSERVABILITY: u64 = 1;
const STREAM_NORM: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    VerifyLinear,
    Synthesize,
    Solve,
    CalculusSelftest,
}

impl Command {
    pub const ALL: [Command; 4] = [Self::VerifyLinear, Self::Synthesize, Self::Solve, Self::CalculusSelftest];

    pub fn name(self) -> &'static str {
        match self {
            Self::VerifyLinear => "verify-linear",
            Self::Synthesize => "synthesize",
            Self::Solve => "solve",
            Self::CalculusSelftest => "calculus-selftest",
        }
    }

    fn writes_trajectory(self) -> bool {
        matches!(self, Self::Synthesize | Self::Solve)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Validation(vec![format!("command: unknown command {s:?}")]))
    }
}

/// Report plus the trajectory and control behind it, if any.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: Report,
    pub trajectory: Option<(Trajectory, ControlSignal)>,
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn linear_section(cfg: &ScenarioConfig, prop: &Propagator) -> Result<LinearSection> {
    let w = gramian(prop);
    let m = prop.system().operator_norm_bound()?;
    let obs = check_null_controllable(prop, cfg.numerics.trials, &mut rng(cfg.numerics.seed, STREAM_OBSERVABILITY))?;
    let h = operator_norm_h(
        prop,
        cfg.numerics.norm_samples,
        NormSampling::Full,
        &mut rng(cfg.numerics.seed, STREAM_NORM),
    )?;
    let controllable = obs.holds && w.check_rank().is_ok();
    Ok(LinearSection {
        conclusion: if controllable { "null controllable" } else { "not established" }.into(),
        horizon_length: prop.horizon().length(),
        m,
        h_norm: h.value,
        h_samples: h.samples,
        gramian_min: w.min(),
        gramian_max: w.max(),
        gramian: w.diag.clone(),
        gamma_gram: obs.gamma_gram,
        trials: obs.trials,
        min_margin: obs.min_margin,
        mode_ratio: obs.mode_ratio,
    })
}

fn linear_verdicts(lin: &LinearSection) -> Vec<Verdict> {
    vec![
        Verdict::new("gramian_rank", lin.gramian_min / lin.gramian_max, Relation::AtLeast, RANK_THRESHOLD),
        Verdict::new("observability_margin", lin.min_margin, Relation::AtLeast, 0.0),
    ]
}

fn run_verify_linear(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let prop = cfg.propagator()?;
    let lin = linear_section(cfg, &prop)?;
    let mut report = Report::new(Command::VerifyLinear.name(), cfg.clone(), linear_verdicts(&lin));
    report.linear = Some(lin);
    Ok(RunOutput { report, trajectory: None })
}

fn run_synthesize(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let prop = cfg.propagator()?;
    let x0 = cfg.initial_state()?;
    let h = ControlSignal::zeros(prop.modes(), prop.nodes());
    let u = synthesize_control(&prop, &x0, &h)?;
    let states = prop.propagate(&x0, &u)?;
    let traj = Trajectory::new(prop.horizon().grid().nodes().to_vec(), states)?;
    let simulated = simulate_linear(&prop, &x0, &h, &u, SimulationOptions::default())?;
    let scale = 1.0 + x0.norm();
    let section = SynthesisSection {
        initial_norm: x0.norm(),
        final_state_norm: traj.final_state().norm(),
        simulated_final_state_norm: simulated.norm(),
        control_norm: prop.signal_norm(&u)?,
        time_nodes: prop.nodes(),
    };
    let verdicts = vec![
        Verdict::new(
            "final_state",
            section.final_state_norm,
            Relation::AtMost,
            FINAL_STATE_TOLERANCE * scale,
        ),
        Verdict::new(
            "simulated_final_state",
            section.simulated_final_state_norm,
            Relation::AtMost,
            SIMULATED_FINAL_STATE_TOLERANCE * scale,
        ),
    ];
    let mut report = Report::new(Command::Synthesize.name(), cfg.clone(), verdicts);
    report.synthesis = Some(section);
    Ok(RunOutput {
        report,
        trajectory: Some((traj, u)),
    })
}

fn run_solve(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let problem = cfg.problem()?;
    let num = &cfg.numerics;
    let operator = match num.approximant {
        Some(n) => FixedPointOperator::Approximant(n),
        None => FixedPointOperator::Exact,
    };
    let options = SolveOptions {
        tol: num.tol,
        max_iter: num.max_iter,
        damping: num.damping,
        operator,
        norm_samples: num.norm_samples,
        seed: num.seed,
    };
    let suff = check_sufficient_condition(&problem, num.norm_samples, num.seed)?;
    let damping = num.damping.unwrap_or_else(|| default_damping(suff.value));
    let run = solve_iteration(&problem, &options, damping)?;

    let mut g = eval_g(&problem.nonlocal, &run.solution, problem.modes())?;
    if let FixedPointOperator::Approximant(n) = operator {
        let factors = problem.smoothing_factors(n)?;
        for (gi, fi) in g.coeffs_mut().iter_mut().zip(factors.coeffs()) {
            *gi *= fi;
        }
    }
    let defect = (&(run.solution.initial_state() + &g) - &problem.x0).norm();
    let lin = linear_section(cfg, &problem.prop)?;
    let section = SolveSection {
        operator: match operator {
            FixedPointOperator::Exact => "exact".into(),
            FixedPointOperator::Approximant(n) => format!("approximant({n})"),
        },
        converged: run.converged,
        iterations: run.iterations,
        max_iter: num.max_iter,
        tol: num.tol,
        damping: run.damping,
        final_state_norm: run.final_state_norm,
        control_norm: problem.prop.signal_norm(&run.control)?,
        fixed_point_residual: run.fixed_point_residual,
        nonlocal_defect: defect,
        residual_history: run.residual_history.clone(),
    };
    let mut verdicts = vec![
        Verdict::new("sufficiency", suff.value, Relation::Below, 1.0),
        Verdict::new(
            "fixed_point_residual",
            run.fixed_point_residual,
            Relation::AtMost,
            2.0 * num.tol,
        ),
        Verdict::new(
            "final_state",
            run.final_state_norm,
            Relation::AtMost,
            FINAL_STATE_TOLERANCE * (1.0 + problem.x0.norm()),
        ),
        Verdict::new("nonlocal_consistency", defect, Relation::AtMost, NONLOCAL_TOLERANCE),
    ];
    verdicts.extend(linear_verdicts(&lin));
    let mut report = Report::new(Command::Solve.name(), cfg.clone(), verdicts);
    report.linear = Some(lin);
    report.sufficiency = Some(suff);
    report.solve = Some(section);
    Ok(RunOutput {
        report,
        trajectory: Some((run.solution, run.control)),
    })
}

fn run_selftest(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let summary = run_rule_suite(cfg.numerics.seed, cfg.numerics.selftest_instances)?;
    let verdicts = summary
        .checks
        .iter()
        .map(|c| Verdict::new(&c.name, c.max_deviation, Relation::AtMost, c.tolerance))
        .collect();
    let mut report = Report::new(Command::CalculusSelftest.name(), cfg.clone(), verdicts);
    report.selftest = Some(SelftestSection {
        instances_per_rule: summary.instances_per_rule,
        checks_passed: summary.passed(),
        checks_total: summary.checks.len(),
        checks: summary.checks,
    });
    Ok(RunOutput { report, trajectory: None })
}

/// Executes `command` on a validated config.
pub fn run(config: &ScenarioConfig, command: Command) -> Result<RunOutput> {
    let mut cfg = config.clone();
    cfg.apply_defaults();
    cfg.validate()?;
    match command {
        Command::VerifyLinear => run_verify_linear(&cfg),
        Command::Synthesize => run_synthesize(&cfg),
        Command::Solve => run_solve(&cfg),
        Command::CalculusSelftest => run_selftest(&cfg),
    }
}

/// Files produced by [`execute`].
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub report_path: PathBuf,
    pub trajectory_path: Option<PathBuf>,
    pub timing_path: PathBuf,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.report.all_passed() {
            0
        } else {
            3
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

/// Runs `command` and writes the report, the trajectory (for `synthesize`
/// and `solve`) and a separate timing file into `out_dir`.
pub fn execute(config: &ScenarioConfig, command: Command, out_dir: &Path) -> Result<Outcome> {
    let started = Instant::now();
    let output = run(config, command)?;
    let elapsed = started.elapsed().as_secs_f64();
    fs::create_dir_all(out_dir).map_err(|e| io_error(out_dir, e))?;
    let cfg = &output.report.config;
    let report_path = out_dir.join(&cfg.output.report);
    fs::write(&report_path, output.report.to_toml_string()?).map_err(|e| io_error(&report_path, e))?;
    let trajectory_path = match (&output.trajectory, command.writes_trajectory()) {
        (Some((traj, control)), true) => {
            let path = out_dir.join(&cfg.output.trajectory);
            write_trajectory(traj, control, &path)?;
            Some(path)
        }
        _ => None,
    };
    let timing_path = out_dir.join("timing.toml");
    let timing = format!("command = \"{command}\"\nwall_time_seconds = {elapsed}\n");
    fs::write(&timing_path, timing).map_err(|e| io_error(&timing_path, e))?;
    Ok(Outcome {
        report: output.report,
        report_path,
        trajectory_path,
        timing_path,
    })
}

/// Built-in scenarios, by name.
pub mod builtin {
    use super::*;
    use crate::calculus::ScalarFunction;

    pub const NAMES: [&str; 5] = ["heat-default", "semilinear", "fractional-half", "delayed-tanh", "forced-failure"];

    /// `α = 1`, `p ≡ 0`, horizon `[1e-6, 1]`, `x₀ = e₁`.
    pub fn heat_default() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::default();
        cfg.apply_defaults();
        cfg
    }

    /// Two-point nonlocal condition with `Σ|cᵢ| = 0.1` and `F = 0.1 sin`.
    pub fn semilinear() -> ScenarioConfig {
        let mut cfg = heat_default();
        cfg.system.x0 = InitialState::Coefficients {
            values: vec![1.0, -0.5, 0.25],
        };
        cfg.nonlocal = NonlocalSpec::new(vec![0.06, 0.04], vec![0.3, 0.7]);
        cfg.nonlinearity = NonlinearitySpec::ScaledSin { constant: 0.1 };
        cfg
    }

    pub fn fractional_half() -> ScenarioConfig {
        let mut cfg = semilinear();
        cfg.system.alpha = 0.5;
        cfg.system.potential = ScalarFunction::constant(0.5);
        cfg.horizon.zeta = Some(0.01);
        cfg
    }

    pub fn delayed_tanh() -> ScenarioConfig {
        let mut cfg = semilinear();
        cfg.nonlinearity = NonlinearitySpec::ScaledTanh { constant: 0.2 };
        cfg.delay = crate::mild::DelaySpec::ConstantLag { lag: 0.1 };
        cfg
    }

    /// Linear forcing strong enough to break the sufficiency condition.
    pub fn forced_failure() -> ScenarioConfig {
        let mut cfg = semilinear();
        cfg.nonlinearity = NonlinearitySpec::Linear { constant: 5.0 };
        cfg.numerics.max_iter = 40;
        cfg
    }

    pub fn get(name: &str) -> Option<ScenarioConfig> {
        Some(match name {
            "heat-default" => heat_default(),
            "semilinear" => semilinear(),
            "fractional-half" => fractional_half(),
            "delayed-tanh" => delayed_tanh(),
            "forced-failure" => forced_failure(),
            _ => return None,
        })
    }
}

use std::fs;
use std::io::Write;
use std::process::Command as Process;
use std::time::Instant;

use fracnull::calculus::selftest::run_rule_suite;
use fracnull::calculus::{FractionalOrder, ScalarFunction};
use fracnull::control::{
    check_null_controllable, gramian, simulate_linear, synthesize_control, ControlHorizon, ControlSignal, Propagator,
    SimulationOptions,
};
use fracnull::mild::{eval_g, solve, FixedPointOperator, SolveOptions};
use fracnull::scenario::{builtin, run, Command, ScenarioConfig};
use fracnull::spectral::{EvolutionSystem, SpectralState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

/// Written straight to the stderr handle so the line survives output capture.
fn report(id: usize, title: &str, o: &Outcome) {
    let status = if o.passed { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    writeln!(err, "[acceptance] criterion {id} {status}: {title} ({})", o.detail).unwrap();
}

fn check(id: usize, title: &str, f: impl FnOnce() -> Outcome) {
    let o = f();
    report(id, title, &o);
    assert!(o.passed, "criterion {id} failed: {}", o.detail);
}

fn order(alpha: f64) -> FractionalOrder {
    FractionalOrder::new(alpha).unwrap()
}

fn default_propagator() -> Propagator {
    let sys = EvolutionSystem::heat(order(1.0), 16, 1.0).unwrap();
    let horizon = ControlHorizon::for_system(&sys, 256).unwrap();
    Propagator::new(&sys, &horizon).unwrap()
}

#[test]
fn criterion_1_calculus_rules() {
    check(1, "calculus rule suite against the limit oracle", || {
        let started = Instant::now();
        let summary = run_rule_suite(42, 24).unwrap();
        let elapsed = started.elapsed().as_secs_f64();
        let required = [
            "linearity",
            "constant",
            "product",
            "quotient",
            "classical-weight",
            "chain",
            "leibniz",
        ];
        let covered = required
            .iter()
            .all(|r| summary.checks.iter().any(|c| c.name.starts_with(r) && c.instances >= 20));
        let oracle_ok = summary
            .checks
            .iter()
            .filter(|c| c.name.ends_with("/oracle"))
            .all(|c| c.passed && c.max_deviation <= 1e-4);
        let analytic_ok = summary
            .checks
            .iter()
            .filter(|c| c.name.ends_with("/analytic"))
            .all(|c| c.passed && c.max_deviation <= 1e-8);
        let worst = summary.checks.iter().map(|c| c.max_deviation).fold(0.0, f64::max);
        outcome(
            covered && oracle_ok && analytic_ok && summary.all_passed() && elapsed < 5.0,
            format!(
                "{}/{} checks, worst deviation {worst:.2e}, {elapsed:.2}s",
                summary.passed(),
                summary.checks.len()
            ),
        )
    });
}

#[test]
fn criterion_2_evolution_laws() {
    check(2, "evolution identity, composition and adjoint symmetry", || {
        let started = Instant::now();
        let potential = ScalarFunction::Sinusoid { amplitude: 0.8, frequency: 3.0, phase: 0.4 };
        let sys = EvolutionSystem::new(order(0.7), 16, potential, 0.01, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut identity_ok = true;
        let mut worst = 0.0f64;
        let mut adjoint_ok = true;
        let z = SpectralState::new((0..16).map(|_| rng.sample(StandardNormal)).collect());
        for _ in 0..100 {
            let mut ts: Vec<f64> = (0..3).map(|_| rng.random_range(0.01..2.0)).collect();
            ts.sort_by(f64::total_cmp);
            let (tau, s, t) = (ts[0], ts[1], ts[2]);
            for n in 1..=16 {
                identity_ok &= sys.evolution_factor(n, s, s).unwrap() == 1.0;
                let composed = sys.evolution_factor(n, t, s).unwrap() * sys.evolution_factor(n, s, tau).unwrap();
                worst = worst.max((composed - sys.evolution_factor(n, t, tau).unwrap()).abs());
            }
            adjoint_ok &= sys.apply_adjoint(t, s, &z).unwrap() == sys.apply_evolution(t, s, &z).unwrap();
        }
        let elapsed = started.elapsed().as_secs_f64();
        outcome(
            identity_ok && adjoint_ok && worst <= 1e-12 && elapsed < 1.0,
            format!("composition error {worst:.2e}, {elapsed:.3}s"),
        )
    });
}

#[test]
fn criterion_3_gramian_closed_forms() {
    check(3, "Gramian closed forms", || {
        let w1 = gramian(&default_propagator()).entry(1);
        let classical = (1.0 - (-2.0f64).exp()) / 2.0;

        let sys = EvolutionSystem::new(order(0.5), 4, ScalarFunction::constant(0.0), 1.0, 4.0).unwrap();
        let horizon = ControlHorizon::for_system(&sys, 256).unwrap();
        let half = gramian(&Propagator::new(&sys, &horizon).unwrap()).entry(1);
        let transformed = (1.0 - (-4.0f64).exp()) / 2.0;

        let (e1, e2) = ((w1 - classical).abs(), (half - transformed).abs());
        outcome(e1 <= 1e-6 && e2 <= 1e-6, format!("alpha=1 error {e1:.2e}, alpha=0.5 error {e2:.2e}"))
    });
}

#[test]
fn criterion_4_linear_null_transfer() {
    check(4, "linear null transfer on 100 random (z0, h)", || {
        let started = Instant::now();
        let prop = default_propagator();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut worst = 0.0f64;
        let mut all = true;
        for _ in 0..100 {
            let scale = rng.random_range(0.1..10.0);
            let z0 = SpectralState::new((0..16).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect());
            let h = ControlSignal::from_fn(16, prop.nodes(), |_, _| rng.sample(StandardNormal));
            let u = synthesize_control(&prop, &z0, &h).unwrap();
            let end = simulate_linear(&prop, &z0, &h, &u, SimulationOptions::default()).unwrap();
            let ratio = end.norm() / (1.0 + z0.norm());
            worst = worst.max(ratio);
            all &= ratio <= 1e-6;
        }
        let elapsed = started.elapsed().as_secs_f64();
        outcome(
            all && elapsed < 10.0,
            format!("worst |z(T)|/(1+|z0|) = {worst:.2e}, {elapsed:.2}s"),
        )
    });
}

#[test]
fn criterion_5_observability_inequality() {
    check(5, "observability inequality with gamma = T/(T+1)", || {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let r = check_null_controllable(&default_propagator(), 500, &mut rng).unwrap();
        outcome(
            r.holds && r.trials == 500,
            format!("min margin {:.3e} over {} trials, gamma {:.6}", r.min_margin, r.trials, r.gamma_gram),
        )
    });
}

fn solve_options(cfg: &ScenarioConfig, operator: FixedPointOperator) -> SolveOptions {
    SolveOptions {
        tol: cfg.numerics.tol,
        max_iter: cfg.numerics.max_iter,
        damping: None,
        operator,
        norm_samples: cfg.numerics.norm_samples,
        seed: cfg.numerics.seed,
    }
}

#[test]
fn criterion_6_semilinear_solve() {
    check(6, "semilinear nonlocal solve", || {
        let cfg = builtin::semilinear();
        let problem = cfg.problem().unwrap();
        let sol = solve(&problem, &solve_options(&cfg, FixedPointOperator::Exact)).unwrap();
        let run = &sol.run;
        let passed = sol.sufficiency.value <= 0.9
            && run.converged
            && run.iterations <= 200
            && run.final_state_norm <= 1e-6
            && run.fixed_point_residual <= 2.0 * cfg.numerics.tol;
        outcome(
            passed,
            format!(
                "sufficiency {:.4}, {} iterations, final {:.2e}, residual {:.2e}",
                sol.sufficiency.value, run.iterations, run.final_state_norm, run.fixed_point_residual
            ),
        )
    });
}

#[test]
fn criterion_7_approximants_converge() {
    check(7, "Q_n solutions approach the Q solution", || {
        let mut cfg = builtin::semilinear();
        cfg.horizon.zeta = Some(0.1);
        cfg.numerics.tol = 1e-12;
        let problem = cfg.problem().unwrap();
        let exact = solve(&problem, &solve_options(&cfg, FixedPointOperator::Exact)).unwrap();
        let distances: Vec<f64> = [10, 100, 1000]
            .into_iter()
            .map(|n| {
                let approx = solve(&problem, &solve_options(&cfg, FixedPointOperator::Approximant(n))).unwrap();
                approx.run.solution.sup_distance(&exact.run.solution).unwrap()
            })
            .collect();
        let monotone = distances.windows(2).all(|w| w[1] < w[0]);
        outcome(
            monotone && distances[2] <= 1e-3,
            format!("distances {:.2e}, {:.2e}, {:.2e}", distances[0], distances[1], distances[2]),
        )
    });
}

#[test]
fn criterion_8_nonlocal_consistency() {
    check(8, "x(zeta) + g(x) = x0 at converged solutions", || {
        let mut worst = 0.0f64;
        for cfg in [builtin::semilinear(), builtin::fractional_half(), builtin::delayed_tanh()] {
            let problem = cfg.problem().unwrap();
            let sol = solve(&problem, &solve_options(&cfg, FixedPointOperator::Exact)).unwrap();
            let g = eval_g(&problem.nonlocal, &sol.run.solution, problem.modes()).unwrap();
            let defect = (&(sol.run.solution.initial_state() + &g) - &problem.x0).norm();
            worst = worst.max(defect);
        }
        outcome(worst <= 1e-6, format!("worst defect {worst:.2e} over 3 scenarios"))
    });
}

fn write_config(dir: &std::path::Path, name: &str, cfg: &ScenarioConfig) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, cfg.to_toml_string().unwrap()).unwrap();
    path
}

#[test]
fn criterion_9_cli_determinism_and_exit_status() {
    check(9, "CLI determinism and exit-status contract", || {
        let bin = env!("CARGO_BIN_EXE_fracnull");
        let dir = tempfile::tempdir().unwrap();
        let pass_cfg = write_config(dir.path(), "pass.toml", &builtin::semilinear());
        let fail_cfg = write_config(dir.path(), "fail.toml", &builtin::forced_failure());
        let invoke = |cfg: &std::path::Path, out: &str| {
            let out = dir.path().join(out);
            let status = Process::new(bin)
                .args(["--config", cfg.to_str().unwrap(), "--command", "solve", "--seed", "7", "--out"])
                .arg(&out)
                .output()
                .unwrap()
                .status;
            (status.code(), fs::read(out.join("report.toml")).ok())
        };
        let (code_a, report_a) = invoke(&pass_cfg, "a");
        let (code_b, report_b) = invoke(&pass_cfg, "b");
        let (code_fail, report_fail) = invoke(&fail_cfg, "fail");
        let identical = report_a.is_some() && report_a == report_b;

        let failing_verdict = report_fail
            .map(|r| String::from_utf8(r).unwrap().contains("passed = false"))
            .unwrap_or(false);
        let in_process = run(&builtin::forced_failure(), Command::Solve).unwrap();
        let contract = code_a == Some(0) && code_b == Some(0) && code_fail == Some(3) && failing_verdict && !in_process.report.all_passed();
        outcome(
            identical && contract,
            format!("identical reports: {identical}, exit codes pass {code_a:?} / fail {code_fail:?}"),
        )
    });
}

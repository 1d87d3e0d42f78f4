use fracnull_wasm::{conformable_derivative_pair, evolution_curves, null_control};

#[test]
fn evolution_curves_layout() {
    let rows = evolution_curves(1.0, 0.0, 3, 0.5, 1.5, 11).unwrap();
    assert_eq!(rows.len(), 11 * 4);
    assert_eq!(&rows[..4], &[0.5, 1.0, 1.0, 1.0]);
    let last = &rows[40..];
    assert_eq!(last[0], 1.5);
    for n in 1..=3 {
        let expected = (-((n * n) as f64)).exp();
        assert!((last[n] - expected).abs() < 1e-12);
    }
}

#[test]
fn null_control_reaches_zero() {
    let run = null_control(1.0, 0.0, 1e-6, 1.0, vec![1.0, -0.5, 0.25], 128).unwrap();
    assert_eq!(run.times().len(), 128);
    assert!((run.state_norms()[0] - (1.0f64 + 0.25 + 0.0625).sqrt()).abs() < 1e-12);
    assert!(run.final_norm() < 1e-10);
    assert!(run.control_energy() > 0.0);
}

#[test]
fn derivative_pair_agrees() {
    // f = t², α = 1/2: T_α f(4) = 4^{1/2} · 8
    let pair = conformable_derivative_pair(0.5, vec![0.0, 0.0, 1.0], 4.0, 1e-6).unwrap();
    assert!((pair[0] - 16.0).abs() < 1e-12);
    assert!((pair[1] - 16.0).abs() < 1e-6);
}

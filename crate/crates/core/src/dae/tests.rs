use super::*;

/// y' = -y, 0 = z - y.
fn linear_dae() -> FnSystem<impl Fn(f64, &[f64], &[f64], &mut [f64])> {
    FnSystem::new(vec![true, false], |_t, y, yp, r| {
        r[0] = yp[0] + y[0];
        r[1] = y[1] - y[0];
    })
}

fn tight(tol: f64) -> SolverConfig {
    SolverConfig {
        rel_tol: tol,
        abs_tol: tol,
        h_init: 1e-4,
        h_max: 0.1,
        newton_tol: 1e-12,
        ..SolverConfig::default()
    }
}

#[test]
fn linear_dae_matches_exponential() {
    let sys = linear_dae();
    let traj = solve(
        &sys,
        (0.0, 1.0),
        &[1.0, 1.0],
        &[-1.0, 0.0],
        &tight(1e-9),
        None,
    )
    .unwrap();
    assert_eq!(
        traj.termination,
        Termination::ReachedTFinal,
        "{:?}",
        traj.diagnostic
    );
    let last = traj.last();
    assert_eq!(last.t, 1.0);
    let exact = (-1.0_f64).exp();
    assert!((last.y[0] - exact).abs() < 1e-6, "{}", last.y[0] - exact);
    assert!((last.y[1] - exact).abs() < 1e-6);
    assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn global_error_shrinks_with_tolerance() {
    let sys = linear_dae();
    let exact = (-1.0_f64).exp();
    let err = |tol: f64| {
        let traj = solve(
            &sys,
            (0.0, 1.0),
            &[1.0, 1.0],
            &[-1.0, 0.0],
            &tight(tol),
            None,
        )
        .unwrap();
        (traj.last().y[0] - exact).abs()
    };
    for tol in [1e-4, 1e-5, 1e-6, 1e-7] {
        let (coarse, fine) = (err(tol), err(tol / 10.0));
        assert!(coarse / fine >= 1.8, "tol {tol}: {coarse:e} -> {fine:e}");
    }
}

#[test]
fn constant_system_stays_put() {
    let sys = FnSystem::new(vec![true, false], |_t, y, yp, r| {
        r[0] = yp[0];
        r[1] = y[1] - 3.0;
    });
    let traj = solve(
        &sys,
        (0.0, 10.0),
        &[2.0, 3.0],
        &[0.0, 0.0],
        &SolverConfig::default(),
        None,
    )
    .unwrap();
    assert_eq!(traj.termination, Termination::ReachedTFinal);
    for s in &traj.states {
        assert!(
            (s.y[0] - 2.0).abs() < 1e-10 && (s.y[1] - 3.0).abs() < 1e-10,
            "{:?}",
            s.y
        );
    }
}

#[test]
fn inconsistent_start_is_rejected() {
    let sys = linear_dae();
    let err = solve(
        &sys,
        (0.0, 1.0),
        &[1.0, 5.0],
        &[-1.0, 0.0],
        &SolverConfig::default(),
        None,
    )
    .unwrap_err();
    assert!(matches!(err, Error::Init(_)), "{err}");
}

#[test]
fn event_is_located_and_outputs_interpolated() {
    let sys = linear_dae();
    let target = 0.5_f64;
    let t_cross = -target.ln();
    let event = |_t: f64, y: &[f64]| y[1] <= target;
    let outputs: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
    let traj = solve_with_output(
        &sys,
        (0.0, 5.0),
        &[1.0, 1.0],
        &[-1.0, 0.0],
        &tight(1e-9),
        Some(&event),
        &Output::Times(outputs),
    )
    .unwrap();
    assert_eq!(
        traj.termination,
        Termination::EventCutoff,
        "{:?}",
        traj.diagnostic
    );
    let last = traj.last();
    assert!((last.t - t_cross).abs() < 1e-5, "{} vs {t_cross}", last.t);
    assert!((last.y[1] - target).abs() < 1e-5);
    for s in &traj.states[..traj.states.len() - 1] {
        assert!(s.t < last.t);
        assert!((s.y[0] - (-s.t).exp()).abs() < 1e-6, "t = {}", s.t);
        assert!((s.yp[0] + (-s.t).exp()).abs() < 1e-3, "t = {}", s.t);
    }
}

#[test]
fn single_step_relaxes_constraint() {
    let sys = linear_dae();
    let (y0, yp0) = init_single_step(&sys, 0.0, &[1.0, 50.0], DEFAULT_H_SS).unwrap();
    assert_eq!(y0[0], 1.0);
    assert!((y0[1] - 1.0).abs() < 1e-5, "{}", y0[1]);
    assert!((yp0[0] + 1.0).abs() < 1e-5);
    // idempotent on a consistent state
    let (y1, yp1) = init_single_step(&sys, 0.0, &y0, DEFAULT_H_SS).unwrap();
    assert!((y1[1] - y0[1]).abs() < 1e-10);
    assert!((yp1[0] - yp0[0]).abs() < 1e-10 * yp0[0].abs().max(1.0) + 1e-5);
}

#[test]
fn newton_alg_solves_constraint() {
    let sys = linear_dae();
    let (y0, yp0) = init_newton_algebraic(&sys, 0.0, &[2.0, -7.0]).unwrap();
    assert_eq!(y0[0], 2.0);
    assert!((y0[1] - 2.0).abs() < 1e-12);
    assert!((yp0[0] + 2.0).abs() < 1e-12);
}

#[test]
fn newton_alg_reports_singular_subsystem() {
    let sys = FnSystem::new(vec![true, false], |_t, y, yp, r| {
        r[0] = yp[0] + y[0];
        r[1] = y[0] - 1.0;
    });
    let err = init_newton_algebraic(&sys, 0.0, &[2.0, 0.0]).unwrap_err();
    assert!(err.to_string().contains("singular"), "{err}");
}

#[test]
fn stiff_robertson_runs() {
    // Robertson kinetics in DAE form, the classic stiff index-1 benchmark.
    let sys = FnSystem::new(vec![true, true, false], |_t, y, yp, r| {
        r[0] = yp[0] + 0.04 * y[0] - 1e4 * y[1] * y[2];
        r[1] = yp[1] - 0.04 * y[0] + 1e4 * y[1] * y[2] + 3e7 * y[1] * y[1];
        r[2] = y[0] + y[1] + y[2] - 1.0;
    });
    let (y0, yp0) = init_newton_algebraic(&sys, 0.0, &[1.0, 0.0, 0.0]).unwrap();
    let cfg = SolverConfig {
        rel_tol: 1e-6,
        abs_tol: 1e-10,
        h_init: 1e-6,
        h_max: 1e4,
        ..Default::default()
    };
    let traj = solve(&sys, (0.0, 40.0), &y0, &yp0, &cfg, None).unwrap();
    assert_eq!(traj.termination, Termination::ReachedTFinal);
    // reference values at t = 40 from the standard benchmark tables
    let y = &traj.last().y;
    assert!((y[0] - 0.7158).abs() < 2e-3, "{y:?}");
    assert!((y[2] - 0.2842).abs() < 2e-3, "{y:?}");
}

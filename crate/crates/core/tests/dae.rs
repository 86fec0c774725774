use dfnkit::dae::{init_newton_algebraic, init_single_step, FnSystem, Output, DEFAULT_H_SS};
use dfnkit::{
    solve, solve_with_output, Block, CellParameters, DaeSystem, DfnModel, Electrode, NodeCounts,
    RadialMethod, SolverConfig, Termination,
};

const F: f64 = 96485.33212;

fn linear() -> FnSystem<impl Fn(f64, &[f64], &[f64], &mut [f64])> {
    FnSystem::new(
        vec![true, false],
        |_t, y: &[f64], yp: &[f64], out: &mut [f64]| {
            out[0] = yp[0] + y[0];
            out[1] = y[1] - y[0];
        },
    )
}

fn tight(rel: f64) -> SolverConfig {
    SolverConfig {
        rel_tol: rel,
        abs_tol: rel,
        h_init: 1e-5,
        h_max: 0.05,
        newton_tol: 1e-12,
        ..Default::default()
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

#[test]
fn linear_dae_matches_exponential() {
    let sys = linear();
    let traj = solve(
        &sys,
        (0.0, 1.0),
        &[1.0, 1.0],
        &[-1.0, 0.0],
        &tight(1e-9),
        None,
    )
    .unwrap();
    assert_eq!(traj.termination, Termination::ReachedTFinal);
    let last = traj.last();
    let exact = (-1.0_f64).exp();
    assert_eq!(last.t, 1.0);
    assert!((last.y[0] - exact).abs() < 1e-6, "{}", last.y[0]);
    assert!((last.y[1] - exact).abs() < 1e-6);
    assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(traj.times.len(), traj.states.len());
}

#[test]
fn error_falls_with_tolerance() {
    let sys = linear();
    let exact = (-1.0_f64).exp();
    let err = |rel: f64| {
        let cfg = SolverConfig {
            rel_tol: rel,
            abs_tol: rel,
            h_max: 1.0,
            ..Default::default()
        };
        let traj = solve(&sys, (0.0, 1.0), &[1.0, 1.0], &[-1.0, 0.0], &cfg, None).unwrap();
        (traj.last().y[0] - exact).abs()
    };
    for rel in [1e-4, 1e-5, 1e-6] {
        let (a, b) = (err(rel), err(rel / 10.0));
        assert!(a / b >= 1.8, "rel {rel}: {a} / {b}");
    }
}

#[test]
fn fixed_point_stays_put() {
    let sys = FnSystem::new(
        vec![true, false],
        |_t, y: &[f64], yp: &[f64], out: &mut [f64]| {
            out[0] = yp[0];
            out[1] = y[1] - 3.0;
        },
    );
    let traj = solve(
        &sys,
        (0.0, 10.0),
        &[2.0, 3.0],
        &[0.0, 0.0],
        &SolverConfig::default(),
        None,
    )
    .unwrap();
    for s in &traj.states {
        assert!((s.y[0] - 2.0).abs() < 1e-12 && (s.y[1] - 3.0).abs() < 1e-12);
    }
}

#[test]
fn output_times_are_interpolated() {
    let sys = linear();
    let times: Vec<f64> = (1..=10).map(|k| k as f64 * 0.1).collect();
    let traj = solve_with_output(
        &sys,
        (0.0, 1.0),
        &[1.0, 1.0],
        &[-1.0, 0.0],
        &tight(1e-9),
        None,
        &Output::Times(times.clone()),
    )
    .unwrap();
    for &t in &times {
        let k = traj
            .times
            .iter()
            .position(|&x| (x - t).abs() < 1e-12)
            .unwrap();
        assert!((traj.states[k].y[0] - (-t).exp()).abs() < 1e-6);
    }
}

#[test]
fn inconsistent_start_is_rejected() {
    let sys = linear();
    assert!(solve(
        &sys,
        (0.0, 1.0),
        &[1.0, 5.0],
        &[-1.0, 0.0],
        &SolverConfig::default(),
        None
    )
    .is_err());
}

#[test]
fn event_time_is_stable_under_refinement() {
    let sys = linear();
    let event = |_t: f64, y: &[f64]| y[0] <= 0.5;
    let crossing = |h_max: f64| {
        let cfg = SolverConfig {
            h_max,
            ..tight(1e-8)
        };
        let traj = solve(
            &sys,
            (0.0, 5.0),
            &[1.0, 1.0],
            &[-1.0, 0.0],
            &cfg,
            Some(&event),
        )
        .unwrap();
        assert_eq!(traj.termination, Termination::EventCutoff);
        traj.last().t
    };
    let a = crossing(0.05);
    let b = crossing(0.005);
    assert!((a - b).abs() < 1e-3, "{a} vs {b}");
    assert!((a - 2.0_f64.ln()).abs() < 1e-3);
}

#[test]
fn dfn_cutoff_event_is_stable_under_refinement() {
    let m = DfnModel::new(
        CellParameters::lg_m50(),
        NodeCounts::uniform(5, 5),
        RadialMethod::FvmHermite,
    )
    .unwrap();
    let sys = m.system(10.0);
    let (y0, yp0) = init_newton_algebraic(&sys, 0.0, &m.equilibrium_state(1.0).unwrap()).unwrap();
    let event = |_t: f64, y: &[f64]| m.terminal_voltage(y, 10.0) <= 2.5;
    let end = |h_max: f64| {
        let cfg = SolverConfig {
            h_max,
            ..Default::default()
        };
        let traj = solve(&sys, (0.0, 4000.0), &y0, &yp0, &cfg, Some(&event)).unwrap();
        assert_eq!(traj.termination, Termination::EventCutoff);
        traj.last().t
    };
    let a = end(100.0);
    let b = end(10.0);
    assert!((a - b).abs() < 1e-3, "{a} vs {b}");
}

#[test]
fn single_step_on_toy_constraint() {
    let sys = linear();
    let (y, yp) = init_single_step(&sys, 0.0, &[1.0, 50.0], DEFAULT_H_SS).unwrap();
    assert_eq!(y[0], 1.0);
    assert!((y[1] - 1.0).abs() < 1e-8);
    assert!((yp[0] + 1.0).abs() < 1e-6);
    let (y2, _) = init_newton_algebraic(&sys, 0.0, &[2.0, 0.0]).unwrap();
    assert!((y2[1] - 2.0).abs() < 1e-10);
}

#[test]
fn singular_algebraic_block_is_reported() {
    let sys = FnSystem::new(
        vec![true, false],
        |_t, y: &[f64], yp: &[f64], out: &mut [f64]| {
            out[0] = yp[0] + y[0];
            out[1] = y[0] - 1.0;
        },
    );
    let e = init_newton_algebraic(&sys, 0.0, &[2.0, 0.0]).unwrap_err();
    assert!(e.to_string().contains("condition"), "{e}");
}

fn dfn() -> DfnModel {
    DfnModel::new(
        CellParameters::lg_m50(),
        NodeCounts::default(),
        RadialMethod::FvmHermite,
    )
    .unwrap()
}

/// Rough guess: electrolyte and negative potentials zero, positive solid
/// potential half a volt below its rest value.
fn rough_guess(m: &DfnModel, soc: f64) -> Vec<f64> {
    let l = m.layout();
    let mut y = m.equilibrium_state(soc).unwrap();
    for k in l
        .range(Block::ElectrolytePot)
        .chain(l.range(Block::SolidPotNeg))
    {
        y[k] = 0.0;
    }
    for k in l.range(Block::SolidPotPos) {
        y[k] -= 0.5;
    }
    y
}

#[test]
fn single_step_recovers_rest_potentials() {
    let m = dfn();
    let p = m.params();
    let soc = 0.6;
    let sys = m.system(0.0);
    let (y, yp) = init_single_step(&sys, 0.0, &rough_guess(&m, soc), DEFAULT_H_SS).unwrap();
    // at rest j = 0 forces eta = 0: phi_s - phi_e equals the OCP at the initial stoichiometry
    let l = m.layout();
    for (negative, e) in [(true, Electrode::Negative), (false, Electrode::Positive)] {
        let u = p.ocp(e).eval(e, p.stoichiometry_at_soc(e, soc)).unwrap();
        for i in 0..10 {
            assert!((y[l.solid_pot(negative, i)] - u).abs() < 1e-6);
        }
    }
    for g in 0..30 {
        assert!(y[l.electrolyte_pot(g)].abs() < 1e-6);
    }
    let mut r = vec![0.0; y.len()];
    sys.residual(0.0, &y, &yp, &mut r).unwrap();
    assert!(max_abs(&r) < 1e-8);

    let (y2, yp2) = init_single_step(&sys, 0.0, &y, DEFAULT_H_SS).unwrap();
    assert!(y.iter().zip(&y2).all(|(a, b)| (a - b).abs() < 1e-10));
    assert!(yp.iter().zip(&yp2).all(|(a, b)| (a - b).abs() < 1e-10));
}

#[test]
fn init_methods_agree() {
    let m = dfn();
    for (soc, i) in [(0.5, 0.0), (1.0, 5.0), (0.3, -5.0)] {
        let sys = m.system(i);
        let guess = rough_guess(&m, soc);
        let (a, _) = init_single_step(&sys, 0.0, &guess, DEFAULT_H_SS).unwrap();
        let (b, _) = init_newton_algebraic(&sys, 0.0, &guess).unwrap();
        let gap = a
            .iter()
            .zip(&b)
            .fold(0.0_f64, |g, (x, y)| g.max((x - y).abs()));
        assert!(gap < 1e-6, "soc {soc}, I {i}: {gap}");
    }
}

#[test]
fn direct_init_balances_current() {
    let m = dfn();
    let p = m.params();
    let current = 5.0;
    let (y, _) = init_newton_algebraic(&m.system(current), 0.0, &rough_guess(&m, 1.0)).unwrap();
    let target = current / (F * p.area);
    for (e, a_s, len, sign) in [
        (
            Electrode::Negative,
            3.0 * p.eps_s_neg / p.radius_neg,
            p.len_neg,
            1.0,
        ),
        (
            Electrode::Positive,
            3.0 * p.eps_s_pos / p.radius_pos,
            p.len_pos,
            -1.0,
        ),
    ] {
        let j = m.reaction_fluxes(&y, e).unwrap();
        let integral: f64 = j.iter().map(|v| a_s * v * len / j.len() as f64).sum();
        assert!(
            (sign * integral - target).abs() < 1e-6 * target,
            "{e}: {integral} vs {target}"
        );
    }
}

#[test]
fn both_inits_start_without_rejection() {
    let m = dfn();
    for current in [0.0, 5.0] {
        let sys = m.system(current);
        let guess = rough_guess(&m, 0.9);
        for (y0, yp0) in [
            init_single_step(&sys, 0.0, &guess, DEFAULT_H_SS).unwrap(),
            init_newton_algebraic(&sys, 0.0, &guess).unwrap(),
        ] {
            let traj = solve(&sys, (0.0, 60.0), &y0, &yp0, &SolverConfig::default(), None).unwrap();
            assert!(!traj.stats.first_step_rejected, "I = {current}");
            assert_eq!(traj.termination, Termination::ReachedTFinal);
        }
    }
}

use dfnkit::dae::{init_newton_algebraic, Output};
use dfnkit::protocol::{run_profile, CurrentProfile, SimulationOptions};
use dfnkit::{
    butler_volmer_flux, solve_with_output, Block, CellParameters, DaeSystem, DfnModel, Electrode,
    Error, NodeCounts, RadialMethod, SolverConfig,
};
use proptest::prelude::*;

const F: f64 = 96485.33212;
const R: f64 = 8.314462618;

fn model(n: usize) -> DfnModel {
    DfnModel::new(
        CellParameters::lg_m50(),
        NodeCounts::uniform(n, n),
        RadialMethod::FvmHermite,
    )
    .unwrap()
}

fn consistent(m: &DfnModel, soc: f64, current: f64) -> (Vec<f64>, Vec<f64>) {
    let guess = m.equilibrium_state(soc).unwrap();
    init_newton_algebraic(&m.system(current), 0.0, &guess).unwrap()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

#[test]
fn bv_reference_value() {
    // 2k sqrt(ce cs (cmax - cs)) sinh(F eta / 2RT), evaluated separately
    let expect = 3.0964934136983592e-06;
    let j = butler_volmer_flux(25000.0, 1000.0, 0.01, 1e-11, 50000.0, 298.15).unwrap();
    assert!((j - expect).abs() < 1e-12 * expect, "{j}");
    let direct =
        2e-11 * (1000.0_f64 * 25000.0 * 25000.0).sqrt() * (0.5 * F * 0.01 / (R * 298.15)).sinh();
    assert!((j - direct).abs() < 1e-12 * expect);
}

#[test]
fn bv_zero_overpotential() {
    assert_eq!(
        butler_volmer_flux(100.0, 1000.0, 0.0, 1e-11, 5e4, 298.15).unwrap(),
        0.0
    );
}

#[test]
fn bv_rejects_saturated_surface() {
    for cs in [0.0, -1.0, 5e4, 6e4] {
        let e = butler_volmer_flux(cs, 1000.0, 0.01, 1e-11, 5e4, 298.15).unwrap_err();
        assert!(matches!(e, Error::Saturation { .. }), "{e}");
    }
}

#[test]
fn bv_vanishes_at_limits() {
    let at = |cs: f64| {
        butler_volmer_flux(cs, 1000.0, 0.05, 1e-11, 5e4, 298.15)
            .unwrap()
            .abs()
    };
    let mid = at(2.5e4);
    assert!(at(1e-6) < 1e-5 * mid);
    assert!(at(5e4 - 1e-6) < 1e-5 * mid);
}

proptest! {
    #[test]
    fn bv_is_odd(cs in 1.0..49_999.0_f64, ce in 1.0..3000.0_f64, eta in -0.3..0.3_f64) {
        let plus = butler_volmer_flux(cs, ce, eta, 2e-11, 5e4, 298.15).unwrap();
        let minus = butler_volmer_flux(cs, ce, -eta, 2e-11, 5e4, 298.15).unwrap();
        prop_assert!((plus + minus).abs() <= 1e-14 * plus.abs());
    }
}

#[test]
fn state_length_for_ten_nodes() {
    let m = model(10);
    assert_eq!(m.layout().dim(), 280);
    let y = m.equilibrium_state(0.5).unwrap();
    let mut r = vec![0.0; 3];
    assert!(m.residual(&y, &vec![0.0; 280], 0.0, &mut r).is_err());
}

#[test]
fn rest_residual_vanishes() {
    let m = model(10);
    for soc in [0.0, 0.3, 1.0] {
        let y = m.equilibrium_state(soc).unwrap();
        let mut r = vec![0.0; y.len()];
        m.residual(&y, &vec![0.0; y.len()], 0.0, &mut r).unwrap();
        assert!(max_abs(&r) < 1e-9, "soc {soc}: {}", max_abs(&r));
    }
}

#[test]
fn non_finite_state_is_rejected() {
    let m = model(5);
    let mut y = m.equilibrium_state(0.5).unwrap();
    y[m.layout().electrolyte_pot(3)] = f64::NAN;
    let mut r = vec![0.0; y.len()];
    let e = m
        .residual(&y, &vec![0.0; y.len()], 0.0, &mut r)
        .unwrap_err();
    assert!(e.to_string().contains("phi_e"), "{e}");
}

#[test]
fn rest_voltage_is_ocv_difference() {
    let p = CellParameters::lg_m50();
    let m = model(10);
    let y = m.equilibrium_state(1.0).unwrap();
    let up = p.ocp_pos.eval(Electrode::Positive, p.theta100_p).unwrap();
    let un = p.ocp_neg.eval(Electrode::Negative, p.theta100_n).unwrap();
    assert!((m.terminal_voltage(&y, 0.0) - (up - un)).abs() < 1e-12);
    let (y0, _) = consistent(&m, 1.0, 0.0);
    assert!((m.terminal_voltage(&y0, 0.0) - (up - un)).abs() < 1e-9);
}

#[test]
fn terminal_voltage_reconstruction() {
    let p = CellParameters::lg_m50();
    let m = model(10);
    let l = m.layout();
    for (soc, i) in [(1.0, 5.0), (0.5, -10.0), (0.2, 2.5)] {
        let (y, _) = consistent(&m, soc, i);
        // -sigma dphi/dx = I/A at both collectors, extrapolated half a cell
        let i_dens = i / p.area;
        let sig_n = p.sigma_n * p.eps_s_neg.powf(p.brugg);
        let sig_p = p.sigma_p * p.eps_s_pos.powf(p.brugg);
        let hn = p.len_neg / 10.0;
        let hp = p.len_pos / 10.0;
        let phi_neg = y[l.solid_pot(true, 0)] + 0.5 * hn * i_dens / sig_n;
        let phi_pos = y[l.solid_pot(false, 9)] - 0.5 * hp * i_dens / sig_p;
        let v = m.terminal_voltage(&y, i);
        assert!((v - (phi_pos - phi_neg)).abs() < 1e-12, "{v}");
    }
}

#[test]
fn potential_shift_leaves_voltage() {
    let m = model(10);
    let l = m.layout();
    let (y, yp) = consistent(&m, 0.7, 5.0);
    let mut shifted = y.clone();
    for b in [Block::SolidPotNeg, Block::SolidPotPos] {
        for k in l.range(b) {
            shifted[k] += 0.1;
        }
    }
    let v0 = m.terminal_voltage(&y, 5.0);
    assert!((m.terminal_voltage(&shifted, 5.0) - v0).abs() < 1e-12);
    // shifting phi_e too keeps every flux; re-applying the gauge restores the root
    for k in l.range(Block::ElectrolytePot) {
        shifted[k] += 0.1;
    }
    let mut r = vec![0.0; y.len()];
    m.residual(&shifted, &yp, 5.0, &mut r).unwrap();
    assert!((r[l.electrolyte_pot(0)] - 0.1).abs() < 1e-12);
    let shift0 = shifted[l.electrolyte_pot(0)];
    for k in l
        .range(Block::SolidPotNeg)
        .chain(l.range(Block::SolidPotPos))
        .chain(l.range(Block::ElectrolytePot))
    {
        shifted[k] -= shift0;
    }
    m.residual(&shifted, &yp, 5.0, &mut r).unwrap();
    assert!(max_abs(&r) < 1e-8);
    assert!((m.terminal_voltage(&shifted, 5.0) - v0).abs() < 1e-12);
}

/// Face currents rebuilt from the state: solid Ohm's law plus the
/// electrolyte current with its diffusion term.
fn face_currents(m: &DfnModel, y: &[f64], negative: bool) -> Vec<f64> {
    let p = m.params();
    let l = m.layout();
    let mesh = m.mesh();
    let c = mesh.counts;
    let (nx, offset, sigma, eps_s) = if negative {
        (c.nx_neg, 0, p.sigma_n, p.eps_s_neg)
    } else {
        (c.nx_pos, c.nx_neg + c.nx_sep, p.sigma_p, p.eps_s_pos)
    };
    let sig = sigma * eps_s.powf(p.brugg);
    let eps_e = |g: usize| {
        if g < c.nx_neg {
            p.eps_e_neg
        } else if g < c.nx_neg + c.nx_sep {
            p.eps_e_sep
        } else {
            p.eps_e_pos
        }
    };
    let kappa = |g: usize| {
        let ce = y[l.electrolyte_conc(g)];
        p.conductivity.eval(ce) * p.kappa_scale * eps_e(g).powf(p.brugg)
    };
    let rtf = R * p.temperature / F;
    (0..nx - 1)
        .map(|i| {
            let g = offset + i;
            let h = mesh.dx[g];
            let i_s = -sig * (y[l.solid_pot(negative, i + 1)] - y[l.solid_pot(negative, i)]) / h;
            let k_face = 2.0 / (h / kappa(g) + h / kappa(g + 1));
            let dphi = y[l.electrolyte_pot(g + 1)] - y[l.electrolyte_pot(g)];
            let dln = y[l.electrolyte_conc(g + 1)].ln() - y[l.electrolyte_conc(g)].ln();
            let i_e = -k_face * dphi + k_face * 2.0 * rtf * (1.0 - p.transference) * dln;
            i_s + i_e
        })
        .collect()
}

#[test]
fn charge_balance_on_interior_faces() {
    let m = model(10);
    for (soc, i) in [(1.0, 5.0), (0.4, -5.0), (0.8, 15.0)] {
        let (y, _) = consistent(&m, soc, i);
        let target = i / m.params().area;
        for negative in [true, false] {
            for total in face_currents(&m, &y, negative) {
                assert!(
                    (total - target).abs() <= 1e-8 * target.abs(),
                    "{total} vs {target}"
                );
            }
        }
    }
}

#[test]
fn charge_balance_at_accepted_steps() {
    let m = model(6);
    let (y0, yp0) = consistent(&m, 1.0, 5.0);
    let sys = m.system(5.0);
    let traj = solve_with_output(
        &sys,
        (0.0, 2400.0),
        &y0,
        &yp0,
        &SolverConfig::default(),
        None,
        &Output::Steps,
    )
    .unwrap();
    let target = 5.0 / m.params().area;
    // each potential row may carry newton_tol in units of i_ref
    let tol = 2.0 * 6.0 * 1e-8 * m.reference_current_density();
    for s in &traj.states {
        for negative in [true, false] {
            for total in face_currents(&m, &s.y, negative) {
                assert!((total - target).abs() <= tol, "t = {}: {total}", s.t);
            }
        }
    }
}

#[test]
fn lithium_is_conserved() {
    let m = model(8);
    let opts = SimulationOptions {
        keep_states: true,
        ..Default::default()
    };
    let res = run_profile(
        &m,
        &CurrentProfile::Cc {
            c_rate: 2.0,
            direction: Default::default(),
        },
        1.0,
        &opts,
    )
    .unwrap();
    let states = res.states.unwrap();
    let (s0, e0) = m.lithium_inventory(&states[0].y);
    for s in &states {
        let (solid, electrolyte) = m.lithium_inventory(&s.y);
        assert!(((solid + electrolyte) - (s0 + e0)).abs() < 1e-6 * (s0 + e0));
        assert!((electrolyte - e0).abs() < 1e-6 * e0, "t = {}", s.t);
    }
}

#[test]
fn step_residuals_below_newton_tol() {
    let m = model(10);
    let cfg = SolverConfig::default();
    let (y0, yp0) = consistent(&m, 1.0, 5.0);
    let sys = m.system(5.0);
    let traj =
        solve_with_output(&sys, (0.0, 1200.0), &y0, &yp0, &cfg, None, &Output::Steps).unwrap();
    assert!(traj.states.len() > 10);
    let mut r = vec![0.0; y0.len()];
    for s in &traj.states {
        sys.residual(s.t, &s.y, &s.yp, &mut r).unwrap();
        assert!(
            max_abs(&r) < cfg.newton_tol,
            "t = {}: {:e}",
            s.t,
            max_abs(&r)
        );
    }
}

#[test]
fn electrode_soc_endpoints() {
    let m = model(5);
    let p = m.params().clone();
    let l = m.layout();
    let mut y = m.equilibrium_state(0.5).unwrap();
    let fill = |y: &mut [f64], negative: bool, theta: f64, cs_max: f64| {
        for k in l.range(if negative {
            Block::SolidConcNeg
        } else {
            Block::SolidConcPos
        }) {
            y[k] = theta * cs_max;
        }
    };
    fill(&mut y, true, p.theta0_n, p.cs_max_n);
    fill(&mut y, false, p.theta100_p, p.cs_max_p);
    let (sp, sn) = m.electrode_soc(&y).unwrap();
    assert!((sp - 1.0).abs() < 1e-12 && sn.abs() < 1e-12);
    fill(&mut y, true, 0.5 * (p.theta0_n + p.theta100_n), p.cs_max_n);
    assert!((m.electrode_soc(&y).unwrap().1 - 0.5).abs() < 1e-12);

    let flat = m.with_params(p.with_values([("theta0_n", p.theta100_n)]).unwrap());
    if let Ok(flat) = flat {
        assert!(matches!(flat.electrode_soc(&y), Err(Error::Config(_))));
    }
}

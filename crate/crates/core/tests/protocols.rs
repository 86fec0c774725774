use dfnkit::io::load_profile_csv;
use dfnkit::protocol::{
    coulomb_count_soc, crate_to_current, run_profile, CurrentProfile, Direction, HppcSchedule,
    SimulationOptions,
};
use dfnkit::{CellParameters, DfnModel, Electrode, NodeCounts, RadialMethod, SolverConfig};

const F: f64 = 96485.33212;

fn model(p: CellParameters) -> DfnModel {
    DfnModel::new(p, NodeCounts::default(), RadialMethod::FvmHermite).unwrap()
}

/// Windows set so each electrode holds exactly `q` Ah.
fn matched(q: f64) -> CellParameters {
    let mut p = CellParameters::lg_m50();
    let unit_p = p.eps_s_pos * p.len_pos * p.area * F * p.cs_max_p / 3600.0;
    let unit_n = p.eps_s_neg * p.len_neg * p.area * F * p.cs_max_n / 3600.0;
    p.theta0_p = p.theta100_p + q / unit_p;
    p.theta100_n = p.theta0_n + q / unit_n;
    p.q_nom = q;
    p
}

fn in_guard_band(p: &CellParameters, v: &[f64]) -> bool {
    v.iter().all(|&x| x >= p.v_min - 0.5 && x <= p.v_max + 0.5)
}

#[test]
fn c_rates() {
    assert_eq!(crate_to_current(1.0, 5.0, Direction::Discharge), 5.0);
    assert_eq!(crate_to_current(0.05, 5.0, Direction::Discharge), 0.25);
    assert_eq!(crate_to_current(0.0, 5.0, Direction::Discharge), 0.0);
    assert_eq!(crate_to_current(0.5, 5.0, Direction::Charge), -2.5);
}

#[test]
fn zero_current_holds_equilibrium() {
    let m = model(CellParameters::lg_m50());
    let profile = CurrentProfile::table(vec![0.0, 50.0, 100.0], vec![0.0; 3]).unwrap();
    let r = run_profile(&m, &profile, 0.7, &SimulationOptions::default()).unwrap();
    assert_eq!(r.t, vec![0.0, 50.0, 100.0]);
    let p = m.params();
    let rest = p
        .ocp(Electrode::Positive)
        .eval(
            Electrode::Positive,
            p.stoichiometry_at_soc(Electrode::Positive, 0.7),
        )
        .unwrap()
        - p.ocp(Electrode::Negative)
            .eval(
                Electrode::Negative,
                p.stoichiometry_at_soc(Electrode::Negative, 0.7),
            )
            .unwrap();
    for k in 0..r.len() {
        assert!((r.v[k] - rest).abs() < 1e-6);
        assert!((r.soc_p[k] - 0.7).abs() < 1e-9 && (r.soc_n[k] - 0.7).abs() < 1e-9);
    }
    assert!(!r.cutoff);
}

#[test]
fn one_c_discharge_is_monotone_and_cuts_off() {
    let m = model(CellParameters::lg_m50());
    let p = m.params();
    let profile = CurrentProfile::Cc {
        c_rate: 1.0,
        direction: Direction::Discharge,
    };
    let r = run_profile(&m, &profile, 1.0, &SimulationOptions::default()).unwrap();
    assert!(r.cutoff);
    assert!(in_guard_band(p, &r.v));
    assert!(r.t.windows(2).all(|w| w[1] > w[0]));
    assert!(r.v.windows(2).skip(1).all(|w| w[1] <= w[0] + 1e-9));
    let last = *r.v.last().unwrap();
    assert!((last - p.v_min).abs() < 1e-3, "{last}");

    let fine = SimulationOptions {
        solver: SolverConfig {
            rel_tol: 1e-7,
            abs_tol: 1e-9,
            h_max: 5.0,
            ..Default::default()
        },
        ..Default::default()
    };
    let r2 = run_profile(&m, &profile, 1.0, &fine).unwrap();
    let n = r.len().min(r2.len()) - 5;
    let gap = (0..n).fold(0.0_f64, |g, k| g.max((r.v[k] - r2.v[k]).abs()));
    assert!(gap < 2e-3, "{gap}");
    assert!((r.t.last().unwrap() - r2.t.last().unwrap()).abs() < 5.0);
}

#[test]
fn slow_discharge_matches_window_capacity() {
    let q = 5.0;
    let m = model(matched(q));
    let profile = CurrentProfile::Cc {
        c_rate: 0.05,
        direction: Direction::Discharge,
    };
    let r = run_profile(&m, &profile, 1.0, &SimulationOptions::default()).unwrap();
    assert!(r.cutoff);
    let cap = r.discharged_capacity();
    assert!((cap - q).abs() < 0.02 * q, "{cap}");
}

#[test]
fn charge_discharge_round_trip() {
    let m = model(matched(5.0));
    let opts = SimulationOptions {
        keep_states: true,
        ..Default::default()
    };
    let charge = CurrentProfile::Cc {
        c_rate: 0.05,
        direction: Direction::Charge,
    };
    let up = run_profile(&m, &charge, 0.0, &opts).unwrap();
    assert!(up.cutoff);
    let t_up = up.t.last().unwrap() - 60.0;
    let i = 0.25;
    let profile = CurrentProfile::table(vec![0.0, t_up, 3.0 * t_up], vec![-i, i, i]).unwrap();
    let r = run_profile(&m, &profile, 0.0, &opts).unwrap();
    assert!(r.cutoff);
    let y0 = m.equilibrium_state(0.0).unwrap();
    let y1 = &r.states.as_ref().unwrap().last().unwrap().y;
    let (a, b) = (m.mean_stoichiometry(&y0), m.mean_stoichiometry(y1));
    assert!((a.0 - b.0).abs() < 0.01 * a.0, "{a:?} vs {b:?}");
    assert!((a.1 - b.1).abs() < 0.01 * a.1, "{a:?} vs {b:?}");
}

#[test]
fn table_current_is_reproduced() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/dynamic_profile.csv");
    let (times, currents) = load_profile_csv(path).unwrap();
    let m = model(CellParameters::lg_m50());
    let profile = CurrentProfile::table(times.clone(), currents.clone()).unwrap();
    let r = run_profile(&m, &profile, 0.6, &SimulationOptions::default()).unwrap();
    assert!(!r.cutoff);
    assert_eq!(r.t, times);
    assert_eq!(r.i, currents);
    assert!(in_guard_band(m.params(), &r.v));
}

#[test]
fn hppc_runs_inside_guard_band() {
    let m = model(CellParameters::lg_m50());
    let s = HppcSchedule {
        soc_steps: vec![0.8, 0.7],
        ..Default::default()
    };
    let r = run_profile(
        &m,
        &CurrentProfile::Hppc(s.clone()),
        0.8,
        &SimulationOptions::default(),
    )
    .unwrap();
    let (t, _) = s.expand(m.params().q_nom).unwrap();
    assert!((r.t.last().unwrap() - t.last().unwrap()).abs() < 1e-9);
    assert!(in_guard_band(m.params(), &r.v));
    assert!((r.soc_n.last().unwrap() - 0.7).abs() < 0.01);
}

#[test]
fn hppc_table_structure() {
    let s = HppcSchedule::default();
    let (t, i) = s.expand(5.0).unwrap();
    let levels = s.soc_steps.len();
    assert_eq!(t.len(), 4 * levels + 2 * (levels - 1) + 1);
    assert_eq!(&i[..4], &[5.0, 0.0, -5.0, 0.0]);
    assert_eq!(&t[..5], &[0.0, 10.0, 50.0, 60.0, 100.0]);
    assert_eq!(*i.last().unwrap(), 0.0);
    // 0.1 of 5 Ah at 5 A
    assert!((t[5] - t[4] - 360.0).abs() < 1e-9);
    assert!(s.expand(0.0).is_err());
    let bad = HppcSchedule {
        soc_steps: vec![0.5, 0.6],
        ..Default::default()
    };
    assert!(bad.expand(5.0).is_err());
}

#[test]
fn coulomb_counting() {
    let t: Vec<f64> = (0..=3600).map(f64::from).collect();
    let soc = coulomb_count_soc(&t, &vec![5.0; t.len()], 5.0, 1.0).unwrap();
    assert!(soc.last().unwrap().abs() < 1e-12);
    let rest = coulomb_count_soc(&t, &vec![0.0; t.len()], 5.0, 0.4).unwrap();
    assert!(rest.iter().all(|&s| s == 0.4));
    assert!(coulomb_count_soc(&t, &vec![0.0; t.len()], 0.0, 1.0).is_err());
    assert!(coulomb_count_soc(&t, &vec![0.0; t.len()], -1.0, 1.0).is_err());
    assert!(coulomb_count_soc(&[0.0, 1.0], &[1.0], 5.0, 1.0).is_err());
}

#[test]
fn triangular_pulse_matches_fine_quadrature() {
    let tri = |t: f64| (4.0 * (1.0 - (t - 50.0).abs() / 50.0)).max(0.0);
    let t: Vec<f64> = (0..=20).map(|k| 10.0 * k as f64).collect();
    let i: Vec<f64> = t.iter().map(|&x| tri(x)).collect();
    let soc = coulomb_count_soc(&t, &i, 5.0, 0.9).unwrap();
    for (k, &tk) in t.iter().enumerate() {
        let n = (tk * 1000.0).round() as usize;
        let h = 1e-3;
        let charge: f64 = (0..n).map(|j| tri((j as f64 + 0.5) * h) * h).sum();
        let expected = 0.9 - charge / (3600.0 * 5.0);
        assert!((soc[k] - expected).abs() < 1e-6, "t {tk}");
    }
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn counting_is_linear_in_current(
            currents in proptest::collection::vec(-10.0..10.0_f64, 2..40),
            scale in 0.1..5.0_f64,
        ) {
            let t: Vec<f64> = (0..currents.len()).map(|k| 7.0 * k as f64).collect();
            let a = coulomb_count_soc(&t, &currents, 5.0, 0.5).unwrap();
            let scaled: Vec<f64> = currents.iter().map(|c| c * scale).collect();
            let b = coulomb_count_soc(&t, &scaled, 5.0, 0.5).unwrap();
            for k in 0..t.len() {
                prop_assert!(((b[k] - 0.5) - scale * (a[k] - 0.5)).abs() < 1e-12);
            }
        }
    }
}

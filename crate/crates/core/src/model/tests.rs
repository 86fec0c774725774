use super::*;
use crate::dae::{init_single_step, DEFAULT_H_SS};

fn model() -> DfnModel {
    DfnModel::new(
        CellParameters::lg_m50(),
        NodeCounts::default(),
        RadialMethod::FvmHermite,
    )
    .unwrap()
}

#[test]
fn rest_state_is_consistent() {
    let m = model();
    let y = m.equilibrium_state(0.6).unwrap();
    let yp = vec![0.0; y.len()];
    let mut r = vec![0.0; y.len()];
    m.residual(&y, &yp, 0.0, &mut r).unwrap();
    let worst = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    assert!(worst < 1e-10, "{worst}");
}

#[test]
fn discharge_initialization_converges() {
    let m = model();
    let y = m.equilibrium_state(1.0).unwrap();
    let sys = m.system(5.0);
    let (y0, yp0) = init_single_step(&sys, 0.0, &y, DEFAULT_H_SS).unwrap();
    let mut r = vec![0.0; y.len()];
    sys.residual(0.0, &y0, &yp0, &mut r).unwrap();
    assert!(r.iter().all(|v| v.abs() < 1e-8));
    let v = m.terminal_voltage(&y0, 5.0);
    assert!(v > 3.5 && v < 4.2, "{v}");
}

#[test]
fn saturated_particle_is_reported() {
    let m = model();
    let mut y = m.equilibrium_state(0.5).unwrap();
    let idx = m.layout().solid_conc(false, 0, 9);
    y[idx] = 2.0 * m.params().cs_max_p;
    let yp = vec![0.0; y.len()];
    let mut r = vec![0.0; y.len()];
    assert!(matches!(
        m.residual(&y, &yp, 1.0, &mut r),
        Err(Error::Saturation { .. })
    ));
}

#[test]
fn bv_matches_closed_form() {
    let j = butler_volmer_flux(0.5, 1000.0, 0.01, 1e-11, 1.0, 298.15).unwrap();
    let expect = 2.0e-11
        * (1000.0f64 * 0.25).sqrt()
        * (0.5 * FARADAY * 0.01 / (GAS_CONSTANT * 298.15)).sinh();
    assert!((j - expect).abs() < 1e-14 * expect.abs().max(1e-30) + 1e-30);
}

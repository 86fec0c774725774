//! Consistent initialization after a current step: single backward-Euler
//! step versus Newton on the algebraic unknowns.
//!
//! ```bash
//! cargo run --release --example init_methods
//! ```

use std::time::Instant;

use dfnkit::dae::{init_newton_algebraic, init_single_step, DaeSystem, DEFAULT_H_SS};
use dfnkit::{CellParameters, DfnModel, NodeCounts, RadialMethod};

fn main() -> dfnkit::Result<()> {
    let model = DfnModel::new(
        CellParameters::lg_m50(),
        NodeCounts::default(),
        RadialMethod::FvmHermite,
    )?;
    let guess = model.equilibrium_state(0.7)?;
    for current in [0.0, 5.0, 10.0, -5.0] {
        let sys = model.system(current);
        let start = Instant::now();
        let (y_ss, yp_ss) = init_single_step(&sys, 0.0, &guess, DEFAULT_H_SS)?;
        let t_ss = start.elapsed().as_secs_f64();
        let start = Instant::now();
        let (y_na, _) = init_newton_algebraic(&sys, 0.0, &guess)?;
        let t_na = start.elapsed().as_secs_f64();

        let mut f = vec![0.0; sys.dim()];
        sys.residual(0.0, &y_ss, &yp_ss, &mut f)?;
        let res = f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let dv = model.terminal_voltage(&y_ss, current) - model.terminal_voltage(&y_na, current);
        println!(
            "I = {current:>5} A: V = {:.6} V, |F| = {res:.1e}, dV = {dv:.1e} V, {:.1} ms vs {:.1} ms",
            model.terminal_voltage(&y_ss, current),
            1e3 * t_ss,
            1e3 * t_na
        );
    }
    Ok(())
}

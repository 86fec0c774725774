//! Surface concentration from the finite-volume Hermite reconstruction and
//! the finite-difference scheme, against a fine-shell reference.
//!
//! ```bash
//! cargo run --release --example radial_methods
//! ```

use dfnkit::dae::{solve, FnSystem, SolverConfig};
use dfnkit::discretize::SphericalGrid;
use dfnkit::RadialMethod;

const RADIUS: f64 = 5.86e-6;
const DS: f64 = 3.3e-14;
const FLUX: f64 = 1e-5;
const T_END: f64 = 600.0;

fn surface_after(shells: usize, method: RadialMethod) -> dfnkit::Result<f64> {
    let grid = SphericalGrid::new(RADIUS, shells)?;
    let sys = FnSystem::new(
        vec![true; shells],
        |_t, c: &[f64], cp: &[f64], out: &mut [f64]| {
            grid.diffusion_rhs(c, FLUX, DS, method, out);
            for k in 0..out.len() {
                out[k] = cp[k] - out[k];
            }
        },
    );
    let c0 = vec![20000.0; shells];
    let mut cp0 = vec![0.0; shells];
    grid.diffusion_rhs(&c0, FLUX, DS, method, &mut cp0);
    let config = SolverConfig {
        rel_tol: 1e-8,
        abs_tol: 1e-6,
        ..SolverConfig::default()
    };
    let traj = solve(&sys, (0.0, T_END), &c0, &cp0, &config, None)?;
    Ok(grid.surface_concentration(&traj.last().y, FLUX, DS, method))
}

fn main() -> dfnkit::Result<()> {
    let reference = surface_after(1000, RadialMethod::FvmHermite)?;
    println!("reference c_surf = {reference:.3} mol/m3");
    println!("{:>6} {:>14} {:>14}", "shells", "fvm_hermite %", "fdm %");
    for shells in [5, 10, 20, 40] {
        let err = |m| surface_after(shells, m).map(|c| 100.0 * (c - reference) / reference);
        println!(
            "{shells:>6} {:>14.4} {:>14.4}",
            err(RadialMethod::FvmHermite)?,
            err(RadialMethod::Fdm)?
        );
    }
    Ok(())
}

//! Stoichiometric window identification from a C/20 discharge.
//!
//! Synthetic data come from the model itself with both electrodes holding
//! 5 Ah, so the recovered windows can be compared with the truth. Pass a
//! swarm size and iteration count to trade accuracy for time.
//!
//! ```bash
//! cargo run --release --example identify_c20 -- 20 100
//! ```

use dfnkit::ident::{pso_optimize, ObjectiveBreakdown, ParameterSpace, PsoConfig};
use dfnkit::io::{resample_hold, ExperimentData};
use dfnkit::protocol::{run_profile, CurrentProfile, Direction, SimulationOptions};
use dfnkit::workflow::simulate_against;
use dfnkit::{CellParameters, DfnModel, Electrode, NodeCounts, RadialMethod};

fn main() -> dfnkit::Result<()> {
    let mut args = std::env::args()
        .skip(1)
        .map(|a| a.parse::<usize>().expect("integer argument"));
    let swarm_size = args.next().unwrap_or(12);
    let max_iters = args.next().unwrap_or(30);

    let mut truth = CellParameters::lg_m50();
    // capacity is linear in the window width
    let per_unit = |p: &CellParameters, e: Electrode| {
        let (a, b) = p.window(e);
        p.electrode_capacity(e) / (b - a).abs()
    };
    truth.theta0_p = truth.theta100_p + 5.0 / per_unit(&truth, Electrode::Positive);
    truth.theta100_n = truth.theta0_n + 5.0 / per_unit(&truth, Electrode::Negative);
    let counts = NodeCounts::uniform(5, 5);
    let model = DfnModel::new(truth.clone(), counts, RadialMethod::FvmHermite)?;
    let options = SimulationOptions::default();
    let c20 = CurrentProfile::Cc {
        c_rate: 0.05,
        direction: Direction::Discharge,
    };
    let sim = run_profile(&model, &c20, 1.0, &options)?;
    let t_end = *sim.t.last().unwrap();
    let grid: Vec<f64> = (0..)
        .map(|k| 60.0 * k as f64)
        .take_while(|&t| t <= t_end)
        .collect();
    let exp = ExperimentData::from_simulation(&resample_hold(&sim, &grid)?)?;
    println!(
        "synthetic record: {} samples, {:.4} Ah",
        exp.len(),
        sim.discharged_capacity()
    );

    let names = ["theta100_p", "theta100_n", "theta0_p", "theta0_n"]
        .map(String::from)
        .to_vec();
    let space = ParameterSpace::new(
        names.clone(),
        vec![0.22, 0.7, 0.7, 0.015],
        vec![0.34, 1.0, 1.0, 0.04],
    )?;
    let nominal = CellParameters::lg_m50();
    let eval = |x: &[f64]| -> dfnkit::Result<ObjectiveBreakdown> {
        let mut p = nominal.clone();
        for (n, v) in names.iter().zip(x) {
            p.set(n, *v)?;
        }
        simulate_against(&model.with_params(p)?, &exp, 1.0, &options).map(|(_, j)| j)
    };
    let config = PsoConfig {
        swarm_size,
        max_iters,
        seed: 7,
        ..PsoConfig::default()
    };
    let found = pso_optimize(&space, eval, &config)?;

    println!("{:<11} {:>9} {:>9} {:>9}", "", "truth", "found", "error");
    for (name, value) in found.named() {
        let t = truth.get(&name)?;
        println!("{name:<11} {t:>9.5} {value:>9.5} {:>9.5}", value - t);
    }
    let j = &found.best_objective;
    println!(
        "J_V = {:.3} mV, J_tot = {:.3e} after {} evaluations",
        j.j_v_mv, j.j_tot, found.evaluations
    );
    Ok(())
}

//! Hybrid pulse power characterization: pulse resistance at each SOC level.
//!
//! ```bash
//! cargo run --release --example hppc
//! ```

use dfnkit::protocol::{run_profile, CurrentProfile, HppcSchedule, SimulationOptions};
use dfnkit::{CellParameters, DfnModel, NodeCounts, RadialMethod};

fn main() -> dfnkit::Result<()> {
    let model = DfnModel::new(
        CellParameters::lg_m50(),
        NodeCounts::default(),
        RadialMethod::FvmHermite,
    )?;
    let schedule = HppcSchedule::default();
    let (times, currents) = schedule.expand(model.params().q_nom)?;
    let soc0 = schedule.soc_steps[0];
    let r = run_profile(
        &model,
        &CurrentProfile::Hppc(schedule.clone()),
        soc0,
        &SimulationOptions::default(),
    )?;
    let ocv = model.terminal_voltage(&model.equilibrium_state(soc0)?, 0.0);

    let index = |t: f64| r.t.iter().position(|&s| s >= t - 1e-9).unwrap();
    let resistance = |t0: f64| {
        let before = match index(t0) {
            0 => ocv,
            k => r.v[k - 1],
        };
        // the sample at the pulse end already carries the next current
        let k = index(t0 + schedule.pulse_duration) - 1;
        1e3 * (before - r.v[k]) / r.i[k]
    };
    let pulses: Vec<f64> = (0..times.len() - 1)
        .filter(|&k| {
            currents[k] != 0.0 && (times[k + 1] - times[k] - schedule.pulse_duration).abs() < 1e-9
        })
        .map(|k| times[k])
        .collect();

    println!("{:>5} {:>12} {:>12}", "SOC", "R_dis [mOhm]", "R_chg [mOhm]");
    for (soc, pair) in schedule.soc_steps.iter().zip(pulses.chunks(2)) {
        println!(
            "{soc:>5.2} {:>12.2} {:>12.2}",
            resistance(pair[0]),
            resistance(pair[1])
        );
    }
    println!("{} samples over {:.0} s", r.len(), r.t.last().unwrap());
    Ok(())
}

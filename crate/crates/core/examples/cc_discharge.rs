//! Constant-current discharge of the LG M50 cell at several C-rates.
//!
//! ```bash
//! cargo run --release --example cc_discharge
//! ```

use std::time::Instant;

use dfnkit::protocol::{run_profile, CurrentProfile, Direction, SimulationOptions};
use dfnkit::{CellParameters, DfnModel, NodeCounts, RadialMethod};

fn main() -> dfnkit::Result<()> {
    let model = DfnModel::new(
        CellParameters::lg_m50(),
        NodeCounts::default(),
        RadialMethod::FvmHermite,
    )?;
    println!("{} states", model.layout().dim());
    println!(
        "{:>6} {:>10} {:>10} {:>10} {:>9}",
        "C", "t_end [s]", "Q [Ah]", "V_end [V]", "wall [s]"
    );
    for c_rate in [0.5, 1.0, 2.0] {
        let start = Instant::now();
        let profile = CurrentProfile::Cc {
            c_rate,
            direction: Direction::Discharge,
        };
        let r = match run_profile(&model, &profile, 1.0, &SimulationOptions::default()) {
            Ok(r) => r,
            Err(e) => {
                println!("{c_rate:>6} failed: {e}");
                continue;
            }
        };
        println!(
            "{c_rate:>6} {:>10.1} {:>10.4} {:>10.4} {:>9.3}",
            r.t.last().unwrap(),
            r.discharged_capacity(),
            r.v.last().unwrap(),
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}

//! Local sensitivity and correlation screening of kinetic and transport
//! parameters under an HPPC test.
//!
//! ```bash
//! cargo run --release --example identifiability
//! ```

use dfnkit::ident::lsa;
use dfnkit::protocol::{CurrentProfile, HppcSchedule, SimulationOptions};
use dfnkit::{CellParameters, DfnModel, NodeCounts, RadialMethod};

fn main() -> dfnkit::Result<()> {
    let model = DfnModel::new(
        CellParameters::lg_m50(),
        NodeCounts::uniform(5, 5),
        RadialMethod::FvmHermite,
    )?;
    let names = [
        "Dsp",
        "Dsn",
        "kp",
        "kn",
        "c0",
        "t1_constant",
        "Kappa",
        "De",
        "L_s",
    ]
    .map(String::from);
    let profile = CurrentProfile::Hppc(HppcSchedule {
        soc_steps: vec![0.8, 0.6],
        ..HppcSchedule::default()
    });
    let mut report = lsa(
        &model,
        &names,
        &profile,
        0.8,
        0.05,
        &SimulationOptions::default(),
    )?;
    report.classify(1e-3, 0.9)?;

    println!("{:<12} {:>10}", "parameter", "S");
    let mut ranked: Vec<_> = report.entries.iter().collect();
    ranked.sort_by(|a, b| b.index.unwrap_or(0.0).total_cmp(&a.index.unwrap_or(0.0)));
    for e in ranked {
        println!("{:<12} {:>10.3e}", e.name, e.index.unwrap_or(f64::NAN));
    }
    print!("\n{:<12}", "");
    for e in &report.entries {
        print!("{:>8.8}", e.name);
    }
    println!();
    for (e, row) in report.entries.iter().zip(&report.correlation) {
        print!("{:<12}", e.name);
        for r in row {
            print!("{r:>8.3}");
        }
        println!();
    }
    println!("\nLSA identifiable: {:?}", report.lsa_identifiable);
    println!("after correlation: {:?}", report.corr_identifiable);
    Ok(())
}

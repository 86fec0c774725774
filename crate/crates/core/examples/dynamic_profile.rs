//! Piecewise-constant current table with a tabulated positive-electrode OCP,
//! driven through a configuration file as the `simulate` subcommand does.
//!
//! ```bash
//! cargo run --release --example dynamic_profile
//! ```

use dfnkit::io::Config;
use dfnkit::workflow;

fn main() -> dfnkit::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/dynamic.toml");
    let mut config = Config::load(path)?;
    config.output.dir = std::env::temp_dir().join("dfnkit-dynamic");
    let out = workflow::simulate(&config)?;
    let r = &out.result;
    let (lo, hi) =
        r.v.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
    println!("{} samples, V in [{lo:.4}, {hi:.4}] V", r.len());
    println!(
        "SOC_p {:.4} -> {:.4}, SOC_n {:.4} -> {:.4}",
        r.soc_p[0],
        r.soc_p.last().unwrap(),
        r.soc_n[0],
        r.soc_n.last().unwrap()
    );
    for f in &out.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

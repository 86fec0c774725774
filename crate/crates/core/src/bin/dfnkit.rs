use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dfnkit::io::report::objective_console;
use dfnkit::io::{format::fmt_report, Config};
use dfnkit::workflow;

#[derive(Parser)]
#[command(
    name = "dfnkit",
    version,
    about = "DFN cell simulation, identification and identifiability analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory, overriding [output].dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the [profile] section; write result CSV and plots.
    Simulate { config: PathBuf },
    /// PSO identification against measured data; write report.toml and plots.
    Identify { config: PathBuf },
    /// Local sensitivity and correlation analysis; write sensitivity.toml.
    Analyze { config: PathBuf },
    /// Score a simulation of measured data; write validation.toml.
    Validate { config: PathBuf },
}

fn run(cli: Cli) -> dfnkit::Result<()> {
    let load = |path: &PathBuf| -> dfnkit::Result<Config> {
        let mut config = Config::load(path)?;
        if let Some(out) = &cli.out {
            config.output.dir = std::path::absolute(out)
                .map_err(|e| dfnkit::Error::Config(format!("{}: {e}", out.display())))?;
        }
        Ok(config)
    };
    match &cli.command {
        Command::Simulate { config } => {
            let out = workflow::simulate(&load(config)?)?;
            let r = &out.result;
            println!(
                "{} samples, {:.1} s, final V = {} V, discharged {} Ah{}",
                r.len(),
                r.t.last().copied().unwrap_or_default(),
                fmt_report(r.v.last().copied().unwrap_or_default()),
                fmt_report(r.discharged_capacity()),
                if r.cutoff { " (voltage cutoff)" } else { "" }
            );
            print_files(&out.files);
        }
        Command::Identify { config } => {
            let out = workflow::identify(&load(config)?)?;
            print!("{}", out.report.console());
            print_files(&out.files);
        }
        Command::Analyze { config } => {
            let out = workflow::analyze(&load(config)?)?;
            let r = &out.report;
            println!("{:<14} {:>12}", "parameter", "S");
            for e in &r.entries {
                let s = e.index.map(fmt_report).unwrap_or_else(|| "failed".into());
                println!("{:<14} {:>12}", e.name, s);
            }
            println!(
                "LSA identifiable (beta = {}): {}",
                r.beta_lsa,
                r.lsa_identifiable.join(", ")
            );
            println!(
                "after correlation (beta = {}): {}",
                r.beta_corr,
                r.corr_identifiable.join(", ")
            );
            print_files(&out.files);
        }
        Command::Validate { config } => {
            let out = workflow::validate(&load(config)?)?;
            print!("{}", objective_console(&out.objective));
            print_files(&out.files);
        }
    }
    Ok(())
}

fn print_files(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::from(1)
        }
    }
}

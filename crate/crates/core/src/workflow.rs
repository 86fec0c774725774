//! Config-driven runs behind the command-line subcommands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ident::{
    lsa, objective, pso_optimize, ObjectiveBreakdown, PsoResult, SensitivityReport,
};
use crate::io::config::SCHEMA_VERSION;
use crate::io::report::Timings;
use crate::io::{
    emit_plots, load_experiment_csv, resample_hold, write_atomic, write_simulation_csv, Config,
    ExperimentData, IdentifiedValue, RunReport,
};
use crate::model::DfnModel;
use crate::params::CellParameters;
use crate::protocol::{run_profile, SimulationOptions, SimulationResult};

pub const REPORT_FILE: &str = "report.toml";
pub const SENSITIVITY_FILE: &str = "sensitivity.toml";
pub const VALIDATION_FILE: &str = "validation.toml";
pub const RESULT_FILE: &str = "result.csv";

pub fn build_model(config: &Config, params: CellParameters) -> Result<DfnModel> {
    DfnModel::new(params, config.mesh.counts(), config.mesh.radial_method)
}

/// Runs the measured current of `exp` from `soc0` and scores the result on
/// the experiment's time grid. Samples after a voltage cutoff hold the last
/// simulated value.
pub fn simulate_against(
    model: &DfnModel,
    exp: &ExperimentData,
    soc0: f64,
    options: &SimulationOptions,
) -> Result<(SimulationResult, ObjectiveBreakdown)> {
    let sim = run_profile(model, &exp.current_profile()?, soc0, options)?;
    let aligned = resample_hold(&sim, &exp.t)?;
    let score = objective(&aligned, exp, model.params(), soc0)?;
    Ok((aligned, score))
}

#[derive(Debug, Clone)]
pub struct SimulateOutcome {
    pub result: SimulationResult,
    pub files: Vec<PathBuf>,
}

/// Runs the `[profile]` section and writes `result.csv` (plus plots).
pub fn simulate(config: &Config) -> Result<SimulateOutcome> {
    let params = config.cell_parameters()?;
    let model = build_model(config, params)?;
    let (profile, soc0) = config.profile()?;
    let result = run_profile(&model, &profile, soc0, &config.options())?;
    let out = prepare_dir(config)?;
    let csv = out.join(RESULT_FILE);
    write_simulation_csv(&result, &csv)?;
    let mut files = vec![csv];
    if config.output.plots {
        files.extend(emit_plots(&result, None, &out)?);
    }
    Ok(SimulateOutcome { result, files })
}

#[derive(Debug, Clone)]
pub struct IdentifyOutcome {
    pub report: RunReport,
    pub result: SimulationResult,
    pub files: Vec<PathBuf>,
}

/// PSO over the `[identify]` parameters against measured data; writes
/// `report.toml` (plus plots of the best fit).
pub fn identify(config: &Config) -> Result<IdentifyOutcome> {
    let section = config
        .identify
        .as_ref()
        .ok_or_else(|| Error::Config("missing [identify] section".into()))?;
    let exp = load_experiment_csv(config.resolve(&section.data))?;
    let nominal = config.cell_parameters()?;
    let space = config.parameter_space(&nominal)?;
    space.check_names(&nominal)?;
    let pso = config.pso()?;
    let options = config.options();
    let base = build_model(config, nominal.clone())?;
    let soc0 = section.soc0;

    let with_values = |values: &[f64]| -> Result<CellParameters> {
        let mut p = nominal.clone();
        for (name, v) in space.names.iter().zip(values) {
            p.set(name, *v)?;
        }
        Ok(p)
    };
    let eval = |values: &[f64]| -> Result<ObjectiveBreakdown> {
        let model = base.with_params(with_values(values)?)?;
        simulate_against(&model, &exp, soc0, &options).map(|(_, j)| j)
    };

    let start = Instant::now();
    let found: PsoResult<ObjectiveBreakdown> = pso_optimize(&space, eval, &pso)?;
    let total = start.elapsed().as_secs_f64();
    info!("{} evaluations in {total:.1} s", found.evaluations);

    let identified = space
        .names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            Ok(IdentifiedValue {
                name: name.clone(),
                lower: space.lower[k],
                initial: nominal.get(name)?,
                identified: found.best_params[k],
                upper: space.upper[k],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let timings = Timings {
        total_s: total,
        per_evaluation_s: total / found.evaluations.max(1) as f64,
    };
    let report = RunReport::new(
        identified,
        found.best_objective,
        found.history.clone(),
        found.evaluations,
        found.failed_evaluations,
        config,
        timings,
    );

    let best = base.with_params(with_values(&found.best_params)?)?;
    let (result, _) = simulate_against(&best, &exp, soc0, &options)?;
    let out = prepare_dir(config)?;
    let path = out.join(REPORT_FILE);
    report.write(&path)?;
    let mut files = vec![path];
    if config.output.plots {
        files.extend(emit_plots(&result, Some(&exp), &out)?);
    }
    Ok(IdentifyOutcome {
        report,
        result,
        files,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityFile {
    pub schema_version: u32,
    pub tool_version: String,
    pub sensitivity: SensitivityReport,
}

#[derive(Debug, Clone)]
pub struct AnalyzeOutcome {
    pub report: SensitivityReport,
    pub files: Vec<PathBuf>,
}

/// Local sensitivity and correlation analysis of the `[analyze]` parameters
/// under the `[profile]` section; writes `sensitivity.toml`.
pub fn analyze(config: &Config) -> Result<AnalyzeOutcome> {
    let section = config
        .analyze
        .as_ref()
        .ok_or_else(|| Error::Config("missing [analyze] section".into()))?;
    let model = build_model(config, config.cell_parameters()?)?;
    let (profile, soc0) = config.profile()?;
    let mut report = lsa(
        &model,
        &section.names,
        &profile,
        soc0,
        section.delta,
        &config.options(),
    )?;
    report.classify(section.beta_lsa, section.beta_corr)?;
    let file = SensitivityFile {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        sensitivity: report.clone(),
    };
    let text =
        toml::to_string(&file).map_err(|e| Error::Config(format!("report serialization: {e}")))?;
    let out = prepare_dir(config)?;
    let path = out.join(SENSITIVITY_FILE);
    write_atomic(&path, text.as_bytes())?;
    Ok(AnalyzeOutcome {
        report,
        files: vec![path],
    })
}

pub fn read_sensitivity(path: impl AsRef<Path>) -> Result<SensitivityFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationFile {
    pub schema_version: u32,
    pub tool_version: String,
    pub data: PathBuf,
    pub objective: ObjectiveBreakdown,
}

#[derive(Debug, Clone)]
pub struct ValidateOutcome {
    pub objective: ObjectiveBreakdown,
    pub result: SimulationResult,
    pub files: Vec<PathBuf>,
}

/// Simulates the measured current of `[validate].data`, with values from an
/// identification report when one is named, and writes `validation.toml`.
pub fn validate(config: &Config) -> Result<ValidateOutcome> {
    let section = config
        .validate
        .as_ref()
        .ok_or_else(|| Error::Config("missing [validate] section".into()))?;
    let data = config.resolve(&section.data);
    let exp = load_experiment_csv(&data)?;
    let mut params = config.cell_parameters()?;
    if let Some(report) = &section.report {
        let report = RunReport::read(config.resolve(report))?;
        for v in &report.identified {
            params.set(&v.name, v.identified)?;
        }
    }
    let model = build_model(config, params)?;
    let (result, score) = simulate_against(&model, &exp, section.soc0, &config.options())?;
    let file = ValidationFile {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        data,
        objective: score,
    };
    let text =
        toml::to_string(&file).map_err(|e| Error::Config(format!("report serialization: {e}")))?;
    let out = prepare_dir(config)?;
    let path = out.join(VALIDATION_FILE);
    write_atomic(&path, text.as_bytes())?;
    let mut files = vec![path];
    if config.output.plots {
        files.extend(emit_plots(&result, Some(&exp), &out)?);
    }
    Ok(ValidateOutcome {
        objective: score,
        result,
        files,
    })
}

fn prepare_dir(config: &Config) -> Result<PathBuf> {
    let out = config.output_dir();
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    Ok(out)
}

//! Run configuration (TOML).
//!
//! ```toml
//! schema_version = 1
//!
//! [cell]            # LG M50 values unless overridden
//! Dsp = 4e-15
//! ocp_pos = { file = "nmc811_ocp.csv" }
//!
//! [mesh]
//! nx_neg = 10
//! radial_method = "fvm_hermite"
//!
//! [solver]
//! rel_tol = 1e-6
//! init_method = "single_step"
//!
//! [profile]
//! type = "cc"
//! c_rate = 1.0
//! initial_soc = 1.0
//!
//! [identify]
//! data = "c20.csv"
//! names = ["theta100_p", "theta0_n"]
//! bounds.theta100_p = { lower = 0.22, upper = 0.34 }
//! bounds.Dsp = { pct = 0.2 }
//! pso = { swarm_size = 20, max_iters = 100, seed = 7 }
//!
//! [analyze]
//! names = ["Dsp", "kn"]
//! delta = 0.05
//! beta_lsa = 0.01
//! beta_corr = 0.9
//!
//! [validate]
//! data = "udds.csv"
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Relative paths resolve against the directory of the configuration file.
//! `DFNKIT_THREADS` overrides `identify.pso.parallel_evals`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dae::{InitMethod, SolverConfig, DEFAULT_H_SS};
use crate::discretize::RadialMethod;
use crate::error::{Error, Result};
use crate::ident::{bounds_from_pct, ParameterSpace, PsoConfig};
use crate::layout::NodeCounts;
use crate::params::CellParameters;
use crate::protocol::{CurrentProfile, Direction, HppcSchedule, SimulationOptions};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable overriding the number of concurrent evaluations.
pub const THREADS_ENV: &str = "DFNKIT_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    #[serde(default)]
    pub cell: toml::Table,
    #[serde(default)]
    pub mesh: MeshSection,
    #[serde(default)]
    pub solver: SolverSection,
    pub profile: Option<ProfileSection>,
    pub identify: Option<IdentifySection>,
    pub analyze: Option<AnalyzeSection>,
    pub validate: Option<ValidateSection>,
    #[serde(default)]
    pub output: OutputSection,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSection {
    pub nx_neg: usize,
    pub nx_sep: usize,
    pub nx_pos: usize,
    pub nr_neg: usize,
    pub nr_pos: usize,
    pub radial_method: RadialMethod,
}

impl Default for MeshSection {
    fn default() -> Self {
        let c = NodeCounts::default();
        MeshSection {
            nx_neg: c.nx_neg,
            nx_sep: c.nx_sep,
            nx_pos: c.nx_pos,
            nr_neg: c.nr_neg,
            nr_pos: c.nr_pos,
            radial_method: RadialMethod::default(),
        }
    }
}

impl MeshSection {
    pub fn counts(&self) -> NodeCounts {
        NodeCounts {
            nx_neg: self.nx_neg,
            nx_sep: self.nx_sep,
            nx_pos: self.nx_pos,
            nr_neg: self.nr_neg,
            nr_pos: self.nr_pos,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    pub max_order: usize,
    pub max_steps: usize,
    pub init_method: InitMethod,
    pub h_ss: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverConfig::default();
        SolverSection {
            rel_tol: s.rel_tol,
            abs_tol: s.abs_tol,
            h_init: s.h_init,
            h_max: s.h_max,
            h_min: s.h_min,
            newton_tol: s.newton_tol,
            max_newton_iters: s.max_newton_iters,
            max_order: s.max_order,
            max_steps: s.max_steps,
            init_method: InitMethod::default(),
            h_ss: DEFAULT_H_SS,
        }
    }
}

impl SolverSection {
    pub fn options(&self) -> SimulationOptions {
        SimulationOptions {
            solver: SolverConfig {
                rel_tol: self.rel_tol,
                abs_tol: self.abs_tol,
                h_init: self.h_init,
                h_max: self.h_max,
                h_min: self.h_min,
                newton_tol: self.newton_tol,
                max_newton_iters: self.max_newton_iters,
                max_order: self.max_order,
                max_steps: self.max_steps,
            },
            init_method: self.init_method,
            h_ss: self.h_ss,
            ..SimulationOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSection {
    #[serde(default = "one")]
    pub initial_soc: f64,
    #[serde(flatten)]
    pub kind: ProfileKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ProfileKind {
    Cc {
        c_rate: f64,
        #[serde(default)]
        direction: Direction,
    },
    /// CSV with `time_s` and `current_a` columns.
    Table { data: PathBuf },
    Hppc {
        #[serde(default)]
        pulse_current: Option<f64>,
        #[serde(default)]
        pulse_duration: Option<f64>,
        #[serde(default)]
        rest_duration: Option<f64>,
        #[serde(default)]
        soc_steps: Option<Vec<f64>>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundSpec {
    Range { lower: f64, upper: f64 },
    Pct { pct: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentifySection {
    /// Measured `time_s, current_a, voltage_v` CSV.
    pub data: PathBuf,
    /// SOC at the first sample, for the coulomb-counted reference.
    #[serde(default = "one")]
    pub soc0: f64,
    pub names: Vec<String>,
    pub bounds: BTreeMap<String, BoundSpec>,
    #[serde(default)]
    pub pso: PsoConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeSection {
    pub names: Vec<String>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub beta_lsa: f64,
    pub beta_corr: f64,
}

fn default_delta() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    pub data: PathBuf,
    #[serde(default = "one")]
    pub soc0: f64,
    /// Identification report whose values replace the cell parameters.
    #[serde(default)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub plots: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
            plots: true,
        }
    }
}

impl Config {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Config::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Format {
                path: path.to_path_buf(),
                msg,
            },
            other => other,
        })?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                config.schema_version
            )));
        }
        Ok(config)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// LG M50 defaults overlaid with the `[cell]` table.
    pub fn cell_parameters(&self) -> Result<CellParameters> {
        let base = toml::Table::try_from(CellParameters::lg_m50())
            .map_err(|e| Error::Config(e.to_string()))?;
        let mut merged = base;
        for (key, value) in &self.cell {
            let value = match (key.as_str(), value) {
                ("ocp_pos" | "ocp_neg", toml::Value::Table(t)) if t.contains_key("file") => {
                    let file = t["file"]
                        .as_str()
                        .ok_or_else(|| Error::Config(format!("{key}.file must be a string")))?;
                    let (x, y) = super::load_ocp_csv(self.resolve(Path::new(file)))?;
                    let mut table = toml::Table::new();
                    table.insert("x".into(), x.into());
                    table.insert("y".into(), y.into());
                    toml::Value::Table(table)
                }
                _ => value.clone(),
            };
            merged.insert(key.clone(), value);
        }
        let params: CellParameters = merged
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("[cell]: {e}")))?;
        params.validate()?;
        Ok(params)
    }

    pub fn options(&self) -> SimulationOptions {
        self.solver.options()
    }

    pub fn profile(&self) -> Result<(CurrentProfile, f64)> {
        let section = self
            .profile
            .as_ref()
            .ok_or_else(|| Error::Config("missing [profile] section".into()))?;
        let profile = match &section.kind {
            ProfileKind::Cc { c_rate, direction } => CurrentProfile::Cc {
                c_rate: *c_rate,
                direction: *direction,
            },
            ProfileKind::Table { data } => {
                let (t, i) = super::load_profile_csv(self.resolve(data))?;
                CurrentProfile::table(t, i)?
            }
            ProfileKind::Hppc {
                pulse_current,
                pulse_duration,
                rest_duration,
                soc_steps,
            } => {
                let d = HppcSchedule::default();
                CurrentProfile::Hppc(HppcSchedule {
                    pulse_current: pulse_current.unwrap_or(d.pulse_current),
                    pulse_duration: pulse_duration.unwrap_or(d.pulse_duration),
                    rest_duration: rest_duration.unwrap_or(d.rest_duration),
                    soc_steps: soc_steps.clone().unwrap_or(d.soc_steps),
                })
            }
        };
        profile.validate()?;
        Ok((profile, section.initial_soc))
    }

    /// Search box of the `[identify]` section, evaluating pct-rule bounds at
    /// the nominal values in `params`.
    pub fn parameter_space(&self, params: &CellParameters) -> Result<ParameterSpace> {
        let id = self
            .identify
            .as_ref()
            .ok_or_else(|| Error::Config("missing [identify] section".into()))?;
        let mut lower = vec![];
        let mut upper = vec![];
        for name in &id.names {
            let nominal = params.get(name)?;
            let (lo, hi) = match id.bounds.get(name) {
                Some(BoundSpec::Range { lower, upper }) => (*lower, *upper),
                Some(BoundSpec::Pct { pct }) => bounds_from_pct(nominal, *pct)?,
                None => return Err(Error::Config(format!("no bounds given for `{name}`"))),
            };
            lower.push(lo);
            upper.push(hi);
        }
        for key in id.bounds.keys() {
            if !id.names.contains(key) {
                return Err(Error::Config(format!(
                    "bounds given for `{key}`, which is not in names"
                )));
            }
        }
        ParameterSpace::new(id.names.clone(), lower, upper)
    }

    /// PSO settings with the thread-count override applied.
    pub fn pso(&self) -> Result<PsoConfig> {
        let mut pso = self.identify.as_ref().map(|i| i.pso).unwrap_or_default();
        if let Ok(v) = std::env::var(THREADS_ENV) {
            pso.parallel_evals = v.trim().parse().map_err(|_| {
                Error::Config(format!(
                    "{THREADS_ENV} must be a positive integer, got {v:?}"
                ))
            })?;
        }
        pso.validate()?;
        Ok(pso)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output.dir)
    }
}

//! Identification reports.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ident::ObjectiveBreakdown;

use super::config::{Config, SCHEMA_VERSION};
use super::format::fmt_report;
use super::write_atomic;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifiedValue {
    pub name: String,
    pub lower: f64,
    pub initial: f64,
    pub identified: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Timings {
    pub total_s: f64,
    pub per_evaluation_s: f64,
}

/// Outcome of an identification run, stored as TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub seed: u64,
    pub evaluations: usize,
    pub failed_evaluations: usize,
    pub objective: ObjectiveBreakdown,
    pub identified: Vec<IdentifiedValue>,
    /// Best objective after each iteration.
    pub history: Vec<f64>,
    pub timings: Timings,
    pub config: Config,
}

impl RunReport {
    pub fn new(
        identified: Vec<IdentifiedValue>,
        objective: ObjectiveBreakdown,
        history: Vec<f64>,
        evaluations: usize,
        failed_evaluations: usize,
        config: &Config,
        timings: Timings,
    ) -> Self {
        RunReport {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config
                .identify
                .as_ref()
                .map(|i| i.pso.seed)
                .unwrap_or_default(),
            evaluations,
            failed_evaluations,
            objective,
            identified,
            history,
            timings,
            config: config.clone(),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("report serialization: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let report: RunReport = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported report schema_version {}",
                report.schema_version
            )));
        }
        Ok(report)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), self.to_toml()?.as_bytes())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunReport::from_toml(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.identified
            .iter()
            .find(|v| v.name == name)
            .map(|v| v.identified)
    }

    /// Console summary of identified values and objective terms.
    pub fn console(&self) -> String {
        let mut s = String::from("Displaying identified values...\n");
        for v in &self.identified {
            let _ = writeln!(s, "------------------------");
            let _ = writeln!(s, "{}:", v.name);
            let _ = writeln!(s, "Identified value: {}", fmt_report(v.identified));
            let _ = writeln!(
                s,
                "{}(lower) | {}(initial) | {}(upper)",
                fmt_report(v.lower),
                fmt_report(v.initial),
                fmt_report(v.upper)
            );
        }
        s.push('\n');
        s.push_str(&objective_console(&self.objective));
        s
    }
}

pub fn objective_console(o: &ObjectiveBreakdown) -> String {
    let mut s = String::from("Displaying objective function values...\n------------------------\n");
    let _ = writeln!(s, "J_V ={} [-]", fmt_report(o.j_v));
    let _ = writeln!(s, "J_V ={} [mV]", fmt_report(o.j_v_mv));
    let _ = writeln!(s, "J_SOCp ={} [-]", fmt_report(o.j_soc_p));
    let _ = writeln!(s, "J_SOCn ={} [-]", fmt_report(o.j_soc_n));
    let _ = writeln!(s, "J_tot ={} [-]", fmt_report(o.j_tot));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn console_block_layout() {
        let config = Config::parse("schema_version = 1\n").unwrap();
        let r = RunReport::new(
            vec![IdentifiedValue {
                name: "c0".into(),
                lower: 500.0,
                initial: 1000.0,
                identified: 1166.36884,
                upper: 1500.0,
            }],
            ObjectiveBreakdown::compose(0.0038222, 13.4785, 0.13299, 0.17276),
            vec![1.0],
            1,
            0,
            &config,
            Timings::default(),
        );
        let text = r.console();
        assert!(text.contains(
            "c0:\nIdentified value: 1166.3688\n500(lower) | 1000(initial) | 1500(upper)"
        ));
        assert!(text.contains("J_V =13.4785 [mV]"));
    }
}

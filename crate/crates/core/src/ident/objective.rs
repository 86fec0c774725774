use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::ExperimentData;
use crate::params::CellParameters;
use crate::protocol::{coulomb_count_soc, SimulationResult};

/// Objective value assigned to a candidate whose simulation failed.
pub const PENALTY: f64 = 1e6;

/// Voltage and SOC mismatch between a simulation and a measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    /// Mean of `|dV| / V_exp`.
    #[serde(rename = "J_V")]
    pub j_v: f64,
    /// Mean of `|dV|`, mV.
    #[serde(rename = "J_V_mV")]
    pub j_v_mv: f64,
    /// Mean SOC error of the positive electrode, percent.
    #[serde(rename = "J_SOCp")]
    pub j_soc_p: f64,
    /// Mean SOC error of the negative electrode, percent.
    #[serde(rename = "J_SOCn")]
    pub j_soc_n: f64,
    #[serde(rename = "J_tot")]
    pub j_tot: f64,
}

impl ObjectiveBreakdown {
    /// Builds a breakdown with `J_tot = J_V + J_SOCp/100 + J_SOCn/100`.
    pub fn compose(j_v: f64, j_v_mv: f64, j_soc_p: f64, j_soc_n: f64) -> Self {
        ObjectiveBreakdown {
            j_v,
            j_v_mv,
            j_soc_p,
            j_soc_n,
            j_tot: j_v + j_soc_p / 100.0 + j_soc_n / 100.0,
        }
    }

    pub fn penalty() -> Self {
        ObjectiveBreakdown {
            j_v: PENALTY,
            j_v_mv: PENALTY,
            j_soc_p: PENALTY,
            j_soc_n: PENALTY,
            j_tot: PENALTY,
        }
    }
}

/// Scores `sim` (sampled on the experiment's timestamps) against `exp`. The
/// SOC reference is coulomb counting of the measured current from `soc0`
/// with the cell's nominal capacity.
pub fn objective(
    sim: &SimulationResult,
    exp: &ExperimentData,
    params: &CellParameters,
    soc0: f64,
) -> Result<ObjectiveBreakdown> {
    let n = exp.len();
    if sim.len() != n {
        return Err(Error::Contract(format!(
            "simulation has {} samples, experiment has {n}",
            sim.len()
        )));
    }
    if n == 0 {
        return Err(Error::Contract("cannot score empty traces".into()));
    }
    let soc_ref = coulomb_count_soc(&exp.t, &exp.i, params.q_nom, soc0)?;
    let nf = n as f64;
    let mut j_v = 0.0;
    let mut j_v_mv = 0.0;
    let mut j_p = 0.0;
    let mut j_n = 0.0;
    for k in 0..n {
        let dv = (sim.v[k] - exp.v[k]).abs();
        j_v += dv / exp.v[k];
        j_v_mv += dv;
        j_p += (sim.soc_p[k] - soc_ref[k]).abs();
        j_n += (sim.soc_n[k] - soc_ref[k]).abs();
    }
    Ok(ObjectiveBreakdown::compose(
        j_v / nf,
        1000.0 * j_v_mv / nf,
        100.0 * j_p / nf,
        100.0 * j_n / nf,
    ))
}

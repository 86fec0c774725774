//! Measured `(t, I, V)` records and alignment of simulations onto them.

use std::path::{Path, PathBuf};

use log::warn;

use crate::error::{Error, Result};
use crate::protocol::{CurrentProfile, SimulationResult};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentData {
    /// s
    pub t: Vec<f64>,
    /// A, discharge positive.
    pub i: Vec<f64>,
    /// V
    pub v: Vec<f64>,
    pub source_path: Option<PathBuf>,
}

impl ExperimentData {
    pub fn new(t: Vec<f64>, i: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        let data = ExperimentData {
            t,
            i,
            v,
            source_path: None,
        };
        data.validate()?;
        Ok(data)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.t.len() != self.i.len() || self.t.len() != self.v.len() {
            return Err(Error::Contract(format!(
                "experiment columns differ in length ({}, {}, {})",
                self.t.len(),
                self.i.len(),
                self.v.len()
            )));
        }
        if self.t.len() < 2 {
            return Err(Error::Contract(
                "experiment needs at least two samples".into(),
            ));
        }
        if let Some(k) = self.t.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Contract(format!(
                "experiment time is not increasing at sample {}",
                k + 1
            )));
        }
        Ok(())
    }

    /// The measured current as a zero-order-hold profile.
    pub fn current_profile(&self) -> Result<CurrentProfile> {
        CurrentProfile::table(self.t.clone(), self.i.clone())
    }

    /// Synthetic record from a simulation.
    pub fn from_simulation(sim: &SimulationResult) -> Result<Self> {
        ExperimentData::new(sim.t.clone(), sim.i.clone(), sim.v.clone())
    }
}

const TIME: &str = "time_s";
const CURRENT: &str = "current_a";
const VOLTAGE: &str = "voltage_v";

/// Reads a CSV with a header naming `time_s`, `current_a` and `voltage_v`
/// in any order. Repeated timestamps keep their first row.
pub fn load_experiment_csv(path: impl AsRef<Path>) -> Result<ExperimentData> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let load_err = |row: usize, msg: String| Error::Load {
        path: path.to_path_buf(),
        row,
        msg,
    };
    let headers = reader
        .headers()
        .map_err(|e| load_err(1, e.to_string()))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| load_err(1, format!("missing column `{name}`")))
    };
    let (ct, ci, cv) = (column(TIME)?, column(CURRENT)?, column(VOLTAGE)?);
    let (mut t, mut i, mut v) = (vec![], vec![], vec![]);
    let mut duplicates = 0usize;
    for (k, record) in reader.records().enumerate() {
        // header is row 1
        let row = k + 2;
        let record = record.map_err(|e| load_err(row, e.to_string()))?;
        let field = |c: usize, name: &str| -> Result<f64> {
            let raw = record
                .get(c)
                .ok_or_else(|| load_err(row, format!("missing `{name}` value")))?;
            let value: f64 = raw
                .parse()
                .map_err(|_| load_err(row, format!("`{name}` value {raw:?} is not a number")))?;
            if !value.is_finite() {
                return Err(load_err(
                    row,
                    format!("`{name}` value {raw:?} is not finite"),
                ));
            }
            Ok(value)
        };
        let (tk, ik, vk) = (field(ct, TIME)?, field(ci, CURRENT)?, field(cv, VOLTAGE)?);
        if let Some(&last) = t.last() {
            if tk == last {
                duplicates += 1;
                continue;
            }
            if tk < last {
                return Err(load_err(
                    row,
                    format!("time {tk} s goes backwards (previous {last} s)"),
                ));
            }
        }
        t.push(tk);
        i.push(ik);
        v.push(vk);
    }
    if duplicates > 0 {
        warn!(
            "{}: dropped {duplicates} row(s) with repeated timestamps",
            path.display()
        );
    }
    if t.len() < 2 {
        return Err(load_err(t.len() + 1, "need at least two samples".into()));
    }
    Ok(ExperimentData {
        t,
        i,
        v,
        source_path: Some(path.to_path_buf()),
    })
}

/// Linear interpolation of `ys` sampled at `ts` onto `tq`; `tq` must lie in
/// the range of `ts`.
pub(crate) fn interp_linear(ts: &[f64], ys: &[f64], tq: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(tq.len());
    let mut k = 0;
    for &t in tq {
        while k + 2 < ts.len() && ts[k + 1] < t {
            k += 1;
        }
        if ts.len() == 1 {
            out.push(ys[0]);
            continue;
        }
        let (t0, t1) = (ts[k], ts[k + 1]);
        let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        out.push(ys[k] + w * (ys[k + 1] - ys[k]));
    }
    out
}

/// Simulation traces interpolated onto the experiment timestamps. Samples
/// outside the simulated span are dropped with a warning.
pub fn resample_to_experiment(
    sim: &SimulationResult,
    exp: &ExperimentData,
) -> Result<SimulationResult> {
    let (Some(&s0), Some(&s1)) = (sim.t.first(), sim.t.last()) else {
        return Err(Error::Alignment("simulation is empty".into()));
    };
    let times: Vec<f64> = exp
        .t
        .iter()
        .copied()
        .filter(|&t| t >= s0 && t <= s1)
        .collect();
    if times.is_empty() {
        return Err(Error::Alignment(format!(
            "no overlap between simulation [{s0}, {s1}] s and experiment [{}, {}] s",
            exp.t[0],
            exp.t[exp.len() - 1]
        )));
    }
    if times.len() < exp.len() {
        warn!(
            "simulation covers {} of {} experiment samples; comparing on the overlap",
            times.len(),
            exp.len()
        );
    }
    Ok(resample_onto(sim, &times))
}

/// Traces on `times`, holding the last simulated values past the end of the
/// run (and the first before its start).
pub fn resample_hold(sim: &SimulationResult, times: &[f64]) -> Result<SimulationResult> {
    if sim.is_empty() {
        return Err(Error::Alignment("simulation is empty".into()));
    }
    let (s0, s1) = (sim.t[0], sim.t[sim.len() - 1]);
    let clamped: Vec<f64> = times.iter().map(|t| t.clamp(s0, s1)).collect();
    let mut out = resample_onto(sim, &clamped);
    out.t = times.to_vec();
    Ok(out)
}

fn resample_onto(sim: &SimulationResult, times: &[f64]) -> SimulationResult {
    let f = |ys: &[f64]| interp_linear(&sim.t, ys, times);
    SimulationResult {
        t: times.to_vec(),
        v: f(&sim.v),
        i: f(&sim.i),
        soc_p: f(&sim.soc_p),
        soc_n: f(&sim.soc_n),
        states: None,
        cutoff: sim.cutoff,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_hits_nodes_and_midpoints() {
        let ts = [0.0, 1.0, 2.0];
        let ys = [0.0, 2.0, 6.0];
        assert_eq!(
            interp_linear(&ts, &ys, &[0.0, 0.5, 1.0, 1.5, 2.0]),
            vec![0.0, 1.0, 2.0, 4.0, 6.0]
        );
    }
}

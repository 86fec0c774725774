//! Files in and out: measured data, configuration, reports and plots.

pub mod config;
pub mod experiment;
pub mod format;
pub mod plot;
pub mod report;

pub use config::{Config, SCHEMA_VERSION};
pub use experiment::{load_experiment_csv, resample_hold, resample_to_experiment, ExperimentData};
pub use plot::emit_plots;
pub use report::{IdentifiedValue, RunReport};

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::protocol::SimulationResult;

/// Writes `contents` next to `path` and renames it into place.
pub(crate) fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = tmp_path(path);
    let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(contents).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub(crate) fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}

/// Simulation traces as CSV: `time_s, voltage_v, current_a, soc_p, soc_n`.
pub fn simulation_csv(result: &SimulationResult) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(vec![]);
    let err = |e: csv::Error| Error::Format {
        path: PathBuf::new(),
        msg: e.to_string(),
    };
    w.write_record(["time_s", "voltage_v", "current_a", "soc_p", "soc_n"])
        .map_err(err)?;
    for k in 0..result.len() {
        w.write_record(
            [
                result.t[k],
                result.v[k],
                result.i[k],
                result.soc_p[k],
                result.soc_n[k],
            ]
            .map(|x| format!("{x:e}")),
        )
        .map_err(err)?;
    }
    w.into_inner().map_err(|e| Error::Format {
        path: PathBuf::new(),
        msg: e.to_string(),
    })
}

pub fn write_simulation_csv(result: &SimulationResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_atomic(path, &simulation_csv(result)?)
}

/// Reads a `time_s, current_a` profile table (other columns ignored).
pub fn load_profile_csv(path: impl AsRef<Path>) -> Result<(Vec<f64>, Vec<f64>)> {
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
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| load_err(1, format!("missing column `{name}`")))
    };
    let (ct, ci) = (col("time_s")?, col("current_a")?);
    let (mut t, mut i) = (vec![], vec![]);
    for (k, rec) in reader.records().enumerate() {
        let row = k + 2;
        let rec = rec.map_err(|e| load_err(row, e.to_string()))?;
        let num = |c: usize| -> Result<f64> {
            let raw = rec.get(c).unwrap_or("");
            raw.parse()
                .map_err(|_| load_err(row, format!("{raw:?} is not a number")))
        };
        t.push(num(ct)?);
        i.push(num(ci)?);
    }
    Ok((t, i))
}

/// Reads a `theta, voltage_v` open-circuit potential table.
pub fn load_ocp_csv(path: impl AsRef<Path>) -> Result<(Vec<f64>, Vec<f64>)> {
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
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| load_err(1, format!("missing column `{name}`")))
    };
    let (cx, cu) = (col("theta")?, col("voltage_v")?);
    let (mut x, mut u) = (vec![], vec![]);
    for (k, rec) in reader.records().enumerate() {
        let row = k + 2;
        let rec = rec.map_err(|e| load_err(row, e.to_string()))?;
        let num = |c: usize| -> Result<f64> {
            let raw = rec.get(c).unwrap_or("");
            raw.parse()
                .map_err(|_| load_err(row, format!("{raw:?} is not a number")))
        };
        x.push(num(cx)?);
        u.push(num(cu)?);
    }
    Ok((x, u))
}

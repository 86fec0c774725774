//! SVG plots with CSV twins of the plotted series.

use std::path::{Path, PathBuf};

use plotters::prelude::*;

use crate::error::{Error, Result};
use crate::protocol::SimulationResult;

use super::experiment::ExperimentData;
use super::{simulation_csv, write_atomic};

pub const VOLTAGE_SVG: &str = "voltage.svg";
pub const SOC_SVG: &str = "soc.svg";
pub const SIMULATION_CSV: &str = "simulation.csv";
pub const EXPERIMENT_CSV: &str = "experiment.csv";

struct Series<'a> {
    label: &'a str,
    x: &'a [f64],
    y: &'a [f64],
    color: RGBColor,
}

/// Writes `voltage.svg`, `soc.svg` and `simulation.csv` (plus
/// `experiment.csv` when `exp` is given) into `out_dir`. Nothing is written
/// unless every file renders.
pub fn emit_plots(
    result: &SimulationResult,
    exp: Option<&ExperimentData>,
    out_dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let out_dir = out_dir.as_ref();
    if result.len() < 2 {
        return Err(Error::Contract(format!(
            "cannot plot a result with {} samples",
            result.len()
        )));
    }
    let mut voltage = vec![Series {
        label: "simulation",
        x: &result.t,
        y: &result.v,
        color: BLUE,
    }];
    if let Some(e) = exp {
        e.validate()?;
        voltage.push(Series {
            label: "experiment",
            x: &e.t,
            y: &e.v,
            color: BLACK,
        });
    }
    let soc = [
        Series {
            label: "SOC_p",
            x: &result.t,
            y: &result.soc_p,
            color: RED,
        },
        Series {
            label: "SOC_n",
            x: &result.t,
            y: &result.soc_n,
            color: BLUE,
        },
    ];
    let mut files: Vec<(PathBuf, Vec<u8>)> = vec![
        (
            out_dir.join(VOLTAGE_SVG),
            render("Terminal voltage", "V [V]", &voltage)?.into_bytes(),
        ),
        (
            out_dir.join(SOC_SVG),
            render("Electrode SOC", "SOC [-]", &soc)?.into_bytes(),
        ),
        (out_dir.join(SIMULATION_CSV), simulation_csv(result)?),
    ];
    if let Some(e) = exp {
        files.push((out_dir.join(EXPERIMENT_CSV), experiment_csv(e)?));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = vec![];
    for (path, bytes) in files {
        if let Err(e) = write_atomic(&path, &bytes) {
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            return Err(e);
        }
        written.push(path);
    }
    Ok(written)
}

fn experiment_csv(e: &ExperimentData) -> Result<Vec<u8>> {
    let err = |e: csv::Error| Error::Format {
        path: PathBuf::from(EXPERIMENT_CSV),
        msg: e.to_string(),
    };
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(["time_s", "current_a", "voltage_v"])
        .map_err(err)?;
    for k in 0..e.len() {
        w.write_record([e.t[k], e.i[k], e.v[k]].map(|x| format!("{x:e}")))
            .map_err(err)?;
    }
    w.into_inner().map_err(|e| Error::Format {
        path: PathBuf::from(EXPERIMENT_CSV),
        msg: e.to_string(),
    })
}

fn bounds(series: &[Series]) -> ((f64, f64), (f64, f64)) {
    let fold = |x_axis: bool| {
        series
            .iter()
            .flat_map(|s| if x_axis { s.x } else { s.y }.iter().copied())
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
    };
    let pad = |(lo, hi): (f64, f64)| {
        let span = (hi - lo).max(1e-9 * lo.abs().max(1.0));
        (lo - 0.05 * span, hi + 0.05 * span)
    };
    (pad(fold(true)), pad(fold(false)))
}

fn render(title: &str, y_label: &str, series: &[Series]) -> Result<String> {
    let plot_err = |e: String| Error::Format {
        path: PathBuf::from(title),
        msg: format!("plot rendering: {e}"),
    };
    let ((x0, x1), (y0, y1)) = bounds(series);
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (800, 500)).into_drawing_area();
        root.fill(&WHITE).map_err(|e| plot_err(e.to_string()))?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(60)
            .build_cartesian_2d(x0..x1, y0..y1)
            .map_err(|e| plot_err(e.to_string()))?;
        chart
            .configure_mesh()
            .x_desc("t [s]")
            .y_desc(y_label)
            .draw()
            .map_err(|e| plot_err(e.to_string()))?;
        for s in series {
            let color = s.color;
            chart
                .draw_series(LineSeries::new(
                    s.x.iter().copied().zip(s.y.iter().copied()),
                    color.stroke_width(2),
                ))
                .map_err(|e| plot_err(e.to_string()))?
                .label(s.label)
                .legend(move |(x, y)| PathElement::new([(x, y), (x + 20, y)], color));
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(|e| plot_err(e.to_string()))?;
        root.present().map_err(|e| plot_err(e.to_string()))?;
    }
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result() -> SimulationResult {
        SimulationResult {
            t: vec![0.0, 1.0, 2.0],
            v: vec![4.0, 3.9, 3.8],
            i: vec![5.0; 3],
            soc_p: vec![1.0, 0.9, 0.8],
            soc_n: vec![1.0, 0.95, 0.9],
            ..SimulationResult::default()
        }
    }

    #[test]
    fn sim_only_writes_two_plots_and_a_csv() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_plots(&result(), None, dir.path()).unwrap();
        assert_eq!(files.len(), 3);
        let svg = std::fs::read_to_string(dir.path().join(VOLTAGE_SVG)).unwrap();
        assert!(svg.contains("<svg") && svg.contains("simulation"));
    }

    #[test]
    fn empty_result_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_plots(&SimulationResult::default(), None, dir.path()).is_err());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }
}

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::experiment::resample_hold;
use crate::model::DfnModel;
use crate::protocol::{run_profile, CurrentProfile, SimulationOptions, SimulationResult};

/// Central-difference sensitivity of one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSensitivity {
    pub name: String,
    pub nominal: f64,
    /// RMS of the concatenated traces; `None` when a perturbed run failed.
    pub index: Option<f64>,
    /// `(V+ - V-) / (2 delta V_nom)` on the nominal time grid.
    pub trace_v: Vec<f64>,
    /// `(SOC+ - SOC-) / (2 delta)`, positive electrode.
    pub trace_soc_p: Vec<f64>,
    pub trace_soc_n: Vec<f64>,
    pub error: Option<String>,
}

impl ParameterSensitivity {
    /// Voltage, positive-SOC and negative-SOC traces end to end.
    pub fn concatenated(&self) -> Vec<f64> {
        let mut out = self.trace_v.clone();
        out.extend(&self.trace_soc_p);
        out.extend(&self.trace_soc_n);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub delta: f64,
    /// Nominal time grid of every trace, s.
    pub t: Vec<f64>,
    pub entries: Vec<ParameterSensitivity>,
    /// Pearson correlation of the concatenated traces; NaN where undefined.
    pub correlation: Vec<Vec<f64>>,
    pub beta_lsa: f64,
    pub beta_corr: f64,
    pub lsa_identifiable: Vec<String>,
    pub corr_identifiable: Vec<String>,
}

impl SensitivityReport {
    pub fn entry(&self, name: &str) -> Option<&ParameterSensitivity> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Fills the correlation matrix and both identifiable sets.
    pub fn classify(&mut self, beta_lsa: f64, beta_corr: f64) -> Result<()> {
        self.correlation = correlation_matrix(self);
        let (lsa, corr) = identifiable_set(self, beta_lsa, beta_corr)?;
        self.beta_lsa = beta_lsa;
        self.beta_corr = beta_corr;
        self.lsa_identifiable = lsa;
        self.corr_identifiable = corr;
        Ok(())
    }
}

/// Perturbs each named parameter by `+/- delta` (relative) and records the
/// response of voltage and electrode SOC under `profile`.
pub fn lsa(
    model: &DfnModel,
    names: &[String],
    profile: &CurrentProfile,
    initial_soc: f64,
    delta: f64,
    options: &SimulationOptions,
) -> Result<SensitivityReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!(
            "perturbation must lie in (0, 1), got {delta}"
        )));
    }
    let params = model.params();
    for name in names {
        let p = params.get(name)?;
        if !(p > 0.0) {
            return Err(Error::Domain(format!(
                "parameter `{name}` must be positive for LSA, got {p}"
            )));
        }
    }
    let nominal = run_profile(model, profile, initial_soc, options)?;
    let t = nominal.t.clone();
    let run = |name: &str, factor: f64| -> Result<SimulationResult> {
        let p = params.with_values([(name, params.get(name)? * factor)])?;
        let m = model.with_params(p)?;
        let sim = run_profile(&m, profile, initial_soc, options)?;
        resample_hold(&sim, &t)
    };
    let mut entries = Vec::with_capacity(names.len());
    for name in names {
        let value = params.get(name)?;
        let pair = run(name, 1.0 + delta).and_then(|plus| Ok((plus, run(name, 1.0 - delta)?)));
        let entry = match pair {
            Ok((plus, minus)) => {
                let c = 1.0 / (2.0 * delta);
                let trace_v: Vec<f64> = (0..t.len())
                    .map(|k| c * (plus.v[k] - minus.v[k]) / nominal.v[k])
                    .collect();
                let trace_soc_p: Vec<f64> = (0..t.len())
                    .map(|k| c * (plus.soc_p[k] - minus.soc_p[k]))
                    .collect();
                let trace_soc_n: Vec<f64> = (0..t.len())
                    .map(|k| c * (plus.soc_n[k] - minus.soc_n[k]))
                    .collect();
                let mut e = ParameterSensitivity {
                    name: name.clone(),
                    nominal: value,
                    index: None,
                    trace_v,
                    trace_soc_p,
                    trace_soc_n,
                    error: None,
                };
                let all = e.concatenated();
                e.index = Some((all.iter().map(|x| x * x).sum::<f64>() / all.len() as f64).sqrt());
                e
            }
            Err(err) => {
                warn!("sensitivity of `{name}` failed: {err}");
                ParameterSensitivity {
                    name: name.clone(),
                    nominal: value,
                    index: None,
                    trace_v: vec![],
                    trace_soc_p: vec![],
                    trace_soc_n: vec![],
                    error: Some(err.to_string()),
                }
            }
        };
        entries.push(entry);
    }
    Ok(SensitivityReport {
        delta,
        t,
        entries,
        correlation: vec![],
        beta_lsa: f64::NAN,
        beta_corr: f64::NAN,
        lsa_identifiable: vec![],
        corr_identifiable: vec![],
    })
}

/// Pearson correlation; NaN when either series has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() || a.len() < 2 {
        return f64::NAN;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return f64::NAN;
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

/// Pairwise correlation of the concatenated sensitivity traces.
pub fn correlation_matrix(report: &SensitivityReport) -> Vec<Vec<f64>> {
    let traces: Vec<Option<Vec<f64>>> = report
        .entries
        .iter()
        .map(|e| e.index.map(|_| e.concatenated()))
        .collect();
    let n = traces.len();
    let mut m = vec![vec![f64::NAN; n]; n];
    for i in 0..n {
        for j in i..n {
            if let (Some(a), Some(b)) = (&traces[i], &traces[j]) {
                let r = if i == j && pearson(a, a).is_finite() {
                    1.0
                } else {
                    pearson(a, b)
                };
                m[i][j] = r;
                m[j][i] = r;
            }
        }
    }
    m
}

/// Names with index above `beta_lsa` (descending index), then the greedy
/// subset whose pairwise |correlation| stays below `beta_corr`.
pub fn identifiable_set(
    report: &SensitivityReport,
    beta_lsa: f64,
    beta_corr: f64,
) -> Result<(Vec<String>, Vec<String>)> {
    let corr = if report.correlation.len() == report.entries.len() {
        report.correlation.clone()
    } else {
        correlation_matrix(report)
    };
    let indices: Vec<Option<f64>> = report.entries.iter().map(|e| e.index).collect();
    let (lsa, corr_set) = select_identifiable(&indices, &corr, beta_lsa, beta_corr)?;
    let name = |k: usize| report.entries[k].name.clone();
    Ok((
        lsa.into_iter().map(name).collect(),
        corr_set.into_iter().map(name).collect(),
    ))
}

/// Index form of [`identifiable_set`]: positions into `indices`.
pub fn select_identifiable(
    indices: &[Option<f64>],
    corr: &[Vec<f64>],
    beta_lsa: f64,
    beta_corr: f64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(beta_lsa > 0.0 && beta_corr > 0.0 && beta_corr <= 1.0) {
        return Err(Error::Config(format!(
            "thresholds need beta_LSA > 0 and 0 < beta_corr <= 1, got {beta_lsa} and {beta_corr}"
        )));
    }
    let mut lsa: Vec<usize> = (0..indices.len())
        .filter(|&k| indices[k].is_some_and(|s| s > beta_lsa))
        .collect();
    lsa.sort_by(|&a, &b| {
        indices[b]
            .unwrap()
            .total_cmp(&indices[a].unwrap())
            .then(a.cmp(&b))
    });
    let mut kept: Vec<usize> = vec![];
    for &k in &lsa {
        let independent = kept.iter().all(|&j| {
            let r = corr[k][j];
            r.is_finite() && r.abs() < beta_corr
        });
        let defined = corr[k][k].is_finite();
        // a filter threshold of 1 keeps everything
        if beta_corr >= 1.0 || (defined && independent) {
            kept.push(k);
        }
    }
    Ok((lsa, kept))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_traced_greedy_example() {
        let s = [Some(3.0), Some(2.0), Some(1.0)];
        let corr = vec![
            vec![1.0, 0.99, 0.1],
            vec![0.99, 1.0, 0.1],
            vec![0.1, 0.1, 1.0],
        ];
        let (lsa, kept) = select_identifiable(&s, &corr, 0.5, 0.9).unwrap();
        assert_eq!(lsa, vec![0, 1, 2]);
        assert_eq!(kept, vec![0, 2]);
        let (_, all) = select_identifiable(&s, &corr, 0.5, 1.0).unwrap();
        assert_eq!(all, lsa);
        let (none, empty) = select_identifiable(&s, &corr, 10.0, 0.9).unwrap();
        assert!(none.is_empty() && empty.is_empty());
    }

    #[test]
    fn pearson_extremes() {
        let a: Vec<f64> = (0..50).map(|k| (k as f64 * 0.3).sin()).collect();
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        assert_eq!(pearson(&a, &a), 1.0);
        assert!((pearson(&a, &neg) + 1.0).abs() < 1e-15);
        assert!(pearson(&a, &[0.0; 50]).is_nan());
    }
}

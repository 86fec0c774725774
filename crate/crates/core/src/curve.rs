//! Shape-preserving piecewise-cubic interpolation of tabulated curves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
///
/// Knots must be strictly increasing. Between two knots the interpolant never
/// overshoots the data, so monotone data gives a monotone curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableRepr", into = "TableRepr")]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TableRepr {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl TryFrom<TableRepr> for MonotoneCubic {
    type Error = Error;
    fn try_from(r: TableRepr) -> Result<Self> {
        MonotoneCubic::new(r.x, r.y)
    }
}

impl From<MonotoneCubic> for TableRepr {
    fn from(c: MonotoneCubic) -> Self {
        TableRepr { x: c.x, y: c.y }
    }
}

impl MonotoneCubic {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Config(format!(
                "curve table has {} abscissae but {} ordinates",
                x.len(),
                y.len()
            )));
        }
        if x.len() < 2 {
            return Err(Error::Config("curve table needs at least 2 samples".into()));
        }
        if let Some(k) = x.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Config(format!(
                "curve abscissae not strictly increasing at index {}",
                k + 1
            )));
        }
        if let Some(k) = x.iter().chain(&y).position(|v| !v.is_finite()) {
            return Err(Error::Config(format!(
                "non-finite curve sample at position {k}"
            )));
        }
        let slopes = fritsch_carlson_slopes(&x, &y);
        Ok(MonotoneCubic { x, y, slopes })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().unwrap())
    }

    /// Evaluates inside the sampled range; `None` outside it.
    pub fn eval(&self, xq: f64) -> Option<f64> {
        let (lo, hi) = self.domain();
        if !(xq >= lo && xq <= hi) {
            return None;
        }
        Some(self.eval_unchecked(xq))
    }

    /// Evaluates with the query clamped to the sampled range.
    pub fn eval_clamped(&self, xq: f64) -> f64 {
        let (lo, hi) = self.domain();
        self.eval_unchecked(xq.clamp(lo, hi))
    }

    fn eval_unchecked(&self, xq: f64) -> f64 {
        let n = self.x.len();
        let k = self.x.partition_point(|&v| v <= xq).clamp(1, n - 1) - 1;
        let h = self.x[k + 1] - self.x[k];
        let s = (xq - self.x[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[k]
            + h10 * h * self.slopes[k]
            + h01 * self.y[k + 1]
            + h11 * h * self.slopes[k + 1]
    }
}

fn fritsch_carlson_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

// Three-point end slope, limited so the end interval stays monotone.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_table_is_linear() {
        let c = MonotoneCubic::new(vec![0.0, 1.0], vec![1.0, 0.0]).unwrap();
        assert_eq!(c.eval(0.5), Some(0.5));
        assert_eq!(c.eval(0.0), Some(1.0));
        assert_eq!(c.eval(1.0), Some(0.0));
    }

    #[test]
    fn reproduces_knots_and_rejects_outside() {
        let x = vec![0.0, 0.1, 0.4, 0.5, 1.0];
        let y = vec![4.2, 4.0, 3.9, 3.7, 3.0];
        let c = MonotoneCubic::new(x.clone(), y.clone()).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(c.eval(*xi), Some(*yi));
        }
        assert!(c.eval(-1e-9).is_none());
        assert!(c.eval(1.0 + 1e-9).is_none());
        assert!(c.eval(f64::NAN).is_none());
    }

    #[test]
    fn monotone_data_gives_monotone_curve() {
        let x = vec![0.0, 0.05, 0.1, 0.5, 0.52, 1.0];
        let y = vec![0.0, 0.01, 0.9, 0.95, 2.0, 2.01];
        let c = MonotoneCubic::new(x, y).unwrap();
        let mut prev = c.eval(0.0).unwrap();
        for i in 1..=2000 {
            let v = c.eval(i as f64 / 2000.0).unwrap();
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn bad_tables() {
        assert!(MonotoneCubic::new(vec![0.0], vec![1.0]).is_err());
        assert!(MonotoneCubic::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(MonotoneCubic::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(MonotoneCubic::new(vec![0.0, 1.0], vec![1.0, f64::INFINITY]).is_err());
    }
}

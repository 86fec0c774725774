//! Through-cell finite-volume mesh and spherical-particle discretizations.

use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::NodeCounts;
use crate::params::CellParameters;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Negative,
    Separator,
    Positive,
}

/// How the radial particle diffusion is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialMethod {
    /// Conservative shell averages with a cubic Hermite surface reconstruction.
    #[default]
    FvmHermite,
    /// Nodes at shell centers with central differences and ghost nodes.
    Fdm,
}

/// `value * eps^brugg`.
pub fn effective_property(value: f64, eps: f64, brugg: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Domain(format!(
            "volume fraction must lie in (0, 1], got {eps}"
        )));
    }
    Ok(value * eps.powf(brugg))
}

/// Uniform shell discretization of one sphere of radius `radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalGrid {
    pub radius: f64,
    pub dr: f64,
    /// Shell boundaries `r_0 = 0 < ... < r_n = radius`.
    pub faces: Vec<f64>,
    pub volumes: Vec<f64>,
    /// Surface-value weights `(outer, inner, gradient)` of the Hermite reconstruction.
    hermite: (f64, f64, f64),
}

impl SphericalGrid {
    pub fn new(radius: f64, shells: usize) -> Result<Self> {
        if shells < 2 {
            return Err(Error::Config(format!(
                "particle discretization needs at least 2 shells, got {shells}"
            )));
        }
        if !(radius > 0.0) {
            return Err(Error::Config(format!(
                "particle radius must be positive, got {radius}"
            )));
        }
        let dr = radius / shells as f64;
        let faces: Vec<f64> = (0..=shells)
            .map(|k| if k == shells { radius } else { k as f64 * dr })
            .collect();
        let volumes = faces
            .windows(2)
            .map(|w| 4.0 / 3.0 * PI * (w[1].powi(3) - w[0].powi(3)))
            .collect();
        Ok(SphericalGrid {
            radius,
            dr,
            faces,
            volumes,
            hermite: hermite_weights(radius, dr),
        })
    }

    pub fn shells(&self) -> usize {
        self.volumes.len()
    }

    /// Shell center radii, the FDM node locations.
    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        self.faces.windows(2).map(|w| 0.5 * (w[0] + w[1]))
    }

    pub fn face_area(&self, k: usize) -> f64 {
        4.0 * PI * self.faces[k] * self.faces[k]
    }

    /// Volume-weighted mean of shell values.
    pub fn mean(&self, c: &[f64]) -> f64 {
        let total: f64 = self.volumes.iter().sum();
        c.iter().zip(&self.volumes).map(|(c, v)| c * v).sum::<f64>() / total
    }

    /// Linear map from `(c_outer, c_inner, surface_flux / ds)` to the surface
    /// concentration: `c_surf = a * c_outer + b * c_inner - g * flux / ds`.
    pub fn surface_weights(&self, method: RadialMethod) -> (f64, f64, f64) {
        match method {
            RadialMethod::FvmHermite => self.hermite,
            RadialMethod::Fdm => (1.0, 0.0, 0.0),
        }
    }

    /// Surface concentration from shell values and the outward surface flux
    /// (mol/m²/s, positive when lithium leaves the particle).
    pub fn surface_concentration(
        &self,
        c: &[f64],
        surface_flux: f64,
        ds: f64,
        method: RadialMethod,
    ) -> f64 {
        let n = c.len();
        let (a, b, g) = self.surface_weights(method);
        a * c[n - 1] + b * c[n - 2] - g * surface_flux / ds
    }

    /// Time derivatives of the shell values for a given outward surface flux.
    pub fn diffusion_rhs(
        &self,
        c: &[f64],
        surface_flux: f64,
        ds: f64,
        method: RadialMethod,
        out: &mut [f64],
    ) {
        let n = c.len();
        match method {
            RadialMethod::FvmHermite => {
                // flux through inner face of shell k, outward positive
                let mut inner = 0.0;
                for k in 0..n {
                    let outer = if k + 1 == n {
                        self.face_area(n) * surface_flux
                    } else {
                        -self.face_area(k + 1) * ds * (c[k + 1] - c[k]) / self.dr
                    };
                    out[k] = (inner - outer) / self.volumes[k];
                    inner = outer;
                }
            }
            RadialMethod::Fdm => {
                let dr2 = self.dr * self.dr;
                let ghost = c[n - 1] - surface_flux * self.dr / ds;
                for k in 0..n {
                    let r = (k as f64 + 0.5) * self.dr;
                    let left = if k == 0 { c[0] } else { c[k - 1] };
                    let right = if k + 1 == n { ghost } else { c[k + 1] };
                    out[k] =
                        ds * ((right - 2.0 * c[k] + left) / dr2 + (right - left) / (r * self.dr));
                }
            }
        }
    }
}

/// Cubic on the two outermost shells (local coordinate `s = (r - R)/dr`,
/// `s` in [-2, 0]) matching both shell averages, the surface gradient and the
/// finite-volume gradient at the shared face. Returns the weights of its
/// value at `s = 0`.
fn hermite_weights(radius: f64, dr: f64) -> (f64, f64, f64) {
    let moment = |m: i32, a: f64, b: f64| {
        let int = |n: i32| (b.powi(n + 1) - a.powi(n + 1)) / (n + 1) as f64;
        radius * radius * int(m) + 2.0 * radius * dr * int(m + 1) + dr * dr * int(m + 2)
    };
    let mut m = Matrix4::zeros();
    for (row, (a, b)) in [(-1.0, 0.0), (-2.0, -1.0)].into_iter().enumerate() {
        let w = moment(0, a, b);
        for col in 0..4 {
            m[(row, col)] = moment(col as i32, a, b) / w;
        }
    }
    m[(2, 1)] = 1.0;
    m[(3, 1)] = 1.0;
    m[(3, 2)] = -2.0;
    m[(3, 3)] = 3.0;
    // c_surf = e0^T M^-1 rhs, rhs = [c_o, c_i, g*dr, c_o - c_i]
    let w = m
        .transpose()
        .lu()
        .solve(&Vector4::new(1.0, 0.0, 0.0, 0.0))
        .expect("Hermite constraint matrix is nonsingular for dr > 0");
    (w[0] + w[3], w[1] - w[3], w[2] * dr)
}

/// Through-cell control volumes and the two particle grids.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub counts: NodeCounts,
    pub radial_method: RadialMethod,
    /// Control-volume widths, one per through-cell node.
    pub dx: Vec<f64>,
    pub x_centers: Vec<f64>,
    pub regions: Vec<Region>,
    pub particle_neg: SphericalGrid,
    pub particle_pos: SphericalGrid,
    /// Specific interfacial areas `3 eps_s / R`, 1/m.
    pub a_s_neg: f64,
    pub a_s_pos: f64,
}

impl Mesh {
    pub fn build(
        counts: NodeCounts,
        params: &CellParameters,
        radial_method: RadialMethod,
    ) -> Result<Self> {
        counts.validate()?;
        let mut dx = Vec::with_capacity(counts.nx_total());
        let mut x_centers = Vec::with_capacity(counts.nx_total());
        let mut regions = Vec::with_capacity(counts.nx_total());
        let mut x0 = 0.0;
        for (region, n, len) in [
            (Region::Negative, counts.nx_neg, params.len_neg),
            (Region::Separator, counts.nx_sep, params.len_sep),
            (Region::Positive, counts.nx_pos, params.len_pos),
        ] {
            let h = len / n as f64;
            for i in 0..n {
                dx.push(h);
                x_centers.push(x0 + (i as f64 + 0.5) * h);
                regions.push(region);
            }
            x0 += len;
        }
        Ok(Mesh {
            counts,
            radial_method,
            dx,
            x_centers,
            regions,
            particle_neg: SphericalGrid::new(params.radius_neg, counts.nr_neg)?,
            particle_pos: SphericalGrid::new(params.radius_pos, counts.nr_pos)?,
            a_s_neg: 3.0 * params.eps_s_neg / params.radius_neg,
            a_s_pos: 3.0 * params.eps_s_pos / params.radius_pos,
        })
    }

    pub fn nx(&self) -> usize {
        self.dx.len()
    }

    /// Global node index of the first positive-electrode node.
    pub fn pos_offset(&self) -> usize {
        self.counts.nx_neg + self.counts.nx_sep
    }

    pub fn particle(&self, negative: bool) -> &SphericalGrid {
        if negative {
            &self.particle_neg
        } else {
            &self.particle_pos
        }
    }
}

/// Mesh for the given counts, the FVM–Hermite radial scheme by default.
pub fn build_mesh(counts: NodeCounts, params: &CellParameters) -> Result<Mesh> {
    Mesh::build(counts, params, RadialMethod::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(a.abs())
    }

    #[test]
    fn uniform_widths() {
        let mut p = CellParameters::lg_m50();
        p.len_neg = 1e-4;
        let m = build_mesh(NodeCounts::uniform(10, 4), &p).unwrap();
        for h in &m.dx[..10] {
            assert!(approx(*h, 1e-5, 1e-14));
        }
        let total: f64 = m.dx.iter().sum();
        assert!(approx(total, p.len_neg + p.len_sep + p.len_pos, 1e-12));
    }

    #[test]
    fn shell_boundaries_and_volumes() {
        let g = SphericalGrid::new(2e-6, 4).unwrap();
        let expect = [0.0, 0.5e-6, 1.0e-6, 1.5e-6, 2.0e-6];
        for (f, e) in g.faces.iter().zip(expect) {
            assert!((f - e).abs() < 1e-20);
        }
        let v: f64 = g.volumes.iter().sum();
        assert!(approx(v, 4.0 / 3.0 * PI * 8e-18, 1e-12));
    }

    #[test]
    fn counts_below_two_rejected() {
        let p = CellParameters::lg_m50();
        let mut c = NodeCounts::uniform(10, 10);
        c.nx_sep = 1;
        assert!(build_mesh(c, &p).is_err());
        assert!(SphericalGrid::new(1e-6, 1).is_err());
    }

    #[test]
    fn effective_property_cases() {
        assert_eq!(effective_property(3.0, 1.0, 1.5).unwrap(), 3.0);
        assert_eq!(effective_property(3.0, 0.3, 0.0).unwrap(), 3.0);
        assert!((effective_property(2.0, 0.25, 1.5).unwrap() - 0.25).abs() < 1e-15);
        assert!(effective_property(1.0, 0.0, 1.5).is_err());
        assert!(effective_property(1.0, -0.2, 1.5).is_err());
    }

    #[test]
    fn flat_profile_reproduced() {
        let g = SphericalGrid::new(5e-6, 7).unwrap();
        let c = vec![12_345.0; 7];
        for m in [RadialMethod::FvmHermite, RadialMethod::Fdm] {
            let s = g.surface_concentration(&c, 0.0, 1e-14, m);
            assert!((s - 12_345.0).abs() < 1e-9, "{m:?}: {s}");
        }
    }

    #[test]
    fn fvm_conserves_mass() {
        let g = SphericalGrid::new(5e-6, 9).unwrap();
        let c: Vec<f64> = (0..9).map(|k| 20_000.0 + 37.0 * (k * k) as f64).collect();
        let flux = 3.7e-6;
        let mut dc = vec![0.0; 9];
        g.diffusion_rhs(&c, flux, 2e-14, RadialMethod::FvmHermite, &mut dc);
        let rate = g.mean(&dc);
        let expect = -3.0 * flux / g.radius;
        assert!(
            (rate - expect).abs() <= 1e-12 * expect.abs(),
            "{rate} vs {expect}"
        );
    }
}

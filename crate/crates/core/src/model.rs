//! DFN residual assembly and derived cell outputs.
//!
//! Unknowns follow [`StateLayout`]; positive applied current discharges the
//! cell. Positive reaction flux `j` (mol/m²/s) moves lithium out of the solid.
//!
//! Residual rows are scaled: concentration rows by the electrode's `cs_max`
//! or by `c0` (units 1/s), charge-balance rows by a reference current
//! density (`F cs_max_n eps_s_n L_n / 3600 s`), and the electrolyte-potential
//! gauge row `phi_e(0) = 0` in volts.

use crate::constants::{FARADAY, GAS_CONSTANT, SECONDS_PER_HOUR};
use crate::dae::{DaeSystem, Pattern, State};
use crate::discretize::{effective_property, Mesh, RadialMethod, Region, SphericalGrid};
use crate::error::{Error, Result};
use crate::layout::{Block, NodeCounts, StateLayout};
use crate::params::{CellParameters, Electrode};

pub type CellState = State;

/// Butler–Volmer reaction flux with symmetric 0.5/0.5 charge transfer:
/// `j = 2 k sqrt(c_e c_surf (cs_max - c_surf)) sinh(F eta / (2 R T))`.
pub fn butler_volmer_flux(
    c_surf: f64,
    c_e: f64,
    eta: f64,
    k: f64,
    cs_max: f64,
    temperature: f64,
) -> Result<f64> {
    if !(c_surf > 0.0 && c_surf < cs_max) {
        return Err(Error::Saturation {
            context: "surface concentration outside (0, cs_max)".into(),
            c_surf,
            cs_max,
        });
    }
    if !(c_e > 0.0) {
        return Err(Error::Domain(format!(
            "electrolyte concentration must be positive, got {c_e}"
        )));
    }
    Ok(bv(
        c_surf,
        c_e,
        eta,
        k,
        cs_max,
        0.5 * FARADAY / (GAS_CONSTANT * temperature),
    ))
}

#[inline]
fn bv(c_surf: f64, c_e: f64, eta: f64, k: f64, cs_max: f64, half_f_rt: f64) -> f64 {
    2.0 * k * (c_e * c_surf * (cs_max - c_surf)).sqrt() * (half_f_rt * eta).sinh()
}

struct ElectrodeConsts {
    electrode: Electrode,
    negative: bool,
    nx: usize,
    nr: usize,
    /// Global through-cell index of the first node.
    offset: usize,
    cs_max: f64,
    ds: f64,
    k: f64,
    a_s: f64,
    sigma_eff: f64,
    /// `(outer, inner, gradient)` surface weights.
    weights: (f64, f64, f64),
}

/// A discretized cell: parameters, mesh, layout and everything derived from
/// them. Immutable; safe to share between threads.
pub struct DfnModel {
    params: CellParameters,
    mesh: Mesh,
    layout: StateLayout,
    pattern: Pattern,
    scale: Vec<f64>,
    neg: ElectrodeConsts,
    pos: ElectrodeConsts,
    /// `eps_e^brugg` per through-cell node.
    brugg_e: Vec<f64>,
    eps_e: Vec<f64>,
    i_ref: f64,
    half_f_rt: f64,
    rt_f: f64,
}

impl DfnModel {
    pub fn new(params: CellParameters, counts: NodeCounts, radial: RadialMethod) -> Result<Self> {
        let mesh = Mesh::build(counts, &params, radial)?;
        Self::from_mesh(params, mesh)
    }

    pub fn from_mesh(params: CellParameters, mesh: Mesh) -> Result<Self> {
        params.validate()?;
        let layout = StateLayout::new(mesh.counts)?;
        let counts = mesh.counts;
        let electrode = |negative: bool| -> Result<ElectrodeConsts> {
            let (electrode, nx, nr, offset, cs_max, ds, k, a_s, sigma, eps_s, grid) = if negative {
                (
                    Electrode::Negative,
                    counts.nx_neg,
                    counts.nr_neg,
                    0,
                    params.cs_max_n,
                    params.ds_neg,
                    params.k_neg,
                    mesh.a_s_neg,
                    params.sigma_n,
                    params.eps_s_neg,
                    &mesh.particle_neg,
                )
            } else {
                (
                    Electrode::Positive,
                    counts.nx_pos,
                    counts.nr_pos,
                    mesh.pos_offset(),
                    params.cs_max_p,
                    params.ds_pos,
                    params.k_pos,
                    mesh.a_s_pos,
                    params.sigma_p,
                    params.eps_s_pos,
                    &mesh.particle_pos,
                )
            };
            Ok(ElectrodeConsts {
                electrode,
                negative,
                nx,
                nr,
                offset,
                cs_max,
                ds,
                k,
                a_s,
                sigma_eff: effective_property(sigma, eps_s, params.brugg)?,
                weights: grid.surface_weights(mesh.radial_method),
            })
        };
        let neg = electrode(true)?;
        let pos = electrode(false)?;
        let eps_e: Vec<f64> = mesh
            .regions
            .iter()
            .map(|r| match r {
                Region::Negative => params.eps_e_neg,
                Region::Separator => params.eps_e_sep,
                Region::Positive => params.eps_e_pos,
            })
            .collect();
        let brugg_e = eps_e
            .iter()
            .map(|&e| effective_property(1.0, e, params.brugg))
            .collect::<Result<Vec<_>>>()?;
        let mut scale = vec![1.0; layout.dim()];
        scale[layout.range(Block::SolidConcNeg)].fill(params.cs_max_n);
        scale[layout.range(Block::SolidConcPos)].fill(params.cs_max_p);
        scale[layout.range(Block::ElectrolyteConc)].fill(params.c0);
        let i_ref =
            FARADAY * params.cs_max_n * params.eps_s_neg * params.len_neg / SECONDS_PER_HOUR;
        let rt_f = GAS_CONSTANT * params.temperature / FARADAY;
        let mut model = DfnModel {
            pattern: Pattern {
                y: vec![],
                yp: vec![],
            },
            params,
            mesh,
            layout,
            scale,
            neg,
            pos,
            brugg_e,
            eps_e,
            i_ref,
            half_f_rt: 0.5 / rt_f,
            rt_f,
        };
        model.pattern = model.build_pattern();
        Ok(model)
    }

    /// Same discretization, different parameters.
    pub fn with_params(&self, params: CellParameters) -> Result<Self> {
        DfnModel::new(params, self.mesh.counts, self.mesh.radial_method)
    }

    pub fn params(&self) -> &CellParameters {
        &self.params
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn layout(&self) -> &StateLayout {
        &self.layout
    }

    pub fn pattern(&self) -> &Pattern {
        &self.pattern
    }

    /// The DAE at a fixed applied current (A).
    pub fn system(&self, current: f64) -> DfnSystem<'_> {
        DfnSystem {
            model: self,
            current,
        }
    }

    fn electrode(&self, e: Electrode) -> &ElectrodeConsts {
        match e {
            Electrode::Negative => &self.neg,
            Electrode::Positive => &self.pos,
        }
    }

    fn grid(&self, ec: &ElectrodeConsts) -> &SphericalGrid {
        self.mesh.particle(ec.negative)
    }

    fn shells<'y>(&self, ec: &ElectrodeConsts, y: &'y [f64], node: usize) -> &'y [f64] {
        let start = self.layout.solid_conc(ec.negative, node, 0);
        &y[start..start + ec.nr]
    }

    /// Reaction flux at one electrode node, solving the coupling between the
    /// flux and the reconstructed surface concentration.
    fn node_flux(&self, ec: &ElectrodeConsts, y: &[f64], node: usize) -> Result<(f64, f64)> {
        let c = self.shells(ec, y, node);
        let (wo, wi, wg) = ec.weights;
        let base = wo * c[ec.nr - 1] + wi * c[ec.nr - 2];
        let slope = wg / ec.ds;
        let g = ec.offset + node;
        let c_e = y[self.layout.electrolyte_conc(g)];
        let phi = y[self.layout.solid_pot(ec.negative, node)] - y[self.layout.electrolyte_pot(g)];
        let ocp = self.params.ocp(ec.electrode);
        let saturated = |c_surf: f64| Error::Saturation {
            context: format!("{} electrode node {node}", ec.electrode),
            c_surf,
            cs_max: ec.cs_max,
        };
        let flux_at = |c_surf: f64| -> Result<f64> {
            let u = ocp.eval(ec.electrode, c_surf / ec.cs_max)?;
            Ok(bv(c_surf, c_e, phi - u, ec.k, ec.cs_max, self.half_f_rt))
        };
        let in_range = |c_surf: f64| c_surf > 0.0 && c_surf < ec.cs_max;
        if slope == 0.0 {
            if !in_range(base) {
                return Err(saturated(base));
            }
            return Ok((flux_at(base)?, base));
        }
        // the zero-flux reconstruction may overshoot; start from the nearest admissible surface value
        let (lo, hi) = (1e-3 * ec.cs_max, (1.0 - 1e-3) * ec.cs_max);
        let cs0 = base.clamp(lo, hi);
        let mut j = if cs0 == base {
            flux_at(base)?
        } else {
            (base - cs0) / slope
        };
        let cs_j = base - slope * j;
        if !(cs_j > lo && cs_j < hi) {
            j = (base - 0.5 * (cs0 + cs_j.clamp(lo, hi))) / slope;
        }
        // g(j) = j - BV(base - slope j) = 0
        let dc = 1e-7 * ec.cs_max;
        let j_scale = ec.k * (c_e * cs0 * (ec.cs_max - cs0)).sqrt();
        let mut converged = false;
        for _ in 0..60 {
            let mut cs = base - slope * j;
            if !in_range(cs) {
                cs = cs.clamp(0.5 * dc, ec.cs_max - 0.5 * dc);
            }
            let b = flux_at(cs)?;
            let resid = j - b;
            let c_fd = if cs + dc < ec.cs_max {
                cs + dc
            } else {
                cs - dc
            };
            let dbdc = (flux_at(c_fd)? - b) / (c_fd - cs);
            let mut step = resid / (1.0 + slope * dbdc);
            let mut accepted = false;
            for _ in 0..40 {
                if in_range(base - slope * (j - step)) {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                return Err(saturated(base - slope * j));
            }
            j -= step;
            if step.abs() <= 1e-12 * (j.abs() + j_scale) {
                converged = true;
                break;
            }
        }
        let c_surf = base - slope * j;
        if !converged || !in_range(c_surf) || !j.is_finite() {
            return Err(saturated(c_surf));
        }
        Ok((j, c_surf))
    }

    /// Reaction fluxes (mol/m²/s) at every node of an electrode.
    pub fn reaction_fluxes(&self, y: &[f64], electrode: Electrode) -> Result<Vec<f64>> {
        self.layout.check_len("state", y.len())?;
        let ec = self.electrode(electrode);
        (0..ec.nx)
            .map(|i| self.node_flux(ec, y, i).map(|(j, _)| j))
            .collect()
    }

    /// Particle surface concentrations at every node of an electrode.
    pub fn surface_concentrations(&self, y: &[f64], electrode: Electrode) -> Result<Vec<f64>> {
        self.layout.check_len("state", y.len())?;
        let ec = self.electrode(electrode);
        (0..ec.nx)
            .map(|i| self.node_flux(ec, y, i).map(|(_, c)| c))
            .collect()
    }

    /// Electrolyte diffusivity and conductivity (both Bruggeman-corrected) at a node.
    fn electrolyte_props(&self, g: usize, c: f64) -> (f64, f64) {
        let b = self.brugg_e[g];
        (
            self.params.diffusivity.eval(c) * self.params.de_scale * b,
            self.params.conductivity.eval(c) * self.params.kappa_scale * b,
        )
    }

    /// Scaled residual `F(t, y, y')` at applied current `i_app` (A).
    pub fn residual(&self, y: &[f64], yp: &[f64], i_app: f64, out: &mut [f64]) -> Result<()> {
        let l = &self.layout;
        l.check_len("state", y.len())?;
        l.check_len("state derivative", yp.len())?;
        l.check_len("residual", out.len())?;
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::Assembly {
                block: l.block_of(i).map_or("?", |b| b.name()),
                index: i,
            });
        }
        if let Some(i) = yp.iter().position(|v| !v.is_finite()) {
            return Err(Error::Assembly {
                block: l.block_of(i).map_or("?", |b| b.name()),
                index: i,
            });
        }
        let nx = self.mesh.nx();
        let ce_start = l.range(Block::ElectrolyteConc).start;
        let ce = &y[ce_start..ce_start + nx];
        if let Some(g) = ce.iter().position(|&c| !(c > 0.0)) {
            return Err(Error::Domain(format!(
                "electrolyte concentration {} at node {g} is not positive",
                ce[g]
            )));
        }
        let i_dens = i_app / self.params.area;
        let one_minus_t = 1.0 - self.params.transference;

        // reaction source per through-cell node, mol/m³/s of electrode volume
        let mut a_j = vec![0.0; nx];
        let mut rhs = vec![0.0; self.neg.nr.max(self.pos.nr)];
        for ec in [&self.neg, &self.pos] {
            let grid = self.grid(ec);
            for i in 0..ec.nx {
                let c = self.shells(ec, y, i);
                if let Some(&bad) = c.iter().find(|&&v| !(v >= 0.0 && v <= ec.cs_max)) {
                    return Err(Error::Saturation {
                        context: format!("{} electrode node {i}, particle interior", ec.electrode),
                        c_surf: bad,
                        cs_max: ec.cs_max,
                    });
                }
                let (j, _) = self.node_flux(ec, y, i)?;
                a_j[ec.offset + i] = ec.a_s * j;
                let rhs = &mut rhs[..ec.nr];
                grid.diffusion_rhs(c, j, ec.ds, self.mesh.radial_method, rhs);
                let start = l.solid_conc(ec.negative, i, 0);
                for k in 0..ec.nr {
                    out[start + k] = (yp[start + k] - rhs[k]) / ec.cs_max;
                }
            }
        }

        // electrolyte: face fluxes of lithium and ionic current, positive toward +x
        let props: Vec<(f64, f64)> = (0..nx).map(|g| self.electrolyte_props(g, ce[g])).collect();
        let dx = &self.mesh.dx;
        let phi_e_start = l.range(Block::ElectrolytePot).start;
        let phi_e = &y[phi_e_start..phi_e_start + nx];
        let mut n_face = vec![0.0; nx + 1];
        let mut ie_face = vec![0.0; nx + 1];
        let diffusion_coeff = 2.0 * self.rt_f * one_minus_t;
        for g in 0..nx - 1 {
            let d = 2.0 / (dx[g] / props[g].0 + dx[g + 1] / props[g + 1].0);
            let kappa = 2.0 / (dx[g] / props[g].1 + dx[g + 1] / props[g + 1].1);
            n_face[g + 1] = -d * (ce[g + 1] - ce[g]);
            ie_face[g + 1] = -kappa * (phi_e[g + 1] - phi_e[g])
                + kappa * diffusion_coeff * (ce[g + 1].ln() - ce[g].ln());
        }
        let c_ref = self.params.c0;
        for g in 0..nx {
            let vol = self.eps_e[g] * dx[g];
            let balance = n_face[g] - n_face[g + 1] + one_minus_t * a_j[g] * dx[g];
            out[ce_start + g] = (vol * yp[ce_start + g] - balance) / (vol * c_ref);
            out[phi_e_start + g] = if g == 0 {
                phi_e[0]
            } else {
                (ie_face[g + 1] - ie_face[g] - FARADAY * a_j[g] * dx[g]) / self.i_ref
            };
        }

        // solid potential with collector boundary currents
        for ec in [&self.neg, &self.pos] {
            let start = l.solid_pot(ec.negative, 0);
            let phi = &y[start..start + ec.nx];
            let h = dx[ec.offset];
            let g_s = ec.sigma_eff / h;
            let (left_bc, right_bc) = if ec.negative {
                (i_dens, 0.0)
            } else {
                (0.0, i_dens)
            };
            for i in 0..ec.nx {
                let left = if i == 0 {
                    left_bc
                } else {
                    -g_s * (phi[i] - phi[i - 1])
                };
                let right = if i + 1 == ec.nx {
                    right_bc
                } else {
                    -g_s * (phi[i + 1] - phi[i])
                };
                out[start + i] = (right - left + FARADAY * a_j[ec.offset + i] * h) / self.i_ref;
            }
        }
        Ok(())
    }

    /// Terminal voltage: solid potential at the positive collector face minus
    /// that at the negative collector face.
    pub fn terminal_voltage(&self, y: &[f64], i_app: f64) -> f64 {
        let i_dens = i_app / self.params.area;
        let l = &self.layout;
        let phi_neg =
            y[l.solid_pot(true, 0)] + i_dens * self.mesh.dx[0] / (2.0 * self.neg.sigma_eff);
        let last = self.mesh.nx() - 1;
        let phi_pos = y[l.solid_pot(false, self.pos.nx - 1)]
            - i_dens * self.mesh.dx[last] / (2.0 * self.pos.sigma_eff);
        phi_pos - phi_neg
    }

    /// Volume-averaged stoichiometry of each electrode, `(positive, negative)`.
    pub fn mean_stoichiometry(&self, y: &[f64]) -> (f64, f64) {
        let mean = |ec: &ElectrodeConsts| {
            let grid = self.grid(ec);
            let mut total = 0.0;
            let mut width = 0.0;
            for i in 0..ec.nx {
                let h = self.mesh.dx[ec.offset + i];
                total += h * grid.mean(self.shells(ec, y, i));
                width += h;
            }
            total / width / ec.cs_max
        };
        (mean(&self.pos), mean(&self.neg))
    }

    /// Per-electrode SOC `(positive, negative)` through the stoichiometric windows.
    pub fn electrode_soc(&self, y: &[f64]) -> Result<(f64, f64)> {
        let p = &self.params;
        let (theta_p, theta_n) = self.mean_stoichiometry(y);
        let map = |theta: f64, t0: f64, t100: f64, name: &str| {
            if t100 == t0 {
                return Err(Error::Config(format!(
                    "degenerate {name} stoichiometric window"
                )));
            }
            Ok((theta - t0) / (t100 - t0))
        };
        Ok((
            map(theta_p, p.theta0_p, p.theta100_p, "positive")?,
            map(theta_n, p.theta0_n, p.theta100_n, "negative")?,
        ))
    }

    /// Lithium inventory (mol) in the solid phase and in the electrolyte.
    pub fn lithium_inventory(&self, y: &[f64]) -> (f64, f64) {
        let area = self.params.area;
        let mut solid = 0.0;
        for (ec, eps_s) in [
            (&self.neg, self.params.eps_s_neg),
            (&self.pos, self.params.eps_s_pos),
        ] {
            let grid = self.grid(ec);
            for i in 0..ec.nx {
                solid +=
                    eps_s * area * self.mesh.dx[ec.offset + i] * grid.mean(self.shells(ec, y, i));
            }
        }
        let ce = &y[self.layout.range(Block::ElectrolyteConc)];
        let electrolyte = ce
            .iter()
            .enumerate()
            .map(|(g, c)| self.eps_e[g] * area * self.mesh.dx[g] * c)
            .sum();
        (solid, electrolyte)
    }

    /// Rested cell at `soc`: uniform concentrations, solid potentials at the
    /// open-circuit values and zero electrolyte potential.
    pub fn equilibrium_state(&self, soc: f64) -> Result<Vec<f64>> {
        if !(0.0..=1.0).contains(&soc) {
            return Err(Error::Domain(format!(
                "initial SOC must lie in [0, 1], got {soc}"
            )));
        }
        let mut y = vec![0.0; self.layout.dim()];
        for ec in [&self.neg, &self.pos] {
            let theta = self.params.stoichiometry_at_soc(ec.electrode, soc);
            let u = self.params.ocp(ec.electrode).eval(ec.electrode, theta)?;
            for i in 0..ec.nx {
                for k in 0..ec.nr {
                    y[self.layout.solid_conc(ec.negative, i, k)] = theta * ec.cs_max;
                }
                y[self.layout.solid_pot(ec.negative, i)] = u;
            }
        }
        y[self.layout.range(Block::ElectrolyteConc)].fill(self.params.c0);
        Ok(y)
    }

    /// Reference current density used to scale charge-balance rows, A/m².
    pub fn reference_current_density(&self) -> f64 {
        self.i_ref
    }

    fn build_pattern(&self) -> Pattern {
        let l = &self.layout;
        let n = l.dim();
        let nx = self.mesh.nx();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut yp_rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut flux_deps: Vec<Option<Vec<usize>>> = vec![None; nx];
        for ec in [&self.neg, &self.pos] {
            for i in 0..ec.nx {
                let g = ec.offset + i;
                flux_deps[g] = Some(vec![
                    l.solid_conc(ec.negative, i, ec.nr - 2),
                    l.solid_conc(ec.negative, i, ec.nr - 1),
                    l.electrolyte_conc(g),
                    l.solid_pot(ec.negative, i),
                    l.electrolyte_pot(g),
                ]);
            }
        }
        let neighbours = |i: usize, len: usize| i.saturating_sub(1)..=(i + 1).min(len - 1);
        for ec in [&self.neg, &self.pos] {
            for i in 0..ec.nx {
                let deps = flux_deps[ec.offset + i].as_ref().unwrap();
                for k in 0..ec.nr {
                    let row = l.solid_conc(ec.negative, i, k);
                    rows[row]
                        .extend(neighbours(k, ec.nr).map(|kk| l.solid_conc(ec.negative, i, kk)));
                    if k + 1 == ec.nr {
                        rows[row].extend(deps);
                    }
                    yp_rows[row].push(row);
                }
                let row = l.solid_pot(ec.negative, i);
                rows[row].extend(neighbours(i, ec.nx).map(|ii| l.solid_pot(ec.negative, ii)));
                rows[row].extend(deps);
            }
        }
        for g in 0..nx {
            let row = l.electrolyte_conc(g);
            rows[row].extend(neighbours(g, nx).map(|gg| l.electrolyte_conc(gg)));
            yp_rows[row].push(row);
            let prow = l.electrolyte_pot(g);
            if g == 0 {
                rows[prow].push(prow);
            } else {
                rows[prow].extend(neighbours(g, nx).map(|gg| l.electrolyte_pot(gg)));
                rows[prow].extend(neighbours(g, nx).map(|gg| l.electrolyte_conc(gg)));
            }
            if let Some(deps) = &flux_deps[g] {
                rows[row].extend(deps);
                if g != 0 {
                    rows[prow].extend(deps);
                }
            }
        }
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
        }
        Pattern {
            y: rows,
            yp: yp_rows,
        }
    }
}

/// Residual of a full cell state at applied current `i_app` (A).
pub fn assemble_residual(state: &CellState, model: &DfnModel, i_app: f64) -> Result<Vec<f64>> {
    let mut out = vec![0.0; model.layout().dim()];
    model.residual(&state.y, &state.yp, i_app, &mut out)?;
    Ok(out)
}

/// The DFN equations at a fixed applied current.
pub struct DfnSystem<'a> {
    model: &'a DfnModel,
    current: f64,
}

impl DfnSystem<'_> {
    pub fn current(&self) -> f64 {
        self.current
    }
}

impl DaeSystem for DfnSystem<'_> {
    fn dim(&self) -> usize {
        self.model.layout.dim()
    }

    fn differential_mask(&self) -> &[bool] {
        self.model.layout.differential_mask()
    }

    fn residual(&self, _t: f64, y: &[f64], yp: &[f64], out: &mut [f64]) -> Result<()> {
        self.model.residual(y, yp, self.current, out)
    }

    fn pattern(&self) -> Option<&Pattern> {
        Some(&self.model.pattern)
    }

    fn scale(&self) -> Option<&[f64]> {
        Some(&self.model.scale)
    }
}

#[cfg(test)]
mod tests;

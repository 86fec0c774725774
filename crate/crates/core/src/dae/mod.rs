//! Variable-step BDF integrator (orders 1–2) for index-1 DAEs
//! `F(t, y, y') = 0`, with consistent-initialization helpers.
//!
//! The nonlinear corrector is a Newton iteration on the scaled residual
//! using a finite-difference Jacobian `dF/dy + alpha dF/dy'` built over the
//! system's sparsity pattern. Local error is estimated from the
//! predictor–corrector difference on differential unknowns only.

mod init;
mod jacobian;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use init::{init_newton_algebraic, init_single_step, InitMethod, DEFAULT_H_SS, INIT_TOL};
pub(crate) use jacobian::Jacobian;

/// Row-wise structural pattern of `dF/dy` and `dF/dy'`: `y[i]` lists the
/// unknowns residual row `i` reads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub y: Vec<Vec<usize>>,
    pub yp: Vec<Vec<usize>>,
}

/// An index-1 DAE. Row `i` of the residual is the equation paired with
/// unknown `i`; rows of algebraic unknowns must not depend on `y'`.
pub trait DaeSystem {
    fn dim(&self) -> usize;

    fn differential_mask(&self) -> &[bool];

    fn residual(&self, t: f64, y: &[f64], yp: &[f64], out: &mut [f64]) -> Result<()>;

    /// Jacobian sparsity; `None` means dense.
    fn pattern(&self) -> Option<&Pattern> {
        None
    }

    /// Typical magnitude of each unknown, used to scale absolute tolerances
    /// and finite-difference increments.
    fn scale(&self) -> Option<&[f64]> {
        None
    }
}

/// A [`DaeSystem`] backed by a closure.
pub struct FnSystem<F> {
    mask: Vec<bool>,
    f: F,
}

impl<F> FnSystem<F>
where
    F: Fn(f64, &[f64], &[f64], &mut [f64]),
{
    pub fn new(mask: Vec<bool>, f: F) -> Self {
        FnSystem { mask, f }
    }
}

impl<F> DaeSystem for FnSystem<F>
where
    F: Fn(f64, &[f64], &[f64], &mut [f64]),
{
    fn dim(&self) -> usize {
        self.mask.len()
    }

    fn differential_mask(&self) -> &[bool] {
        &self.mask
    }

    fn residual(&self, t: f64, y: &[f64], yp: &[f64], out: &mut [f64]) -> Result<()> {
        (self.f)(t, y, yp, out);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub rel_tol: f64,
    /// Absolute tolerance relative to the system's unknown scale.
    pub abs_tol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub max_newton_iters: usize,
    /// Max-norm bound on the scaled residual for Newton convergence.
    pub newton_tol: f64,
    pub max_order: usize,
    pub max_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rel_tol: 1e-6,
            abs_tol: 1e-6,
            h_init: 1e-3,
            h_max: 100.0,
            h_min: 1e-12,
            max_newton_iters: 8,
            newton_tol: 1e-8,
            max_order: 2,
            max_steps: 200_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.newton_tol > 0.0) {
            return Err(Error::Config("solver tolerances must be positive".into()));
        }
        if !(self.h_init > 0.0 && self.h_init <= self.h_max && self.h_min > 0.0) {
            return Err(Error::Config(format!(
                "need 0 < h_init <= h_max and h_min > 0, got h_init = {}, h_max = {}, h_min = {}",
                self.h_init, self.h_max, self.h_min
            )));
        }
        if !(1..=2).contains(&self.max_order) {
            return Err(Error::Config(format!(
                "max_order must be 1 or 2, got {}",
                self.max_order
            )));
        }
        if self.max_newton_iters == 0 {
            return Err(Error::Config("max_newton_iters must be positive".into()));
        }
        Ok(())
    }
}

/// Unknowns and their time derivatives at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub y: Vec<f64>,
    pub yp: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    ReachedTFinal,
    EventCutoff,
    Failed,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub steps: usize,
    pub error_test_failures: usize,
    pub newton_failures: usize,
    pub newton_iters: usize,
    pub residual_evals: usize,
    pub jacobian_evals: usize,
    pub factorizations: usize,
    /// True when the very first attempted step was rejected.
    pub first_step_rejected: bool,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub termination: Termination,
    /// Why the integration failed, when it did.
    pub diagnostic: Option<String>,
    pub stats: SolverStats,
}

impl Trajectory {
    pub fn last(&self) -> &State {
        self.states
            .last()
            .expect("trajectory holds at least the initial state")
    }
}

/// Which instants a solve records.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    /// The initial state and every accepted step.
    Steps,
    /// The given instants (interpolated), plus the final state.
    Times(Vec<f64>),
}

/// Stop condition checked on accepted steps; returns true once crossed.
pub type Event<'a> = &'a dyn Fn(f64, &[f64]) -> bool;

const EVENT_TIME_TOL: f64 = 1e-6;
const LU_ALPHA_TOL: f64 = 0.3;
/// Newton also stops once the tolerance-weighted update falls below this.
const NEWTON_UPDATE_TOL: f64 = 1e-4;

/// Integrates from consistent `(y0, yp0)` over `t_span`, recording every
/// accepted step.
pub fn solve<S: DaeSystem + ?Sized>(
    system: &S,
    t_span: (f64, f64),
    y0: &[f64],
    yp0: &[f64],
    config: &SolverConfig,
    event: Option<Event<'_>>,
) -> Result<Trajectory> {
    Integrator::new(system, config)?.run(t_span, y0, yp0, event, &Output::Steps)
}

/// Like [`solve`] but records the requested output instants.
pub fn solve_with_output<S: DaeSystem + ?Sized>(
    system: &S,
    t_span: (f64, f64),
    y0: &[f64],
    yp0: &[f64],
    config: &SolverConfig,
    event: Option<Event<'_>>,
    output: &Output,
) -> Result<Trajectory> {
    Integrator::new(system, config)?.run(t_span, y0, yp0, event, output)
}

pub(crate) fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub(crate) fn worst_index(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, -1.0), |(bi, bv), (i, x)| {
            if x.abs() > bv {
                (i, x.abs())
            } else {
                (bi, bv)
            }
        })
        .0
}

/// Lagrange interpolation value and derivative through `(ts, ys)` at `t`.
fn lagrange(ts: &[f64], ys: &[&[f64]], t: f64, value: &mut [f64], deriv: Option<&mut [f64]>) {
    let m = ts.len();
    value.fill(0.0);
    let mut weights = vec![0.0; m];
    let mut dweights = vec![0.0; m];
    for j in 0..m {
        let mut w = 1.0;
        for k in 0..m {
            if k != j {
                w *= (t - ts[k]) / (ts[j] - ts[k]);
            }
        }
        weights[j] = w;
        let mut dw = 0.0;
        for l in 0..m {
            if l == j {
                continue;
            }
            let mut p = 1.0 / (ts[j] - ts[l]);
            for k in 0..m {
                if k != j && k != l {
                    p *= (t - ts[k]) / (ts[j] - ts[k]);
                }
            }
            dw += p;
        }
        dweights[j] = dw;
    }
    for (j, y) in ys.iter().enumerate() {
        for (v, yi) in value.iter_mut().zip(y.iter()) {
            *v += weights[j] * yi;
        }
    }
    if let Some(d) = deriv {
        d.fill(0.0);
        for (j, y) in ys.iter().enumerate() {
            for (v, yi) in d.iter_mut().zip(y.iter()) {
                *v += dweights[j] * yi;
            }
        }
    }
}

enum Corrector {
    Converged,
    Failed {
        residual: f64,
        index: usize,
        from_residual_error: bool,
    },
}

struct Integrator<'s, S: DaeSystem + ?Sized> {
    system: &'s S,
    config: SolverConfig,
    n: usize,
    mask: Vec<bool>,
    scale: Vec<f64>,
    jac: Jacobian,
    jac_fresh: bool,
    have_jac: bool,
    /// Most recent error raised by the residual during a corrector.
    residual_error: Option<String>,
    stats: SolverStats,
    /// Accepted points, most recent last (at most three).
    hist_t: Vec<f64>,
    hist_y: Vec<Vec<f64>>,
    yp: Vec<f64>,
}

impl<'s, S: DaeSystem + ?Sized> Integrator<'s, S> {
    fn new(system: &'s S, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        let n = system.dim();
        if system.differential_mask().len() != n {
            return Err(Error::Contract(format!(
                "differential mask has length {}, system dimension is {n}",
                system.differential_mask().len()
            )));
        }
        let scale = system
            .scale()
            .map(|s| s.to_vec())
            .unwrap_or_else(|| vec![1.0; n]);
        Ok(Integrator {
            system,
            config: *config,
            n,
            mask: system.differential_mask().to_vec(),
            scale,
            jac: Jacobian::new(system),
            jac_fresh: false,
            residual_error: None,
            have_jac: false,
            stats: SolverStats::default(),
            hist_t: Vec::new(),
            hist_y: Vec::new(),
            yp: Vec::new(),
        })
    }

    fn residual(&mut self, t: f64, y: &[f64], yp: &[f64], out: &mut [f64]) -> Result<()> {
        self.stats.residual_evals += 1;
        self.system.residual(t, y, yp, out)
    }

    fn run(
        mut self,
        (t0, t_end): (f64, f64),
        y0: &[f64],
        yp0: &[f64],
        event: Option<Event<'_>>,
        output: &Output,
    ) -> Result<Trajectory> {
        let n = self.n;
        if y0.len() != n || yp0.len() != n {
            return Err(Error::Contract(format!(
                "initial vectors have lengths {} and {}, system dimension is {n}",
                y0.len(),
                yp0.len()
            )));
        }
        if !(t_end > t0) {
            return Err(Error::Contract(format!("empty time span [{t0}, {t_end}]")));
        }
        let mut f = vec![0.0; n];
        self.residual(t0, y0, yp0, &mut f)?;
        let r0 = max_norm(&f);
        if !(r0 <= self.config.newton_tol) {
            return Err(Error::Init(format!(
                "inconsistent initial conditions: residual max-norm {r0:.3e} at index {} exceeds {:.1e}",
                worst_index(&f),
                self.config.newton_tol
            )));
        }

        let mut out_times: &[f64] = match output {
            Output::Steps => &[],
            Output::Times(ts) => ts.as_slice(),
        };
        let mut times = vec![];
        let mut states = vec![];
        let record_steps = matches!(output, Output::Steps);
        if record_steps {
            times.push(t0);
            states.push(State {
                t: t0,
                y: y0.to_vec(),
                yp: yp0.to_vec(),
            });
        } else {
            while let Some((&first, rest)) = out_times.split_first() {
                if first > t0 {
                    break;
                }
                if first == t0 {
                    times.push(t0);
                    states.push(State {
                        t: t0,
                        y: y0.to_vec(),
                        yp: yp0.to_vec(),
                    });
                }
                out_times = rest;
            }
        }

        self.hist_t = vec![t0];
        self.hist_y = vec![y0.to_vec()];
        self.yp = yp0.to_vec();
        let mut t = t0;
        let mut h = self.config.h_init.min(t_end - t0);
        let mut order = 1;
        let mut consecutive_err_fail = 0;
        let mut first_attempt = true;

        let mut y_new = vec![0.0; n];
        let mut yp_new = vec![0.0; n];

        loop {
            if self.stats.steps >= self.config.max_steps {
                let diag = format!(
                    "step limit {} reached at t = {t:.6e}",
                    self.config.max_steps
                );
                return Ok(self.finish(times, states, Termination::Failed, Some(diag)));
            }
            let h_left = t_end - t;
            if h >= h_left || h_left - h < 1e-9 * h_left.max(1.0) {
                h = h_left;
            }
            let k = order.min(self.hist_t.len());
            match self.attempt(t, h, k, &mut y_new, &mut yp_new) {
                Step::Accepted { err } => {
                    first_attempt = false;
                    consecutive_err_fail = 0;
                    let t_prev = t;
                    t += h;
                    if (t_end - t).abs() <= 1e-12 * t_end.abs().max(1.0) {
                        t = t_end;
                    }
                    self.stats.steps += 1;
                    self.push_history(t, &y_new);
                    self.yp.copy_from_slice(&yp_new);

                    let crossed = event.map(|e| e(t, &y_new)).unwrap_or(false);
                    if crossed {
                        let event = event.unwrap();
                        let (t_star, state) = self.locate_event(t_prev, t, k, event);
                        self.emit_outputs(&mut out_times, t_star, k, true, &mut times, &mut states);
                        times.push(t_star);
                        states.push(state);
                        return Ok(self.finish(times, states, Termination::EventCutoff, None));
                    }
                    if record_steps {
                        times.push(t);
                        states.push(State {
                            t,
                            y: y_new.clone(),
                            yp: yp_new.clone(),
                        });
                    } else {
                        self.emit_outputs(&mut out_times, t, k, false, &mut times, &mut states);
                    }
                    if t >= t_end {
                        if !record_steps && times.last() != Some(&t) {
                            times.push(t);
                            states.push(State {
                                t,
                                y: y_new.clone(),
                                yp: yp_new.clone(),
                            });
                        }
                        return Ok(self.finish(times, states, Termination::ReachedTFinal, None));
                    }
                    let factor =
                        (0.9 * err.max(1e-10).powf(-1.0 / (k as f64 + 1.0))).clamp(0.2, 2.0);
                    if !(1.0..1.2).contains(&factor) {
                        h *= factor;
                    }
                    h = h.min(self.config.h_max);
                    if order < self.config.max_order && self.hist_t.len() >= 2 {
                        order += 1;
                    }
                }
                Step::ErrorTestFailed { err } => {
                    self.stats.error_test_failures += 1;
                    if first_attempt {
                        self.stats.first_step_rejected = true;
                    }
                    consecutive_err_fail += 1;
                    let factor = (0.9 * err.powf(-1.0 / (k as f64 + 1.0))).clamp(0.2, 0.9);
                    h *= factor;
                    if consecutive_err_fail >= 2 {
                        order = 1;
                    }
                }
                Step::NewtonFailed {
                    residual,
                    index,
                    from_residual_error,
                } => {
                    self.stats.newton_failures += 1;
                    if first_attempt {
                        self.stats.first_step_rejected = true;
                    }
                    if !self.jac_fresh && !from_residual_error {
                        // retry with a refreshed Jacobian at the same step size
                        self.have_jac = false;
                        continue;
                    }
                    h *= 0.25;
                    if h < self.config.h_min {
                        let mut diag = format!(
                            "Newton failed to converge at t = {t:.6e} with h < h_min = {:.1e}; \
                             worst residual {residual:.3e} at index {index}",
                            self.config.h_min
                        );
                        if let Some(e) = &self.residual_error {
                            diag.push_str(&format!(" (last residual error: {e})"));
                        }
                        return Ok(self.finish(times, states, Termination::Failed, Some(diag)));
                    }
                }
            }
        }
    }

    fn finish(
        mut self,
        times: Vec<f64>,
        states: Vec<State>,
        termination: Termination,
        diagnostic: Option<String>,
    ) -> Trajectory {
        self.stats.jacobian_evals = self.jac.evaluations;
        self.stats.factorizations = self.jac.factorizations;
        Trajectory {
            times,
            states,
            termination,
            diagnostic,
            stats: self.stats,
        }
    }

    fn push_history(&mut self, t: f64, y: &[f64]) {
        if self.hist_t.len() == 3 {
            self.hist_t.remove(0);
            let mut old = self.hist_y.remove(0);
            old.copy_from_slice(y);
            self.hist_y.push(old);
        } else {
            self.hist_y.push(y.to_vec());
        }
        self.hist_t.push(t);
    }

    fn pop_history(&mut self) {
        self.hist_t.pop();
        self.hist_y.pop();
    }

    /// Interpolates over the last `k + 1` accepted points.
    fn interpolate(&self, k: usize, t: f64, y: &mut [f64], yp: Option<&mut [f64]>) {
        let m = (k + 1).min(self.hist_t.len());
        let start = self.hist_t.len() - m;
        let ys: Vec<&[f64]> = self.hist_y[start..].iter().map(|v| v.as_slice()).collect();
        lagrange(&self.hist_t[start..], &ys, t, y, yp);
    }

    /// Records requested instants up to `t_upto` (exclusive when `strict`).
    fn emit_outputs(
        &self,
        out_times: &mut &[f64],
        t_upto: f64,
        k: usize,
        strict: bool,
        times: &mut Vec<f64>,
        states: &mut Vec<State>,
    ) {
        let t_last = *self.hist_t.last().unwrap();
        while let Some((&tq, rest)) = out_times.split_first() {
            if tq > t_upto || (strict && tq == t_upto) {
                break;
            }
            let mut y = vec![0.0; self.n];
            let mut yp = vec![0.0; self.n];
            if tq == t_last {
                y.copy_from_slice(self.hist_y.last().unwrap());
                yp.copy_from_slice(&self.yp);
            } else {
                self.interpolate(k, tq, &mut y, Some(&mut yp));
            }
            times.push(tq);
            states.push(State { t: tq, y, yp });
            *out_times = rest;
        }
    }

    /// Bisects the crossing on the interpolant, then re-takes the step to the
    /// crossing time so the final state satisfies the DAE.
    fn locate_event(
        &mut self,
        t_prev: f64,
        t_new: f64,
        k: usize,
        event: Event<'_>,
    ) -> (f64, State) {
        let mut lo = t_prev;
        let mut hi = t_new;
        let mut y = vec![0.0; self.n];
        while hi - lo > EVENT_TIME_TOL {
            let mid = 0.5 * (lo + hi);
            self.interpolate(k, mid, &mut y, None);
            if event(mid, &y) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let t_star = hi;
        if t_star >= t_new {
            let y = self.hist_y.last().unwrap().clone();
            return (
                t_new,
                State {
                    t: t_new,
                    y,
                    yp: self.yp.clone(),
                },
            );
        }
        let mut y_interp = vec![0.0; self.n];
        let mut yp_interp = vec![0.0; self.n];
        self.interpolate(k, t_star, &mut y_interp, Some(&mut yp_interp));
        let saved_t = *self.hist_t.last().unwrap();
        let saved_y = self.hist_y.last().unwrap().clone();
        let saved_yp = self.yp.clone();
        self.pop_history();
        let kk = k.min(self.hist_t.len());
        let mut y_new = vec![0.0; self.n];
        let mut yp_new = vec![0.0; self.n];
        let h = t_star - t_prev;
        let result = if h > 0.0 {
            self.correct(t_prev, h, kk, &mut y_new, &mut yp_new)
        } else {
            Corrector::Failed {
                residual: f64::NAN,
                index: 0,
                from_residual_error: false,
            }
        };
        self.push_history(saved_t, &saved_y);
        self.yp = saved_yp;
        match result {
            Corrector::Converged => (
                t_star,
                State {
                    t: t_star,
                    y: y_new,
                    yp: yp_new,
                },
            ),
            Corrector::Failed { .. } => (
                t_star,
                State {
                    t: t_star,
                    y: y_interp,
                    yp: yp_interp,
                },
            ),
        }
    }

    /// BDF coefficients `y' = alpha y_new + beta` for a step of order `k`.
    fn bdf_coefficients(&self, h: f64, k: usize, beta: &mut [f64]) -> f64 {
        let m = self.hist_t.len();
        let y_n = &self.hist_y[m - 1];
        if k == 1 || m < 2 {
            for (b, y) in beta.iter_mut().zip(y_n) {
                *b = -y / h;
            }
            1.0 / h
        } else {
            let h_prev = self.hist_t[m - 1] - self.hist_t[m - 2];
            let w = h / h_prev;
            let y_nm1 = &self.hist_y[m - 2];
            let c_n = -(1.0 + w) / h;
            let c_nm1 = w * w / ((1.0 + w) * h);
            for ((b, a), c) in beta.iter_mut().zip(y_n).zip(y_nm1) {
                *b = c_n * a + c_nm1 * c;
            }
            (1.0 + 2.0 * w) / ((1.0 + w) * h)
        }
    }

    fn predict(&self, t_new: f64, h: f64, k: usize, y_pred: &mut [f64]) {
        let m = self.hist_t.len();
        if m > k {
            self.interpolate(k, t_new, y_pred, None);
        } else {
            let y_n = &self.hist_y[m - 1];
            for ((p, y), yp) in y_pred.iter_mut().zip(y_n).zip(&self.yp) {
                *p = y + h * yp;
            }
        }
    }

    /// Predictor plus Newton corrector; `y_new` holds the predictor on entry.
    fn correct(
        &mut self,
        t: f64,
        h: f64,
        k: usize,
        y_new: &mut [f64],
        yp_new: &mut [f64],
    ) -> Corrector {
        let n = self.n;
        let t_new = t + h;
        self.residual_error = None;
        self.predict(t_new, h, k, y_new);
        let mut beta = vec![0.0; n];
        let alpha = self.bdf_coefficients(h, k, &mut beta);
        let mut f = vec![0.0; n];
        let mut delta = vec![0.0; n];
        let mut prev_norm = f64::INFINITY;
        for iter in 0..=self.config.max_newton_iters {
            for i in 0..n {
                yp_new[i] = alpha * y_new[i] + beta[i];
            }
            if let Err(e) = self.residual(t_new, y_new, yp_new, &mut f) {
                self.residual_error = Some(e.to_string());
                return Corrector::Failed {
                    residual: f64::NAN,
                    index: 0,
                    from_residual_error: true,
                };
            }
            let norm = max_norm(&f);
            if !norm.is_finite() {
                return Corrector::Failed {
                    residual: norm,
                    index: worst_index(&f),
                    from_residual_error: true,
                };
            }
            if norm <= self.config.newton_tol && iter > 0 {
                self.stats.newton_iters += iter;
                return Corrector::Converged;
            }
            if iter == self.config.max_newton_iters
                || (iter >= 2 && norm > 0.9 * prev_norm)
                || norm > 1e3 * prev_norm
            {
                self.stats.newton_iters += iter;
                return Corrector::Failed {
                    residual: norm,
                    index: worst_index(&f),
                    from_residual_error: false,
                };
            }
            prev_norm = norm;
            if !self.have_jac {
                if self
                    .jac
                    .update(self.system, t_new, y_new, yp_new, &f)
                    .is_err()
                {
                    return Corrector::Failed {
                        residual: norm,
                        index: worst_index(&f),
                        from_residual_error: true,
                    };
                }
                self.stats.residual_evals += self.jac.n_colors().0 + self.jac.n_colors().1;
                self.have_jac = true;
                self.jac_fresh = true;
            }
            if !self.jac.factor(alpha, LU_ALPHA_TOL) {
                return Corrector::Failed {
                    residual: norm,
                    index: worst_index(&f),
                    from_residual_error: false,
                };
            }
            delta.copy_from_slice(&f);
            if !self.jac.solve(&mut delta) {
                return Corrector::Failed {
                    residual: norm,
                    index: worst_index(&f),
                    from_residual_error: false,
                };
            }
            let mut update = 0.0_f64;
            for i in 0..n {
                y_new[i] -= delta[i];
                let w = self.config.rel_tol * y_new[i].abs() + self.config.abs_tol * self.scale[i];
                update = update.max(delta[i].abs() / w);
            }
            if update <= NEWTON_UPDATE_TOL {
                for i in 0..n {
                    yp_new[i] = alpha * y_new[i] + beta[i];
                }
                self.stats.newton_iters += iter + 1;
                return Corrector::Converged;
            }
        }
        unreachable!()
    }

    fn attempt(&mut self, t: f64, h: f64, k: usize, y_new: &mut [f64], yp_new: &mut [f64]) -> Step {
        let mut y_pred = vec![0.0; self.n];
        self.predict(t + h, h, k, &mut y_pred);
        match self.correct(t, h, k, y_new, yp_new) {
            Corrector::Failed {
                residual,
                index,
                from_residual_error,
            } => {
                return Step::NewtonFailed {
                    residual,
                    index,
                    from_residual_error,
                };
            }
            Corrector::Converged => {}
        }
        self.jac_fresh = false;
        let m = self.hist_t.len();
        let coeff = if m > k {
            h / (t + h - self.hist_t[m - 1 - k])
        } else {
            1.0
        };
        let y_n = &self.hist_y[m - 1];
        let (mut sum, mut count) = (0.0, 0usize);
        for i in 0..self.n {
            if !self.mask[i] {
                continue;
            }
            let w = self.config.rel_tol * y_new[i].abs().max(y_n[i].abs())
                + self.config.abs_tol * self.scale[i];
            let e = coeff * (y_new[i] - y_pred[i]) / w;
            sum += e * e;
            count += 1;
        }
        let err = if count == 0 {
            0.0
        } else {
            (sum / count as f64).sqrt()
        };
        if err <= 1.0 {
            Step::Accepted { err }
        } else {
            Step::ErrorTestFailed { err }
        }
    }
}

enum Step {
    Accepted {
        err: f64,
    },
    ErrorTestFailed {
        err: f64,
    },
    NewtonFailed {
        residual: f64,
        index: usize,
        from_residual_error: bool,
    },
}

#[cfg(test)]
mod tests;

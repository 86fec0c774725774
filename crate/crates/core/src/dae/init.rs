//! Consistent initial conditions for index-1 DAEs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{max_norm, worst_index, DaeSystem, Jacobian};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMethod {
    /// One tiny backward-Euler step relaxes the algebraic unknowns.
    #[default]
    SingleStep,
    /// Newton on the algebraic subsystem, then `y'` from the differential rows.
    NewtonAlg,
}

/// Default single-step size, s.
pub const DEFAULT_H_SS: f64 = 1e-6;

/// Residual max-norm both methods drive their output below.
pub const INIT_TOL: f64 = 1e-8;

// Inner target, tighter than INIT_TOL so the returned pair has margin.
const NEWTON_TOL: f64 = 1e-11;
const MAX_ITERS: usize = 300;

/// One backward-Euler step of size `h_ss` from `y_guess` (differential
/// entries fixed, algebraic entries a guess) with the system's input held at
/// `t0`. Returns the given differential values paired with the relaxed
/// algebraic values, and `y'` from the step relation (zero on algebraic
/// entries).
pub fn init_single_step<S: DaeSystem + ?Sized>(
    system: &S,
    t0: f64,
    y_guess: &[f64],
    h_ss: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = check_dims(system, y_guess)?;
    if !(h_ss > 0.0) {
        return Err(Error::Init(format!(
            "single-step size must be positive, got {h_ss}"
        )));
    }
    let alpha = 1.0 / h_ss;
    let beta: Vec<f64> = y_guess.iter().map(|y| -y / h_ss).collect();
    let mut jac = Jacobian::new(system);
    let mut y = y_guess.to_vec();
    let mut yp = vec![0.0; n];
    let mut f = vec![0.0; n];
    let eval = |y: &[f64], yp: &mut [f64], f: &mut [f64]| -> Result<f64> {
        for i in 0..n {
            yp[i] = alpha * y[i] + beta[i];
        }
        system.residual(t0, y, yp, f)?;
        Ok(l2(f))
    };
    let mut norm = eval(&y, &mut yp, &mut f).map_err(single_step_failure)?;
    let mut converged = false;
    for _ in 0..MAX_ITERS {
        // the step relation amplifies roundoff by 1/h_ss, so stop at INIT_TOL
        if max_norm(&f) <= INIT_TOL {
            converged = true;
            break;
        }
        jac.update(system, t0, &y, &yp, &f)
            .map_err(single_step_failure)?;
        if !jac.factor(alpha, 0.0) {
            return Err(single_step_failure("singular iteration matrix"));
        }
        let mut delta = f.clone();
        if !jac.solve(&mut delta) {
            return Err(single_step_failure("linear solve failed"));
        }
        norm = line_search(&mut y, &delta, norm, &mut |trial| {
            eval(trial, &mut yp, &mut f).ok()
        })
        .ok_or_else(|| single_step_failure("line search could not reduce the residual"))?;
        eval(&y, &mut yp, &mut f).map_err(single_step_failure)?;
    }
    if !converged {
        return Err(single_step_failure(format!(
            "no convergence in {MAX_ITERS} iterations (residual {:.3e} at index {})",
            max_norm(&f),
            worst_index(&f)
        )));
    }
    let mask = system.differential_mask();
    let mut y0 = y_guess.to_vec();
    let mut yp0 = vec![0.0; n];
    for i in 0..n {
        if mask[i] {
            yp0[i] = (y[i] - y_guess[i]) / h_ss;
        } else {
            y0[i] = y[i];
        }
    }
    // the pair is O(h_ss) from consistency; a local Newton at t0 closes the gap
    project(system, t0, y0, yp0, &mut jac).map_err(single_step_failure)
}

/// Newton on the algebraic unknowns with differential values fixed, then
/// `y'` on differential entries from `F = 0`.
pub fn init_newton_algebraic<S: DaeSystem + ?Sized>(
    system: &S,
    t0: f64,
    y_guess: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = check_dims(system, y_guess)?;
    let mut jac = Jacobian::new(system);
    project(system, t0, y_guess.to_vec(), vec![0.0; n], &mut jac)
}

fn project<S: DaeSystem + ?Sized>(
    system: &S,
    t0: f64,
    mut y: Vec<f64>,
    mut yp: Vec<f64>,
    jac: &mut Jacobian,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = y.len();
    let mask = system.differential_mask();
    let alg: Vec<usize> = (0..n).filter(|&i| !mask[i]).collect();
    let diff: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
    let mut f = vec![0.0; n];

    let sub_norm =
        |f: &[f64], rows: &[usize]| rows.iter().map(|&i| f[i] * f[i]).sum::<f64>().sqrt();
    let sub_max = |f: &[f64], rows: &[usize]| rows.iter().fold(0.0_f64, |m, &i| m.max(f[i].abs()));

    if !alg.is_empty() {
        system.residual(t0, &y, &yp, &mut f)?;
        let mut norm = sub_norm(&f, &alg);
        let mut converged = false;
        for _ in 0..MAX_ITERS {
            if sub_max(&f, &alg) <= NEWTON_TOL {
                converged = true;
                break;
            }
            jac.update(system, t0, &y, &yp, &f)?;
            let a = DMatrix::from_fn(alg.len(), alg.len(), |r, c| jac.fy()[(alg[r], alg[c])]);
            let lu = a.lu();
            let cond = condition_estimate(&lu.u());
            let rhs = DVector::from_iterator(alg.len(), alg.iter().map(|&i| f[i]));
            let step = match lu.solve(&rhs) {
                Some(s) if cond < 1e14 && s.iter().all(|v| v.is_finite()) => s,
                _ => {
                    return Err(Error::Init(format!(
                        "algebraic Jacobian is singular (condition estimate {cond:.3e})"
                    )))
                }
            };
            let mut delta = vec![0.0; n];
            for (k, &i) in alg.iter().enumerate() {
                delta[i] = step[k];
            }
            let searched = line_search(&mut y, &delta, norm, &mut |trial| {
                system.residual(t0, trial, &yp, &mut f).ok()?;
                Some(sub_norm(&f, &alg))
            });
            system.residual(t0, &y, &yp, &mut f)?;
            match searched {
                Some(n) => norm = n,
                // stalled at the roundoff floor
                None if sub_max(&f, &alg) < 0.1 * INIT_TOL => {
                    converged = true;
                    break;
                }
                None => {
                    return Err(Error::Init(
                        "algebraic Newton line search could not reduce the residual".into(),
                    ))
                }
            }
        }
        if !converged {
            return Err(Error::Init(format!(
                "algebraic Newton did not converge in {MAX_ITERS} iterations (residual {:.3e})",
                sub_max(&f, &alg)
            )));
        }
    }

    system.residual(t0, &y, &yp, &mut f)?;
    for _ in 0..10 {
        if sub_max(&f, &diff) <= NEWTON_TOL {
            break;
        }
        jac.update(system, t0, &y, &yp, &f)?;
        let a = DMatrix::from_fn(diff.len(), diff.len(), |r, c| jac.fyp()[(diff[r], diff[c])]);
        let rhs = DVector::from_iterator(diff.len(), diff.iter().map(|&i| f[i]));
        let step = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Init("dF/dy' on differential rows is singular".into()))?;
        for (k, &i) in diff.iter().enumerate() {
            yp[i] -= step[k];
        }
        system.residual(t0, &y, &yp, &mut f)?;
    }
    let r = max_norm(&f);
    if !(r < INIT_TOL) {
        return Err(Error::Init(format!(
            "direct initialization left residual {r:.3e} at index {}",
            worst_index(&f)
        )));
    }
    Ok((y, yp))
}

fn check_dims<S: DaeSystem + ?Sized>(system: &S, y: &[f64]) -> Result<usize> {
    let n = system.dim();
    if y.len() != n || system.differential_mask().len() != n {
        return Err(Error::Contract(format!(
            "initial guess has length {}, system dimension is {n}",
            y.len()
        )));
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::Init(format!(
            "initial guess is not finite at index {i}"
        )));
    }
    Ok(n)
}

fn single_step_failure(e: impl std::fmt::Display) -> Error {
    Error::Init(format!(
        "single-step initialization failed ({e}); try the newton_alg method"
    ))
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Backtracking on `y - lambda * delta` until the residual norm decreases.
/// `eval` returns `None` when the residual cannot be evaluated.
fn line_search(
    y: &mut [f64],
    delta: &[f64],
    norm: f64,
    eval: &mut dyn FnMut(&[f64]) -> Option<f64>,
) -> Option<f64> {
    let mut lambda = 1.0;
    let mut trial = y.to_vec();
    for _ in 0..30 {
        for ((t, y), d) in trial.iter_mut().zip(y.iter()).zip(delta) {
            *t = y - lambda * d;
        }
        if let Some(new) = eval(&trial) {
            if new.is_finite() && new <= (1.0 - 1e-4 * lambda) * norm {
                y.copy_from_slice(&trial);
                return Some(new);
            }
        }
        lambda *= 0.5;
    }
    None
}

fn condition_estimate(u: &DMatrix<f64>) -> f64 {
    let d = u.diagonal();
    let max = d.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let min = d.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

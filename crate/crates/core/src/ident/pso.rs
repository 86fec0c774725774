use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::CellParameters;

use super::objective::{ObjectiveBreakdown, PENALTY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Linear,
    Log10,
}

/// Box of named parameters searched by the swarm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpace {
    pub names: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub scale: Vec<Scale>,
}

impl ParameterSpace {
    /// Bounds spanning two or more decades are searched in log10.
    pub fn new(names: Vec<String>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let scale = lower
            .iter()
            .zip(&upper)
            .map(|(&lo, &hi)| {
                if lo > 0.0 && hi / lo >= 100.0 {
                    Scale::Log10
                } else {
                    Scale::Linear
                }
            })
            .collect();
        let space = ParameterSpace {
            names,
            lower,
            upper,
            scale,
        };
        space.validate()?;
        Ok(space)
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.names.len();
        if d == 0 {
            return Err(Error::Config("parameter space is empty".into()));
        }
        if self.lower.len() != d || self.upper.len() != d || self.scale.len() != d {
            return Err(Error::Config(
                "parameter space vectors differ in length".into(),
            ));
        }
        for (k, name) in self.names.iter().enumerate() {
            if self.names[..k].contains(name) {
                return Err(Error::Config(format!("parameter `{name}` listed twice")));
            }
            let (lo, hi) = (self.lower[k], self.upper[k]);
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Config(format!(
                    "bounds for `{name}` must satisfy lower < upper, got [{lo}, {hi}]"
                )));
            }
            if self.scale[k] == Scale::Log10 && !(lo > 0.0) {
                return Err(Error::Config(format!(
                    "log-scaled `{name}` needs positive bounds"
                )));
            }
        }
        Ok(())
    }

    /// Checks every name against the cell parameter set.
    pub fn check_names(&self, params: &CellParameters) -> Result<()> {
        for name in &self.names {
            params.get(name)?;
        }
        Ok(())
    }

    fn native_at(&self, k: usize, u: f64) -> f64 {
        let (lo, hi) = (self.lower[k], self.upper[k]);
        let x = match self.scale[k] {
            Scale::Linear => lo + u * (hi - lo),
            Scale::Log10 => 10f64.powf(lo.log10() + u * (hi.log10() - lo.log10())),
        };
        x.clamp(lo, hi)
    }

    /// Maps scaled coordinates in `[0, 1]` to native values.
    pub fn to_native(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter()
            .enumerate()
            .map(|(k, &u)| self.native_at(k, u))
            .collect()
    }

    pub fn to_unit(&self, native: &[f64]) -> Vec<f64> {
        native
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                let (lo, hi) = (self.lower[k], self.upper[k]);
                match self.scale[k] {
                    Scale::Linear => (x - lo) / (hi - lo),
                    Scale::Log10 => (x.log10() - lo.log10()) / (hi.log10() - lo.log10()),
                }
            })
            .collect()
    }
}

/// Lower and upper bounds from scaling the decade exponent of `nominal` by
/// `1 +/- pct`.
pub fn bounds_from_pct(nominal: f64, pct: f64) -> Result<(f64, f64)> {
    if !(nominal > 0.0) {
        return Err(Error::Domain(format!(
            "nominal value must be positive, got {nominal}"
        )));
    }
    let e = nominal.log10();
    let a = 10f64.powf(e * (1.0 + pct));
    let b = 10f64.powf(e * (1.0 - pct));
    if a == b {
        warn!("bounds from nominal {nominal} with pct {pct} are degenerate");
    }
    Ok((a.min(b), a.max(b)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub max_iters: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub seed: u64,
    pub parallel_evals: usize,
    /// Stop once gbest improves by less than this over `stall_iters` iterations.
    pub stall_tol: f64,
    /// 0 disables stall stopping.
    pub stall_iters: usize,
}

impl Default for PsoConfig {
    fn default() -> Self {
        PsoConfig {
            swarm_size: 20,
            max_iters: 100,
            inertia: 0.729,
            cognitive: 1.49445,
            social: 1.49445,
            seed: 0,
            parallel_evals: 1,
            stall_tol: 0.0,
            stall_iters: 0,
        }
    }
}

impl PsoConfig {
    /// Defaults with the swarm sized `ceil(20 sqrt(dim))`.
    pub fn for_dimension(dim: usize) -> Self {
        PsoConfig {
            swarm_size: (20.0 * (dim as f64).sqrt()).ceil() as usize,
            ..PsoConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.swarm_size < 2 {
            return Err(Error::Config(format!(
                "swarm size must be at least 2, got {}",
                self.swarm_size
            )));
        }
        if [self.inertia, self.cognitive, self.social]
            .iter()
            .any(|c| !(c.is_finite() && *c >= 0.0))
        {
            return Err(Error::Config(
                "PSO coefficients must be finite and nonnegative".into(),
            ));
        }
        if self.parallel_evals == 0 {
            return Err(Error::Config("parallel_evals must be positive".into()));
        }
        Ok(())
    }
}

/// Something the swarm can minimize.
pub trait Scored: Clone + Send {
    fn score(&self) -> f64;
    fn penalty() -> Self;
}

impl Scored for f64 {
    fn score(&self) -> f64 {
        *self
    }

    fn penalty() -> Self {
        PENALTY
    }
}

impl Scored for ObjectiveBreakdown {
    fn score(&self) -> f64 {
        self.j_tot
    }

    fn penalty() -> Self {
        ObjectiveBreakdown::penalty()
    }
}

#[derive(Debug, Clone)]
pub struct PsoResult<T> {
    pub names: Vec<String>,
    pub best_params: Vec<f64>,
    pub best_objective: T,
    /// gbest score after initialization and after each iteration.
    pub history: Vec<f64>,
    pub evaluations: usize,
    pub failed_evaluations: usize,
}

impl<T> PsoResult<T> {
    pub fn named(&self) -> Vec<(String, f64)> {
        self.names
            .iter()
            .cloned()
            .zip(self.best_params.iter().copied())
            .collect()
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|k| self.best_params[k])
    }
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Global-best particle swarm over `space`. `eval` receives native values
/// in the order of `space.names`; errors score as the penalty.
///
/// Every coordinate draws from its own stream keyed by the seed and the
/// parameter name, so results do not depend on name order or on the number
/// of concurrent evaluations.
pub fn pso_optimize<T, F>(
    space: &ParameterSpace,
    eval: F,
    config: &PsoConfig,
) -> Result<PsoResult<T>>
where
    T: Scored,
    F: Fn(&[f64]) -> Result<T> + Sync,
{
    space.validate()?;
    config.validate()?;
    let d = space.dim();
    let s = config.swarm_size;
    let mut streams: Vec<ChaCha8Rng> = space
        .names
        .iter()
        .map(|name| ChaCha8Rng::seed_from_u64(config.seed ^ fnv1a(name)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallel_evals)
        .build()
        .map_err(|e| Error::Optimization(format!("cannot start evaluation pool: {e}")))?;

    // x[p][k], v[p][k] in unit coordinates
    let mut x = vec![vec![0.0; d]; s];
    let mut v = vec![vec![0.0; d]; s];
    for (k, rng) in streams.iter_mut().enumerate() {
        for p in 0..s {
            x[p][k] = rng.random::<f64>();
            v[p][k] = 0.2 * (rng.random::<f64>() - 0.5);
        }
    }
    let mut evaluations = 0;
    let mut failed = 0;
    let mut evaluate = |x: &[Vec<f64>]| -> Vec<Option<T>> {
        let natives: Vec<Vec<f64>> = x.iter().map(|u| space.to_native(u)).collect();
        let out: Vec<Option<T>> =
            pool.install(|| natives.par_iter().map(|p| eval(p).ok()).collect());
        evaluations += out.len();
        failed += out.iter().filter(|o| o.is_none()).count();
        out
    };

    let first = evaluate(&x);
    if first.iter().all(|o| o.is_none()) {
        return Err(Error::Optimization(
            "every particle failed to evaluate at initialization".into(),
        ));
    }
    let mut pbest_x = x.clone();
    let mut pbest: Vec<T> = first
        .into_iter()
        .map(|o| o.unwrap_or_else(T::penalty))
        .collect();
    let mut g = best_index(&pbest);
    let mut history = vec![pbest[g].score()];

    for _ in 0..config.max_iters {
        for (k, rng) in streams.iter_mut().enumerate() {
            for p in 0..s {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let vel = config.inertia * v[p][k]
                    + config.cognitive * r1 * (pbest_x[p][k] - x[p][k])
                    + config.social * r2 * (pbest_x[g][k] - x[p][k]);
                let pos = x[p][k] + vel;
                if !(0.0..=1.0).contains(&pos) {
                    x[p][k] = pos.clamp(0.0, 1.0);
                    v[p][k] = 0.0;
                } else {
                    x[p][k] = pos;
                    v[p][k] = vel;
                }
            }
        }
        let scores = evaluate(&x);
        for (p, score) in scores.into_iter().enumerate() {
            let score = score.unwrap_or_else(T::penalty);
            if score.score() < pbest[p].score() {
                pbest[p] = score;
                pbest_x[p].clone_from(&x[p]);
            }
        }
        g = best_index(&pbest);
        history.push(pbest[g].score());
        let n = history.len();
        if config.stall_iters > 0 && n > config.stall_iters {
            let gain = history[n - 1 - config.stall_iters] - history[n - 1];
            if gain < config.stall_tol {
                break;
            }
        }
    }
    Ok(PsoResult {
        names: space.names.clone(),
        best_params: space.to_native(&pbest_x[g]),
        best_objective: pbest[g].clone(),
        history,
        evaluations,
        failed_evaluations: failed,
    })
}

/// Lowest score, first index on ties.
fn best_index<T: Scored>(scores: &[T]) -> usize {
    let mut best = 0;
    for (k, s) in scores.iter().enumerate() {
        if s.score() < scores[best].score() {
            best = k;
        }
    }
    best
}

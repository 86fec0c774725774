//! Current profiles and the simulation driver.

use serde::{Deserialize, Serialize};

use crate::constants::SECONDS_PER_HOUR;
use crate::dae::{self, InitMethod, Output, SolverConfig, State, Termination, DEFAULT_H_SS};
use crate::error::{Error, Result};
use crate::model::DfnModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Charge,
    #[default]
    Discharge,
}

/// Pulse test stepped down through SOC levels. Starting at `soc_steps[0]`,
/// each level runs a discharge pulse, a rest, a charge pulse and a rest, then
/// discharges at `pulse_current` to the next level and rests again.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HppcSchedule {
    /// Pulse magnitude, A.
    pub pulse_current: f64,
    /// s
    pub pulse_duration: f64,
    /// s
    pub rest_duration: f64,
    pub soc_steps: Vec<f64>,
}

impl Default for HppcSchedule {
    fn default() -> Self {
        HppcSchedule {
            pulse_current: 5.0,
            pulse_duration: 10.0,
            rest_duration: 40.0,
            soc_steps: vec![0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CurrentProfile {
    /// Constant current until the voltage cutoff.
    Cc {
        c_rate: f64,
        #[serde(default)]
        direction: Direction,
    },
    /// Piecewise-constant current: `currents[k]` holds on `[times[k], times[k+1])`.
    Table {
        times: Vec<f64>,
        currents: Vec<f64>,
    },
    Hppc(HppcSchedule),
}

impl CurrentProfile {
    pub fn table(times: Vec<f64>, currents: Vec<f64>) -> Result<Self> {
        let p = CurrentProfile::Table { times, currents };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CurrentProfile::Cc { c_rate, .. } => {
                if !(c_rate.is_finite() && *c_rate >= 0.0) {
                    return Err(Error::Config(format!(
                        "C-rate must be finite and nonnegative, got {c_rate}"
                    )));
                }
            }
            CurrentProfile::Table { times, currents } => {
                if times.len() != currents.len() {
                    return Err(Error::Config(format!(
                        "profile has {} times but {} currents",
                        times.len(),
                        currents.len()
                    )));
                }
                if times.len() < 2 {
                    return Err(Error::Config(
                        "profile table needs at least two rows".into(),
                    ));
                }
                if let Some(k) = times.windows(2).position(|w| !(w[1] > w[0])) {
                    return Err(Error::Config(format!(
                        "profile times must increase strictly (row {} at t = {})",
                        k + 1,
                        times[k + 1]
                    )));
                }
                if times.iter().chain(currents).any(|v| !v.is_finite()) {
                    return Err(Error::Config(
                        "profile table holds non-finite values".into(),
                    ));
                }
            }
            CurrentProfile::Hppc(s) => {
                if !(s.pulse_duration > 0.0 && s.rest_duration > 0.0) {
                    return Err(Error::Config("HPPC durations must be positive".into()));
                }
                if !(s.pulse_current > 0.0) {
                    return Err(Error::Config("HPPC pulse current must be positive".into()));
                }
                if s.soc_steps.is_empty() || s.soc_steps.iter().any(|x| !(0.0..=1.0).contains(x)) {
                    return Err(Error::Config(
                        "HPPC SOC steps must be a nonempty list in [0, 1]".into(),
                    ));
                }
                if s.soc_steps.windows(2).any(|w| !(w[1] < w[0])) {
                    return Err(Error::Config(
                        "HPPC SOC steps must decrease strictly".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

impl HppcSchedule {
    /// The equivalent piecewise-constant table for a cell of capacity `q_nom` (Ah).
    pub fn expand(&self, q_nom: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        CurrentProfile::Hppc(self.clone()).validate()?;
        if !(q_nom > 0.0) {
            return Err(Error::Domain(format!(
                "nominal capacity must be positive, got {q_nom}"
            )));
        }
        let mut times = vec![];
        let mut currents = vec![];
        let mut t = 0.0;
        let mut push = |current: f64, duration: f64| {
            times.push(t);
            currents.push(current);
            t += duration;
        };
        let (ip, tp, tr) = (self.pulse_current, self.pulse_duration, self.rest_duration);
        for (k, &soc) in self.soc_steps.iter().enumerate() {
            push(ip, tp);
            push(0.0, tr);
            push(-ip, tp);
            push(0.0, tr);
            if let Some(&next) = self.soc_steps.get(k + 1) {
                push(ip, (soc - next) * q_nom * SECONDS_PER_HOUR / ip);
                push(0.0, tr);
            }
        }
        times.push(t);
        currents.push(0.0);
        Ok((times, currents))
    }
}

/// Applied current for a C-rate; discharge is positive.
pub fn crate_to_current(c_rate: f64, q_nom: f64, direction: Direction) -> f64 {
    let i = c_rate * q_nom;
    match direction {
        Direction::Discharge => i,
        Direction::Charge => -i,
    }
}

/// SOC by trapezoidal coulomb counting, discharge-positive current.
pub fn coulomb_count_soc(t: &[f64], current: &[f64], q: f64, soc0: f64) -> Result<Vec<f64>> {
    if !(q > 0.0) {
        return Err(Error::Domain(format!("capacity must be positive, got {q}")));
    }
    if t.len() != current.len() {
        return Err(Error::Contract(format!(
            "time and current lengths differ ({} vs {})",
            t.len(),
            current.len()
        )));
    }
    if t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Contract("times must increase strictly".into()));
    }
    let mut soc = Vec::with_capacity(t.len());
    let mut charge = 0.0;
    for k in 0..t.len() {
        if k > 0 {
            charge += 0.5 * (current[k] + current[k - 1]) * (t[k] - t[k - 1]);
        }
        soc.push(soc0 - charge / (SECONDS_PER_HOUR * q));
    }
    Ok(soc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationOptions {
    pub solver: SolverConfig,
    pub init_method: InitMethod,
    /// Single-step initialization step size, s.
    pub h_ss: f64,
    /// Keep full states alongside the output traces.
    pub keep_states: bool,
    /// CC runs stop after this many multiples of the nominal duration.
    pub cc_time_factor: f64,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        SimulationOptions {
            solver: SolverConfig::default(),
            init_method: InitMethod::SingleStep,
            h_ss: DEFAULT_H_SS,
            keep_states: false,
            cc_time_factor: 1.5,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SimulationResult {
    pub t: Vec<f64>,
    pub v: Vec<f64>,
    pub i: Vec<f64>,
    pub soc_p: Vec<f64>,
    pub soc_n: Vec<f64>,
    pub states: Option<Vec<State>>,
    /// True when a voltage cutoff ended the run before the profile did.
    pub cutoff: bool,
}

impl SimulationResult {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Discharged capacity by trapezoidal integration of the current, Ah.
    pub fn discharged_capacity(&self) -> f64 {
        self.t
            .windows(2)
            .zip(self.i.windows(2))
            .map(|(t, i)| 0.5 * (i[0] + i[1]) * (t[1] - t[0]))
            .sum::<f64>()
            / SECONDS_PER_HOUR
    }

    fn push(&mut self, model: &DfnModel, state: &State, current: f64, keep: bool) -> Result<()> {
        let (soc_p, soc_n) = model.electrode_soc(&state.y)?;
        self.t.push(state.t);
        self.v.push(model.terminal_voltage(&state.y, current));
        self.i.push(current);
        self.soc_p.push(soc_p);
        self.soc_n.push(soc_n);
        if keep {
            self.states.get_or_insert_with(Vec::new).push(state.clone());
        }
        Ok(())
    }
}

struct Segment {
    t0: f64,
    t1: f64,
    current: f64,
    /// Output instants in `(t0, t1]`.
    outputs: Vec<f64>,
}

/// Runs `profile` from a rested cell at `initial_soc`.
pub fn run_profile(
    model: &DfnModel,
    profile: &CurrentProfile,
    initial_soc: f64,
    options: &SimulationOptions,
) -> Result<SimulationResult> {
    profile.validate()?;
    options.solver.validate()?;
    let params = model.params();
    let (segments, t_start, first_current) = match profile {
        CurrentProfile::Cc { c_rate, direction } => {
            let current = crate_to_current(*c_rate, params.q_nom, *direction);
            let t_end = if *c_rate > 0.0 {
                options.cc_time_factor * SECONDS_PER_HOUR / c_rate
            } else {
                SECONDS_PER_HOUR
            };
            let outputs = second_grid(0.0, t_end);
            (
                vec![Segment {
                    t0: 0.0,
                    t1: t_end,
                    current,
                    outputs,
                }],
                0.0,
                current,
            )
        }
        CurrentProfile::Table { times, currents } => {
            let segs = table_segments(times, currents);
            (segs, times[0], currents[0])
        }
        CurrentProfile::Hppc(s) => {
            let (times, currents) = s.expand(params.q_nom)?;
            let mut segs = table_segments(&times, &currents);
            for seg in &mut segs {
                seg.outputs = second_grid(seg.t0, seg.t1);
            }
            (segs, times[0], currents[0])
        }
    };
    let end_current = match profile {
        CurrentProfile::Table { currents, .. } => *currents.last().unwrap(),
        _ => 0.0,
    };

    let init = |current: f64, t: f64, y: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
        let sys = model.system(current);
        match options.init_method {
            InitMethod::SingleStep => dae::init_single_step(&sys, t, y, options.h_ss),
            InitMethod::NewtonAlg => dae::init_newton_algebraic(&sys, t, y),
        }
    };

    let mut result = SimulationResult::default();
    let guess = model.equilibrium_state(initial_soc)?;
    let (mut y, mut yp) =
        init(first_current, t_start, &guess).map_err(|e| segment_error(0, t_start, e))?;
    result.push(
        model,
        &State {
            t: t_start,
            y: y.clone(),
            yp: yp.clone(),
        },
        first_current,
        options.keep_states,
    )?;
    let is_cc = matches!(profile, CurrentProfile::Cc { .. });
    let v_min = params.v_min;
    let v_max = params.v_max;
    for (k, seg) in segments.iter().enumerate() {
        if k > 0 {
            let (y1, yp1) =
                init(seg.current, seg.t0, &y).map_err(|e| segment_error(k, seg.t0, e))?;
            y = y1;
            yp = yp1;
            // the boundary sample reports the current commanded from it on
            let n = result.t.len();
            if n > 0 && result.t[n - 1] == seg.t0 {
                let state = State {
                    t: seg.t0,
                    y: y.clone(),
                    yp: yp.clone(),
                };
                truncate(&mut result, n - 1);
                result.push(model, &state, seg.current, options.keep_states)?;
            }
        }
        let sys = model.system(seg.current);
        let current = seg.current;
        let cutoff = move |_t: f64, y: &[f64]| {
            let v = model.terminal_voltage(y, current);
            (current > 0.0 && v <= v_min) || (current < 0.0 && v >= v_max)
        };
        let event: Option<dae::Event<'_>> = if current != 0.0 { Some(&cutoff) } else { None };
        let traj = dae::solve_with_output(
            &sys,
            (seg.t0, seg.t1),
            &y,
            &yp,
            &options.solver,
            event,
            &Output::Times(seg.outputs.clone()),
        )
        .map_err(|e| segment_error(k, seg.t0, e))?;
        if traj.termination == Termination::Failed {
            let last = traj.states.last().map_or(seg.t0, |s| s.t);
            return Err(segment_error(
                k,
                seg.t0,
                Error::Solver {
                    t: last,
                    h: f64::NAN,
                    reason: traj.diagnostic.clone().unwrap_or_default(),
                },
            ));
        }
        for state in traj.states.iter().filter(|s| s.t > seg.t0) {
            result.push(model, state, current, options.keep_states)?;
        }
        let last = traj.last();
        y.clone_from(&last.y);
        yp.clone_from(&last.yp);
        if traj.termination == Termination::EventCutoff {
            result.cutoff = true;
            return Ok(result);
        }
    }
    if !is_cc && end_current != segments.last().map_or(end_current, |s| s.current) {
        let t = result.t.last().copied().unwrap_or(t_start);
        let (y1, yp1) =
            init(end_current, t, &y).map_err(|e| segment_error(segments.len(), t, e))?;
        let n = result.t.len();
        truncate(&mut result, n - 1);
        result.push(
            model,
            &State { t, y: y1, yp: yp1 },
            end_current,
            options.keep_states,
        )?;
    }
    Ok(result)
}

fn truncate(r: &mut SimulationResult, n: usize) {
    r.t.truncate(n);
    r.v.truncate(n);
    r.i.truncate(n);
    r.soc_p.truncate(n);
    r.soc_n.truncate(n);
    if let Some(s) = r.states.as_mut() {
        s.truncate(n);
    }
}

fn segment_error(segment: usize, t: f64, source: Error) -> Error {
    Error::Segment {
        segment,
        t,
        source: Box::new(source),
    }
}

/// Whole seconds in `(t0, t1)`, plus `t1`.
fn second_grid(t0: f64, t1: f64) -> Vec<f64> {
    let first = (t0 + 1e-9).floor() as i64 + 1;
    let mut out: Vec<f64> = (first..)
        .map(|k| k as f64)
        .take_while(|&t| t < t1 - 1e-9)
        .collect();
    out.push(t1);
    out
}

/// Merges runs of equal current into segments, each sampled at the table
/// times it spans.
fn table_segments(times: &[f64], currents: &[f64]) -> Vec<Segment> {
    let mut segments: Vec<Segment> = vec![];
    for k in 0..times.len() - 1 {
        match segments.last_mut() {
            Some(s) if s.current == currents[k] => {
                s.t1 = times[k + 1];
                s.outputs.push(times[k + 1]);
            }
            _ => segments.push(Segment {
                t0: times[k],
                t1: times[k + 1],
                current: currents[k],
                outputs: vec![times[k + 1]],
            }),
        }
    }
    segments
}

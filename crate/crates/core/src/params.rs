//! Cell parameters, open-circuit potentials and electrolyte property functions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::constants::T_REF;
use crate::curve::MonotoneCubic;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Electrode {
    Negative,
    Positive,
}

impl fmt::Display for Electrode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Electrode::Negative => f.write_str("negative"),
            Electrode::Positive => f.write_str("positive"),
        }
    }
}

/// Closed-form open-circuit potentials shipped with the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinOcp {
    /// Graphite–SiOx negative electrode of an LG M50 21700 cell.
    Lgm50Graphite,
    /// NMC811 positive electrode of an LG M50 21700 cell.
    Lgm50Nmc811,
}

impl BuiltinOcp {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            BuiltinOcp::Lgm50Graphite => {
                1.9793 * (-39.3631 * x).exp() + 0.2482
                    - 0.0909 * (29.8538 * (x - 0.1234)).tanh()
                    - 0.04478 * (14.9159 * (x - 0.2769)).tanh()
                    - 0.0205 * (30.4444 * (x - 0.6103)).tanh()
            }
            BuiltinOcp::Lgm50Nmc811 => {
                -0.8090 * x + 4.4875
                    - 0.0428 * (18.5138 * (x - 0.5542)).tanh()
                    - 17.7326 * (15.7890 * (x - 0.3117)).tanh()
                    + 17.5842 * (15.9308 * (x - 0.3120)).tanh()
            }
        }
    }
}

/// Open-circuit potential as a function of stoichiometry.
///
/// Evaluation outside the sampled (or [0, 1] closed-form) range is an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OcpCurve {
    Builtin(BuiltinOcp),
    Table(MonotoneCubic),
}

impl OcpCurve {
    pub fn table(theta: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        Ok(OcpCurve::Table(MonotoneCubic::new(theta, u)?))
    }

    pub fn domain(&self) -> (f64, f64) {
        match self {
            OcpCurve::Builtin(_) => (0.0, 1.0),
            OcpCurve::Table(t) => t.domain(),
        }
    }

    /// Open-circuit potential in volts at stoichiometry `theta`.
    pub fn eval(&self, electrode: Electrode, theta: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        let value = match self {
            OcpCurve::Builtin(b) if theta >= lo && theta <= hi => Some(b.eval(theta)),
            OcpCurve::Builtin(_) => None,
            OcpCurve::Table(t) => t.eval(theta),
        };
        value.ok_or_else(|| {
            Error::Domain(format!(
                "{electrode} electrode OCP evaluated at theta = {theta} outside [{lo}, {hi}]"
            ))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinProperty {
    /// LiPF6 in EC:EMC, electrolyte diffusivity in m²/s.
    Lgm50Diffusivity,
    /// LiPF6 in EC:EMC, electrolyte conductivity in S/m.
    Lgm50Conductivity,
}

/// Electrolyte transport property as a function of concentration (mol/m³).
/// Tables are clamped to their end values outside the sampled range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PropertyFn {
    Constant(f64),
    Builtin(BuiltinProperty),
    Table(MonotoneCubic),
}

impl PropertyFn {
    pub fn eval(&self, c: f64) -> f64 {
        match self {
            PropertyFn::Constant(v) => *v,
            PropertyFn::Builtin(BuiltinProperty::Lgm50Diffusivity) => {
                let x = c / 1000.0;
                8.794e-11 * x * x - 3.972e-10 * x + 4.862e-10
            }
            PropertyFn::Builtin(BuiltinProperty::Lgm50Conductivity) => {
                let x = c / 1000.0;
                0.1297 * x * x * x - 2.51 * x.powf(1.5) + 3.329 * x
            }
            PropertyFn::Table(t) => t.eval_clamped(c),
        }
    }
}

/// Geometric, stoichiometric, transport and kinetic constants of a cell.
///
/// Serialized field names are the ones used in configuration files and in
/// identification parameter lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellParameters {
    /// Negative electrode thickness, m.
    #[serde(rename = "L_n")]
    pub len_neg: f64,
    #[serde(rename = "L_s")]
    pub len_sep: f64,
    #[serde(rename = "L_p")]
    pub len_pos: f64,
    /// Positive particle radius, m.
    #[serde(rename = "R_p_pos")]
    pub radius_pos: f64,
    #[serde(rename = "R_p_neg")]
    pub radius_neg: f64,
    #[serde(rename = "eps_e_n")]
    pub eps_e_neg: f64,
    #[serde(rename = "eps_e_s")]
    pub eps_e_sep: f64,
    #[serde(rename = "eps_e_p")]
    pub eps_e_pos: f64,
    #[serde(rename = "eps_s_n")]
    pub eps_s_neg: f64,
    #[serde(rename = "eps_s_p")]
    pub eps_s_pos: f64,
    pub brugg: f64,
    /// Electrode plate area, m².
    #[serde(rename = "A_cell")]
    pub area: f64,
    pub theta100_p: f64,
    pub theta100_n: f64,
    pub theta0_p: f64,
    pub theta0_n: f64,
    pub cs_max_p: f64,
    pub cs_max_n: f64,
    /// Initial electrolyte concentration, mol/m³.
    pub c0: f64,
    /// Positive solid diffusivity, m²/s.
    #[serde(rename = "Dsp")]
    pub ds_pos: f64,
    #[serde(rename = "Dsn")]
    pub ds_neg: f64,
    /// Reaction rate constants, m^2.5 mol^-0.5 s^-1.
    #[serde(rename = "kp")]
    pub k_pos: f64,
    #[serde(rename = "kn")]
    pub k_neg: f64,
    /// Cation transference number.
    #[serde(rename = "t1_constant")]
    pub transference: f64,
    /// Multiplier on the nominal electrolyte diffusivity function.
    #[serde(rename = "De", default = "one")]
    pub de_scale: f64,
    /// Multiplier on the nominal electrolyte conductivity function.
    #[serde(rename = "Kappa", default = "one")]
    pub kappa_scale: f64,
    #[serde(rename = "De_fn")]
    pub diffusivity: PropertyFn,
    #[serde(rename = "Kappa_fn")]
    pub conductivity: PropertyFn,
    /// Solid-phase conductivities, S/m.
    pub sigma_n: f64,
    pub sigma_p: f64,
    /// Nominal capacity, Ah.
    #[serde(rename = "Q_nom")]
    pub q_nom: f64,
    #[serde(rename = "V_min")]
    pub v_min: f64,
    #[serde(rename = "V_max")]
    pub v_max: f64,
    #[serde(rename = "T", default = "t_ref")]
    pub temperature: f64,
    pub ocp_neg: OcpCurve,
    pub ocp_pos: OcpCurve,
}

fn one() -> f64 {
    1.0
}

fn t_ref() -> f64 {
    T_REF
}

/// Names accepted by [`CellParameters::get`] and [`CellParameters::set`].
pub const SCALAR_NAMES: &[&str] = &[
    "L_n",
    "L_s",
    "L_p",
    "R_p_pos",
    "R_p_neg",
    "eps_e_n",
    "eps_e_s",
    "eps_e_p",
    "eps_s_n",
    "eps_s_p",
    "brugg",
    "A_cell",
    "theta100_p",
    "theta100_n",
    "theta0_p",
    "theta0_n",
    "cs_max_p",
    "cs_max_n",
    "c0",
    "Dsp",
    "Dsn",
    "kp",
    "kn",
    "t1_constant",
    "De",
    "Kappa",
    "sigma_n",
    "sigma_p",
    "Q_nom",
    "V_min",
    "V_max",
    "T",
];

impl CellParameters {
    /// LG M50 21700 cell (graphite–SiOx / NMC811) with the published
    /// stoichiometric windows as nominal values.
    pub fn lg_m50() -> Self {
        CellParameters {
            len_neg: 85.2e-6,
            len_sep: 12e-6,
            len_pos: 75.6e-6,
            radius_pos: 5.22e-6,
            radius_neg: 5.86e-6,
            eps_e_neg: 0.25,
            eps_e_sep: 0.47,
            eps_e_pos: 0.335,
            eps_s_neg: 0.75,
            eps_s_pos: 0.665,
            brugg: 1.5,
            area: 0.1027,
            theta100_p: 0.27,
            theta100_n: 0.9014,
            theta0_p: 0.9084,
            theta0_n: 0.0279,
            cs_max_p: 63104.0,
            cs_max_n: 33133.0,
            c0: 1000.0,
            ds_pos: 4e-15,
            ds_neg: 3.3e-14,
            k_pos: 3.5446e-11,
            k_neg: 6.7159e-12,
            transference: 0.2594,
            de_scale: 1.0,
            kappa_scale: 1.0,
            diffusivity: PropertyFn::Builtin(BuiltinProperty::Lgm50Diffusivity),
            conductivity: PropertyFn::Builtin(BuiltinProperty::Lgm50Conductivity),
            sigma_n: 215.0,
            sigma_p: 0.18,
            q_nom: 5.0,
            v_min: 2.5,
            v_max: 4.2,
            temperature: T_REF,
            ocp_neg: OcpCurve::Builtin(BuiltinOcp::Lgm50Graphite),
            ocp_pos: OcpCurve::Builtin(BuiltinOcp::Lgm50Nmc811),
        }
    }

    pub fn get(&self, name: &str) -> Result<f64> {
        Ok(*self.field(name)?)
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        *self.field_mut(name)? = value;
        Ok(())
    }

    /// Copy with the named scalars replaced.
    pub fn with_values<'a, I>(&self, values: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let mut p = self.clone();
        for (name, v) in values {
            p.set(name, v)?;
        }
        Ok(p)
    }

    fn field(&self, name: &str) -> Result<&f64> {
        let f: &f64 = match name {
            "L_n" => &self.len_neg,
            "L_s" => &self.len_sep,
            "L_p" => &self.len_pos,
            "R_p_pos" => &self.radius_pos,
            "R_p_neg" => &self.radius_neg,
            "eps_e_n" => &self.eps_e_neg,
            "eps_e_s" => &self.eps_e_sep,
            "eps_e_p" => &self.eps_e_pos,
            "eps_s_n" => &self.eps_s_neg,
            "eps_s_p" => &self.eps_s_pos,
            "brugg" => &self.brugg,
            "A_cell" => &self.area,
            "theta100_p" => &self.theta100_p,
            "theta100_n" => &self.theta100_n,
            "theta0_p" => &self.theta0_p,
            "theta0_n" => &self.theta0_n,
            "cs_max_p" => &self.cs_max_p,
            "cs_max_n" => &self.cs_max_n,
            "c0" => &self.c0,
            "Dsp" => &self.ds_pos,
            "Dsn" => &self.ds_neg,
            "kp" => &self.k_pos,
            "kn" => &self.k_neg,
            "t1_constant" => &self.transference,
            "De" => &self.de_scale,
            "Kappa" => &self.kappa_scale,
            "sigma_n" => &self.sigma_n,
            "sigma_p" => &self.sigma_p,
            "Q_nom" => &self.q_nom,
            "V_min" => &self.v_min,
            "V_max" => &self.v_max,
            "T" => &self.temperature,
            _ => return Err(unknown(name)),
        };
        Ok(f)
    }

    fn field_mut(&mut self, name: &str) -> Result<&mut f64> {
        let f: &mut f64 = match name {
            "L_n" => &mut self.len_neg,
            "L_s" => &mut self.len_sep,
            "L_p" => &mut self.len_pos,
            "R_p_pos" => &mut self.radius_pos,
            "R_p_neg" => &mut self.radius_neg,
            "eps_e_n" => &mut self.eps_e_neg,
            "eps_e_s" => &mut self.eps_e_sep,
            "eps_e_p" => &mut self.eps_e_pos,
            "eps_s_n" => &mut self.eps_s_neg,
            "eps_s_p" => &mut self.eps_s_pos,
            "brugg" => &mut self.brugg,
            "A_cell" => &mut self.area,
            "theta100_p" => &mut self.theta100_p,
            "theta100_n" => &mut self.theta100_n,
            "theta0_p" => &mut self.theta0_p,
            "theta0_n" => &mut self.theta0_n,
            "cs_max_p" => &mut self.cs_max_p,
            "cs_max_n" => &mut self.cs_max_n,
            "c0" => &mut self.c0,
            "Dsp" => &mut self.ds_pos,
            "Dsn" => &mut self.ds_neg,
            "kp" => &mut self.k_pos,
            "kn" => &mut self.k_neg,
            "t1_constant" => &mut self.transference,
            "De" => &mut self.de_scale,
            "Kappa" => &mut self.kappa_scale,
            "sigma_n" => &mut self.sigma_n,
            "sigma_p" => &mut self.sigma_p,
            "Q_nom" => &mut self.q_nom,
            "V_min" => &mut self.v_min,
            "V_max" => &mut self.v_max,
            "T" => &mut self.temperature,
            _ => return Err(unknown(name)),
        };
        Ok(f)
    }

    pub fn ocp(&self, electrode: Electrode) -> &OcpCurve {
        match electrode {
            Electrode::Negative => &self.ocp_neg,
            Electrode::Positive => &self.ocp_pos,
        }
    }

    /// Stoichiometry at a given cell SOC: `theta0 + soc * (theta100 - theta0)`.
    pub fn stoichiometry_at_soc(&self, electrode: Electrode, soc: f64) -> f64 {
        let (t0, t100) = self.window(electrode);
        t0 + soc * (t100 - t0)
    }

    /// `(theta0, theta100)` of an electrode.
    pub fn window(&self, electrode: Electrode) -> (f64, f64) {
        match electrode {
            Electrode::Negative => (self.theta0_n, self.theta100_n),
            Electrode::Positive => (self.theta0_p, self.theta100_p),
        }
    }

    pub fn cs_max(&self, electrode: Electrode) -> f64 {
        match electrode {
            Electrode::Negative => self.cs_max_n,
            Electrode::Positive => self.cs_max_p,
        }
    }

    /// Charge (Ah) stored between the two window endpoints of an electrode.
    pub fn electrode_capacity(&self, electrode: Electrode) -> f64 {
        let (eps_s, len) = match electrode {
            Electrode::Negative => (self.eps_s_neg, self.len_neg),
            Electrode::Positive => (self.eps_s_pos, self.len_pos),
        };
        let (t0, t100) = self.window(electrode);
        eps_s
            * len
            * self.area
            * crate::constants::FARADAY
            * self.cs_max(electrode)
            * (t100 - t0).abs()
            / crate::constants::SECONDS_PER_HOUR
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("L_n", self.len_neg),
            ("L_s", self.len_sep),
            ("L_p", self.len_pos),
            ("R_p_pos", self.radius_pos),
            ("R_p_neg", self.radius_neg),
            ("A_cell", self.area),
            ("cs_max_p", self.cs_max_p),
            ("cs_max_n", self.cs_max_n),
            ("c0", self.c0),
            ("Dsp", self.ds_pos),
            ("Dsn", self.ds_neg),
            ("kp", self.k_pos),
            ("kn", self.k_neg),
            ("De", self.de_scale),
            ("Kappa", self.kappa_scale),
            ("sigma_n", self.sigma_n),
            ("sigma_p", self.sigma_p),
            ("Q_nom", self.q_nom),
            ("T", self.temperature),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        let fractions = [
            ("eps_e_n", self.eps_e_neg),
            ("eps_e_s", self.eps_e_sep),
            ("eps_e_p", self.eps_e_pos),
            ("eps_s_n", self.eps_s_neg),
            ("eps_s_p", self.eps_s_pos),
            ("t1_constant", self.transference),
        ];
        for (name, v) in fractions {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if self.eps_e_neg + self.eps_s_neg > 1.0 || self.eps_e_pos + self.eps_s_pos > 1.0 {
            return Err(Error::Config(
                "eps_e + eps_s exceeds 1 in an electrode".into(),
            ));
        }
        if !(0.0 <= self.theta0_n && self.theta0_n < self.theta100_n && self.theta100_n <= 1.0) {
            return Err(Error::Config(format!(
                "negative window must satisfy 0 <= theta0_n < theta100_n <= 1, got ({}, {})",
                self.theta0_n, self.theta100_n
            )));
        }
        if !(0.0 <= self.theta100_p && self.theta100_p < self.theta0_p && self.theta0_p <= 1.0) {
            return Err(Error::Config(format!(
                "positive window must satisfy 0 <= theta100_p < theta0_p <= 1, got ({}, {})",
                self.theta100_p, self.theta0_p
            )));
        }
        if !(self.brugg >= 0.0) {
            return Err(Error::Config(format!(
                "brugg must be nonnegative, got {}",
                self.brugg
            )));
        }
        if !(self.v_min < self.v_max) {
            return Err(Error::Config("V_min must be below V_max".into()));
        }
        Ok(())
    }
}

fn unknown(name: &str) -> Error {
    Error::Config(format!("unknown cell parameter '{name}'"))
}

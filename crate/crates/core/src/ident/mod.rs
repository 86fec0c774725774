//! Parameter identification and identifiability analysis.

mod lsa;
mod objective;
mod pso;

pub use lsa::{
    correlation_matrix, identifiable_set, lsa, pearson, select_identifiable, ParameterSensitivity,
    SensitivityReport,
};
pub use objective::{objective, ObjectiveBreakdown, PENALTY};
pub use pso::{bounds_from_pct, pso_optimize, ParameterSpace, PsoConfig, PsoResult, Scale, Scored};

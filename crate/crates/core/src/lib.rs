//! Pseudo-two-dimensional (DFN) lithium-ion cell simulation, parameter
//! identification and identifiability analysis.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod constants;
pub mod curve;
pub mod dae;
pub mod discretize;
pub mod error;
pub mod ident;
pub mod io;
pub mod layout;
pub mod model;
pub mod params;
pub mod protocol;
pub mod workflow;

pub use dae::{solve, solve_with_output, DaeSystem, SolverConfig, Termination, Trajectory};
pub use discretize::{Mesh, RadialMethod};
pub use error::{Error, Result};
pub use layout::{Block, NodeCounts, StateLayout};
pub use model::{butler_volmer_flux, CellState, DfnModel, DfnSystem};
pub use params::{CellParameters, Electrode};

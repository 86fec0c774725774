//! Physical constants.

/// Faraday constant, C/mol.
pub const FARADAY: f64 = 96_485.332_12;

/// Molar gas constant, J/(mol K).
pub const GAS_CONSTANT: f64 = 8.314_462_618;

/// Reference temperature of the isothermal model, K.
pub const T_REF: f64 = 298.15;

/// Seconds per hour, used for Ah conversions.
pub const SECONDS_PER_HOUR: f64 = 3600.0;

//! Numerical tolerances shared by fitting code and tests.

/// Identities that hold by construction (zero diagonal, identity weights).
pub const EXACT: f64 = 1e-10;

/// Agreement between two independent computational routes.
pub const CROSS_PATH: f64 = 1e-8;

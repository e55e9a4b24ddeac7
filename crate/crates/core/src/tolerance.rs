//! Numerical tolerances shared by every module.

/// Machine-precision checks on unit-scaled data.
pub const MACHINE: f64 = 1e-12;

/// Momentum conservation check for `MomentumConfig::conserved`.
pub const CONSERVATION: f64 = 1e-12;

/// Largest violation of the offset constraint accepted by
/// `kinematics::neighborhood_point`.
pub const CONSTRAINT: f64 = 1e-10;

/// Threshold separating a log-divergent fitted exponent from a power law.
pub const LOG_DIVERGENT_EXPONENT: f64 = 0.15;

/// Shells with a relative standard error above this make a fit inconclusive.
pub const MAX_SHELL_RELATIVE_ERROR: f64 = 0.2;

/// Minimum gradient norm accepted as "non-vanishing".
pub const GRADIENT_FLOOR: f64 = 1e-12;

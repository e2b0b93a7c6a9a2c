//! Numerical tolerances shared across modules.

/// Relative asymmetry accepted before a matrix is rejected as non-symmetric.
pub const SYM_TOL: f64 = 1e-10;
/// Positive-definiteness floor, relative to the operator norm.
pub const PD_TOL: f64 = 1e-12;
/// Relative reconstruction tolerance for decompositions.
pub const REL_TOL: f64 = 1e-10;
/// Relative tolerance of the symplectic relation `MᵗJM = J`.
pub const SYMP_TOL: f64 = 1e-10;
/// Jacobi eigen-iteration stops once off-diagonal mass drops below this fraction of ‖P‖_F.
pub const EIG_OFFDIAG_TOL: f64 = 1e-14;
/// Multiplicative slack applied to every certified bound.
pub const SAFETY: f64 = 1.0 + 1e-6;
/// Condition number above which `Cτ + D` is treated as singular.
pub const COND_MAX: f64 = 1e12;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("matrix is not symmetric (relative asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive definite (smallest pivot/eigenvalue {0:.3e})")]
    NotPositiveDefinite(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("numerically singular: {0}")]
    NumericallySingular(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("integer overflow while tracking unimodular transform")]
    Overflow,
    #[error("matrix is not unimodular (det = {0})")]
    NotUnimodular(i128),
    #[error("path samples too coarse: segment length {0:.3e} exceeds 0.1")]
    SamplesTooCoarse(f64),
    #[error("tangent vector is not vertical (residual {0:.3e})")]
    NotVertical(f64),
    #[error("points lie over different base points (mismatch {0:.3e})")]
    BaseMismatch(f64),
    #[error("point is not in the Siegel set for u = {0}")]
    NotInSiegelSet(f64),
    #[error("point is not deep enough in the cusp: {0}")]
    NotDeepEnough(String),
    #[error("Siegel chain violated at n = {n}: {detail}")]
    SiegelChainViolated { n: u32, detail: String },
    #[error("degenerate direction: eigenvalue ratios do not converge to nonzero limits")]
    DegenerateDirection,
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("scale must be positive (got {0})")]
    NonpositiveScale(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl GeomError {
    /// Errors caused by ill-posed input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            GeomError::NotSymmetric(_)
                | GeomError::NotPositiveDefinite(_)
                | GeomError::DimensionMismatch(_)
                | GeomError::NotUnimodular(_)
                | GeomError::BaseMismatch(_)
                | GeomError::NotInSiegelSet(_)
                | GeomError::NotDeepEnough(_)
                | GeomError::SiegelChainViolated { .. }
                | GeomError::DegenerateDirection
                | GeomError::DegenerateInput(_)
                | GeomError::NonpositiveScale(_)
                | GeomError::InvalidParameter(_)
                | GeomError::NotVertical(_)
                | GeomError::SamplesTooCoarse(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, GeomError>;

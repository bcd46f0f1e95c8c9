use thiserror::Error;

/// Errors produced by the kinematics, geometry, capability and control layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("singular configuration: smallest singular value {sigma_min:.3e}")]
    Singular { sigma_min: f64 },

    #[error("matrix is not symmetric positive definite ({0})")]
    NotSpd(&'static str),

    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    Asymmetric(f64),

    #[error("zero-norm vector where a direction is required ({0})")]
    ZeroNorm(&'static str),

    #[error("force polytope is empty: joint {joint} bias {bias:.4} exceeds limit {limit:.4}")]
    InfeasiblePolytope { joint: usize, bias: f64, limit: f64 },

    #[error("capability ray is unbounded along the requested direction")]
    UnboundedRay,

    #[error("state matrix is not Hurwitz (max real eigenvalue part {0:.3e})")]
    NotHurwitz(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { context, expected, got })
    }
}

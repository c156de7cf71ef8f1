use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point lies outside the chart z1 > 0 of the power-surface cone")]
    OutsideChart,

    #[error("{0} did not converge")]
    NoConvergence(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("point is not a member of the cone")]
    NotMember,

    #[error("vector is not a normal to the cone at the base point")]
    NotNormal,

    #[error("direction is not tangent to the cone at the base point")]
    NotTangent,

    #[error("reference point is infeasible: g(ybar) is not in the cone")]
    Infeasible,

    #[error("no Lagrange multiplier: least-squares residual {residual:.3e} exceeds tolerance")]
    NoMultiplier { residual: f64 },

    #[error("recovered multiplier is not a normal to the cone at g(ybar)")]
    NormalityViolation,

    #[error("iterate left the trust region (distance {distance:.3e} > radius {radius:.3e})")]
    OutsideTrustRegion { distance: f64, radius: f64 },

    #[error("projection derivation condition is not available at the base point")]
    PdcUnavailable,

    #[error("critical cone is not polyhedral; face enumeration is impossible")]
    NonPolyhedralCriticalCone,

    #[error("face enumeration exceeded the cap of {cap} faces")]
    TooLarge { cap: usize },

    #[error("standing assumptions not verified: {0}")]
    AssumptionsUnverified(String),

    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

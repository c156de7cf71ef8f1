//! The constraint set `Γ = g^{-1}(Θ)` and the generalized equation over it.

mod convexity;
mod gamma;
pub mod kkt;
mod polymap;
pub(crate) mod problem;

pub use convexity::{theta_convexity_probe, ConvexityStatus, ConvexityVerdict, ConvexityWitness};
pub use gamma::{
    directional_derivative_projection_gamma, project_gamma, trust_radius, GammaDerivative, GammaMethod,
    GammaProjection,
};
pub use polymap::{PolynomialMap, Term};
pub use problem::{
    check_nondegeneracy, multiplier_for, recover_multiplier, GEProblem, MultiplierResult, NondegeneracyReport,
};

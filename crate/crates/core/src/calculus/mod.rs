//! Derivatives of the metric projection onto a cone and the objects they are built from.

mod critical;
mod derivative;
mod pdc;
mod second_order;

pub use critical::{critical_cone, CriticalConeResult};
pub use derivative::{directional_derivative_projection, projection_derivative, ProjDeriv, KINK_TOL};
pub use pdc::{
    extended_polyhedricity, pdc_certificate, pdc_check, sample_normal, EpStatus, EpVerdict, PdcStatus,
    PdcVerdict, PdcWitness,
};
pub use second_order::{parabolic_second_derivative, second_order_tangent_set, C2Function, PowerPhi, SecondOrderTangentSet};

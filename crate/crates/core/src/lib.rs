//! Variational analysis of parameterized generalized equations with conic constraints.

pub mod calculus;
pub mod cone;
pub mod engine;
mod error;
pub mod fd;
pub mod geometry;
pub mod linalg;
pub mod polycone;
pub mod report;
pub mod stability;
mod settings;
pub mod tol;

pub use cone::{Cone, Sign};
pub use error::{Error, Result};
pub use polycone::PolyCone;
pub use settings::Settings;

//! Isolated calmness of the solution map at the reference point.

mod calmness;
mod probe;

pub use calmness::{certify_isolated_calmness, CalmnessStatus, CalmnessVerdict, CalmnessWitness};
pub(crate) use calmness::certify_with;
pub use probe::{empirical_calmness_probe, ProbeReport, ProbeRow, BOUNDED_VARIATION, RATIO_FLOOR, UNBOUNDED_GROWTH};

//! Default numerical tolerances.

/// Absolute tolerance on constraint residuals in membership tests.
pub const MEMBERSHIP: f64 = 1e-9;
/// Tolerance for numerical identities (idempotence, set membership of derivative pieces).
pub const NUMERIC: f64 = 1e-9;
/// Residual target for KKT and Newton solves.
pub const KKT: f64 = 1e-10;
/// Relative singular-value cutoff for rank decisions.
pub const RANK: f64 = 1e-8;
/// Relative tolerance when comparing directional derivatives against critical-cone projections.
pub const PDC: f64 = 1e-5;
/// Number of sampled `(b, h)` pairs in a PDC test.
pub const PDC_SAMPLES: usize = 200;
/// Cap on the number of enumerated faces.
pub const FACE_CAP: usize = 4096;

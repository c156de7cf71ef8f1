//! Finite-difference quotients used as oracles for the analytic derivatives.

use crate::error::Result;
use crate::linalg::Vector;

/// Forward quotient `(f(u + t h) - f(u)) / t`.
pub fn forward<F>(f: F, u: &Vector, h: &Vector, t: f64) -> Result<Vector>
where
    F: Fn(&Vector) -> Result<Vector>,
{
    let base = f(u)?;
    let step = f(&(u + h * t))?;
    Ok((step - base) / t)
}

/// Relative discrepancy `||a - b|| / max(1, ||b||)`.
pub fn rel_error(a: &Vector, b: &Vector) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;

    #[test]
    fn forward_quotient_of_a_quadratic() {
        let f = |v: &Vector| -> Result<Vector> { Ok(v.map(|x| x * x)) };
        let q = forward(f, &vector(&[1.0, 2.0]), &vector(&[1.0, 0.0]), 1e-6).unwrap();
        assert!((q - vector(&[2.0, 0.0])).norm() < 1e-5);
    }
}

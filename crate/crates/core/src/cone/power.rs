//! The three-dimensional cone generated by `{z1 = 1, z2^4 <= z3}`, described
//! on the chart `z1 > 0` by `phi(z) = z2^4 / z1^3 - z3 <= 0`.

use crate::error::{Error, Result};
use crate::linalg::{vector, Mat, Vector};

pub const DIM: usize = 3;

/// Stationarity tolerance for the projection solve.
pub const PROJECTION_TOL: f64 = 1e-10;
const MAX_ITERS: usize = 200;
/// Projections with `z1` below this (relative to `1 + |u|`) sit on the edge of the
/// chart, where the sensitivity to the ray parameter `t` grows like `t^4`.
const CHART_MARGIN: f64 = 1e-6;

fn check_chart(z: &Vector) -> Result<()> {
    if z[0] > 0.0 {
        Ok(())
    } else {
        Err(Error::OutsideChart)
    }
}

pub fn phi(z: &Vector) -> Result<f64> {
    check_chart(z)?;
    Ok(z[1].powi(4) / z[0].powi(3) - z[2])
}

pub fn grad_phi(z: &Vector) -> Result<Vector> {
    check_chart(z)?;
    let (a, b) = (z[0], z[1]);
    Ok(vector(&[-3.0 * b.powi(4) / a.powi(4), 4.0 * b.powi(3) / a.powi(3), -1.0]))
}

pub fn hess_phi(z: &Vector) -> Result<Mat> {
    check_chart(z)?;
    let (a, b) = (z[0], z[1]);
    let h11 = 12.0 * b.powi(4) / a.powi(5);
    let h12 = -12.0 * b.powi(3) / a.powi(4);
    let h22 = 12.0 * b.powi(2) / a.powi(3);
    Ok(Mat::from_row_slice(3, 3, &[h11, h12, 0.0, h12, h22, 0.0, 0.0, 0.0, 0.0]))
}

/// Membership in the polar cone, tested against the generators `(1, t, t^4)`
/// and the limit ray `(0, 0, 1)`.
pub fn in_polar(w: &Vector, tol: f64) -> bool {
    let scale = 1.0 + w.norm();
    if w[2] > tol * scale {
        return false;
    }
    if w[2] >= 0.0 {
        return w[1].abs() <= tol * scale && w[0] <= tol * scale;
    }
    // Maximizer of w1 + w2 t + w3 t^4.
    let t = (-w[1] / (4.0 * w[2])).cbrt();
    let value = w[0] + w[1] * t + w[2] * t.powi(4);
    value / (1.0 + t * t + t.powi(8)).sqrt() <= tol * scale
}

/// The ray of the cone orthogonal to `b`, for `b != 0` on the boundary of the
/// polar cone; `None` when `b` is interior to the polar.
pub fn exposed_ray(b: &Vector) -> Option<Vector> {
    let scale = 1.0 + b.norm();
    if b[2] >= -1e-9 * scale {
        // Only (0, 0, 1) can be orthogonal to a polar vector with b3 = 0.
        return (b[0].abs() <= 1e-9 * scale).then(|| vector(&[0.0, 0.0, 1.0]));
    }
    let t = (-b[1] / (4.0 * b[2])).cbrt();
    let d = vector(&[1.0, t, t.powi(4)]);
    let value = b.dot(&d) / d.norm();
    (value >= -1e-9 * scale).then_some(d)
}

/// Result of projecting a point that lies outside the cone.
#[derive(Debug, Clone)]
pub struct BoundaryProjection {
    pub point: Vector,
    /// Multiplier of `phi <= 0` in `z - u + mu grad phi(z) = 0`.
    pub mu: f64,
}

/// Project `u` (assumed outside the cone and its polar) onto the boundary `phi = 0`.
///
/// The boundary consists of the rays `a (1, t, t^4)`.  For a fixed ray the best
/// `a` is `<u, r> / |r|^2`, so only `t` is searched: a scan over `t = sinh x`,
/// golden-section refinement, then safeguarded Newton on the stationarity
/// condition.  Working in `t` keeps `grad phi = (-3 t^4, 4 t^3, -1)` exact even
/// when the point sits close to the edge `z1 = 0` of the chart.
pub fn project_to_boundary(u: &Vector) -> Result<BoundaryProjection> {
    let scale = 1.0 + u.norm();
    let cosine = |x: f64| -> f64 {
        let t = x.sinh();
        (u[0] + u[1] * t + u[2] * t.powi(4)) / (1.0 + t * t + t.powi(8)).sqrt()
    };
    let n = 400;
    let (lo, hi) = (-6.0, 6.0);
    let grid = |k: usize| lo + (hi - lo) * k as f64 / n as f64;
    let best = (0..=n).max_by(|&i, &j| cosine(grid(i)).total_cmp(&cosine(grid(j)))).unwrap_or(0);
    // A maximum at the end of the scan may lie beyond it: leave that side open.
    let mut cell = (
        if best == 0 { f64::NEG_INFINITY } else { grid(best - 1).sinh() },
        if best == n { f64::INFINITY } else { grid(best + 1).sinh() },
    );
    let (mut a_x, mut b_x) = (grid(best.saturating_sub(1)), grid((best + 1).min(n)));
    // The polar test uses the maximizer of <u, r>; near the polar boundary the grid
    // can miss the thin positive band around it.
    if u[2] < 0.0 {
        let x = (-u[1] / (4.0 * u[2])).cbrt().asinh();
        if cosine(x) > cosine(grid(best)) {
            let w = (hi - lo) / n as f64;
            (a_x, b_x) = (x - w, x + w);
            cell = (a_x.sinh(), b_x.sinh());
        }
    }
    if cosine(a_x).max(cosine(b_x)).max(cosine(0.5 * (a_x + b_x))) <= 0.0 {
        return Err(Error::NoConvergence("power-surface projection (point lies in the polar cone)".into()));
    }
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b_x - ratio * (b_x - a_x);
        let d = a_x + ratio * (b_x - a_x);
        if cosine(c) >= cosine(d) {
            b_x = d;
        } else {
            a_x = c;
        }
    }
    let t = polish_ray(u, 0.5 * (a_x + b_x), cell);
    let ray = vector(&[1.0, t, t.powi(4)]);
    let a = u.dot(&ray) / ray.norm_squared();
    if a <= CHART_MARGIN * scale {
        return Err(Error::OutsideChart);
    }
    let z = &ray * a;
    let grad = vector(&[-3.0 * t.powi(4), 4.0 * t.powi(3), -1.0]);
    // Least squares along the gradient: z3 - u3 alone cancels badly when |grad| is large.
    let mu = (u - &z).dot(&grad) / grad.norm_squared();
    let stationarity = (&z - u + &grad * mu).norm();
    if stationarity > PROJECTION_TOL * scale || mu < -PROJECTION_TOL * scale {
        return Err(Error::NoConvergence(format!(
            "power-surface projection (stationarity {stationarity:.3e}, mu {mu:.3e})"
        )));
    }
    Ok(BoundaryProjection { point: z, mu: mu.max(0.0) })
}

/// Root of `F(t) = <u, r'> |r|^2 - <u, r> <r, r'>`, `r = (1, t, t^4)`, the
/// stationarity condition of `<u, r>^2 / |r|^2`.  Newton steps that leave the
/// bracket fall back to the midpoint.
fn polish_ray(u: &Vector, x0: f64, bracket: (f64, f64)) -> f64 {
    let f = |t: f64| -> (f64, f64) {
        let r = vector(&[1.0, t, t.powi(4)]);
        let r1 = vector(&[0.0, 1.0, 4.0 * t.powi(3)]);
        let r2 = vector(&[0.0, 0.0, 12.0 * t * t]);
        let (ur, ur1, ur2) = (u.dot(&r), u.dot(&r1), u.dot(&r2));
        let (rr, rr1) = (r.norm_squared(), r.dot(&r1));
        let value = ur1 * rr - ur * rr1;
        let slope = ur2 * rr + ur1 * rr1 - ur * (r1.norm_squared() + r.dot(&r2));
        (value, slope)
    };
    let (mut lo, mut hi) = (bracket.0.min(bracket.1), bracket.0.max(bracket.1));
    let mut t = x0.sinh();
    let (f_lo, f_hi) = (f(lo).0, f(hi).0);
    let bracketed = f_lo.is_finite() && f_hi.is_finite() && f_lo.signum() != f_hi.signum();
    for _ in 0..MAX_ITERS {
        let (value, slope) = f(t);
        if value == 0.0 {
            break;
        }
        if bracketed {
            if value.signum() == f_lo.signum() {
                lo = t;
            } else {
                hi = t;
            }
        }
        let mut next = t - value / slope;
        if !next.is_finite() || next <= lo || next >= hi {
            if !bracketed {
                break;
            }
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 4.0 * f64::EPSILON * (1.0 + t.abs()) {
            t = next;
            break;
        }
        t = next;
    }
    t
}

/// Jacobian of the projection at `u` outside the cone with multiplier `mu > 0`,
/// from the implicit function theorem applied to the KKT system.
pub fn projection_jacobian(proj: &BoundaryProjection) -> Result<Mat> {
    let z = &proj.point;
    let g = grad_phi(z)?;
    let h = hess_phi(z)?;
    let mut kkt = Mat::zeros(4, 4);
    kkt.view_mut((0, 0), (3, 3)).copy_from(&(Mat::identity(3, 3) + h * proj.mu));
    kkt.view_mut((0, 3), (3, 1)).copy_from(&g);
    kkt.view_mut((3, 0), (1, 3)).copy_from(&g.transpose());
    let inv = kkt
        .try_inverse()
        .ok_or_else(|| Error::NoConvergence("singular KKT matrix in power-surface derivative".into()))?;
    Ok(inv.view((0, 0), (3, 3)).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_at_reference_points() {
        assert_eq!(grad_phi(&vector(&[1.0, 0.0, 0.0])).unwrap(), vector(&[0.0, 0.0, -1.0]));
        assert_eq!(grad_phi(&vector(&[1.0, 1.0, 1.0])).unwrap(), vector(&[-3.0, 4.0, -1.0]));
        assert_eq!(phi(&vector(&[1.0, 1.0, 1.0])).unwrap(), 0.0);
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let z = vector(&[1.3, 0.7, 0.2]);
        let h = hess_phi(&z).unwrap();
        let eps = 1e-6;
        for c in 0..3 {
            let mut e = Vector::zeros(3);
            e[c] = eps;
            let fd = (grad_phi(&(&z + &e)).unwrap() - grad_phi(&(&z - &e)).unwrap()) / (2.0 * eps);
            assert!((h.column(c) - fd).norm() < 1e-6);
        }
    }

    #[test]
    fn outside_chart_is_an_error() {
        assert_eq!(phi(&vector(&[0.0, 1.0, 1.0])), Err(Error::OutsideChart));
        assert_eq!(phi(&vector(&[-1.0, 0.0, 1.0])), Err(Error::OutsideChart));
    }

    #[test]
    fn polar_membership() {
        assert!(in_polar(&vector(&[0.0, 0.0, -1.0]), 0.0));
        assert!(in_polar(&vector(&[-1.0, 0.0, 0.0]), 0.0));
        // -3 + 4t - t^4 peaks at t = 1 with value 0.
        assert!(in_polar(&vector(&[-3.0, 4.0, -1.0]), 0.0));
        assert!(!in_polar(&vector(&[-2.9, 4.0, -1.0]), 1e-9));
    }

    #[test]
    fn boundary_projection_satisfies_kkt() {
        let u = vector(&[1.0, 1.0, 1.0]) + vector(&[-3.0, 4.0, -1.0]) * 0.1;
        let p = project_to_boundary(&u).unwrap();
        assert!((p.point - vector(&[1.0, 1.0, 1.0])).norm() < 1e-10);
        assert!((p.mu - 0.1).abs() < 1e-10);
    }
}

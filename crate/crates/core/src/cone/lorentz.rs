//! Closed-form geometry of the second-order cone `{z : z_axis >= ||z_rest||}`.
//!
//! All functions here work with the non-negatively oriented cone; the
//! reflected cone `-Q` is handled by the caller through `P_{-Q}(u) = -P_Q(-u)`.

use crate::linalg::{Mat, Vector};

/// Split `z` into the axis coordinate and the remaining coordinates.
pub fn split(z: &Vector, axis: usize) -> (f64, Vector) {
    let rest: Vec<f64> = z.iter().enumerate().filter(|&(i, _)| i != axis).map(|(_, &v)| v).collect();
    (z[axis], Vector::from_vec(rest))
}

/// Inverse of [`split`].
pub fn join(s: f64, rest: &Vector, axis: usize) -> Vector {
    let dim = rest.len() + 1;
    let mut z = Vector::zeros(dim);
    let mut k = 0;
    for i in 0..dim {
        if i == axis {
            z[i] = s;
        } else {
            z[i] = rest[k];
            k += 1;
        }
    }
    z
}

/// Signed distance-like margin `z_axis - ||z_rest||`.
pub fn margin(z: &Vector, axis: usize) -> f64 {
    let (s, r) = split(z, axis);
    s - r.norm()
}

pub fn project(u: &Vector, axis: usize) -> Vector {
    let (s, r) = split(u, axis);
    let rho = r.norm();
    if rho <= s {
        return u.clone();
    }
    if rho <= -s {
        return Vector::zeros(u.len());
    }
    let c = 0.5 * (s + rho);
    #[cfg(feature = "fault-injection")]
    let c = c * (1.0 + 1e-3 * rho);
    join(c, &(&r * (c / rho)), axis)
}

/// Jacobian of the projection in the region `|s| < ||r||` where it is smooth.
pub fn smooth_jacobian(u: &Vector, axis: usize) -> Mat {
    let (s, r) = split(u, axis);
    let rho = r.norm();
    let rhat = &r / rho;
    let k = r.len();
    // Block form with the axis coordinate first.
    let mut j = Mat::zeros(k + 1, k + 1);
    j[(0, 0)] = 0.5;
    for i in 0..k {
        j[(0, i + 1)] = 0.5 * rhat[i];
        j[(i + 1, 0)] = 0.5 * rhat[i];
        for l in 0..k {
            let delta = if i == l { 1.0 } else { 0.0 };
            j[(i + 1, l + 1)] = 0.5 * ((1.0 + s / rho) * delta - (s / rho) * rhat[i] * rhat[l]);
        }
    }
    permute_axis_first(&j, axis)
}

/// Reorder a matrix written in "axis first" block form back to natural coordinates.
fn permute_axis_first(j: &Mat, axis: usize) -> Mat {
    let dim = j.nrows();
    let order: Vec<usize> = std::iter::once(axis).chain((0..dim).filter(|&i| i != axis)).collect();
    let mut out = Mat::zeros(dim, dim);
    for (a, &ia) in order.iter().enumerate() {
        for (b, &ib) in order.iter().enumerate() {
            out[(ia, ib)] = j[(a, b)];
        }
    }
    out
}

/// An element of the B-subdifferential of the projection at `u`.
pub fn jacobian_element(u: &Vector, axis: usize) -> Mat {
    let (s, r) = split(u, axis);
    let rho = r.norm();
    let dim = u.len();
    if rho <= s {
        Mat::identity(dim, dim)
    } else if rho <= -s {
        Mat::zeros(dim, dim)
    } else {
        smooth_jacobian(u, axis)
    }
}

/// Boundary function `psi(z) = ||z_rest|| - z_axis` with gradient and Hessian.
///
/// Only valid away from the axis (`z_rest != 0`).
pub fn boundary_derivatives(z: &Vector, axis: usize) -> (f64, Vector, Mat) {
    let (s, r) = split(z, axis);
    let rho = r.norm();
    let rhat = &r / rho;
    let grad = join(-1.0, &rhat, axis);
    let k = r.len();
    let mut h_rest = Mat::identity(k, k) - &rhat * rhat.transpose();
    h_rest /= rho;
    let mut h = Mat::zeros(k + 1, k + 1);
    h.view_mut((1, 1), (k, k)).copy_from(&h_rest);
    (rho - s, grad, permute_axis_first(&h, axis))
}

/// The ray `Q ∩ b^perp` for `b` on the boundary of the polar cone `-Q`, `b != 0`.
pub fn critical_ray(b: &Vector, axis: usize) -> Vector {
    let (_, r) = split(b, axis);
    join(1.0, &(&r / r.norm()), axis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;

    #[test]
    fn split_join_roundtrip() {
        let z = vector(&[1.0, 2.0, 3.0]);
        let (s, r) = split(&z, 2);
        assert_eq!(s, 3.0);
        assert_eq!(join(s, &r, 2), z);
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let u = vector(&[0.3, -0.4, 0.45]);
        for axis in 0..3 {
            let j = smooth_jacobian(&u, axis);
            let eps = 1e-6;
            for c in 0..3 {
                let mut e = Vector::zeros(3);
                e[c] = eps;
                let fd = (project(&(&u + &e), axis) - project(&(&u - &e), axis)) / (2.0 * eps);
                assert!((j.column(c) - fd).norm() < 1e-7, "axis {axis} col {c}");
            }
        }
    }

    #[test]
    fn boundary_hessian_is_psd() {
        let (_, _, h) = boundary_derivatives(&vector(&[2.0, 1.0, 1.0]), 0);
        let eig = h.symmetric_eigenvalues();
        assert!(eig.iter().all(|&e| e > -1e-12));
    }
}

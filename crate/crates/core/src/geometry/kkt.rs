use super::polymap::PolynomialMap;
use crate::cone::Cone;
use crate::error::{Error, Result};
use crate::linalg::{solve_square, Mat, Vector};

pub const MAX_ITER: usize = 100;

#[derive(Clone, Debug)]
pub struct KktSolution {
    pub y: Vector,
    pub nu: Vector,
    pub residual: f64,
    pub iterations: usize,
}

/// Residual `[r(y) + ∇g(y)^T ν ; g(y) - P_Θ(g(y) + ν)]`.
fn residual<R>(g: &PolynomialMap, theta: &Cone, r: &R, y: &Vector, nu: &Vector) -> Result<Vector>
where
    R: Fn(&Vector) -> Result<(Vector, Mat)>,
{
    let (ry, _) = r(y)?;
    let gy = g.eval(y)?;
    let top = ry + g.jacobian(y)?.transpose() * nu;
    let bottom = &gy - theta.project(&(&gy + nu))?;
    Ok(Vector::from_iterator(top.len() + bottom.len(), top.iter().chain(bottom.iter()).copied()))
}

/// Semismooth Newton with an Armijo line search on `||F||^2`.
///
/// `r` returns the smooth part `r(y)` and its Jacobian.  A point counts as a
/// solution once `||F|| <= tol * (1 + scale)`.
pub fn solve_kkt<R>(
    g: &PolynomialMap,
    theta: &Cone,
    r: R,
    y0: &Vector,
    nu0: &Vector,
    tol: f64,
    scale: f64,
) -> Result<KktSolution>
where
    R: Fn(&Vector) -> Result<(Vector, Mat)>,
{
    let (m, l) = (y0.len(), nu0.len());
    let target = tol * (1.0 + scale);
    let (mut y, mut nu) = (y0.clone(), nu0.clone());
    let mut f = residual(g, theta, &r, &y, &nu)?;
    for it in 0..MAX_ITER {
        let norm = f.norm();
        if norm <= target {
            return Ok(KktSolution { y, nu, residual: norm, iterations: it });
        }
        let (_, rj) = r(&y)?;
        let jg = g.jacobian(&y)?;
        let gy = g.eval(&y)?;
        let mm = theta.projection_jacobian(&(&gy + &nu))?;
        let mut jac = Mat::zeros(m + l, m + l);
        jac.view_mut((0, 0), (m, m)).copy_from(&(rj + g.weighted_hessian(&nu, &y)?));
        jac.view_mut((0, m), (m, l)).copy_from(&jg.transpose());
        jac.view_mut((m, 0), (l, m)).copy_from(&(&jg - &mm * &jg));
        jac.view_mut((m, m), (l, l)).copy_from(&(-&mm));
        let step = solve_square(&jac, &(-&f));
        if !step.iter().all(|v| v.is_finite()) {
            break;
        }
        let (dy, dnu) = (step.rows(0, m).into_owned(), step.rows(m, l).into_owned());
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-10 {
            let (yt, nut) = (&y + &dy * t, &nu + &dnu * t);
            if let Ok(ft) = residual(g, theta, &r, &yt, &nut) {
                if ft.norm_squared() <= (1.0 - 1e-4 * t) * norm * norm {
                    y = yt;
                    nu = nut;
                    f = ft;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let norm = f.norm();
    if norm <= target {
        return Ok(KktSolution { y, nu, residual: norm, iterations: MAX_ITER });
    }
    Err(Error::NoConvergence(format!("KKT residual {norm:.3e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::Sign;
    use crate::linalg::vector;

    #[test]
    fn projects_onto_orthant_through_identity_map() {
        let g = PolynomialMap::affine(&Mat::identity(2, 2), &Vector::zeros(2));
        let u = vector(&[-1.0, 2.0]);
        let r = |y: &Vector| Ok((y - &u, Mat::identity(2, 2)));
        let s = solve_kkt(&g, &Cone::orthant(2, Sign::Pos), r, &u, &Vector::zeros(2), 1e-12, 1.0).unwrap();
        assert!((s.y - vector(&[0.0, 2.0])).norm() < 1e-12);
        assert!((s.nu - vector(&[-1.0, 0.0])).norm() < 1e-12);
    }

    #[test]
    fn lorentz_projection_matches_closed_form() {
        let g = PolynomialMap::affine(&Mat::identity(3, 3), &Vector::zeros(3));
        let q = Cone::lorentz(3, 1).unwrap();
        let u = vector(&[0.0, 2.0, 0.0]);
        let r = |y: &Vector| Ok((y - &u, Mat::identity(3, 3)));
        let s = solve_kkt(&g, &q, r, &u, &Vector::zeros(3), 1e-12, 1.0).unwrap();
        assert!((s.y - vector(&[1.0, 1.0, 0.0])).norm() < 1e-10);
    }
}

use serde::Serialize;

use super::kkt::{solve_kkt, KktSolution};
use super::problem::GEProblem;
use crate::calculus::{critical_cone, pdc_certificate, projection_derivative, ProjDeriv};
use crate::engine::{enumerate_faces, face_normal, inclusion_pieces};
use crate::error::{check_dim, Error, Result};
use crate::fd;
use crate::linalg::{solve_square, Mat, Vector};
use crate::settings::Settings;

/// `y = P_Γ(u)` together with the multiplier `ν` of the KKT system.
#[derive(Clone, Debug)]
pub struct GammaProjection {
    pub y: Vector,
    pub nu: Vector,
    pub residual: f64,
    pub iterations: usize,
}

pub fn trust_radius(problem: &GEProblem, settings: &Settings) -> f64 {
    settings.trust_radius.unwrap_or(0.5 * (1.0 + problem.ybar.norm()))
}

/// Solve `y - u + ∇g(y)^T ν = 0`, `g(y) = P_Θ(g(y) + ν)` by semismooth Newton from `(u, 0)`.
pub fn project_gamma(problem: &GEProblem, u: &Vector, settings: &Settings) -> Result<GammaProjection> {
    check_dim(problem.m(), u.len())?;
    let radius = trust_radius(problem, settings);
    let distance = (u - &problem.ybar).norm();
    if distance > radius {
        return Err(Error::OutsideTrustRegion { distance, radius });
    }
    let m = problem.m();
    let r = |y: &Vector| Ok((y - u, Mat::identity(m, m)));
    let KktSolution { y, nu, residual, iterations } =
        solve_kkt(&problem.g, &problem.theta, r, u, &Vector::zeros(problem.l()), settings.tol_kkt, u.norm())?;
    if !problem.theta.contains_tol(&problem.g.eval(&y)?, settings.tol_membership)? {
        return Err(Error::NoConvergence("Newton limit is not in Γ".into()));
    }
    Ok(GammaProjection { y, nu, residual, iterations })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum GammaMethod {
    /// `P'_Θ` is linear at `g(y) + ν`: one square solve.
    Linear,
    /// PDC holds and the critical cone is polyhedral: face enumeration.
    Faces,
    /// Semismooth Newton on the piecewise system.
    Newton,
}

#[derive(Clone, Debug)]
pub struct GammaDerivative {
    pub v1: Vector,
    pub v2: Vector,
    pub method: GammaMethod,
    /// Agreement with a forward difference of `P_Γ`, when one was taken.
    pub fd_error: Option<f64>,
}

struct System {
    hm: Mat,
    jac: Mat,
    deriv: ProjDeriv,
}

impl System {
    fn residual(&self, h: &Vector, v1: &Vector, v2: &Vector) -> Result<Vector> {
        let top = &self.hm * v1 + self.jac.transpose() * v2 - h;
        let jv = &self.jac * v1;
        let bottom = &jv - self.deriv.apply(&(&jv + v2))?;
        Ok(Vector::from_iterator(top.len() + bottom.len(), top.iter().chain(bottom.iter()).copied()))
    }

    fn newton_matrix(&self, mm: &Mat) -> Mat {
        let (m, l) = (self.hm.nrows(), self.jac.nrows());
        let mut k = Mat::zeros(m + l, m + l);
        k.view_mut((0, 0), (m, m)).copy_from(&self.hm);
        k.view_mut((0, m), (m, l)).copy_from(&self.jac.transpose());
        k.view_mut((m, 0), (l, m)).copy_from(&(&self.jac - mm * &self.jac));
        k.view_mut((m, m), (l, l)).copy_from(&(-mm));
        k
    }

    fn split(&self, x: &Vector) -> (Vector, Vector) {
        let m = self.hm.nrows();
        (x.rows(0, m).into_owned(), x.rows(m, self.jac.nrows()).into_owned())
    }

    fn rhs(&self, h: &Vector) -> Vector {
        let mut b = Vector::zeros(self.hm.nrows() + self.jac.nrows());
        b.rows_mut(0, h.len()).copy_from(h);
        b
    }

    /// Newton on a piecewise-linear equation; every step solves the linear
    /// model of the current piece exactly.
    fn newton(&self, h: &Vector, tol: f64) -> Result<(Vector, Vector)> {
        let scale = tol * (1.0 + h.norm());
        let starts = [self.jac.clone() * h, -(self.jac.clone() * h), Vector::zeros(self.jac.nrows())];
        for start in starts {
            let mm = self.deriv.jacobian(&start)?;
            let (mut v1, mut v2) = self.split(&solve_square(&self.newton_matrix(&mm), &self.rhs(h)));
            for _ in 0..50 {
                let f = self.residual(h, &v1, &v2)?;
                if f.norm() <= scale {
                    return Ok((v1, v2));
                }
                let mm = self.deriv.jacobian(&(&self.jac * &v1 + &v2))?;
                let step = solve_square(&self.newton_matrix(&mm), &(-&f));
                let (d1, d2) = self.split(&step);
                let mut t = 1.0;
                let norm = f.norm();
                loop {
                    let (a, b) = (&v1 + &d1 * t, &v2 + &d2 * t);
                    if self.residual(h, &a, &b)?.norm() < (1.0 - 1e-4 * t) * norm || t < 1e-8 {
                        v1 = a;
                        v2 = b;
                        break;
                    }
                    t *= 0.5;
                }
            }
            if self.residual(h, &v1, &v2)?.norm() <= scale {
                return Ok((v1, v2));
            }
        }
        Err(Error::NoConvergence("directional derivative system".into()))
    }
}

/// `P'_Γ(u; h) = v1` where `(v1, v2)` solves
/// `h = (I + sum ν_i ∇²g_i(y)) v1 + ∇g(y)^T v2`, `∇g(y) v1 = P'_Θ(g(y) + ν; ∇g(y) v1 + v2)`.
pub fn directional_derivative_projection_gamma(
    problem: &GEProblem,
    u: &Vector,
    h: &Vector,
    settings: &Settings,
) -> Result<GammaDerivative> {
    check_dim(problem.m(), h.len())?;
    let proj = project_gamma(problem, u, settings)?;
    let m = problem.m();
    let (y, nu) = (&proj.y, &proj.nu);
    let z = problem.g.eval(y)?;
    let sys = System {
        hm: Mat::identity(m, m) + problem.g.weighted_hessian(nu, y)?,
        jac: problem.g.jacobian(y)?,
        deriv: projection_derivative(&problem.theta, &(&z + nu))?,
    };
    if let Some(mm) = sys.deriv.as_matrix() {
        let (v1, v2) = sys.split(&solve_square(&sys.newton_matrix(&mm), &sys.rhs(h)));
        return Ok(GammaDerivative { v1, v2, method: GammaMethod::Linear, fd_error: None });
    }
    if pdc_certificate(&problem.theta, &z)?.is_some() {
        let crit = critical_cone(&problem.theta, &z, nu)?;
        if let Some(k) = crit.polycone() {
            let faces = enumerate_faces(&k, settings.face_cap)?;
            let set = inclusion_pieces(&sys.hm, &sys.jac, &faces, h);
            for (i, piece) in set.pieces.iter().enumerate() {
                if let Some((v1, w)) = piece.feasible_point(settings.tol_membership) {
                    let v2 = face_normal(&faces.faces[i], &w);
                    return Ok(GammaDerivative { v1, v2, method: GammaMethod::Faces, fd_error: None });
                }
            }
        }
    }
    let (v1, v2) = sys.newton(h, settings.tol_kkt)?;
    let t = 1e-6;
    let q = fd::forward(|p| Ok(project_gamma(problem, p, settings)?.y), u, h, t)?;
    let fd_error = Some(fd::rel_error(&v1, &q));
    Ok(GammaDerivative { v1, v2, method: GammaMethod::Newton, fd_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::{Cone, Sign};
    use crate::geometry::polymap::PolynomialMap;
    use crate::geometry::problem::fixtures::example_6_4;
    use crate::linalg::vector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fixed_point_and_interior_points() {
        let p = example_6_4();
        let s = Settings::default();
        let r = project_gamma(&p, &p.ybar, &s).unwrap();
        assert_eq!(r.y, p.ybar);
        assert_eq!(r.nu, Vector::zeros(3));
        let u = vector(&[0.05, 0.0, 0.2]);
        let r = project_gamma(&p, &u, &s).unwrap();
        assert_eq!(r.y, u);
    }

    #[test]
    fn trust_region_is_enforced() {
        let p = example_6_4();
        let err = project_gamma(&p, &vector(&[2.0, 0.0, 0.0]), &Settings::default()).unwrap_err();
        assert!(matches!(err, Error::OutsideTrustRegion { .. }));
    }

    /// `min |y - u|^2 + rho dist^2(g(y), Θ)` by gradient descent, `rho` increasing.
    fn penalty_projection(p: &GEProblem, u: &Vector) -> Vector {
        let mut y = u.clone();
        for rho in [1e1, 1e2, 1e3, 1e4, 1e5] {
            let step = 0.5 / (1.0 + rho * 2.0);
            for _ in 0..20000 {
                let gy = p.g.eval(&y).unwrap();
                let d = &gy - p.theta.project(&gy).unwrap();
                let grad = (&y - u) * 2.0 + p.g.jacobian(&y).unwrap().transpose() * d * (2.0 * rho);
                y -= grad * step;
            }
        }
        y
    }

    #[test]
    fn projection_matches_penalty_continuation() {
        let p = example_6_4();
        let u = vector(&[0.0, 0.0, -0.1]);
        let r = project_gamma(&p, &u, &Settings::default()).unwrap();
        let oracle = penalty_projection(&p, &u);
        assert!((&r.y - &oracle).norm() < 1e-4, "{} vs {}", r.y, oracle);
        let u = vector(&[0.1, -0.05, 0.02]);
        let r = project_gamma(&p, &u, &Settings::default()).unwrap();
        let oracle = penalty_projection(&p, &u);
        assert!((&r.y - &oracle).norm() < 1e-4, "{} vs {}", r.y, oracle);
    }

    #[test]
    fn kkt_rows_hold_at_solution() {
        let p = example_6_4();
        let u = vector(&[0.1, -0.05, 0.02]);
        let r = project_gamma(&p, &u, &Settings::default()).unwrap();
        let top = &r.y - &u + p.g.jacobian(&r.y).unwrap().transpose() * &r.nu;
        assert!(top.norm() < 1e-10);
        assert!(p.theta.is_normal(&p.g.eval(&r.y).unwrap(), &r.nu).unwrap());
    }

    #[test]
    fn derivative_at_reference_matches_forward_difference() {
        let p = example_6_4();
        let s = Settings::default();
        for h in [vector(&[1.0, 0.0, 0.0]), vector(&[0.3, -0.2, -1.0]), vector(&[0.0, 0.5, 1.0])] {
            let d = directional_derivative_projection_gamma(&p, &p.ybar, &h, &s).unwrap();
            let q = fd::forward(|u| Ok(project_gamma(&p, u, &s)?.y), &p.ybar, &h, 1e-6).unwrap();
            assert!(fd::rel_error(&d.v1, &q) < 1e-4, "{} vs {}", d.v1, q);
        }
    }

    #[test]
    fn derivative_matches_forward_difference_at_random_points() {
        let p = example_6_4();
        let s = Settings::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..25 {
            let u = Vector::from_fn(3, |_, _| rng.random_range(-0.2..0.2));
            let h = Vector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
            let d = directional_derivative_projection_gamma(&p, &u, &h, &s).unwrap();
            let q = fd::forward(|x| Ok(project_gamma(&p, x, &s)?.y), &u, &h, 1e-6).unwrap();
            assert!(fd::rel_error(&d.v1, &q) < 1e-4, "u={u} h={h}: {} vs {}", d.v1, q);
        }
    }

    #[test]
    fn linear_map_into_orthant_uses_faces() {
        // Γ = {y : y1 >= 0, y1 + y2 >= 0}; both base points sit on kinks of P_Θ.
        let a = Mat::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        let g = PolynomialMap::affine(&a, &Vector::zeros(2));
        let f = PolynomialMap::affine(&Mat::zeros(2, 3), &Vector::zeros(2));
        let p = GEProblem::new(f, g, Cone::orthant(2, Sign::Pos), Vector::zeros(1), Vector::zeros(2)).unwrap();
        let s = Settings::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for i in 0..20 {
            let u = if i % 2 == 0 { vector(&[0.0, 0.3]) } else { Vector::zeros(2) };
            let h = Vector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
            let d = directional_derivative_projection_gamma(&p, &u, &h, &s).unwrap();
            assert_eq!(d.method, GammaMethod::Faces);
            let q = fd::forward(|x| Ok(project_gamma(&p, x, &s)?.y), &u, &h, 1e-6).unwrap();
            assert!(fd::rel_error(&d.v1, &q) < 1e-6, "{} vs {}", d.v1, q);
        }
    }
}

use crate::cone::{lorentz, power, Cone, Sign};
use crate::error::{check_dim, Result};
use crate::linalg::{block_diag, kernel_projector, Mat, Vector};
use crate::polycone::PolyCone;

/// Relative width of the band in which a point counts as sitting on a kink of `P_Θ`.
pub const KINK_TOL: f64 = 1e-12;

/// The map `h -> P'_Θ(u; h)` for a fixed base point `u`.
#[derive(Clone, Debug, PartialEq)]
pub enum ProjDeriv {
    Linear(Mat),
    /// Projection onto a polyhedral cone.
    OntoPoly(PolyCone),
    /// Projection onto a catalogue cone (the derivative at the vertex).
    OntoCone(Cone),
    Blocks(Vec<ProjDeriv>),
}

impl ProjDeriv {
    pub fn dim(&self) -> usize {
        match self {
            ProjDeriv::Linear(m) => m.nrows(),
            ProjDeriv::OntoPoly(p) => p.dim(),
            ProjDeriv::OntoCone(c) => c.dim(),
            ProjDeriv::Blocks(bs) => bs.iter().map(ProjDeriv::dim).sum(),
        }
    }

    pub fn apply(&self, h: &Vector) -> Result<Vector> {
        check_dim(self.dim(), h.len())?;
        Ok(match self {
            ProjDeriv::Linear(m) => m * h,
            ProjDeriv::OntoPoly(p) => p.project(h),
            ProjDeriv::OntoCone(c) => c.project(h)?,
            ProjDeriv::Blocks(bs) => {
                let mut out = Vector::zeros(h.len());
                let mut off = 0;
                for b in bs {
                    let d = b.dim();
                    out.rows_mut(off, d).copy_from(&b.apply(&h.rows(off, d).into_owned())?);
                    off += d;
                }
                out
            }
        })
    }

    /// An element of the B-subdifferential of `h -> P'_Θ(u; h)` at `h`.
    pub fn jacobian(&self, h: &Vector) -> Result<Mat> {
        check_dim(self.dim(), h.len())?;
        Ok(match self {
            ProjDeriv::Linear(m) => m.clone(),
            ProjDeriv::OntoPoly(p) => p.projection_jacobian(h),
            ProjDeriv::OntoCone(c) => c.projection_jacobian(h)?,
            ProjDeriv::Blocks(bs) => {
                let mut mats = Vec::with_capacity(bs.len());
                let mut off = 0;
                for b in bs {
                    let d = b.dim();
                    mats.push(b.jacobian(&h.rows(off, d).into_owned())?);
                    off += d;
                }
                block_diag(&mats)
            }
        })
    }

    /// The matrix of the map when it is linear.
    pub fn as_matrix(&self) -> Option<Mat> {
        match self {
            ProjDeriv::Linear(m) => Some(m.clone()),
            ProjDeriv::Blocks(bs) => Some(block_diag(&bs.iter().map(ProjDeriv::as_matrix).collect::<Option<Vec<_>>>()?)),
            _ => None,
        }
    }

    fn reflected(self) -> Result<ProjDeriv> {
        Ok(match self {
            ProjDeriv::Linear(m) => ProjDeriv::Linear(m),
            ProjDeriv::OntoPoly(p) => ProjDeriv::OntoPoly(p.negated()),
            ProjDeriv::OntoCone(c) => ProjDeriv::OntoCone(c.negated()?),
            ProjDeriv::Blocks(bs) => ProjDeriv::Blocks(bs.into_iter().map(ProjDeriv::reflected).collect::<Result<_>>()?),
        })
    }
}

fn onto_poly(c: PolyCone) -> ProjDeriv {
    let c = c.canonicalize();
    if c.ineq().nrows() == 0 {
        ProjDeriv::Linear(kernel_projector(c.eq(), c.dim()))
    } else {
        ProjDeriv::OntoPoly(c)
    }
}

/// `P'_Θ(u; ·)` in closed form.
pub fn projection_derivative(cone: &Cone, u: &Vector) -> Result<ProjDeriv> {
    check_dim(cone.dim(), u.len())?;
    let dim = u.len();
    let band = KINK_TOL * (1.0 + u.norm());
    Ok(match cone {
        Cone::Product(fs) => ProjDeriv::Blocks(
            fs.iter()
                .zip(Cone::split_blocks(fs, u))
                .map(|(f, part)| projection_derivative(f, &part))
                .collect::<Result<_>>()?,
        ),
        Cone::Orthant { sign, .. } => {
            let s = sign.factor();
            let kinks: Vec<usize> = (0..dim).filter(|&i| u[i].abs() <= band).collect();
            if kinks.is_empty() {
                ProjDeriv::Linear(Mat::from_diagonal(&u.map(|v| if s * v > 0.0 { 1.0 } else { 0.0 })))
            } else {
                let mut ineq = Vec::new();
                let mut eq = Vec::new();
                for i in 0..dim {
                    let mut e = Vector::zeros(dim);
                    if u[i].abs() <= band {
                        e[i] = -s;
                        ineq.push(e);
                    } else if s * u[i] < 0.0 {
                        e[i] = 1.0;
                        eq.push(e);
                    }
                }
                onto_poly(PolyCone::from_rows(dim, &ineq, &eq))
            }
        }
        Cone::Polyhedral(p) => {
            let z = p.project(u);
            let b = u - &z;
            let scale = 1.0 + z.norm();
            let active: Vec<Vector> = p
                .ineq_rows()
                .into_iter()
                .filter(|a| a.dot(&z) >= -crate::tol::MEMBERSHIP * scale)
                .collect();
            let mut eq = p.eq_rows();
            if b.norm() > band {
                eq.push(b);
            }
            onto_poly(PolyCone::from_rows(dim, &active, &eq))
        }
        Cone::Lorentz { axis, sign, .. } => match sign {
            Sign::Pos => lorentz_derivative(u, *axis)?,
            Sign::Neg => lorentz_derivative(&-u, *axis)?.reflected()?,
        },
        Cone::PowerSurface => {
            if u.norm() <= band {
                ProjDeriv::OntoCone(Cone::PowerSurface)
            } else if u[0] > 0.0 && power::phi(u)? < -1e-10 * (1.0 + u.norm()) {
                ProjDeriv::Linear(Mat::identity(3, 3))
            } else {
                let p = cone.project(u)?;
                let near = 1e-10 * (1.0 + u.norm());
                if p.norm() <= near {
                    match power::exposed_ray(u) {
                        Some(d) => ProjDeriv::OntoPoly(PolyCone::ray(&d)),
                        None => ProjDeriv::Linear(Mat::zeros(3, 3)),
                    }
                } else if (u - &p).norm() <= near {
                    ProjDeriv::OntoPoly(PolyCone::halfspace(&power::grad_phi(u)?))
                } else {
                    ProjDeriv::Linear(power::projection_jacobian(&power::project_to_boundary(u)?)?)
                }
            }
        }
    })
}

fn lorentz_derivative(u: &Vector, axis: usize) -> Result<ProjDeriv> {
    let dim = u.len();
    let band = KINK_TOL * (1.0 + u.norm());
    let (s, r) = lorentz::split(u, axis);
    let rho = r.norm();
    Ok(if u.norm() <= band {
        ProjDeriv::OntoCone(Cone::Lorentz { dim, axis, sign: Sign::Pos })
    } else if s - rho > band {
        ProjDeriv::Linear(Mat::identity(dim, dim))
    } else if -s - rho > band {
        ProjDeriv::Linear(Mat::zeros(dim, dim))
    } else if s > 0.0 && (rho - s).abs() <= band {
        // Boundary of Q: project onto the tangent halfspace.
        ProjDeriv::OntoPoly(PolyCone::halfspace(&lorentz::join(-1.0, &(&r / rho), axis)))
    } else if s < 0.0 && (rho + s).abs() <= band {
        // Boundary of the polar: project onto the exposed ray.
        ProjDeriv::OntoPoly(PolyCone::ray(&lorentz::join(1.0, &(&r / rho), axis)))
    } else {
        ProjDeriv::Linear(lorentz::smooth_jacobian(u, axis))
    })
}

pub fn directional_derivative_projection(cone: &Cone, u: &Vector, h: &Vector) -> Result<Vector> {
    projection_derivative(cone, u)?.apply(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd;
    use crate::linalg::vector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gauss(rng: &mut ChaCha8Rng, n: usize) -> Vector {
        Vector::from_fn(n, |_, _| StandardNormal.sample(rng))
    }

    fn fd_check(cone: &Cone, u: &Vector, h: &Vector) -> f64 {
        let d = directional_derivative_projection(cone, u, h).unwrap();
        let q = fd::forward(|v| cone.project(v), u, h, 1e-6).unwrap();
        fd::rel_error(&d, &q)
    }

    #[test]
    fn lorentz_reference_point() {
        let q = Cone::lorentz(3, 1).unwrap();
        assert!(fd_check(&q, &vector(&[0.0, 2.0, 0.0]), &vector(&[1.0, 0.0, 0.0])) < 1e-5);
    }

    #[test]
    fn interior_and_polar_cases() {
        let q = Cone::lorentz(3, 1).unwrap();
        let h = vector(&[0.3, -1.0, 2.0]);
        assert_eq!(directional_derivative_projection(&q, &vector(&[3.0, 1.0, 0.0]), &h).unwrap(), h);
        assert_eq!(directional_derivative_projection(&q, &vector(&[-3.0, 1.0, 0.0]), &h).unwrap(), Vector::zeros(3));
    }

    #[test]
    fn kink_cases_match_one_sided_differences() {
        let q = Cone::lorentz(3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let points = [vector(&[0.6, 1.0, 0.8]), vector(&[0.6, -1.0, 0.8]), Vector::zeros(3)];
        for u in &points {
            for _ in 0..20 {
                let h = gauss(&mut rng, 3);
                assert!(fd_check(&q, u, &h) < 1e-5, "u = {u}");
            }
        }
    }

    #[test]
    fn random_fd_consistency_per_cone() {
        let cones = vec![
            Cone::lorentz(4, 1).unwrap(),
            Cone::lorentz(3, 3).unwrap().negated().unwrap(),
            Cone::orthant(3, Sign::Neg),
            Cone::Polyhedral(PolyCone::from_rows(
                3,
                &[vector(&[1.0, 1.0, 0.0]), vector(&[-1.0, 0.0, 1.0]), vector(&[0.0, -1.0, -1.0])],
                &[],
            )),
            Cone::Product(vec![Cone::lorentz(3, 1).unwrap(), Cone::orthant(2, Sign::Pos)]),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for c in &cones {
            for _ in 0..50 {
                let u = gauss(&mut rng, c.dim());
                let h = gauss(&mut rng, c.dim());
                assert!(fd_check(c, &u, &h) < 1e-4, "{c:?}");
            }
        }
    }

    #[test]
    fn power_surface_derivative_matches_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let base = vector(&[1.0, 1.0, 1.0]);
        for _ in 0..30 {
            let u = &base + gauss(&mut rng, 3) * 0.3;
            let h = gauss(&mut rng, 3);
            assert!(fd_check(&Cone::PowerSurface, &u, &h) < 1e-4, "u = {u}");
        }
    }

    #[test]
    fn polyhedral_derivative_is_critical_projection() {
        let c = Cone::orthant(2, Sign::Pos);
        let u = vector(&[0.0, -1.0]);
        let d = directional_derivative_projection(&c, &u, &vector(&[-1.0, 5.0])).unwrap();
        assert!(d.norm() < 1e-12);
        let d = directional_derivative_projection(&c, &u, &vector(&[2.0, 5.0])).unwrap();
        assert!((d - vector(&[2.0, 0.0])).norm() < 1e-12);
    }

    #[test]
    fn positive_homogeneity() {
        let q = Cone::lorentz(3, 1).unwrap();
        let u = vector(&[0.2, 0.5, -0.1]);
        let h = vector(&[1.0, -0.4, 0.9]);
        let a = directional_derivative_projection(&q, &u, &(&h * 3.0)).unwrap();
        let b = directional_derivative_projection(&q, &u, &h).unwrap() * 3.0;
        assert!((a - b).norm() < 1e-12);
    }
}

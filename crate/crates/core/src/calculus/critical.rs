use crate::cone::{lorentz, power, Cone, Region};
use crate::error::{check_dim, Error, Result};
use crate::linalg::Vector;
use crate::polycone::PolyCone;
use crate::tol;

/// `K(z, b) = T_Θ(z) ∩ b^perp`.
#[derive(Clone, Debug)]
pub struct CriticalConeResult {
    /// Polyhedral whenever possible; otherwise a product that keeps whole
    /// non-polyhedral blocks symbolically.
    pub cone: Cone,
    pub base_point: Vector,
    pub normal_direction: Vector,
    pub is_polyhedral: bool,
}

impl CriticalConeResult {
    pub fn polycone(&self) -> Option<PolyCone> {
        self.cone.to_polycone()
    }
}

pub fn critical_cone(cone: &Cone, z: &Vector, b: &Vector) -> Result<CriticalConeResult> {
    check_dim(cone.dim(), z.len())?;
    check_dim(cone.dim(), b.len())?;
    if !cone.contains(z)? {
        return Err(Error::NotMember);
    }
    if !cone.is_normal(z, b)? {
        return Err(Error::NotNormal);
    }
    let raw = critical_block(cone, z, b)?;
    let (cone, is_polyhedral) = match raw.to_polycone() {
        Some(p) => (Cone::Polyhedral(p.canonicalize()), true),
        None => (raw, false),
    };
    Ok(CriticalConeResult { cone, base_point: z.clone(), normal_direction: b.clone(), is_polyhedral })
}

fn cut(t: PolyCone, b: &Vector) -> PolyCone {
    if b.norm() <= tol::MEMBERSHIP {
        t
    } else {
        t.intersect_hyperplane(b)
    }
}

fn critical_block(cone: &Cone, z: &Vector, b: &Vector) -> Result<Cone> {
    let dim = cone.dim();
    Ok(match cone {
        Cone::Product(fs) => Cone::Product(
            fs.iter()
                .zip(Cone::split_blocks(fs, z).iter().zip(Cone::split_blocks(fs, b)))
                .map(|(f, (zp, bp))| critical_block(f, zp, &bp))
                .collect::<Result<_>>()?,
        ),
        Cone::Orthant { .. } | Cone::Polyhedral(_) => {
            let t = cone.tangent_cone(z)?.to_polycone().expect("polyhedral tangent cone");
            Cone::Polyhedral(cut(t, b))
        }
        Cone::Lorentz { .. } | Cone::PowerSurface => match cone.region(z)? {
            Region::Interior => Cone::Polyhedral(PolyCone::full(dim)),
            // A nonzero normal is a positive multiple of the gradient; cutting with the
            // gradient itself avoids a rounding-level second row near the chart edge.
            Region::Smooth { grad, .. } if b.norm() > tol::MEMBERSHIP => Cone::Polyhedral(PolyCone::hyperplane(&grad)),
            Region::Smooth { grad, .. } => Cone::Polyhedral(PolyCone::halfspace(&grad)),
            Region::Vertex => vertex_critical(cone, b),
        },
    })
}

/// `Θ ∩ b^perp` for `b` in the polar cone.
fn vertex_critical(cone: &Cone, b: &Vector) -> Cone {
    let dim = cone.dim();
    if b.norm() <= tol::MEMBERSHIP {
        return cone.clone();
    }
    let scale = 1.0 + b.norm();
    match cone {
        Cone::Lorentz { axis, sign, .. } => {
            let s = sign.factor();
            let w = b * s;
            if lorentz::margin(&(-&w), *axis) > tol::MEMBERSHIP * scale || dim == 1 {
                Cone::Polyhedral(PolyCone::zero(dim))
            } else {
                Cone::Polyhedral(PolyCone::ray(&(lorentz::critical_ray(&w, *axis) * s)))
            }
        }
        Cone::PowerSurface => match power::exposed_ray(b) {
            Some(d) => Cone::Polyhedral(PolyCone::ray(&d)),
            None => Cone::Polyhedral(PolyCone::zero(dim)),
        },
        _ => unreachable!("vertex rule applies to non-polyhedral blocks"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::Sign;
    use crate::linalg::vector;

    #[test]
    fn example_lorentz_vertex_ray() {
        let q = Cone::lorentz(3, 3).unwrap();
        let r = critical_cone(&q, &Vector::zeros(3), &vector(&[1.0, 0.0, -1.0])).unwrap();
        assert!(r.is_polyhedral);
        assert!(r.polycone().unwrap().same_set(&PolyCone::ray(&vector(&[1.0, 0.0, 1.0])), 1e-9));
    }

    #[test]
    fn reflected_lorentz_vertex_ray() {
        let q = Cone::lorentz(3, 3).unwrap().negated().unwrap();
        let r = critical_cone(&q, &Vector::zeros(3), &vector(&[-1.0, 0.0, 1.0])).unwrap();
        assert!(r.polycone().unwrap().same_set(&PolyCone::ray(&vector(&[-1.0, 0.0, -1.0])), 1e-9));
    }

    #[test]
    fn interior_point_gives_full_space() {
        let q = Cone::lorentz(3, 1).unwrap();
        let r = critical_cone(&q, &vector(&[2.0, 0.0, 0.0]), &Vector::zeros(3)).unwrap();
        assert!(r.polycone().unwrap().same_set(&PolyCone::full(3), 1e-9));
    }

    #[test]
    fn power_surface_plane() {
        let z = vector(&[1.0, 1.0, 1.0]);
        let b = vector(&[-3.0, 4.0, -1.0]);
        let r = critical_cone(&Cone::PowerSurface, &z, &b).unwrap();
        assert!(r.polycone().unwrap().same_set(&PolyCone::hyperplane(&b), 1e-9));
    }

    #[test]
    fn full_lorentz_block_is_not_polyhedral() {
        let c = Cone::Product(vec![Cone::lorentz(3, 1).unwrap(), Cone::orthant(1, Sign::Pos)]);
        let r = critical_cone(&c, &Vector::zeros(4), &vector(&[0.0, 0.0, 0.0, -1.0])).unwrap();
        assert!(!r.is_polyhedral);
    }

    #[test]
    fn rejects_bad_inputs() {
        let q = Cone::lorentz(3, 1).unwrap();
        assert_eq!(
            critical_cone(&q, &vector(&[0.0, 1.0, 0.0]), &Vector::zeros(3)).unwrap_err(),
            Error::NotMember
        );
        assert_eq!(
            critical_cone(&q, &Vector::zeros(3), &vector(&[1.0, 0.0, 0.0])).unwrap_err(),
            Error::NotNormal
        );
    }

    #[test]
    fn scaling_the_normal_keeps_the_cone() {
        let q = Cone::lorentz(3, 1).unwrap();
        let z = vector(&[1.0, 0.6, 0.8]);
        let b = vector(&[-1.0, 0.6, 0.8]);
        let a = critical_cone(&q, &z, &b).unwrap().polycone().unwrap();
        let c = critical_cone(&q, &z, &(&b * 7.5)).unwrap().polycone().unwrap();
        assert_eq!(a, c);
    }
}

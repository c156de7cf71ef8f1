use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::critical::critical_cone;
use super::derivative::directional_derivative_projection;
use crate::cone::{lorentz, Cone, Region};
use crate::error::{check_dim, Error, Result};
use crate::fd;
use crate::linalg::{vector, Mat, Vector};
use crate::tol;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum EpStatus {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct EpVerdict {
    pub status: EpStatus,
    /// Normal direction and critical direction with `0 ∉ T²(z, h)`.
    pub witness: Option<(Vector, Vector)>,
    pub method: String,
}

impl EpVerdict {
    fn holds(method: &str) -> Self {
        EpVerdict { status: EpStatus::Holds, witness: None, method: method.into() }
    }
}

/// Density of the second-order critical set in the critical cone, for every normal `b`.
///
/// At a smooth boundary point with normal `b = c grad psi`, `c > 0`, the
/// critical cone is the plane `grad psi^perp` and `0 ∈ T²(z, h)` iff
/// `hess psi (h, h) <= 0`.  With `hess psi` positive semidefinite the set is
/// dense exactly when the Hessian vanishes on that plane.  For `b = 0` the
/// directions with `grad psi h < 0` are already dense.
pub fn extended_polyhedricity(cone: &Cone, z: &Vector) -> Result<EpVerdict> {
    check_dim(cone.dim(), z.len())?;
    if !cone.contains(z)? {
        return Err(Error::NotMember);
    }
    if cone.is_polyhedral() {
        return Ok(EpVerdict::holds("polyhedral"));
    }
    match cone {
        Cone::Product(fs) => {
            let mut off = 0;
            for (f, part) in fs.iter().zip(Cone::split_blocks(fs, z)) {
                let v = extended_polyhedricity(f, &part)?;
                if v.status != EpStatus::Holds {
                    let embed = |x: &Vector| {
                        let mut full = Vector::zeros(z.len());
                        full.rows_mut(off, x.len()).copy_from(x);
                        full
                    };
                    return Ok(EpVerdict {
                        status: v.status,
                        witness: v.witness.map(|(b, h)| (embed(&b), embed(&h))),
                        method: format!("block at offset {off}: {}", v.method),
                    });
                }
                off += f.dim();
            }
            Ok(EpVerdict::holds("every block"))
        }
        _ => match cone.region(z)? {
            Region::Interior => Ok(EpVerdict::holds("interior point")),
            Region::Vertex => Ok(EpVerdict::holds("vertex")),
            Region::Smooth { grad, hess } => {
                let g = &grad / grad.norm();
                let p = Mat::identity(g.len(), g.len()) - &g * g.transpose();
                let restricted = &p * &hess * &p;
                let eig = restricted.clone().symmetric_eigen();
                let (imax, lmax) = eig
                    .eigenvalues
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |acc, (i, &l)| if l > acc.1 { (i, l) } else { acc });
                if lmax <= tol::NUMERIC * (1.0 + hess.norm()) {
                    Ok(EpVerdict::holds("curvature vanishes on the critical plane"))
                } else {
                    let h = eig.eigenvectors.column(imax).into_owned();
                    Ok(EpVerdict {
                        status: EpStatus::Fails,
                        witness: Some((grad.clone(), h)),
                        method: format!("curvature {lmax:.6e} on the critical plane"),
                    })
                }
            }
        },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum PdcStatus {
    Certified,
    Refuted,
    SampledOk,
}

#[derive(Clone, Debug)]
pub struct PdcWitness {
    pub b: Vector,
    pub h: Vector,
    pub derivative: Vector,
    pub critical_projection: Vector,
    pub fd_quotient: Vector,
    pub rel_error: f64,
}

#[derive(Clone, Debug)]
pub struct PdcVerdict {
    pub status: PdcStatus,
    pub method: String,
    pub samples: usize,
    pub max_rel_error: f64,
    pub witness: Option<PdcWitness>,
}

impl PdcVerdict {
    pub fn holds(&self) -> bool {
        self.status != PdcStatus::Refuted
    }
}

/// Structural reason why the projection derivation condition holds at `z`, if any.
pub fn pdc_certificate(cone: &Cone, z: &Vector) -> Result<Option<String>> {
    if cone.is_polyhedral() {
        return Ok(Some("polyhedral".into()));
    }
    match cone {
        Cone::Product(fs) => {
            let mut reasons = Vec::new();
            for (f, part) in fs.iter().zip(Cone::split_blocks(fs, z)) {
                match pdc_certificate(f, &part)? {
                    Some(r) => reasons.push(r),
                    None => return Ok(None),
                }
            }
            Ok(Some(format!("blockwise [{}]", reasons.join(", "))))
        }
        _ => match cone.region(z)? {
            Region::Interior => Ok(Some("interior point".into())),
            Region::Vertex => Ok(Some("vertex of a closed convex cone".into())),
            Region::Smooth { .. } => Ok((extended_polyhedricity(cone, z)?.status == EpStatus::Holds)
                .then(|| "extended polyhedricity at a reducible boundary point".into())),
        },
    }
}

fn gauss(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

fn unit(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    loop {
        let v = gauss(rng, n);
        if v.norm() > 1e-6 {
            return &v / v.norm();
        }
    }
}

/// Random element of `N_Θ(z)`, biased towards extreme rays.
pub fn sample_normal(cone: &Cone, z: &Vector, rng: &mut ChaCha8Rng) -> Result<Vector> {
    let dim = cone.dim();
    let scale: f64 = rng.random_range(0.1..2.0);
    let mode: f64 = rng.random();
    Ok(match cone {
        Cone::Product(fs) => {
            let parts = fs
                .iter()
                .zip(Cone::split_blocks(fs, z))
                .map(|(f, part)| sample_normal(f, &part, rng))
                .collect::<Result<Vec<_>>>()?;
            Vector::from_iterator(dim, parts.iter().flat_map(|p| p.iter().copied()))
        }
        Cone::Orthant { .. } | Cone::Polyhedral(_) => {
            let t = cone.tangent_cone(z)?.to_polycone().expect("polyhedral tangent cone");
            let rays = t.ineq_rows();
            let mut b = Vector::zeros(dim);
            if !rays.is_empty() {
                if mode < 0.4 {
                    b += &rays[rng.random_range(0..rays.len())];
                } else if mode < 0.8 {
                    for r in &rays {
                        b += r * rng.random::<f64>();
                    }
                }
            }
            for l in t.eq_rows() {
                let c: f64 = StandardNormal.sample(rng);
                b += l * c;
            }
            let n = b.norm();
            if n > 0.0 {
                b * (scale / n)
            } else {
                b
            }
        }
        Cone::Lorentz { axis, sign, .. } => match cone.region(z)? {
            Region::Interior => Vector::zeros(dim),
            Region::Smooth { grad, .. } => {
                if mode < 0.2 {
                    Vector::zeros(dim)
                } else {
                    &grad * (scale / grad.norm())
                }
            }
            Region::Vertex => {
                if mode < 0.2 || dim == 1 {
                    Vector::zeros(dim)
                } else {
                    let rest = unit(rng, dim - 1);
                    // Boundary ray of the polar, or a point inside it.
                    let lift = if mode < 0.7 { 1.0 } else { 1.0 + rng.random::<f64>() };
                    lorentz::join(lift, &rest, *axis) * (-sign.factor() * scale / (lift * lift + 1.0).sqrt())
                }
            }
        },
        Cone::PowerSurface => match cone.region(z)? {
            Region::Interior => Vector::zeros(dim),
            Region::Smooth { grad, .. } => {
                if mode < 0.2 {
                    Vector::zeros(dim)
                } else {
                    &grad * (scale / grad.norm())
                }
            }
            Region::Vertex => {
                if mode < 0.2 {
                    Vector::zeros(dim)
                } else {
                    let t: f64 = StandardNormal.sample(rng);
                    let mut b = vector(&[-3.0 * t.powi(4), 4.0 * t.powi(3), -1.0]);
                    if mode > 0.7 {
                        b[0] -= rng.random::<f64>();
                    }
                    &b * (scale / b.norm())
                }
            }
        },
    })
}

/// Sampled check of `P'_Θ(z + b; h) = P_{K(z, b)}(h)`.
pub fn pdc_check(cone: &Cone, z: &Vector, seed: u64) -> Result<PdcVerdict> {
    check_dim(cone.dim(), z.len())?;
    if !cone.contains(z)? {
        return Err(Error::NotMember);
    }
    let certificate = pdc_certificate(cone, z)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_rel_error: f64 = 0.0;
    let mut witness = None;
    for _ in 0..tol::PDC_SAMPLES {
        let b = sample_normal(cone, z, &mut rng)?;
        let h = unit(&mut rng, cone.dim());
        let u = z + &b;
        let d = directional_derivative_projection(cone, &u, &h)?;
        let crit = critical_cone(cone, z, &b)?;
        let p = crit.cone.project(&h)?;
        let err = fd::rel_error(&d, &p);
        max_rel_error = max_rel_error.max(err);
        if err > tol::PDC && witness.is_none() {
            let q = fd::forward(|v| cone.project(v), &u, &h, 1e-6)?;
            if fd::rel_error(&q, &p) > tol::PDC {
                witness = Some(PdcWitness {
                    b,
                    h,
                    derivative: d,
                    critical_projection: p,
                    fd_quotient: q,
                    rel_error: err,
                });
            }
        }
    }
    let (status, method) = match (&witness, certificate) {
        (Some(_), _) => (PdcStatus::Refuted, "sampled counterexample confirmed by forward difference".to_string()),
        (None, Some(reason)) => (PdcStatus::Certified, reason),
        (None, None) => (PdcStatus::SampledOk, "sampled, no structural certificate".to_string()),
    };
    Ok(PdcVerdict { status, method, samples: tol::PDC_SAMPLES, max_rel_error, witness })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::Sign;
    use crate::polycone::PolyCone;

    #[test]
    fn power_surface_extended_polyhedricity() {
        let v = extended_polyhedricity(&Cone::PowerSurface, &vector(&[1.0, 0.0, 0.0])).unwrap();
        assert_eq!(v.status, EpStatus::Holds);
        let v = extended_polyhedricity(&Cone::PowerSurface, &vector(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(v.status, EpStatus::Fails);
        let (_, h) = v.witness.unwrap();
        assert!((h[0] - h[1]).abs() > 1e-3);
    }

    #[test]
    fn vertex_always_holds() {
        for c in [Cone::lorentz(3, 1).unwrap(), Cone::PowerSurface, Cone::orthant(2, Sign::Neg)] {
            let v = extended_polyhedricity(&c, &Vector::zeros(c.dim())).unwrap();
            assert_eq!(v.status, EpStatus::Holds);
        }
    }

    #[test]
    fn lorentz_pdc_at_vertex_and_boundary() {
        let q = Cone::lorentz(3, 1).unwrap();
        let v = pdc_check(&q, &Vector::zeros(3), 1).unwrap();
        assert_eq!(v.status, PdcStatus::Certified);
        assert!(v.max_rel_error < tol::PDC);
        let v = pdc_check(&q, &vector(&[1.0, 1.0, 0.0]), 1).unwrap();
        assert_eq!(v.status, PdcStatus::Refuted);
        let w = v.witness.unwrap();
        assert!(w.b.norm() > 0.0);
    }

    #[test]
    fn polyhedral_pdc_is_certified() {
        let c = Cone::Polyhedral(PolyCone::from_rows(2, &[vector(&[1.0, -2.0]), vector(&[-1.0, 0.0])], &[]));
        let v = pdc_check(&c, &vector(&[0.0, 0.0]), 3).unwrap();
        assert_eq!(v.status, PdcStatus::Certified);
        assert!(v.max_rel_error < 1e-9);
    }

    #[test]
    fn power_surface_pdc() {
        let v = pdc_check(&Cone::PowerSurface, &vector(&[1.0, 0.0, 0.0]), 2).unwrap();
        assert_eq!(v.status, PdcStatus::Certified);
        let v = pdc_check(&Cone::PowerSurface, &vector(&[1.0, 1.0, 1.0]), 2).unwrap();
        assert_eq!(v.status, PdcStatus::Refuted);
    }
}

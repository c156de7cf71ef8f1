//! Catalogue of closed convex cones with closed-form geometry.

pub mod lorentz;
pub mod power;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{block_diag, rows_to_mat, vector, Mat, Vector};
use crate::polycone::PolyCone;
use crate::tol;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[default]
    #[serde(rename = "+", alias = "pos", alias = "nonneg")]
    Pos,
    #[serde(rename = "-", alias = "neg", alias = "nonpos")]
    Neg,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Pos => 1.0,
            Sign::Neg => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Pos => Sign::Neg,
            Sign::Neg => Sign::Pos,
        }
    }
}

/// A closed convex cone from the catalogue.
///
/// `Lorentz` stores a zero-based axis; `sign = Neg` denotes the reflected cone `-Q`.
#[derive(Clone, Debug, PartialEq)]
pub enum Cone {
    Orthant { dim: usize, sign: Sign },
    Lorentz { dim: usize, axis: usize, sign: Sign },
    Polyhedral(PolyCone),
    Product(Vec<Cone>),
    PowerSurface,
}

/// Where a point sits relative to a non-polyhedral cone.
#[derive(Clone, Debug)]
pub enum Region {
    Interior,
    Vertex,
    /// Smooth boundary point: the cone is locally `{z : psi(z) <= 0}`.
    Smooth { grad: Vector, hess: Mat },
}

impl Cone {
    /// Lorentz cone with a one-based axis index.
    pub fn lorentz(dim: usize, axis: usize) -> Result<Cone> {
        if dim == 0 || axis == 0 || axis > dim {
            return Err(Error::InvalidInput(format!("Lorentz axis {axis} out of range 1..={dim}")));
        }
        Ok(Cone::Lorentz { dim, axis: axis - 1, sign: Sign::Pos })
    }

    pub fn orthant(dim: usize, sign: Sign) -> Cone {
        Cone::Orthant { dim, sign }
    }

    pub fn dim(&self) -> usize {
        match self {
            Cone::Orthant { dim, .. } | Cone::Lorentz { dim, .. } => *dim,
            Cone::Polyhedral(p) => p.dim(),
            Cone::Product(fs) => fs.iter().map(Cone::dim).sum(),
            Cone::PowerSurface => power::DIM,
        }
    }

    /// Split `z` into the blocks of a product cone.
    pub fn split_blocks(factors: &[Cone], z: &Vector) -> Vec<Vector> {
        let mut out = Vec::with_capacity(factors.len());
        let mut off = 0;
        for f in factors {
            let d = f.dim();
            out.push(z.rows(off, d).into_owned());
            off += d;
        }
        out
    }

    fn join_blocks(parts: &[Vector]) -> Vector {
        Vector::from_iterator(parts.iter().map(|p| p.len()).sum(), parts.iter().flat_map(|p| p.iter().copied()))
    }

    pub fn contains(&self, z: &Vector) -> Result<bool> {
        self.contains_tol(z, tol::MEMBERSHIP)
    }

    pub fn contains_tol(&self, z: &Vector, tol: f64) -> Result<bool> {
        check_dim(self.dim(), z.len())?;
        let scale = 1.0 + z.norm();
        Ok(match self {
            Cone::Orthant { sign, .. } => z.iter().all(|&v| sign.factor() * v >= -tol),
            Cone::Lorentz { axis, sign, .. } => lorentz::margin(&(z * sign.factor()), *axis) >= -tol * scale,
            Cone::Polyhedral(p) => p.contains(z, tol),
            Cone::Product(fs) => {
                for (f, part) in fs.iter().zip(Self::split_blocks(fs, z)) {
                    if !f.contains_tol(&part, tol)? {
                        return Ok(false);
                    }
                }
                true
            }
            Cone::PowerSurface => {
                if z.norm() <= tol {
                    true
                } else {
                    power::phi(z)? <= tol * scale
                }
            }
        })
    }

    pub fn project(&self, u: &Vector) -> Result<Vector> {
        check_dim(self.dim(), u.len())?;
        Ok(match self {
            Cone::Orthant { sign, .. } => {
                let s = sign.factor();
                u.map(|v| if s * v > 0.0 { v } else { 0.0 })
            }
            Cone::Lorentz { axis, sign, .. } => {
                let s = sign.factor();
                lorentz::project(&(u * s), *axis) * s
            }
            Cone::Polyhedral(p) => p.project(u),
            Cone::Product(fs) => {
                let parts = fs
                    .iter()
                    .zip(Self::split_blocks(fs, u))
                    .map(|(f, part)| f.project(&part))
                    .collect::<Result<Vec<_>>>()?;
                Self::join_blocks(&parts)
            }
            Cone::PowerSurface => {
                if u.norm() == 0.0 || (u[0] > 0.0 && power::phi(u)? <= 0.0) {
                    u.clone()
                } else if power::in_polar(u, 0.0) {
                    Vector::zeros(3)
                } else {
                    power::project_to_boundary(u)?.point
                }
            }
        })
    }

    /// An element of the B-subdifferential of `P_Θ` at `u`.
    pub fn projection_jacobian(&self, u: &Vector) -> Result<Mat> {
        check_dim(self.dim(), u.len())?;
        let n = u.len();
        Ok(match self {
            Cone::Orthant { sign, .. } => {
                let s = sign.factor();
                Mat::from_diagonal(&u.map(|v| if s * v > 0.0 { 1.0 } else { 0.0 }))
            }
            Cone::Lorentz { axis, sign, .. } => lorentz::jacobian_element(&(u * sign.factor()), *axis),
            Cone::Polyhedral(p) => p.projection_jacobian(u),
            Cone::Product(fs) => {
                let blocks = fs
                    .iter()
                    .zip(Self::split_blocks(fs, u))
                    .map(|(f, part)| f.projection_jacobian(&part))
                    .collect::<Result<Vec<_>>>()?;
                block_diag(&blocks)
            }
            Cone::PowerSurface => {
                if u.norm() == 0.0 || (u[0] > 0.0 && power::phi(u)? < 0.0) {
                    Mat::identity(n, n)
                } else if power::in_polar(u, 0.0) {
                    Mat::zeros(n, n)
                } else {
                    power::projection_jacobian(&power::project_to_boundary(u)?)?
                }
            }
        })
    }

    /// Polyhedral description when one exists in closed form.
    pub fn to_polycone(&self) -> Option<PolyCone> {
        match self {
            Cone::Orthant { dim, sign } => Some(PolyCone::orthant(*dim, sign.factor())),
            Cone::Polyhedral(p) => Some(p.clone()),
            Cone::Lorentz { dim: 1, sign, .. } => Some(PolyCone::orthant(1, sign.factor())),
            Cone::Lorentz { dim: 2, axis, sign } => {
                let s = sign.factor();
                let o = 1 - axis;
                let mut r1 = Vector::zeros(2);
                let mut r2 = Vector::zeros(2);
                r1[*axis] = -s;
                r1[o] = s;
                r2[*axis] = -s;
                r2[o] = -s;
                Some(PolyCone::from_rows(2, &[r1, r2], &[]))
            }
            Cone::Lorentz { .. } | Cone::PowerSurface => None,
            Cone::Product(fs) => {
                let blocks = fs.iter().map(Cone::to_polycone).collect::<Option<Vec<_>>>()?;
                Some(PolyCone::product(&blocks))
            }
        }
    }

    pub fn is_polyhedral(&self) -> bool {
        self.to_polycone().is_some()
    }

    /// The polar cone `{w : <w, z> <= 0 for all z}`.
    pub fn polar(&self) -> Result<Cone> {
        Ok(match self {
            Cone::Orthant { dim, sign } => Cone::Orthant { dim: *dim, sign: sign.flip() },
            Cone::Lorentz { dim, axis, sign } => Cone::Lorentz { dim: *dim, axis: *axis, sign: sign.flip() },
            Cone::Polyhedral(p) => Cone::Polyhedral(p.polar().canonicalize()),
            Cone::Product(fs) => Cone::Product(fs.iter().map(Cone::polar).collect::<Result<_>>()?),
            Cone::PowerSurface => return Err(Error::Unsupported("closed-form polar of the power-surface cone".into())),
        })
    }

    /// The dual cone `{w : <w, z> >= 0 for all z}`, i.e. the negated polar.
    pub fn dual(&self) -> Result<Cone> {
        self.polar()?.negated()
    }

    pub fn negated(&self) -> Result<Cone> {
        Ok(match self {
            Cone::Orthant { dim, sign } => Cone::Orthant { dim: *dim, sign: sign.flip() },
            Cone::Lorentz { dim, axis, sign } => Cone::Lorentz { dim: *dim, axis: *axis, sign: sign.flip() },
            Cone::Polyhedral(p) => Cone::Polyhedral(p.negated()),
            Cone::Product(fs) => Cone::Product(fs.iter().map(Cone::negated).collect::<Result<_>>()?),
            Cone::PowerSurface => return Err(Error::Unsupported("reflection of the power-surface cone".into())),
        })
    }

    /// Classify `z` for a Lorentz or power-surface cone. `z` must be a member.
    pub fn region(&self, z: &Vector) -> Result<Region> {
        let scale = 1.0 + z.norm();
        match self {
            Cone::Lorentz { axis, sign, .. } => {
                let s = sign.factor();
                let w = z * s;
                if w.norm() <= tol::MEMBERSHIP {
                    Ok(Region::Vertex)
                } else if lorentz::margin(&w, *axis) > tol::MEMBERSHIP * scale || w.len() == 1 {
                    Ok(Region::Interior)
                } else {
                    let (_, grad, hess) = lorentz::boundary_derivatives(&w, *axis);
                    // psi(s w) composed with the reflection.
                    Ok(Region::Smooth { grad: grad * s, hess })
                }
            }
            Cone::PowerSurface => {
                if z.norm() <= tol::MEMBERSHIP {
                    Ok(Region::Vertex)
                } else if power::phi(z)? < -tol::MEMBERSHIP * scale {
                    Ok(Region::Interior)
                } else {
                    Ok(Region::Smooth { grad: power::grad_phi(z)?, hess: power::hess_phi(z)? })
                }
            }
            _ => Err(Error::Unsupported("region classification of a polyhedral cone".into())),
        }
    }

    /// Tangent cone `T_Θ(z)`.
    pub fn tangent_cone(&self, z: &Vector) -> Result<Cone> {
        if !self.contains(z)? {
            return Err(Error::NotMember);
        }
        let dim = self.dim();
        Ok(match self {
            Cone::Orthant { sign, .. } => {
                let s = sign.factor();
                let rows: Vec<Vector> = (0..dim)
                    .filter(|&i| s * z[i] <= tol::MEMBERSHIP)
                    .map(|i| {
                        let mut r = Vector::zeros(dim);
                        r[i] = -s;
                        r
                    })
                    .collect();
                Cone::Polyhedral(PolyCone::from_rows(dim, &rows, &[]))
            }
            Cone::Polyhedral(p) => {
                let scale = 1.0 + z.norm();
                let rows: Vec<Vector> =
                    p.ineq_rows().into_iter().filter(|a| a.dot(z) >= -tol::MEMBERSHIP * scale).collect();
                Cone::Polyhedral(PolyCone::from_rows(dim, &rows, &p.eq_rows()))
            }
            Cone::Product(fs) => Cone::Product(
                fs.iter()
                    .zip(Self::split_blocks(fs, z))
                    .map(|(f, part)| f.tangent_cone(&part))
                    .collect::<Result<_>>()?,
            ),
            Cone::Lorentz { .. } | Cone::PowerSurface => match self.region(z)? {
                Region::Vertex => self.clone(),
                Region::Interior => Cone::Polyhedral(PolyCone::full(dim)),
                Region::Smooth { grad, .. } => Cone::Polyhedral(PolyCone::halfspace(&grad)),
            },
        })
    }

    /// Normal cone `N_Θ(z)`, the polar of the tangent cone.
    pub fn normal_cone(&self, z: &Vector) -> Result<Cone> {
        self.tangent_cone(z)?.polar()
    }

    /// Orthonormal basis (columns) of the lineality space.
    pub fn lineality(&self) -> Result<Mat> {
        Ok(match self {
            Cone::Orthant { dim, .. } | Cone::Lorentz { dim, .. } => Mat::zeros(*dim, 0),
            Cone::Polyhedral(p) => p.lineality_basis(),
            Cone::Product(fs) => block_diag(&fs.iter().map(Cone::lineality).collect::<Result<Vec<_>>>()?),
            Cone::PowerSurface => Mat::zeros(3, 0),
        })
    }

    /// Is `w` in the polar cone (to tolerance)?
    pub fn polar_contains(&self, w: &Vector, tol: f64) -> Result<bool> {
        check_dim(self.dim(), w.len())?;
        match self {
            Cone::PowerSurface => Ok(power::in_polar(w, tol)),
            Cone::Product(fs) => {
                for (f, part) in fs.iter().zip(Self::split_blocks(fs, w)) {
                    if !f.polar_contains(&part, tol)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Cone::Polyhedral(p) => Ok(p.polar_contains(w, tol)),
            _ => self.polar()?.contains_tol(w, tol),
        }
    }

    /// Does `b` lie in `N_Θ(z)`?
    pub fn is_normal(&self, z: &Vector, b: &Vector) -> Result<bool> {
        check_dim(self.dim(), b.len())?;
        match self.tangent_cone(z)? {
            Cone::PowerSurface => Ok(power::in_polar(b, tol::MEMBERSHIP)),
            t => t.polar_contains(b, tol::MEMBERSHIP),
        }
    }
}

/// Serialized form of a cone, shared by problem files and reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", deny_unknown_fields)]
pub enum ConeSpec {
    Orthant {
        dim: usize,
        #[serde(default)]
        sign: Sign,
    },
    Lorentz {
        dim: usize,
        #[serde(default = "one")]
        axis: usize,
        #[serde(default)]
        sign: Sign,
    },
    Polyhedral {
        dim: usize,
        #[serde(default)]
        rows: Vec<Vec<f64>>,
        #[serde(default, rename = "eqRows")]
        eq_rows: Vec<Vec<f64>>,
    },
    Free {
        dim: usize,
    },
    Product {
        factors: Vec<ConeSpec>,
    },
    PowerSurface,
}

fn one() -> usize {
    1
}

impl TryFrom<ConeSpec> for Cone {
    type Error = Error;

    fn try_from(spec: ConeSpec) -> Result<Cone> {
        Ok(match spec {
            ConeSpec::Orthant { dim, sign } => {
                if dim == 0 {
                    return Err(Error::InvalidInput("orthant dimension must be positive".into()));
                }
                Cone::Orthant { dim, sign }
            }
            ConeSpec::Lorentz { dim, axis, sign } => {
                let mut c = Cone::lorentz(dim, axis)?;
                if let Cone::Lorentz { sign: s, .. } = &mut c {
                    *s = sign;
                }
                c
            }
            ConeSpec::Polyhedral { dim, rows, eq_rows } => {
                let to_vecs = |rs: &[Vec<f64>]| -> Result<Vec<Vector>> {
                    rs.iter()
                        .map(|r| {
                            check_dim(dim, r.len())?;
                            Ok(vector(r))
                        })
                        .collect()
                };
                Cone::Polyhedral(PolyCone::new(dim, rows_to_mat(&to_vecs(&rows)?, dim), rows_to_mat(&to_vecs(&eq_rows)?, dim)))
            }
            ConeSpec::Free { dim } => Cone::Polyhedral(PolyCone::full(dim)),
            ConeSpec::Product { factors } => {
                if factors.is_empty() {
                    return Err(Error::InvalidInput("product cone needs at least one factor".into()));
                }
                Cone::Product(factors.into_iter().map(Cone::try_from).collect::<Result<_>>()?)
            }
            ConeSpec::PowerSurface => Cone::PowerSurface,
        })
    }
}

impl From<&Cone> for ConeSpec {
    fn from(c: &Cone) -> ConeSpec {
        match c {
            Cone::Orthant { dim, sign } => ConeSpec::Orthant { dim: *dim, sign: *sign },
            Cone::Lorentz { dim, axis, sign } => ConeSpec::Lorentz { dim: *dim, axis: axis + 1, sign: *sign },
            Cone::Polyhedral(p) => {
                let nested = |m: &Mat| -> Vec<Vec<f64>> {
                    (0..m.nrows()).map(|i| m.row(i).iter().map(|&v| crate::polycone::clean_value(v)).collect()).collect()
                };
                ConeSpec::Polyhedral { dim: p.dim(), rows: nested(p.ineq()), eq_rows: nested(p.eq()) }
            }
            Cone::Product(fs) => ConeSpec::Product { factors: fs.iter().map(ConeSpec::from).collect() },
            Cone::PowerSurface => ConeSpec::PowerSurface,
        }
    }
}

impl Serialize for Cone {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ConeSpec::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Cone {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Cone::try_from(ConeSpec::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q3(axis: usize) -> Cone {
        Cone::lorentz(3, axis).unwrap()
    }

    #[test]
    fn lorentz_membership() {
        assert!(q3(1).contains(&vector(&[1.0, 0.0, 0.0])).unwrap());
        assert!(!q3(1).contains(&vector(&[1.0, 2.0, 0.0])).unwrap());
        assert!(q3(3).contains(&vector(&[1.0, 0.0, 1.0])).unwrap());
    }

    #[test]
    fn power_surface_membership() {
        assert!(Cone::PowerSurface.contains(&vector(&[1.0, 1.0, 1.0])).unwrap());
        assert!(Cone::PowerSurface.contains(&Vector::zeros(3)).unwrap());
        assert_eq!(Cone::PowerSurface.contains(&vector(&[0.0, 1.0, 1.0])), Err(Error::OutsideChart));
    }

    #[test]
    fn lorentz_projection_examples() {
        let q = q3(1);
        assert_eq!(q.project(&vector(&[2.0, 1.0, 0.0])).unwrap(), vector(&[2.0, 1.0, 0.0]));
        assert_eq!(q.project(&vector(&[-2.0, 0.0, 0.0])).unwrap(), Vector::zeros(3));
        let p = q.project(&vector(&[0.0, 2.0, 0.0])).unwrap();
        assert!((p - vector(&[1.0, 1.0, 0.0])).norm() < 1e-12);
    }

    #[test]
    fn lorentz_projection_against_boundary_grid() {
        // Brute force over boundary points (r, r cos t, r sin t).
        let u = vector(&[0.0, 2.0, 0.0]);
        let mut best = (f64::INFINITY, Vector::zeros(3));
        for i in 0..=400 {
            let r = 2.0 * i as f64 / 400.0;
            for j in 0..720 {
                let t = std::f64::consts::TAU * j as f64 / 720.0;
                let z = vector(&[r, r * t.cos(), r * t.sin()]);
                let d = (&z - &u).norm();
                if d < best.0 {
                    best = (d, z);
                }
            }
        }
        let p = q3(1).project(&u).unwrap();
        assert!((p - best.1).norm() < 1e-2);
    }

    #[test]
    fn reflected_lorentz_projection() {
        let q = q3(2).negated().unwrap();
        let u = vector(&[0.3, 0.1, -0.7]);
        let p = q.project(&u).unwrap();
        let expected = -q3(2).project(&-&u).unwrap();
        assert!((p - expected).norm() < 1e-14);
    }

    #[test]
    fn duals() {
        assert_eq!(q3(2).dual().unwrap(), q3(2));
        assert_eq!(Cone::orthant(3, Sign::Neg).polar().unwrap(), Cone::orthant(3, Sign::Pos));
        let prod = Cone::Product(vec![q3(1), Cone::orthant(1, Sign::Pos)]);
        assert_eq!(prod.dual().unwrap(), prod);
        assert!(Cone::PowerSurface.dual().is_err());
    }

    #[test]
    fn lorentz_self_duality_by_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let q = Cone::lorentz(4, 2).unwrap();
        for _ in 0..1000 {
            let a = Vector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            let b = Vector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            let (w, z) = (q.project(&a).unwrap(), q.project(&b).unwrap());
            assert!(w.dot(&z) >= -1e-12);
        }
    }

    #[test]
    fn tangent_cones() {
        assert_eq!(q3(1).tangent_cone(&Vector::zeros(3)).unwrap(), q3(1));
        let t = Cone::PowerSurface.tangent_cone(&vector(&[1.0, 0.0, 0.0])).unwrap();
        assert_eq!(t, Cone::Polyhedral(PolyCone::halfspace(&vector(&[0.0, 0.0, -1.0]))));
        let t = Cone::orthant(2, Sign::Neg).tangent_cone(&vector(&[0.0, -1.0])).unwrap();
        assert_eq!(t, Cone::Polyhedral(PolyCone::from_rows(2, &[vector(&[1.0, 0.0])], &[])));
        assert_eq!(q3(1).tangent_cone(&vector(&[1.0, 2.0, 0.0])), Err(Error::NotMember));
    }

    #[test]
    fn power_surface_normal_cones() {
        let n = Cone::PowerSurface.normal_cone(&vector(&[1.0, 0.0, 0.0])).unwrap().to_polycone().unwrap();
        let expected = PolyCone::ray(&vector(&[0.0, 0.0, -1.0]));
        assert!(n.same_set(&expected, 1e-9));
        let n = Cone::PowerSurface.normal_cone(&vector(&[1.0, 1.0, 1.0])).unwrap().to_polycone().unwrap();
        assert!(n.same_set(&PolyCone::ray(&vector(&[-3.0, 4.0, -1.0])), 1e-9));
    }

    #[test]
    fn interior_normal_cone_is_trivial() {
        let n = q3(1).normal_cone(&vector(&[2.0, 0.5, 0.5])).unwrap().to_polycone().unwrap();
        assert!(n.is_zero());
    }

    #[test]
    fn lineality_bases() {
        assert_eq!(q3(1).lineality().unwrap().ncols(), 0);
        let h = Cone::Polyhedral(PolyCone::halfspace(&vector(&[1.0, 1.0, 0.0])));
        let l = h.lineality().unwrap();
        assert_eq!(l.ncols(), 2);
        assert!((l.transpose() * vector(&[1.0, 1.0, 0.0])).norm() < 1e-12);
        assert_eq!(Cone::Polyhedral(PolyCone::full(3)).lineality().unwrap().ncols(), 3);
    }

    #[test]
    fn power_surface_projection_lands_on_boundary() {
        let u = vector(&[1.2, 0.9, 0.1]);
        let p = Cone::PowerSurface.project(&u).unwrap();
        assert!(power::phi(&p).unwrap().abs() < 1e-9);
        let again = Cone::PowerSurface.project(&p).unwrap();
        assert!((again - &p).norm() < 1e-9);
    }

    #[test]
    fn spec_roundtrip() {
        let json = r#"{"type":"lorentz","dim":3,"axis":3}"#;
        let c: Cone = serde_json::from_str(json).unwrap();
        assert_eq!(c, q3(3));
        assert_eq!(serde_json::to_string(&c).unwrap(), r#"{"type":"lorentz","dim":3,"axis":3,"sign":"+"}"#);
        assert!(serde_json::from_str::<Cone>(r#"{"type":"lorentz","dim":3,"axis":4}"#).is_err());
    }
}

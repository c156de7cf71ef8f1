use crate::cone::{power, Cone, Region};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{Mat, Vector};
use crate::polycone::PolyCone;
use crate::tol;

/// A scalar function with first and second derivatives.
pub trait C2Function {
    fn value(&self, z: &Vector) -> Result<f64>;
    fn grad(&self, z: &Vector) -> Result<Vector>;
    fn hess(&self, z: &Vector) -> Result<Mat>;
}

/// `phi(z) = z2^4 / z1^3 - z3` on the chart `z1 > 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct PowerPhi;

impl C2Function for PowerPhi {
    fn value(&self, z: &Vector) -> Result<f64> {
        power::phi(z)
    }
    fn grad(&self, z: &Vector) -> Result<Vector> {
        power::grad_phi(z)
    }
    fn hess(&self, z: &Vector) -> Result<Mat> {
        power::hess_phi(z)
    }
}

/// `phi''(z; h, w) = grad phi(z) w + hess phi(z)(h, h)`.
pub fn parabolic_second_derivative(phi: &dyn C2Function, z: &Vector, h: &Vector, w: &Vector) -> Result<f64> {
    check_dim(z.len(), h.len())?;
    check_dim(z.len(), w.len())?;
    Ok(phi.grad(z)?.dot(w) + h.dot(&(phi.hess(z)? * h)))
}

#[derive(Clone, Debug)]
pub enum SecondOrderTangentSet {
    /// A closed convex cone (polyhedral case and the vertex rule).
    Conic(Cone),
    /// `{w : <a, w> + offset <= 0}`.
    HalfspaceWithCurvature { a: Vector, offset: f64 },
    Product(Vec<SecondOrderTangentSet>),
}

impl SecondOrderTangentSet {
    pub fn dim(&self) -> usize {
        match self {
            SecondOrderTangentSet::Conic(c) => c.dim(),
            SecondOrderTangentSet::HalfspaceWithCurvature { a, .. } => a.len(),
            SecondOrderTangentSet::Product(ps) => ps.iter().map(|p| p.dim()).sum(),
        }
    }

    pub fn contains(&self, w: &Vector) -> Result<bool> {
        check_dim(self.dim(), w.len())?;
        match self {
            SecondOrderTangentSet::Conic(c) => c.contains(w),
            SecondOrderTangentSet::HalfspaceWithCurvature { a, offset } => {
                Ok(a.dot(w) + offset <= tol::MEMBERSHIP * (1.0 + w.norm() + offset.abs()))
            }
            SecondOrderTangentSet::Product(ps) => {
                let mut off = 0;
                for p in ps {
                    let d = p.dim();
                    if !p.contains(&w.rows(off, d).into_owned())? {
                        return Ok(false);
                    }
                    off += d;
                }
                Ok(true)
            }
        }
    }

    pub fn contains_zero(&self) -> Result<bool> {
        self.contains(&Vector::zeros(self.dim()))
    }
}

pub fn second_order_tangent_set(cone: &Cone, z: &Vector, h: &Vector) -> Result<SecondOrderTangentSet> {
    check_dim(cone.dim(), h.len())?;
    let t = cone.tangent_cone(z)?;
    if !t.contains(h)? {
        return Err(Error::NotTangent);
    }
    Ok(match cone {
        Cone::Product(fs) => SecondOrderTangentSet::Product(
            fs.iter()
                .zip(Cone::split_blocks(fs, z).iter().zip(Cone::split_blocks(fs, h)))
                .map(|(f, (zp, hp))| second_order_tangent_set(f, zp, &hp))
                .collect::<Result<_>>()?,
        ),
        // Polyhedral: T² = T_{T_Θ(z)}(h).
        Cone::Orthant { .. } | Cone::Polyhedral(_) => SecondOrderTangentSet::Conic(t.tangent_cone(h)?),
        Cone::Lorentz { .. } | Cone::PowerSurface => match cone.region(z)? {
            Region::Interior => SecondOrderTangentSet::Conic(Cone::Polyhedral(PolyCone::full(cone.dim()))),
            Region::Vertex => SecondOrderTangentSet::Conic(cone.tangent_cone(h)?),
            Region::Smooth { grad, hess } => {
                if grad.dot(h) < -tol::MEMBERSHIP * (1.0 + h.norm()) {
                    SecondOrderTangentSet::Conic(Cone::Polyhedral(PolyCone::full(cone.dim())))
                } else {
                    SecondOrderTangentSet::HalfspaceWithCurvature { offset: h.dot(&(&hess * h)), a: grad }
                }
            }
        },
    })
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::gamma::trust_radius;
use super::problem::GEProblem;
use crate::calculus::sample_normal;
use crate::error::Result;
use crate::linalg::Vector;
use crate::settings::Settings;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum ConvexityStatus {
    SampledOk,
    Fails,
}

#[derive(Clone, Debug)]
pub struct ConvexityWitness {
    pub y: Vector,
    pub h: Vector,
    pub nu: Vector,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct ConvexityVerdict {
    pub status: ConvexityStatus,
    pub samples: usize,
    pub witness: Option<ConvexityWitness>,
}

/// Sample `<∇²g(y)(h, h), ν>` over `ν` in the polar of Θ, `h` and `y` near `ȳ`;
/// a negative value is a witness.
pub fn theta_convexity_probe(problem: &GEProblem, samples: usize, settings: &Settings) -> Result<ConvexityVerdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let radius = trust_radius(problem, settings);
    let (m, l) = (problem.m(), problem.l());
    let origin = Vector::zeros(l);
    for _ in 0..samples {
        let nu = sample_normal(&problem.theta, &origin, &mut rng)?;
        let h = Vector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
        let y = &problem.ybar + Vector::from_fn(m, |_, _| rng.random_range(-1.0..1.0)) * (radius / (m as f64).sqrt());
        let value = h.dot(&(problem.g.weighted_hessian(&nu, &y)? * &h));
        if value < -1e-12 * (1.0 + nu.norm() * h.norm_squared()) {
            return Ok(ConvexityVerdict {
                status: ConvexityStatus::Fails,
                samples,
                witness: Some(ConvexityWitness { y, h, nu, value }),
            });
        }
    }
    Ok(ConvexityVerdict { status: ConvexityStatus::SampledOk, samples, witness: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::{Cone, Sign};
    use crate::geometry::polymap::{PolynomialMap, Term};
    use crate::geometry::problem::fixtures::example_6_4;
    use crate::linalg::Mat;

    #[test]
    fn linear_map_passes() {
        let g = PolynomialMap::affine(&Mat::identity(3, 3), &Vector::zeros(3));
        let f = PolynomialMap::affine(&Mat::zeros(3, 6), &Vector::zeros(3));
        let p = GEProblem::new(f, g, Cone::lorentz(3, 1).unwrap(), Vector::zeros(3), Vector::zeros(3)).unwrap();
        let v = theta_convexity_probe(&p, 200, &Settings::default()).unwrap();
        assert_eq!(v.status, ConvexityStatus::SampledOk);
    }

    #[test]
    fn example_map_fails_with_witness() {
        let v = theta_convexity_probe(&example_6_4(), 200, &Settings::default()).unwrap();
        assert_eq!(v.status, ConvexityStatus::Fails);
        let w = v.witness.unwrap();
        assert!(w.nu[2] < 0.0);
        let expected = w.nu[2] * 0.4 * (w.h[0] * w.h[0] + w.h[1] * w.h[1]);
        assert!((w.value - expected).abs() < 1e-12);
    }

    #[test]
    fn sign_of_componentwise_convex_map_decides() {
        // g(y) = (y1^2, y2^2), polar of the nonpositive orthant is the nonnegative one.
        let t = |e: [u32; 2]| Term { coeff: 1.0, exponents: e.to_vec() };
        let g = PolynomialMap::new(2, vec![vec![t([2, 0])], vec![t([0, 2])]]).unwrap();
        let f = PolynomialMap::affine(&Mat::zeros(2, 3), &Vector::zeros(2));
        let p = GEProblem::new(f.clone(), g.clone(), Cone::orthant(2, Sign::Neg), Vector::zeros(1), Vector::zeros(2))
            .unwrap();
        assert_eq!(theta_convexity_probe(&p, 200, &Settings::default()).unwrap().status, ConvexityStatus::SampledOk);
        let p = GEProblem::new(f, g, Cone::orthant(2, Sign::Pos), Vector::zeros(1), Vector::zeros(2)).unwrap();
        assert_eq!(theta_convexity_probe(&p, 200, &Settings::default()).unwrap().status, ConvexityStatus::Fails);
    }
}

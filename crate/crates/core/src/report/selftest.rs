use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::calculus::{directional_derivative_projection, extended_polyhedricity, EpStatus};
use crate::cone::{Cone, Sign};
use crate::error::Result;
use crate::fd;
use crate::geometry::{recover_multiplier, GEProblem, PolynomialMap, Term};
use crate::linalg::{vector, Vector};
use crate::polycone::PolyCone;
use crate::settings::Settings;
use crate::stability::{certify_isolated_calmness, CalmnessStatus};

const SAMPLES: usize = 50;
const FD_STEP: f64 = 1e-6;
const FD_TOL: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub samples: usize,
    pub max_error: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SelftestReport {
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

fn catalogue() -> Vec<(&'static str, Cone)> {
    let poly = PolyCone::from_rows(
        3,
        &[vector(&[1.0, 1.0, 0.0]), vector(&[-1.0, 2.0, 0.5]), vector(&[0.0, -1.0, 1.0])],
        &[],
    );
    vec![
        ("orthant", Cone::orthant(3, Sign::Pos)),
        ("orthant-neg", Cone::orthant(2, Sign::Neg)),
        ("lorentz", Cone::lorentz(3, 1).unwrap()),
        ("lorentz-axis3", Cone::lorentz(4, 3).unwrap()),
        ("polyhedral", Cone::Polyhedral(poly)),
        ("product", Cone::Product(vec![Cone::lorentz(3, 1).unwrap(), Cone::orthant(1, Sign::Pos)])),
    ]
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vector {
    Vector::from_fn(d, |_, _| StandardNormal.sample(&mut *rng))
}

fn check(name: String, samples: usize, max_error: f64, tol: f64, detail: String) -> Check {
    Check { name, passed: max_error <= tol, samples, max_error, detail }
}

fn fd_check(name: &str, cone: &Cone, rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst = 0.0_f64;
    for _ in 0..SAMPLES {
        let (u, h) = (gaussian(rng, cone.dim()), gaussian(rng, cone.dim()));
        let exact = directional_derivative_projection(cone, &u, &h)?;
        let quotient = fd::forward(|p| cone.project(p), &u, &h, FD_STEP)?;
        worst = worst.max(fd::rel_error(&quotient, &exact));
    }
    Ok(check(format!("fd/{name}"), SAMPLES, worst, FD_TOL, format!("forward difference at t = {FD_STEP:e}")))
}

fn duality_check(name: &str, cone: &Cone, rng: &mut ChaCha8Rng) -> Result<Check> {
    let polar = cone.polar()?;
    let mut worst = 0.0_f64;
    for _ in 0..SAMPLES {
        let u = gaussian(rng, cone.dim());
        let (p, q) = (cone.project(&u)?, polar.project(&u)?);
        worst = worst.max((&p + &q - &u).norm()).max(p.dot(&q).abs());
    }
    Ok(check(format!("duality/{name}"), SAMPLES, worst, 1e-9, "Moreau decomposition against the polar".into()))
}

fn homogeneity_check(name: &str, cone: &Cone, rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst = 0.0_f64;
    for _ in 0..SAMPLES {
        let (u, h) = (gaussian(rng, cone.dim()), gaussian(rng, cone.dim()));
        let d1 = directional_derivative_projection(cone, &u, &h)?;
        let d2 = directional_derivative_projection(cone, &u, &(&h * 2.0))?;
        let p1 = cone.project(&u)?;
        let p2 = cone.project(&(&u * 2.0))?;
        worst = worst.max((d2 - d1 * 2.0).norm()).max((p2 - p1 * 2.0).norm());
    }
    Ok(check(format!("homogeneity/{name}"), SAMPLES, worst, 1e-9, "P(2u) = 2 P(u) and P'(u; 2h) = 2 P'(u; h)".into()))
}

fn example_6_4() -> GEProblem {
    let t = |c: f64, e: &[u32]| Term { coeff: c, exponents: e.to_vec() };
    let g = PolynomialMap::new(
        3,
        vec![
            vec![t(1.0, &[1, 0, 0])],
            vec![t(1.0, &[0, 1, 0])],
            vec![t(1.0, &[0, 0, 1]), t(0.2, &[2, 0, 0]), t(0.2, &[0, 2, 0])],
        ],
    )
    .expect("valid map");
    let f = PolynomialMap::new(
        6,
        (0..3)
            .map(|i| {
                let mut e = vec![0; 6];
                e[i] = 1;
                vec![t(1.0, &e)]
            })
            .collect(),
    )
    .expect("valid map");
    GEProblem::new(f, g, Cone::lorentz(3, 3).expect("valid"), vector(&[-1.0, 0.0, 1.0]), Vector::zeros(3))
        .expect("valid problem")
}

fn example_checks() -> Result<Vec<Check>> {
    let p = example_6_4();
    let settings = Settings::default();
    let lambda = recover_multiplier(&p, settings.tol_kkt)?.lambda;
    let err = (lambda - vector(&[1.0, 0.0, -1.0])).amax();
    let verdict = certify_isolated_calmness(&p, &settings)?;
    let calm = verdict.status == CalmnessStatus::Certified && verdict.necessary;
    let ep_smooth = extended_polyhedricity(&Cone::PowerSurface, &vector(&[1.0, 0.0, 0.0]))?.status;
    let ep_curved = extended_polyhedricity(&Cone::PowerSurface, &vector(&[1.0, 1.0, 1.0]))?.status;
    Ok(vec![
        check("example/multiplier".into(), 1, err, 1e-9, "λ̄ = -x̄ for the Lorentz example".into()),
        Check {
            name: "example/calmness".into(),
            passed: calm,
            samples: 1,
            max_error: 0.0,
            detail: format!("status {:?}, necessary {}", verdict.status, verdict.necessary),
        },
        Check {
            name: "example/extended-polyhedricity".into(),
            passed: ep_smooth == EpStatus::Holds && ep_curved == EpStatus::Fails,
            samples: 2,
            max_error: 0.0,
            detail: format!("(1,0,0): {ep_smooth:?}, (1,1,1): {ep_curved:?}"),
        },
    ])
}

/// Finite-difference, duality, homogeneity and worked-example checks.
pub fn selftest(seed: u64) -> SelftestReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let errored = |name: String, e: crate::Error| Check { name, passed: false, samples: 0, max_error: f64::INFINITY, detail: e.to_string() };
    for (name, cone) in catalogue() {
        for (kind, run) in [
            ("fd", fd_check as fn(&str, &Cone, &mut ChaCha8Rng) -> Result<Check>),
            ("duality", duality_check),
            ("homogeneity", homogeneity_check),
        ] {
            checks.push(run(name, &cone, &mut rng).unwrap_or_else(|e| errored(format!("{kind}/{name}"), e)));
        }
    }
    match example_checks() {
        Ok(c) => checks.extend(c),
        Err(e) => checks.push(errored("example".into(), e)),
    }
    SelftestReport { seed, passed: checks.iter().all(|c| c.passed), checks }
}

use super::{enumerate_faces, inclusion_pieces, FaceDecomposition, PiecewisePolyhedralSet};
use crate::calculus::{critical_cone, pdc_check, CriticalConeResult, PdcVerdict};
use crate::error::{check_dim, Error, Result};
use crate::geometry::{
    check_nondegeneracy, directional_derivative_projection_gamma, multiplier_for, project_gamma, recover_multiplier,
    GEProblem, MultiplierResult,
};
use crate::linalg::{rank, Mat, Vector};
use crate::polycone::PolyCone;
use crate::settings::Settings;
use crate::tol;

/// `DP_Γ(ū, ȳ)(h)` with `ȳ = P_Γ(ū)`.
#[derive(Clone, Debug)]
pub struct ProjectionDerivative {
    pub y: Vector,
    pub nu: Vector,
    /// The (single) element of the derivative.
    pub value: Vector,
    /// Face pieces of the normal-cone form; present when PDC holds and the
    /// critical cone is polyhedral.
    pub pieces: Option<PiecewisePolyhedralSet>,
    pub pdc: PdcVerdict,
}

pub fn graphical_derivative_projection(
    problem: &GEProblem,
    u: &Vector,
    h: &Vector,
    settings: &Settings,
) -> Result<ProjectionDerivative> {
    check_dim(problem.m(), h.len())?;
    let proj = project_gamma(problem, u, settings)?;
    let (y, nu) = (proj.y, proj.nu);
    let z = problem.g.eval(&y)?;
    let pdc = pdc_check(&problem.theta, &z, settings.seed)?;
    let crit = critical_cone(&problem.theta, &z, &nu)?;
    if let (true, Some(k)) = (pdc.holds(), crit.polycone()) {
        let m = problem.m();
        let lhs = Mat::identity(m, m) + problem.g.weighted_hessian(&nu, &y)?;
        let jac = problem.g.jacobian(&y)?;
        let faces = enumerate_faces(&k, settings.face_cap)?;
        let set = inclusion_pieces(&lhs, &jac, &faces, h);
        if let Some((_, value)) = set.element(settings.tol_membership) {
            return Ok(ProjectionDerivative { y, nu, value, pieces: Some(set), pdc });
        }
    }
    let d = directional_derivative_projection_gamma(problem, u, h, settings)?;
    Ok(ProjectionDerivative { y, nu, value: d.v1, pieces: None, pdc })
}

/// `DN̂_Γ(ȳ, w̄)(v) = (sum ν̄_i ∇²g_i(ȳ)) v + ∇g(ȳ)^T N_K̄(∇g(ȳ) v)`.
#[derive(Clone, Debug)]
pub struct NormalConeDerivative {
    pub nu: Vector,
    pub offset: Vector,
    /// `None` when `∇g(ȳ) v` is outside the critical cone (empty value).
    pub cone: Option<PolyCone>,
    pub critical_cone: PolyCone,
}

impl NormalConeDerivative {
    pub fn contains(&self, s: &Vector, tol: f64) -> bool {
        match &self.cone {
            Some(c) => c.contains(&(s - &self.offset), tol),
            None => false,
        }
    }
}

pub fn graphical_derivative_normal_cone(
    problem: &GEProblem,
    w: &Vector,
    v: &Vector,
    settings: &Settings,
) -> Result<NormalConeDerivative> {
    check_dim(problem.m(), v.len())?;
    let y = &problem.ybar;
    let mult = multiplier_for(problem, y, w, settings.tol_kkt).map_err(|e| match e {
        Error::NoMultiplier { .. } | Error::NormalityViolation => Error::NotNormal,
        e => e,
    })?;
    let z = problem.check_feasible()?;
    if !pdc_check(&problem.theta, &z, settings.seed)?.holds() {
        return Err(Error::PdcUnavailable);
    }
    let k = critical_cone(&problem.theta, &z, &mult.lambda)?.polycone().ok_or(Error::NonPolyhedralCriticalCone)?;
    let offset = problem.g.weighted_hessian(&mult.lambda, y)? * v;
    let jac = problem.g.jacobian(y)?;
    let p = &jac * v;
    let cone = k.contains(&p, settings.tol_membership).then(|| {
        let scale = settings.tol_membership * (1.0 + p.norm());
        let rays: Vec<Vector> =
            k.ineq_rows().into_iter().filter(|a| a.dot(&p) >= -scale).map(|a| jac.transpose() * a).collect();
        let lines: Vec<Vector> = k.eq_rows().into_iter().map(|b| jac.transpose() * b).collect();
        PolyCone::from_generators(problem.m(), &rays, &lines)
    });
    Ok(NormalConeDerivative { nu: mult.lambda, offset, cone, critical_cone: k })
}

/// Data at the reference point shared by the solution-map derivative and the
/// calmness test.
#[derive(Clone, Debug)]
pub struct Reference {
    pub zbar: Vector,
    pub multiplier: MultiplierResult,
    pub pdc: PdcVerdict,
    pub critical: CriticalConeResult,
    /// `∇_y L(x̄, ȳ, λ̄)`.
    pub lagrangian: Mat,
    pub jac_g: Mat,
    /// `∇_x f(x̄, ȳ)`.
    pub fx: Mat,
    /// `rank ∇_x f(x̄, ȳ) = m`.
    pub surjective: bool,
}

impl Reference {
    pub fn new(problem: &GEProblem, settings: &Settings) -> Result<Self> {
        let nd = check_nondegeneracy(problem)?;
        if !nd.holds {
            return Err(Error::AssumptionsUnverified(format!(
                "nondegeneracy: rank {} < {}",
                nd.rank, nd.required
            )));
        }
        let zbar = problem.check_feasible()?;
        let multiplier = recover_multiplier(problem, settings.tol_kkt)?;
        let pdc = pdc_check(&problem.theta, &zbar, settings.seed)?;
        let critical = critical_cone(&problem.theta, &zbar, &multiplier.lambda)?;
        let lagrangian = problem.lagrangian_y(&multiplier.lambda)?;
        let jac_g = problem.g.jacobian(&problem.ybar)?;
        let (fx, _) = problem.f_jacobians(&problem.xbar, &problem.ybar)?;
        let surjective = rank(&fx, tol::RANK) == problem.m();
        Ok(Self { zbar, multiplier, pdc, critical, lagrangian, jac_g, fx, surjective })
    }
}

/// The right-hand side of the solution-map inclusion at `u`.
#[derive(Clone, Debug)]
pub struct SolutionMapDerivative {
    pub set: PiecewisePolyhedralSet,
    pub faces: FaceDecomposition,
    /// The inclusion is an equality (`∇_x f` surjective and PDC available).
    pub equality: bool,
    pub pdc_holds: bool,
}

pub(crate) fn solution_map_at(
    reference: &Reference,
    u: &Vector,
    face_cap: usize,
) -> Result<SolutionMapDerivative> {
    check_dim(reference.fx.ncols(), u.len())?;
    let k = reference.critical.polycone().ok_or(Error::NonPolyhedralCriticalCone)?;
    let faces = enumerate_faces(&k, face_cap)?;
    let rhs = -(&reference.fx * u);
    let set = inclusion_pieces(&reference.lagrangian, &reference.jac_g, &faces, &rhs);
    let pdc_holds = reference.pdc.holds();
    Ok(SolutionMapDerivative { set, faces, equality: reference.surjective && pdc_holds, pdc_holds })
}

/// `DS(x̄, ȳ)(u) ⊂ {v : 0 ∈ ∇_x f u + ∇_y L v + ∇g^T N_K̂(∇g v)}`.
pub fn graphical_derivative_solution_map(
    problem: &GEProblem,
    u: &Vector,
    settings: &Settings,
) -> Result<SolutionMapDerivative> {
    solution_map_at(&Reference::new(problem, settings)?, u, settings.face_cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::{Cone, Sign};
    use crate::geometry::problem::fixtures::example_6_4;
    use crate::geometry::PolynomialMap;
    use crate::linalg::vector;

    #[test]
    fn example_solution_map_at_zero_is_trivial() {
        let p = example_6_4();
        let ds = graphical_derivative_solution_map(&p, &Vector::zeros(3), &Settings::default()).unwrap();
        assert_eq!(ds.faces.faces.len(), 2);
        assert!(ds.equality);
        assert!(ds.set.is_trivial(1e-9));
    }

    #[test]
    fn example_solution_map_pieces_at_e3() {
        let p = example_6_4();
        let u = vector(&[0.0, 0.0, 1.0]);
        let ds = graphical_derivative_solution_map(&p, &u, &Settings::default()).unwrap();
        // Face {0}: v = 0 needs -u = ∇g^T μ, μ ∈ K̂° = {a1 + a3 <= 0}: (0, 0, -1) works.
        assert!(ds.set.contains(&Vector::zeros(3), 1e-9));
        // On the ray, v = s (1, 0, 1) needs u + ∇_y L v = (-0.4 s, 0, 1) ⊥ (1, 0, 1).
        assert!(ds.set.contains(&vector(&[2.5, 0.0, 2.5]), 1e-9));
        assert!(!ds.set.contains(&vector(&[1.0, 0.0, 1.0]), 1e-9));
        assert!(!ds.set.contains(&vector(&[0.0, 1.0, 0.0]), 1e-9));
    }

    #[test]
    fn unconstrained_case_reduces_to_linear_system() {
        let a = Mat::from_row_slice(2, 4, &[1.0, 0.0, 2.0, 0.0, 0.0, 1.0, 0.0, 3.0]);
        let f = PolynomialMap::affine(&a, &Vector::zeros(2));
        let g = PolynomialMap::affine(&Mat::identity(2, 2), &Vector::zeros(2));
        let theta = Cone::Polyhedral(PolyCone::full(2));
        let p = GEProblem::new(f, g, theta, Vector::zeros(2), Vector::zeros(2)).unwrap();
        let u = vector(&[1.0, -3.0]);
        let ds = graphical_derivative_solution_map(&p, &u, &Settings::default()).unwrap();
        assert!(ds.set.contains(&vector(&[-0.5, 1.0]), 1e-9));
        assert!(!ds.set.contains(&vector(&[0.5, 1.0]), 1e-9));
    }

    #[test]
    fn projection_derivative_reduces_to_critical_projection() {
        let g = PolynomialMap::affine(&Mat::identity(2, 2), &Vector::zeros(2));
        let f = PolynomialMap::affine(&Mat::zeros(2, 3), &Vector::zeros(2));
        let p = GEProblem::new(f, g, Cone::orthant(2, Sign::Pos), Vector::zeros(1), Vector::zeros(2)).unwrap();
        let h = vector(&[-1.0, 2.0]);
        let d = graphical_derivative_projection(&p, &Vector::zeros(2), &h, &Settings::default()).unwrap();
        assert!((d.value - vector(&[0.0, 2.0])).norm() < 1e-9);
        let d = graphical_derivative_projection(&p, &Vector::zeros(2), &Vector::zeros(2), &Settings::default()).unwrap();
        assert!(d.value.norm() < 1e-12);
    }

    #[test]
    fn example_projection_derivative_matches_forward_difference() {
        let p = example_6_4();
        let s = Settings::default();
        for h in [vector(&[0.2, 0.1, -1.0]), vector(&[1.0, 0.0, 1.0]), vector(&[0.0, 1.0, 0.0])] {
            let d = graphical_derivative_projection(&p, &p.ybar, &h, &s).unwrap();
            let q = crate::fd::forward(|u| Ok(project_gamma(&p, u, &s)?.y), &p.ybar, &h, 1e-6).unwrap();
            assert!(crate::fd::rel_error(&d.value, &q) < 1e-4);
        }
    }

    #[test]
    fn normal_cone_derivative_structure_and_scaling() {
        let p = example_6_4();
        let s = Settings::default();
        let w = vector(&[1.0, 0.0, -1.0]);
        let v = vector(&[1.0, 0.0, 1.0]);
        let d = graphical_derivative_normal_cone(&p, &w, &v, &s).unwrap();
        assert!((d.offset.clone() - vector(&[-0.4, 0.0, 0.0])).norm() < 1e-12);
        let c = d.cone.clone().unwrap();
        assert!(c.contains(&vector(&[1.0, 0.0, -1.0]), 1e-9));
        assert!(c.contains(&vector(&[0.0, 5.0, 0.0]), 1e-9));
        assert!(!c.contains(&vector(&[1.0, 0.0, 0.0]), 1e-9));
        assert!(d.contains(&(&d.offset + vector(&[0.0, 1.0, 0.0])), 1e-9));
        // Off the critical cone the value is empty.
        let off = graphical_derivative_normal_cone(&p, &w, &vector(&[1.0, 0.0, 0.0]), &s).unwrap();
        assert!(off.cone.is_none());
        for theta in [2.0, 10.0] {
            let scaled = graphical_derivative_normal_cone(&p, &(&w * theta), &v, &s).unwrap();
            assert!((&scaled.offset - &d.offset * theta).norm() < 1e-12);
            assert!(scaled.critical_cone.same_set(&d.critical_cone, 1e-9));
        }
        let zero = graphical_derivative_normal_cone(&p, &w, &Vector::zeros(3), &s).unwrap();
        assert!(zero.contains(&Vector::zeros(3), 1e-9));
    }
}

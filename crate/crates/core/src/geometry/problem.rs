use super::polymap::PolynomialMap;
use crate::cone::Cone;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{hstack, lstsq, null_space, rank, singular_values, Mat, Vector, DEFAULT_RANK_TOL};
use crate::tol;

/// The generalized equation `0 ∈ f(x, y) + N̂_Γ(y)`, `Γ = g^{-1}(Θ)`, with its reference point.
#[derive(Clone, Debug)]
pub struct GEProblem {
    /// `f : R^n x R^m -> R^m`, variables ordered `(x, y)`.
    pub f: PolynomialMap,
    pub g: PolynomialMap,
    pub theta: Cone,
    pub xbar: Vector,
    pub ybar: Vector,
}

impl GEProblem {
    pub fn new(f: PolynomialMap, g: PolynomialMap, theta: Cone, xbar: Vector, ybar: Vector) -> Result<Self> {
        let (n, m) = (xbar.len(), ybar.len());
        check_dim(n + m, f.in_dim())?;
        check_dim(m, f.out_dim())?;
        check_dim(m, g.in_dim())?;
        check_dim(theta.dim(), g.out_dim())?;
        Ok(Self { f, g, theta, xbar, ybar })
    }

    pub fn n(&self) -> usize {
        self.xbar.len()
    }

    pub fn m(&self) -> usize {
        self.ybar.len()
    }

    pub fn l(&self) -> usize {
        self.theta.dim()
    }

    fn join(x: &Vector, y: &Vector) -> Vector {
        Vector::from_iterator(x.len() + y.len(), x.iter().chain(y.iter()).copied())
    }

    pub fn f_at(&self, x: &Vector, y: &Vector) -> Result<Vector> {
        self.f.eval(&Self::join(x, y))
    }

    /// `(∇_x f, ∇_y f)` at `(x, y)`.
    pub fn f_jacobians(&self, x: &Vector, y: &Vector) -> Result<(Mat, Mat)> {
        let j = self.f.jacobian(&Self::join(x, y))?;
        let n = self.n();
        Ok((j.columns(0, n).into_owned(), j.columns(n, self.m()).into_owned()))
    }

    pub fn zbar(&self) -> Result<Vector> {
        self.g.eval(&self.ybar)
    }

    /// `g(ȳ)`, or `Infeasible` when it is not in Θ.
    pub fn check_feasible(&self) -> Result<Vector> {
        let z = self.zbar()?;
        match self.theta.contains(&z) {
            Ok(true) => Ok(z),
            Ok(false) | Err(Error::OutsideChart) => Err(Error::Infeasible),
            Err(e) => Err(e),
        }
    }

    /// `∇_y L(x̄, ȳ, λ) = ∇_y f(x̄, ȳ) + sum_i λ_i ∇²g_i(ȳ)`.
    pub fn lagrangian_y(&self, lambda: &Vector) -> Result<Mat> {
        let (_, fy) = self.f_jacobians(&self.xbar, &self.ybar)?;
        Ok(fy + self.g.weighted_hessian(lambda, &self.ybar)?)
    }

    /// Orthonormal basis of `lin T_Θ(z)`.
    pub fn tangent_lineality(&self, z: &Vector) -> Result<Mat> {
        self.theta.tangent_cone(z)?.lineality()
    }
}

#[derive(Clone, Debug)]
pub struct NondegeneracyReport {
    pub holds: bool,
    pub rank: usize,
    pub required: usize,
    pub lineality_dim: usize,
    pub smallest_singular_value: f64,
}

/// `∇g(ȳ) R^m + lin T_Θ(g(ȳ)) = R^l`, decided by the rank of `[∇g(ȳ) | basis]`.
pub fn check_nondegeneracy(problem: &GEProblem) -> Result<NondegeneracyReport> {
    let z = problem.check_feasible()?;
    let lin = problem.tangent_lineality(&z)?;
    let jg = problem.g.jacobian(&problem.ybar)?;
    let stacked = hstack(&jg, &lin);
    let r = rank(&stacked, tol::RANK);
    let sv = singular_values(&stacked);
    let l = problem.l();
    Ok(NondegeneracyReport {
        holds: r == l,
        rank: r,
        required: l,
        lineality_dim: lin.ncols(),
        smallest_singular_value: if sv.len() >= l { sv[l - 1] } else { 0.0 },
    })
}

#[derive(Clone, Debug)]
pub struct MultiplierResult {
    pub lambda: Vector,
    pub residual: f64,
    pub unique: bool,
}

/// Solve `∇g(y)^T λ = w` with `λ ∈ N_Θ(g(y))`.
///
/// Normals to Θ at `g(y)` are orthogonal to `lin T_Θ(g(y))`, so the least-squares
/// problem is posed on that complement; under nondegeneracy it has a unique solution.
pub fn multiplier_for(problem: &GEProblem, y: &Vector, w: &Vector, tol_kkt: f64) -> Result<MultiplierResult> {
    check_dim(problem.m(), y.len())?;
    check_dim(problem.m(), w.len())?;
    let z = problem.g.eval(y)?;
    if !problem.theta.contains(&z)? {
        return Err(Error::Infeasible);
    }
    let lin = problem.tangent_lineality(&z)?;
    let l = problem.l();
    let basis = if lin.ncols() == 0 { Mat::identity(l, l) } else { null_space(&lin.transpose(), DEFAULT_RANK_TOL) };
    let a = problem.g.jacobian(y)?.transpose() * &basis;
    let coef = lstsq(&a, w);
    let lambda = (&basis * coef).map(|v| if v.abs() < 1e-15 { 0.0 } else { v });
    let residual = (problem.g.jacobian(y)?.transpose() * &lambda - w).norm();
    if residual > tol_kkt * (1.0 + w.norm()) {
        return Err(Error::NoMultiplier { residual });
    }
    if !problem.theta.is_normal(&z, &lambda)? {
        return Err(Error::NormalityViolation);
    }
    let unique = basis.ncols() == 0 || rank(&a, tol::RANK) == basis.ncols();
    Ok(MultiplierResult { lambda, residual, unique })
}

/// The multiplier `λ̄` with `f(x̄, ȳ) + ∇g(ȳ)^T λ̄ = 0`.
pub fn recover_multiplier(problem: &GEProblem, tol_kkt: f64) -> Result<MultiplierResult> {
    let f = problem.f_at(&problem.xbar, &problem.ybar)?;
    multiplier_for(problem, &problem.ybar, &-f, tol_kkt)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::geometry::polymap::Term;
    use crate::linalg::vector;

    fn t(c: f64, e: &[u32]) -> Term {
        Term { coeff: c, exponents: e.to_vec() }
    }

    /// `f = x`, `g = (y1, y2, y3 + 0.2 (y1^2 + y2^2))`, Θ the Lorentz cone around the third axis.
    pub fn example_6_4() -> GEProblem {
        let f = PolynomialMap::new(
            6,
            vec![vec![t(1.0, &[1, 0, 0, 0, 0, 0])], vec![t(1.0, &[0, 1, 0, 0, 0, 0])], vec![t(1.0, &[0, 0, 1, 0, 0, 0])]],
        )
        .unwrap();
        let g = PolynomialMap::new(
            3,
            vec![
                vec![t(1.0, &[1, 0, 0])],
                vec![t(1.0, &[0, 1, 0])],
                vec![t(1.0, &[0, 0, 1]), t(0.2, &[2, 0, 0]), t(0.2, &[0, 2, 0])],
            ],
        )
        .unwrap();
        GEProblem::new(f, g, Cone::lorentz(3, 3).unwrap(), vector(&[-1.0, 0.0, 1.0]), Vector::zeros(3)).unwrap()
    }
}

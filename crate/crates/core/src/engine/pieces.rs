use serde::Serialize;

use crate::linalg::{cols_to_mat, cone_fit, null_space, rows_to_mat, Mat, Vector, DEFAULT_RANK_TOL};

/// `{v : ∃ w, E (v, w) = e, C v <= 0, w_i >= 0 for masked i}`.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Piece {
    /// Face of the critical cone this piece comes from.
    pub face: usize,
    pub aux_dim: usize,
    pub nonneg: Vec<bool>,
    #[serde(serialize_with = "ser_mat")]
    pub eq_lhs: Mat,
    #[serde(serialize_with = "ser_vec")]
    pub eq_rhs: Vector,
    #[serde(serialize_with = "ser_mat")]
    pub v_ineq: Mat,
}

pub(crate) fn ser_mat<S: serde::Serializer>(m: &Mat, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
    serde::Serialize::serialize(&rows, s)
}

pub(crate) fn ser_vec<S: serde::Serializer>(v: &Vector, s: S) -> std::result::Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&v.iter().copied().collect::<Vec<f64>>(), s)
}

impl Piece {
    pub fn dim(&self) -> usize {
        self.eq_lhs.ncols() - self.aux_dim
    }

    fn eq_v(&self) -> Mat {
        self.eq_lhs.columns(0, self.dim()).into_owned()
    }

    fn eq_w(&self) -> Mat {
        self.eq_lhs.columns(self.dim(), self.aux_dim).into_owned()
    }

    fn split_aux(&self, w_cols: &Mat) -> (Mat, Mat, Vec<usize>, Vec<usize>) {
        let pos: Vec<usize> = (0..self.aux_dim).filter(|&j| self.nonneg[j]).collect();
        let free: Vec<usize> = (0..self.aux_dim).filter(|&j| !self.nonneg[j]).collect();
        let pick = |idx: &[usize]| cols_to_mat(&idx.iter().map(|&j| w_cols.column(j).into_owned()).collect::<Vec<_>>(), w_cols.nrows());
        (pick(&pos), pick(&free), pos, free)
    }

    /// Auxiliary variables certifying `v`, with the equation residual.
    pub fn certificate(&self, v: &Vector, tol: f64) -> Option<(Vector, f64)> {
        let scale = 1.0 + v.norm() + self.eq_rhs.norm();
        if self.v_ineq.nrows() > 0 && (&self.v_ineq * v).iter().any(|&x| x > tol * scale) {
            return None;
        }
        let target = &self.eq_rhs - self.eq_v() * v;
        let (cone, lin, pos, free) = self.split_aux(&self.eq_w());
        let fit = cone_fit(&target, &cone, &lin);
        let res = fit.distance();
        if res > tol * scale {
            return None;
        }
        let mut w = Vector::zeros(self.aux_dim);
        for (k, &j) in pos.iter().enumerate() {
            w[j] = fit.cone_coef[k];
        }
        for (k, &j) in free.iter().enumerate() {
            w[j] = fit.lin_coef[k];
        }
        Some((w, res))
    }

    pub fn contains(&self, v: &Vector, tol: f64) -> bool {
        self.certificate(v, tol).is_some()
    }

    /// Some element `(v, w)`, found by fitting the right-hand side over the
    /// generators of the variable cone (with slacks for `C v <= 0`).
    pub fn feasible_point(&self, tol: f64) -> Option<(Vector, Vector)> {
        let m = self.dim();
        let k = self.v_ineq.nrows();
        let r = self.eq_lhs.nrows();
        let nvar = m + self.aux_dim + k;
        let mut big = Mat::zeros(r + k, nvar);
        big.view_mut((0, 0), (r, m + self.aux_dim)).copy_from(&self.eq_lhs);
        if k > 0 {
            big.view_mut((r, 0), (k, m)).copy_from(&self.v_ineq);
            big.view_mut((r, m + self.aux_dim), (k, k)).copy_from(&Mat::identity(k, k));
        }
        let mut target = Vector::zeros(r + k);
        target.rows_mut(0, r).copy_from(&self.eq_rhs);
        let nonneg = |j: usize| j >= m && (j >= m + self.aux_dim || self.nonneg[j - m]);
        let pos: Vec<usize> = (0..nvar).filter(|&j| nonneg(j)).collect();
        let free: Vec<usize> = (0..nvar).filter(|&j| !nonneg(j)).collect();
        let pick = |idx: &[usize]| cols_to_mat(&idx.iter().map(|&j| big.column(j).into_owned()).collect::<Vec<_>>(), r + k);
        let fit = cone_fit(&target, &pick(&pos), &pick(&free));
        if fit.distance() > tol * (1.0 + target.norm()) {
            return None;
        }
        let mut x = Vector::zeros(nvar);
        for (i, &j) in pos.iter().enumerate() {
            x[j] = fit.cone_coef[i];
        }
        for (i, &j) in free.iter().enumerate() {
            x[j] = fit.lin_coef[i];
        }
        Some((x.rows(0, m).into_owned(), x.rows(m, self.aux_dim).into_owned()))
    }

    /// A unit vector of the (homogeneous) piece other than zero, if any.
    ///
    /// With `P` the lifted cone in `(v, w)`, `e` lies in the polar of the
    /// projection onto `v` iff `(e, 0)` lies in the polar of `P`; the Moreau
    /// remainder of `(±e_i, 0)` is an element of `P` with nonzero `v` part.
    pub fn nonzero_element(&self, tol: f64) -> Option<Vector> {
        let m = self.dim();
        let n = m + self.aux_dim;
        let mut ineq: Vec<Vector> = (0..self.v_ineq.nrows())
            .map(|i| {
                let mut r = Vector::zeros(n);
                r.rows_mut(0, m).copy_from(&self.v_ineq.row(i).transpose());
                r
            })
            .collect();
        for j in 0..self.aux_dim {
            if self.nonneg[j] {
                let mut r = Vector::zeros(n);
                r[m + j] = -1.0;
                ineq.push(r);
            }
        }
        let cone = cols_to_mat(&ineq, n);
        let lin = self.eq_lhs.transpose();
        let v_eq: Vec<Vector> = (0..self.eq_lhs.nrows())
            .filter(|&i| self.eq_lhs.row(i).columns(m, self.aux_dim).norm() == 0.0)
            .map(|i| self.eq_lhs.row(i).columns(0, m).transpose())
            .collect();
        let v_kernel = if v_eq.is_empty() { Mat::identity(m, m) } else { null_space(&rows_to_mat(&v_eq, m), DEFAULT_RANK_TOL) };
        for i in 0..m {
            for s in [1.0, -1.0] {
                let mut e = Vector::zeros(n);
                e[i] = s;
                let fit = cone_fit(&e, &cone, &lin);
                if fit.distance() <= 1e-7 {
                    continue;
                }
                let v = fit.residual.rows(0, m).into_owned();
                let v = &v_kernel * (v_kernel.transpose() * v);
                let norm = v.norm();
                if norm <= 1e-9 {
                    continue;
                }
                let v = v / norm;
                if self.contains(&v, tol) {
                    return Some(v);
                }
            }
        }
        None
    }
}

/// A finite union of polyhedral pieces in `R^dim`.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PiecewisePolyhedralSet {
    pub dim: usize,
    pub pieces: Vec<Piece>,
}

impl PiecewisePolyhedralSet {
    pub fn contains(&self, v: &Vector, tol: f64) -> bool {
        self.pieces.iter().any(|p| p.contains(v, tol))
    }

    pub fn is_homogeneous(&self) -> bool {
        self.pieces.iter().all(|p| p.eq_rhs.norm() == 0.0)
    }

    /// Some element, with the index of its piece.
    pub fn element(&self, tol: f64) -> Option<(usize, Vector)> {
        self.pieces.iter().enumerate().find_map(|(i, p)| p.feasible_point(tol).map(|(v, _)| (i, v)))
    }

    pub fn is_empty(&self, tol: f64) -> bool {
        self.element(tol).is_none()
    }

    /// A unit vector of the set with its piece index; `None` means the set is `{0}`.
    pub fn nontrivial_element(&self, tol: f64) -> Option<(usize, Vector)> {
        self.pieces.iter().enumerate().find_map(|(i, p)| p.nonzero_element(tol).map(|v| (i, v)))
    }

    /// Is the set exactly `{0}`?
    pub fn is_trivial(&self, tol: f64) -> bool {
        self.is_homogeneous() && self.nontrivial_element(tol).is_none()
    }
}

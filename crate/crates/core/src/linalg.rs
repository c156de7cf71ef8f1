//! Small dense linear algebra used throughout the crate.
//!
//! Everything here works on `nalgebra` dynamic matrices; problem sizes are
//! desk scale (a few dozen rows at most), so SVD-based rank decisions are
//! affordable everywhere.

use nalgebra::{DMatrix, DVector};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative singular-value cutoff used when none is supplied.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

pub fn vector(values: &[f64]) -> Vector {
    Vector::from_column_slice(values)
}

/// Stack row vectors into a matrix with `cols` columns (works for zero rows).
pub fn rows_to_mat(rows: &[Vector], cols: usize) -> Mat {
    let mut m = Mat::zeros(rows.len(), cols);
    for (i, r) in rows.iter().enumerate() {
        m.set_row(i, &r.transpose());
    }
    m
}

/// Use vectors as the columns of a matrix with `dim` rows.
pub fn cols_to_mat(cols: &[Vector], dim: usize) -> Mat {
    let mut m = Mat::zeros(dim, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}

pub fn mat_rows(m: &Mat) -> Vec<Vector> {
    (0..m.nrows()).map(|i| m.row(i).transpose()).collect()
}

pub fn vstack(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.ncols(), b.ncols());
    let mut m = Mat::zeros(a.nrows() + b.nrows(), a.ncols());
    m.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    m.view_mut((a.nrows(), 0), (b.nrows(), b.ncols())).copy_from(b);
    m
}

pub fn hstack(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.nrows(), b.nrows());
    let mut m = Mat::zeros(a.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    m.view_mut((0, a.ncols()), (b.nrows(), b.ncols())).copy_from(b);
    m
}

pub fn block_diag(blocks: &[Mat]) -> Mat {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut m = Mat::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        m.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    m
}

/// Singular values of `m`, padded with zeros to `min(rows, cols)`.
pub fn singular_values(m: &Mat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Numerical rank with cutoff `rel_tol * sigma_max`.
pub fn rank(m: &Mat, rel_tol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        None => 0,
        Some(&smax) if smax <= f64::MIN_POSITIVE => 0,
        Some(&smax) => s.iter().filter(|&&v| v > rel_tol * smax).count(),
    }
}

/// Orthonormal basis (as columns) of the kernel of `m`.
pub fn null_space(m: &Mat, rel_tol: f64) -> Mat {
    let n = m.ncols();
    if n == 0 {
        return Mat::zeros(0, 0);
    }
    if m.nrows() == 0 || m.norm() <= f64::MIN_POSITIVE {
        return Mat::identity(n, n);
    }
    // Pad to a square (or tall) matrix so the SVD returns a full V.
    let padded = if m.nrows() < n { vstack(m, &Mat::zeros(n - m.nrows(), n)) } else { m.clone() };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.max();
    let cut = rel_tol * smax;
    let cols: Vec<Vector> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= cut)
        .map(|i| v_t.row(i).transpose())
        .collect();
    cols_to_mat(&cols, n)
}

/// Orthonormal basis (as columns) of the column space of `m`.
pub fn range_basis(m: &Mat, rel_tol: f64) -> Mat {
    let d = m.nrows();
    if m.ncols() == 0 || d == 0 || m.norm() <= f64::MIN_POSITIVE {
        return Mat::zeros(d, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.max();
    let cols: Vec<Vector> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > rel_tol * smax)
        .map(|i| u.column(i).into_owned())
        .collect();
    cols_to_mat(&cols, d)
}

/// Minimum-norm least-squares solution of `a x = b`.
pub fn lstsq(a: &Mat, b: &Vector) -> Vector {
    if a.ncols() == 0 {
        return Vector::zeros(0);
    }
    if a.nrows() == 0 || a.norm() <= f64::MIN_POSITIVE {
        return Vector::zeros(a.ncols());
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    svd.solve(b, DEFAULT_RANK_TOL * smax).expect("U and V^T were computed")
}

/// Solve a square system, falling back to least squares when singular.
pub fn solve_square(a: &Mat, b: &Vector) -> Vector {
    if let Some(x) = a.clone().lu().solve(b) {
        if x.iter().all(|v| v.is_finite()) {
            return x;
        }
    }
    lstsq(a, b)
}

/// Lawson–Hanson non-negative least squares: `min ||a x - b||` subject to `x >= 0`.
pub fn nnls(a: &Mat, b: &Vector) -> Vector {
    let n = a.ncols();
    if n == 0 {
        return Vector::zeros(0);
    }
    // Work with unit columns for scale invariance; zero columns are dropped.
    let norms: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    let mut scaled = a.clone();
    for (j, &nj) in norms.iter().enumerate() {
        if nj > 0.0 {
            scaled.column_mut(j).scale_mut(1.0 / nj);
        }
    }
    let usable: Vec<bool> = norms.iter().map(|&v| v > 1e-300).collect();
    let tol = 1e-13 * (1.0 + b.norm()) * (n.max(a.nrows()) as f64);

    let mut x = Vector::zeros(n);
    let mut passive = vec![false; n];
    let max_outer = 3 * n + 10;
    for _ in 0..max_outer {
        let w = scaled.transpose() * (b - &scaled * &x);
        let candidate = (0..n)
            .filter(|&j| usable[j] && !passive[j])
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else { break };
        if w[j] <= tol {
            break;
        }
        passive[j] = true;
        for _ in 0..(3 * n + 10) {
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let sub = scaled.select_columns(&idx);
            let s_sub = lstsq(&sub, b);
            if s_sub.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (k, &col) in idx.iter().enumerate() {
                    x[col] = s_sub[k];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (k, &col) in idx.iter().enumerate() {
                if s_sub[k] <= 0.0 {
                    let denom = x[col] - s_sub[k];
                    if denom > 0.0 {
                        alpha = alpha.min(x[col] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            for (k, &col) in idx.iter().enumerate() {
                x[col] += alpha * (s_sub[k] - x[col]);
            }
            let mut dropped = false;
            for &col in &idx {
                if x[col] <= 1e-15 {
                    x[col] = 0.0;
                    passive[col] = false;
                    dropped = true;
                }
            }
            if !dropped {
                break;
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    for j in 0..n {
        if norms[j] > 0.0 {
            x[j] /= norms[j];
        } else {
            x[j] = 0.0;
        }
    }
    x
}

/// Best approximation of a target by `cone_gens * alpha + lin_gens * beta`, `alpha >= 0`.
#[derive(Debug, Clone)]
pub struct ConeFit {
    pub cone_coef: Vector,
    pub lin_coef: Vector,
    pub fitted: Vector,
    pub residual: Vector,
}

impl ConeFit {
    pub fn distance(&self) -> f64 {
        self.residual.norm()
    }
}

/// Project `target` onto the finitely generated cone `cone(C) + span(L)`.
///
/// Generators are the columns of `cone_gens` and `lin_gens`.  The free part is
/// eliminated by projecting onto `span(L)^perp`, then NNLS handles the rest.
pub fn cone_fit(target: &Vector, cone_gens: &Mat, lin_gens: &Mat) -> ConeFit {
    let d = target.len();
    let lin_basis = range_basis(lin_gens, DEFAULT_RANK_TOL);
    let project_out = |v: &Vector| -> Vector {
        if lin_basis.ncols() == 0 {
            v.clone()
        } else {
            v - &lin_basis * (lin_basis.transpose() * v)
        }
    };
    let qc = if cone_gens.ncols() == 0 {
        Mat::zeros(d, 0)
    } else {
        let mut m = cone_gens.clone();
        for j in 0..m.ncols() {
            let c = project_out(&m.column(j).into_owned());
            m.set_column(j, &c);
        }
        m
    };
    let qt = project_out(target);
    let alpha = nnls(&qc, &qt);
    let cone_part = if cone_gens.ncols() == 0 { Vector::zeros(d) } else { cone_gens * &alpha };
    let rest = target - &cone_part;
    let beta = if lin_gens.ncols() == 0 { Vector::zeros(0) } else { lstsq(lin_gens, &rest) };
    let lin_part = if lin_gens.ncols() == 0 { Vector::zeros(d) } else { lin_gens * &beta };
    let fitted = cone_part + lin_part;
    let residual = target - &fitted;
    ConeFit { cone_coef: alpha, lin_coef: beta, fitted, residual }
}

/// Orthogonal projector onto the kernel of `m` (an `n x n` matrix).
pub fn kernel_projector(m: &Mat, n: usize) -> Mat {
    if m.nrows() == 0 {
        return Mat::identity(n, n);
    }
    let k = null_space(m, DEFAULT_RANK_TOL);
    if k.ncols() == 0 {
        Mat::zeros(n, n)
    } else {
        &k * k.transpose()
    }
}

/// Reduced row echelon form with unit-norm rows and positive pivots.
///
/// The row space is what matters; for equal row spaces the output is identical
/// up to rounding, which makes it usable as a canonical equality block.
pub fn canonical_row_basis(m: &Mat, tol: f64) -> Mat {
    let cols = m.ncols();
    if m.nrows() == 0 {
        return Mat::zeros(0, cols);
    }
    let mut a = m.clone();
    for i in 0..a.nrows() {
        let n = a.row(i).norm();
        if n > 0.0 {
            a.row_mut(i).scale_mut(1.0 / n);
        }
    }
    let mut pivot_row = 0;
    for c in 0..cols {
        if pivot_row >= a.nrows() {
            break;
        }
        let (best, val) = (pivot_row..a.nrows())
            .map(|r| (r, a[(r, c)].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if val <= tol {
            for r in pivot_row..a.nrows() {
                a[(r, c)] = 0.0;
            }
            continue;
        }
        a.swap_rows(pivot_row, best);
        let p = a[(pivot_row, c)];
        a.row_mut(pivot_row).scale_mut(1.0 / p);
        for r in 0..a.nrows() {
            if r != pivot_row {
                let f = a[(r, c)];
                if f != 0.0 {
                    let pr = a.row(pivot_row).into_owned();
                    let mut row = a.row_mut(r);
                    row -= pr * f;
                }
            }
        }
        pivot_row += 1;
    }
    let mut out = a.rows(0, pivot_row).into_owned();
    for i in 0..out.nrows() {
        for v in out.row_mut(i).iter_mut() {
            if v.abs() <= tol {
                *v = 0.0;
            }
        }
        let n = out.row(i).norm();
        if n > 0.0 {
            out.row_mut(i).scale_mut(1.0 / n);
        }
    }
    out
}

pub fn max_abs(v: &Vector) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_wide_matrix() {
        let m = Mat::from_row_slice(1, 3, &[1.0, 0.0, 1.0]);
        let k = null_space(&m, 1e-12);
        assert_eq!(k.ncols(), 2);
        assert!((&m * &k).norm() < 1e-12);
    }

    #[test]
    fn nnls_matches_subset_enumeration() {
        // Brute force: try every support set, keep the best feasible least-squares fit.
        let a = Mat::from_row_slice(3, 4, &[1.0, 0.5, -1.0, 0.2, 0.0, 1.0, 0.3, -0.7, 0.4, -0.2, 1.0, 1.0]);
        let b = vector(&[0.3, -1.2, 0.8]);
        let x = nnls(&a, &b);
        assert!(x.iter().all(|&v| v >= 0.0));
        let mut best = f64::INFINITY;
        for mask in 0u32..16 {
            let idx: Vec<usize> = (0..4).filter(|j| mask & (1 << j) != 0).collect();
            let sub = a.select_columns(&idx);
            let s = lstsq(&sub, &b);
            if s.iter().all(|&v| v >= -1e-12) {
                let r = (&sub * &s - &b).norm();
                best = best.min(r);
            }
        }
        assert!(((&a * &x - &b).norm() - best).abs() < 1e-10);
    }

    #[test]
    fn cone_fit_with_free_generators() {
        // cone{(1,0,0)} + span{(0,1,0)}; target (-1, 2, 3) -> fit (0, 2, 0).
        let c = Mat::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let l = Mat::from_column_slice(3, 1, &[0.0, 1.0, 0.0]);
        let fit = cone_fit(&vector(&[-1.0, 2.0, 3.0]), &c, &l);
        assert!((fit.fitted - vector(&[0.0, 2.0, 0.0])).norm() < 1e-12);
    }

    #[test]
    fn canonical_rows_ignore_scaling() {
        let a = Mat::from_row_slice(2, 3, &[1.0, 0.0, -1.0, 0.0, 2.0, 0.0]);
        let b = Mat::from_row_slice(2, 3, &[0.0, -5.0, 0.0, 3.0, 1.0, -3.0]);
        let ca = canonical_row_basis(&a, 1e-12);
        let cb = canonical_row_basis(&b, 1e-12);
        assert!((ca - cb).norm() < 1e-12);
    }
}

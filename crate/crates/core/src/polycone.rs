//! Finitely represented convex cones `{z : A z <= 0, B z = 0}`.

use serde::{Deserialize, Serialize};

use crate::linalg::{
    canonical_row_basis, cols_to_mat, cone_fit, kernel_projector, mat_rows, null_space, range_basis,
    rows_to_mat, vstack, Mat, Vector, DEFAULT_RANK_TOL,
};

/// Tolerance for structural decisions (implicit equalities, redundancy).
const STRUCT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct PolyCone {
    dim: usize,
    ineq: Mat,
    eq: Mat,
}

impl PolyCone {
    pub fn new(dim: usize, ineq: Mat, eq: Mat) -> Self {
        assert_eq!(ineq.ncols(), dim, "inequality rows must have {dim} columns");
        assert_eq!(eq.ncols(), dim, "equality rows must have {dim} columns");
        Self { dim, ineq, eq }
    }

    pub fn from_rows(dim: usize, ineq: &[Vector], eq: &[Vector]) -> Self {
        Self::new(dim, rows_to_mat(ineq, dim), rows_to_mat(eq, dim))
    }

    /// The whole space.
    pub fn full(dim: usize) -> Self {
        Self::new(dim, Mat::zeros(0, dim), Mat::zeros(0, dim))
    }

    /// The trivial cone `{0}`.
    pub fn zero(dim: usize) -> Self {
        Self::new(dim, Mat::zeros(0, dim), Mat::identity(dim, dim))
    }

    /// `{z : <a, z> <= 0}`.
    pub fn halfspace(a: &Vector) -> Self {
        Self::from_rows(a.len(), std::slice::from_ref(a), &[])
    }

    /// `{z : <a, z> = 0}`.
    pub fn hyperplane(a: &Vector) -> Self {
        Self::from_rows(a.len(), &[], std::slice::from_ref(a))
    }

    /// The half-line `R_+ d`.
    pub fn ray(d: &Vector) -> Self {
        let dim = d.len();
        let row = rows_to_mat(std::slice::from_ref(d), dim);
        let perp = null_space(&row, DEFAULT_RANK_TOL);
        Self::new(dim, rows_to_mat(&[-d.clone()], dim), perp.transpose())
    }

    /// Non-negative orthant scaled by `sign` (+1 or -1).
    pub fn orthant(dim: usize, sign: f64) -> Self {
        Self::new(dim, Mat::identity(dim, dim) * (-sign), Mat::zeros(0, dim))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ineq(&self) -> &Mat {
        &self.ineq
    }

    pub fn eq(&self) -> &Mat {
        &self.eq
    }

    pub fn ineq_rows(&self) -> Vec<Vector> {
        mat_rows(&self.ineq)
    }

    pub fn eq_rows(&self) -> Vec<Vector> {
        mat_rows(&self.eq)
    }

    pub fn contains(&self, z: &Vector, tol: f64) -> bool {
        debug_assert_eq!(z.len(), self.dim);
        let scale = 1.0 + z.norm();
        (0..self.ineq.nrows()).all(|i| self.ineq.row(i).dot(&z.transpose()) <= tol * scale)
            && (0..self.eq.nrows()).all(|i| self.eq.row(i).dot(&z.transpose()).abs() <= tol * scale)
    }

    /// Largest constraint violation at `z` (zero inside).
    pub fn violation(&self, z: &Vector) -> f64 {
        let a = (0..self.ineq.nrows()).map(|i| self.ineq.row(i).dot(&z.transpose()).max(0.0));
        let b = (0..self.eq.nrows()).map(|i| self.eq.row(i).dot(&z.transpose()).abs());
        a.chain(b).fold(0.0, f64::max)
    }

    /// Best fit of `w` by the generators of the polar cone `cone(A^T) + span(B^T)`.
    pub fn polar_fit(&self, w: &Vector) -> crate::linalg::ConeFit {
        cone_fit(w, &self.ineq.transpose(), &self.eq.transpose())
    }

    /// Membership in the polar cone `{w : <w, z> <= 0 for all z in K}`.
    pub fn polar_contains(&self, w: &Vector, tol: f64) -> bool {
        self.polar_fit(w).distance() <= tol * (1.0 + w.norm())
    }

    /// Metric projection onto the cone (Moreau: `h - P_{K°}(h)`).
    pub fn project(&self, h: &Vector) -> Vector {
        h - self.polar_fit(h).fitted
    }

    /// Projector onto the subspace on which the projection is locally linear at `h`.
    ///
    /// This is an element of the B-subdifferential of the projection at `h`.
    pub fn projection_jacobian(&self, h: &Vector) -> Mat {
        let fit = self.polar_fit(h);
        let scale = 1e-10 * (1.0 + h.norm());
        let active: Vec<Vector> = (0..self.ineq.nrows())
            .filter(|&i| fit.cone_coef[i] > scale)
            .map(|i| self.ineq.row(i).transpose())
            .collect();
        let mut rows = active;
        rows.extend(self.eq_rows());
        kernel_projector(&rows_to_mat(&rows, self.dim), self.dim)
    }

    pub fn polar(&self) -> PolyCone {
        PolyCone::from_generators(self.dim, &self.ineq_rows(), &self.eq_rows())
    }

    /// Generators `(rays, lines)` with `K = cone(rays) + span(lines)`, read off the
    /// canonical H-form of the polar.
    pub fn generators(&self) -> (Vec<Vector>, Vec<Vector>) {
        let polar = self.polar().canonicalize();
        (polar.ineq_rows(), polar.eq_rows())
    }

    /// Dual cone `{w : <w, z> >= 0 for all z in K}`.
    pub fn dual(&self) -> PolyCone {
        self.polar().negated()
    }

    pub fn negated(&self) -> PolyCone {
        PolyCone::new(self.dim, -&self.ineq, self.eq.clone())
    }

    /// Orthonormal basis (columns) of the lineality space `ker [A; B]`.
    pub fn lineality_basis(&self) -> Mat {
        let all = vstack(&self.ineq, &self.eq);
        if all.nrows() == 0 {
            return Mat::identity(self.dim, self.dim);
        }
        null_space(&all, DEFAULT_RANK_TOL)
    }

    pub fn intersect(&self, other: &PolyCone) -> PolyCone {
        assert_eq!(self.dim, other.dim);
        PolyCone::new(self.dim, vstack(&self.ineq, &other.ineq), vstack(&self.eq, &other.eq))
    }

    pub fn intersect_hyperplane(&self, b: &Vector) -> PolyCone {
        self.intersect(&PolyCone::hyperplane(b))
    }

    /// Cartesian product of cones in consecutive coordinate blocks.
    pub fn product(blocks: &[PolyCone]) -> PolyCone {
        let dim = blocks.iter().map(|b| b.dim).sum();
        let mut ineq_rows = Vec::new();
        let mut eq_rows = Vec::new();
        let mut offset = 0;
        for b in blocks {
            for r in b.ineq_rows() {
                let mut full = Vector::zeros(dim);
                full.rows_mut(offset, b.dim).copy_from(&r);
                ineq_rows.push(full);
            }
            for r in b.eq_rows() {
                let mut full = Vector::zeros(dim);
                full.rows_mut(offset, b.dim).copy_from(&r);
                eq_rows.push(full);
            }
            offset += b.dim;
        }
        PolyCone::from_rows(dim, &ineq_rows, &eq_rows)
    }

    /// Indices of inequality rows that vanish identically on the cone.
    pub fn implicit_equalities(&self) -> Vec<usize> {
        (0..self.ineq.nrows())
            .filter(|&i| {
                let a = self.ineq.row(i).transpose();
                a.norm() > 0.0 && self.polar_contains(&(-a), STRUCT_TOL)
            })
            .collect()
    }

    /// Dimension of the linear hull of the cone.
    pub fn hull_dim(&self) -> usize {
        let mut rows = self.eq_rows();
        for i in self.implicit_equalities() {
            rows.push(self.ineq.row(i).transpose());
        }
        if rows.is_empty() {
            return self.dim;
        }
        null_space(&rows_to_mat(&rows, self.dim), DEFAULT_RANK_TOL).ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.hull_dim() == 0
    }

    /// Deterministic minimal representation: implicit equalities promoted,
    /// equality block in canonical echelon form, inequality rows unit-norm,
    /// deduplicated, non-redundant and sorted.
    pub fn canonicalize(&self) -> PolyCone {
        let mut eq_rows = self.eq_rows();
        let mut ineq_rows = self.ineq_rows();
        loop {
            let eq = canonical_row_basis(&rows_to_mat(&eq_rows, self.dim), STRUCT_TOL);
            let eq_basis = range_basis(&eq.transpose(), DEFAULT_RANK_TOL);
            let mut cleaned: Vec<Vector> = Vec::new();
            for a in &ineq_rows {
                let mut a = a.clone();
                if eq_basis.ncols() > 0 {
                    a -= &eq_basis * (eq_basis.transpose() * &a);
                }
                let n = a.norm();
                if n <= STRUCT_TOL {
                    continue;
                }
                a /= n;
                if !cleaned.iter().any(|c| (c - &a).norm() <= STRUCT_TOL) {
                    cleaned.push(a);
                }
            }
            let candidate = PolyCone::new(self.dim, rows_to_mat(&cleaned, self.dim), eq.clone());
            let implicit = candidate.implicit_equalities();
            if implicit.is_empty() {
                let mut kept: Vec<Vector> = cleaned.clone();
                // Drop rows implied by the others.
                let mut i = 0;
                while i < kept.len() {
                    let others: Vec<Vector> =
                        kept.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, r)| r.clone()).collect();
                    let fit = cone_fit(&kept[i], &cols_to_mat(&others, self.dim), &eq.transpose());
                    if fit.distance() <= STRUCT_TOL {
                        kept.remove(i);
                    } else {
                        i += 1;
                    }
                }
                let mut kept: Vec<Vector> = kept.into_iter().map(clean_vector).collect();
                kept.sort_by(lex_cmp);
                let eq = clean_matrix(eq);
                return PolyCone::new(self.dim, rows_to_mat(&kept, self.dim), eq);
            }
            eq_rows = mat_rows(&eq);
            for &i in &implicit {
                eq_rows.push(cleaned[i].clone());
            }
            ineq_rows = cleaned.into_iter().enumerate().filter(|(i, _)| !implicit.contains(i)).map(|(_, r)| r).collect();
        }
    }

    /// `self ⊆ other`, decided through polar membership of `other`'s rows.
    pub fn is_subset_of(&self, other: &PolyCone, tol: f64) -> bool {
        other.ineq_rows().iter().all(|a| self.polar_contains(a, tol))
            && other.eq_rows().iter().all(|b| self.polar_contains(b, tol) && self.polar_contains(&(-b), tol))
    }

    pub fn same_set(&self, other: &PolyCone, tol: f64) -> bool {
        self.dim == other.dim && self.is_subset_of(other, tol) && other.is_subset_of(self, tol)
    }

    /// Convert `cone(rays) + span(lines)` into an H-representation.
    ///
    /// Facets are found by brute force: every facet of a cone of dimension `k`
    /// with lineality dimension `p` contains `k - p - 1` linearly independent
    /// rays, so all such subsets are tried.  Fine at desk scale.
    pub fn from_generators(dim: usize, rays: &[Vector], lines: &[Vector]) -> PolyCone {
        let rays: Vec<Vector> = rays.iter().filter(|r| r.norm() > STRUCT_TOL).map(|r| r / r.norm()).collect();
        let lines: Vec<Vector> = lines.iter().filter(|r| r.norm() > STRUCT_TOL).cloned().collect();
        let mut all = rays.clone();
        all.extend(lines.iter().cloned());
        if all.is_empty() {
            return PolyCone::zero(dim);
        }
        let span = range_basis(&cols_to_mat(&all, dim), DEFAULT_RANK_TOL);
        let eq = null_space(&span.transpose(), DEFAULT_RANK_TOL).transpose();
        let k = span.ncols();
        let to_local = |v: &Vector| -> Vector { span.transpose() * v };

        let lin_local = range_basis(&cols_to_mat(&lines.iter().map(to_local).collect::<Vec<_>>(), k), DEFAULT_RANK_TOL);
        let p = lin_local.ncols();
        let strip = |v: Vector| -> Vector {
            if p == 0 {
                v
            } else {
                &v - &lin_local * (lin_local.transpose() * &v)
            }
        };
        let mut quotient: Vec<Vector> = Vec::new();
        for r in &rays {
            let q = strip(to_local(r));
            let n = q.norm();
            if n > STRUCT_TOL && !quotient.iter().any(|e| (e - &(&q / n)).norm() <= STRUCT_TOL) {
                quotient.push(q / n);
            }
        }
        // Rays whose negatives are also generated make the cone contain more lines.
        let extra_lines: Vec<Vector> = quotient
            .iter()
            .filter(|q| {
                let fit = cone_fit(&(-(*q).clone()), &cols_to_mat(&quotient, k), &Mat::zeros(k, 0));
                fit.distance() <= STRUCT_TOL
            })
            .cloned()
            .collect();
        if !extra_lines.is_empty() {
            let mut new_lines = lines.clone();
            new_lines.extend(extra_lines.iter().map(|q| &span * q));
            let new_rays: Vec<Vector> = rays.clone();
            // Recurse once with enlarged lineality; terminates because p grows.
            if range_basis(&cols_to_mat(&new_lines, dim), DEFAULT_RANK_TOL).ncols() > lines_rank(&lines, dim) {
                return PolyCone::from_generators(dim, &new_rays, &new_lines);
            }
        }

        let facet_size = k.saturating_sub(p + 1);
        let mut facets: Vec<Vector> = Vec::new();
        if k > p {
            for combo in combinations(quotient.len(), facet_size) {
                let mut rows: Vec<Vector> = combo.iter().map(|&i| quotient[i].clone()).collect();
                for j in 0..p {
                    rows.push(lin_local.column(j).into_owned());
                }
                let ns = if rows.is_empty() {
                    Mat::identity(k, k)
                } else {
                    null_space(&rows_to_mat(&rows, k), 1e-9)
                };
                if ns.ncols() != 1 {
                    continue;
                }
                let mut a = ns.column(0).into_owned();
                let dots: Vec<f64> = quotient.iter().map(|q| q.dot(&a)).collect();
                let pos = dots.iter().any(|&d| d > STRUCT_TOL);
                let neg = dots.iter().any(|&d| d < -STRUCT_TOL);
                if pos && neg {
                    continue;
                }
                if pos {
                    a = -a;
                }
                if !pos && !neg {
                    continue;
                }
                if !facets.iter().any(|f| (f - &a).norm() <= 1e-8) {
                    facets.push(a);
                }
            }
        }
        let ineq: Vec<Vector> = facets.iter().map(|a| &span * a).collect();
        PolyCone::new(dim, rows_to_mat(&ineq, dim), eq).canonicalize()
    }
}

fn lines_rank(lines: &[Vector], dim: usize) -> usize {
    if lines.is_empty() {
        0
    } else {
        range_basis(&cols_to_mat(lines, dim), DEFAULT_RANK_TOL).ncols()
    }
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// Snap a canonical (unit-scale) coefficient to a 1e-12 grid so that
/// representations of the same set compare equal.
pub(crate) fn clean_value(v: f64) -> f64 {
    let r = (v * 1e12).round() / 1e12;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn clean_vector(v: Vector) -> Vector {
    v.map(clean_value)
}

fn clean_matrix(m: Mat) -> Mat {
    m.map(clean_value)
}

fn lex_cmp(a: &Vector, b: &Vector) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let (rx, ry) = ((x * 1e9).round(), (y * 1e9).round());
        match rx.total_cmp(&ry) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct PolyConeRepr {
    ambient_dim: usize,
    ineq_rows: Vec<Vec<f64>>,
    eq_rows: Vec<Vec<f64>>,
}

fn mat_to_nested(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().map(|&v| clean_value(v) + 0.0).collect()).collect()
}

impl Serialize for PolyCone {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PolyConeRepr { ambient_dim: self.dim, ineq_rows: mat_to_nested(&self.ineq), eq_rows: mat_to_nested(&self.eq) }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PolyCone {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = PolyConeRepr::deserialize(d)?;
        let to_rows = |rows: &[Vec<f64>]| -> Result<Vec<Vector>, D::Error> {
            rows.iter()
                .map(|row| {
                    if row.len() != r.ambient_dim {
                        Err(serde::de::Error::custom(format!(
                            "row has {} entries, expected {}",
                            row.len(),
                            r.ambient_dim
                        )))
                    } else {
                        Ok(Vector::from_column_slice(row))
                    }
                })
                .collect()
        };
        let ineq = to_rows(&r.ineq_rows)?;
        let eq = to_rows(&r.eq_rows)?;
        Ok(PolyCone::from_rows(r.ambient_dim, &ineq, &eq))
    }
}

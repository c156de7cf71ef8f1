use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::linalg::{null_space, rows_to_mat, Mat, Vector, DEFAULT_RANK_TOL};
use crate::polycone::PolyCone;
use crate::tol;

/// A face of `{z : A z <= 0, B z = 0}`, identified by the rows of `A` that vanish on it.
#[derive(Clone, Debug)]
pub struct Face {
    pub active: Vec<usize>,
    pub dim: usize,
    /// Orthonormal basis (columns) of the linear hull of the face.
    pub span: Mat,
    /// The face itself as a cone.
    pub closure: PolyCone,
    /// Generators of the normal cone on the relative interior: active rows of `A`.
    pub normal_rays: Vec<Vector>,
    /// Rows of `B`.
    pub normal_lines: Vec<Vector>,
}

impl Face {
    pub fn normal_cone(&self) -> PolyCone {
        PolyCone::from_generators(self.closure.dim(), &self.normal_rays, &self.normal_lines)
    }
}

#[derive(Clone, Debug)]
pub struct FaceDecomposition {
    pub base: PolyCone,
    /// Sorted by dimension, largest first.
    pub faces: Vec<Face>,
}

impl FaceDecomposition {
    /// Index of the face whose relative interior contains `p`.
    pub fn face_of(&self, p: &Vector) -> Option<usize> {
        if !self.base.contains(p, tol::MEMBERSHIP) {
            return None;
        }
        let scale = tol::MEMBERSHIP * (1.0 + p.norm());
        let a = self.base.ineq();
        let active: Vec<usize> = (0..a.nrows()).filter(|&i| a.row(i).dot(&p.transpose()) >= -scale).collect();
        self.faces.iter().position(|f| f.active == active)
    }
}

fn face_cone(k: &PolyCone, active: &BTreeSet<usize>) -> PolyCone {
    let a = k.ineq_rows();
    let mut eq = k.eq_rows();
    let mut ineq = Vec::new();
    for (i, r) in a.into_iter().enumerate() {
        if active.contains(&i) {
            eq.push(r);
        } else {
            ineq.push(r);
        }
    }
    PolyCone::from_rows(k.dim(), &ineq, &eq)
}

/// Add every inequality row that vanishes on the face cut out by `active`.
fn close(k: &PolyCone, active: BTreeSet<usize>) -> BTreeSet<usize> {
    let fc = face_cone(k, &active);
    let others: Vec<usize> = (0..k.ineq().nrows()).filter(|i| !active.contains(i)).collect();
    let mut out = active;
    for j in fc.implicit_equalities() {
        out.insert(others[j]);
    }
    out
}

/// All faces of a polyhedral cone, by breadth-first search over closed active sets.
pub fn enumerate_faces(k: &PolyCone, cap: usize) -> Result<FaceDecomposition> {
    let dim = k.dim();
    let n_rows = k.ineq().nrows();
    let rows = k.ineq_rows();
    let start = close(k, BTreeSet::new());
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(start.iter().copied().collect());
    queue.push_back(start);
    let mut faces = Vec::new();
    while let Some(active) = queue.pop_front() {
        let closure = face_cone(k, &active);
        let mut hull_rows = k.eq_rows();
        hull_rows.extend(active.iter().map(|&i| rows[i].clone()));
        let span = if hull_rows.is_empty() {
            Mat::identity(dim, dim)
        } else {
            null_space(&rows_to_mat(&hull_rows, dim), DEFAULT_RANK_TOL)
        };
        faces.push(Face {
            active: active.iter().copied().collect(),
            dim: span.ncols(),
            span,
            closure,
            normal_rays: active.iter().map(|&i| rows[i].clone()).collect(),
            normal_lines: k.eq_rows(),
        });
        if faces.len() > cap {
            return Err(Error::TooLarge { cap });
        }
        for i in 0..n_rows {
            if active.contains(&i) {
                continue;
            }
            let mut next = active.clone();
            next.insert(i);
            let next = close(k, next);
            let key: Vec<usize> = next.iter().copied().collect();
            if seen.insert(key) {
                queue.push_back(next);
            }
        }
    }
    faces.sort_by(|a, b| b.dim.cmp(&a.dim).then_with(|| a.active.cmp(&b.active)));
    Ok(FaceDecomposition { base: k.clone(), faces })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;

    #[test]
    fn ray_has_two_faces() {
        let d = enumerate_faces(&PolyCone::ray(&vector(&[1.0, 0.0, 1.0])), 4096).unwrap();
        let dims: Vec<usize> = d.faces.iter().map(|f| f.dim).collect();
        assert_eq!(dims, vec![1, 0]);
    }

    #[test]
    fn plane_has_one_face() {
        let d = enumerate_faces(&PolyCone::full(2), 4096).unwrap();
        assert_eq!(d.faces.len(), 1);
        assert_eq!(d.faces[0].dim, 2);
    }

    #[test]
    fn quadrant_has_four_faces() {
        let d = enumerate_faces(&PolyCone::orthant(2, 1.0), 4096).unwrap();
        let dims: Vec<usize> = d.faces.iter().map(|f| f.dim).collect();
        assert_eq!(dims, vec![2, 1, 1, 0]);
        assert_eq!(d.face_of(&vector(&[0.0, 3.0])), Some(1));
        assert_eq!(d.face_of(&vector(&[1.0, 3.0])), Some(0));
        assert_eq!(d.face_of(&vector(&[-1.0, 3.0])), None);
    }

    #[test]
    fn orthant_face_count_is_two_to_the_n() {
        let d = enumerate_faces(&PolyCone::orthant(5, -1.0), 4096).unwrap();
        assert_eq!(d.faces.len(), 32);
        assert!(enumerate_faces(&PolyCone::orthant(5, -1.0), 10).is_err());
    }

    #[test]
    fn redundant_rows_do_not_duplicate_faces() {
        let rows = [vector(&[-1.0, 0.0]), vector(&[0.0, -1.0]), vector(&[-1.0, -1.0])];
        let d = enumerate_faces(&PolyCone::from_rows(2, &rows, &[]), 4096).unwrap();
        assert_eq!(d.faces.len(), 4);
        assert_eq!(d.faces.last().unwrap().active, vec![0, 1, 2]);
    }

    #[test]
    fn normal_cone_on_an_edge() {
        let d = enumerate_faces(&PolyCone::orthant(2, 1.0), 4096).unwrap();
        let edge = &d.faces[d.face_of(&vector(&[0.0, 1.0])).unwrap()];
        let n = edge.normal_cone();
        assert!(n.contains(&vector(&[-2.0, 0.0]), 1e-9));
        assert!(!n.contains(&vector(&[-2.0, 0.1]), 1e-9));
    }
}

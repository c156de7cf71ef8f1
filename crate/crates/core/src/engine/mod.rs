//! Graphical derivatives of `P_Γ`, `N̂_Γ` and the solution map, as unions of
//! polyhedral pieces indexed by the faces of a critical cone.

mod derivatives;
mod faces;
mod pieces;

pub use derivatives::{
    graphical_derivative_normal_cone, graphical_derivative_projection, graphical_derivative_solution_map,
    NormalConeDerivative, ProjectionDerivative, Reference, SolutionMapDerivative,
};
pub use faces::{enumerate_faces, Face, FaceDecomposition};
pub use pieces::{Piece, PiecewisePolyhedralSet};
pub(crate) use derivatives::solution_map_at;
pub(crate) use pieces::ser_vec;

use crate::linalg::{Mat, Vector};

/// `{v : rhs ∈ lhs v + J^T N_K(J v)}`, one piece per face of `K`.
///
/// On face `F` with active rows `A_S` and equality rows `B` of `K`:
/// `lhs v + J^T (A_S^T α + B^T β) = rhs`, `A_S J v = 0`, `B J v = 0`,
/// `A_rest J v <= 0`, `α >= 0`.
pub fn inclusion_pieces(lhs: &Mat, jac: &Mat, faces: &FaceDecomposition, rhs: &Vector) -> PiecewisePolyhedralSet {
    let m = lhs.ncols();
    let k = &faces.base;
    let a_rows = k.ineq_rows();
    let pieces = faces
        .faces
        .iter()
        .enumerate()
        .map(|(idx, face)| {
            let (na, nb) = (face.normal_rays.len(), face.normal_lines.len());
            let aux = na + nb;
            let n_eq = m + na + nb;
            let mut eq = Mat::zeros(n_eq, m + aux);
            eq.view_mut((0, 0), (m, m)).copy_from(lhs);
            for (j, g) in face.normal_rays.iter().chain(face.normal_lines.iter()).enumerate() {
                eq.set_column(m + j, &{
                    let mut c = Vector::zeros(n_eq);
                    c.rows_mut(0, m).copy_from(&(jac.transpose() * g));
                    c
                });
                eq.view_mut((m + j, 0), (1, m)).copy_from(&(g.transpose() * jac));
            }
            let rest: Vec<usize> = (0..a_rows.len()).filter(|i| !face.active.contains(i)).collect();
            let mut v_ineq = Mat::zeros(rest.len(), m);
            for (r, &i) in rest.iter().enumerate() {
                v_ineq.view_mut((r, 0), (1, m)).copy_from(&(a_rows[i].transpose() * jac));
            }
            let mut eq_rhs = Vector::zeros(n_eq);
            eq_rhs.rows_mut(0, m).copy_from(rhs);
            let mut nonneg = vec![true; na];
            nonneg.extend(std::iter::repeat_n(false, nb));
            Piece { face: idx, aux_dim: aux, nonneg, eq_lhs: eq, eq_rhs, v_ineq }
        })
        .collect();
    PiecewisePolyhedralSet { dim: m, pieces }
}

/// The normal `A_S^T α + B^T β` encoded by the auxiliary variables of a face piece.
pub fn face_normal(face: &Face, w: &Vector) -> Vector {
    let dim = face.closure.dim();
    face.normal_rays.iter().chain(face.normal_lines.iter()).zip(w.iter()).fold(Vector::zeros(dim), |acc, (g, c)| acc + g * *c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;
    use crate::polycone::PolyCone;

    #[test]
    fn projection_onto_quadrant_as_inclusion() {
        // h ∈ v + N_K(v) iff v = P_K(h).
        let k = PolyCone::orthant(2, 1.0);
        let faces = enumerate_faces(&k, 4096).unwrap();
        let i2 = Mat::identity(2, 2);
        for h in [vector(&[1.0, -2.0]), vector(&[-1.0, -1.0]), vector(&[3.0, 0.5])] {
            let set = inclusion_pieces(&i2, &i2, &faces, &h);
            let (_, v) = set.element(1e-9).unwrap();
            assert!((v - k.project(&h)).norm() < 1e-9);
        }
    }

    #[test]
    fn face_normals_rebuild_the_multiplier() {
        let k = PolyCone::orthant(2, 1.0);
        let faces = enumerate_faces(&k, 4096).unwrap();
        let i2 = Mat::identity(2, 2);
        let h = vector(&[1.0, -2.0]);
        let set = inclusion_pieces(&i2, &i2, &faces, &h);
        for (piece, face) in set.pieces.iter().zip(&faces.faces) {
            if let Some((v, w)) = piece.feasible_point(1e-9) {
                assert!((&v + face_normal(face, &w) - &h).norm() < 1e-9);
            }
        }
    }
}

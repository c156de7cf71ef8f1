use serde::Serialize;

use crate::cone::{lorentz, Cone};
use crate::engine::{enumerate_faces, face_normal, inclusion_pieces, Piece, Reference};
use crate::error::Result;
use crate::geometry::GEProblem;
use crate::linalg::{cols_to_mat, vector, Mat, Vector};
use crate::polycone::PolyCone;
use crate::settings::Settings;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum CalmnessStatus {
    Certified,
    Refuted,
    Inconclusive,
}

/// A unit solution `v` of `0 ∈ ∇_y L v + ∇g^T N_K̂(∇g v)` with the normal `μ ∈ N_K̂(∇g v)` used.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CalmnessWitness {
    #[serde(serialize_with = "crate::engine::ser_vec")]
    pub v: Vector,
    #[serde(serialize_with = "crate::engine::ser_vec")]
    pub mu: Vector,
    pub residual: f64,
    /// Face of the critical cone (face enumeration) or regime index (sampled search).
    pub piece: usize,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CalmnessVerdict {
    pub status: CalmnessStatus,
    /// `∇_x f(x̄, ȳ)` is surjective, so the verdict characterizes isolated calmness.
    pub necessary: bool,
    pub method: String,
    pub pieces_checked: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<CalmnessWitness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Verify a candidate against the exact cone, not its polyhedral stand-in.
fn verified_witness(
    reference: &Reference,
    v: &Vector,
    mu: &Vector,
    piece: usize,
    settings: &Settings,
) -> Result<Option<CalmnessWitness>> {
    let k = &reference.critical.cone;
    let p = &reference.jac_g * v;
    let residual = (&reference.lagrangian * v + reference.jac_g.transpose() * mu).norm();
    let ok = residual <= settings.tol_kkt * 10.0
        && k.contains_tol(&p, settings.tol_membership)?
        && k.is_normal(&k.project(&p)?, &(mu / mu.norm().max(1.0)))?
        && p.dot(mu).abs() <= settings.tol_membership * (1.0 + mu.norm());
    Ok(ok.then(|| CalmnessWitness { v: v.clone(), mu: mu.clone(), residual, piece }))
}

/// Exact test: does the adjoint generalized equation have only `v = 0`?
pub fn certify_isolated_calmness(problem: &GEProblem, settings: &Settings) -> Result<CalmnessVerdict> {
    let reference = Reference::new(problem, settings)?;
    certify_with(&reference, settings)
}

pub(crate) fn certify_with(reference: &Reference, settings: &Settings) -> Result<CalmnessVerdict> {
    let necessary = reference.surjective;
    let mut verdict = match reference.critical.polycone() {
        Some(k) => by_faces(reference, &k, settings)?,
        None => by_regimes(reference, settings)?,
    };
    verdict.necessary = necessary;
    if !reference.pdc.holds() {
        verdict.note = Some("projection derivation condition refuted at g(ȳ); the face test is not conclusive".into());
        verdict.status = CalmnessStatus::Inconclusive;
    }
    Ok(verdict)
}

fn by_faces(reference: &Reference, k: &PolyCone, settings: &Settings) -> Result<CalmnessVerdict> {
    let faces = enumerate_faces(k, settings.face_cap)?;
    let m = reference.lagrangian.nrows();
    let set = inclusion_pieces(&reference.lagrangian, &reference.jac_g, &faces, &Vector::zeros(m));
    for (i, piece) in set.pieces.iter().enumerate() {
        if let Some(v) = piece.nonzero_element(settings.tol_membership) {
            let (w, _) = piece.certificate(&v, settings.tol_membership).expect("element of its own piece");
            let mu = face_normal(&faces.faces[i], &w);
            let witness = verified_witness(reference, &v, &mu, i, settings)?;
            return Ok(CalmnessVerdict {
                status: CalmnessStatus::Refuted,
                necessary: false,
                method: "certified: face enumeration of the critical cone".into(),
                pieces_checked: i + 1,
                note: witness.is_none().then(|| "witness failed exact verification".into()),
                witness,
            });
        }
    }
    Ok(CalmnessVerdict {
        status: CalmnessStatus::Certified,
        necessary: false,
        method: "certified: face enumeration of the critical cone".into(),
        pieces_checked: set.pieces.len(),
        witness: None,
        note: None,
    })
}

/// Polyhedral inner pieces `(P, N)` of the graph of `N_C`: for every `p ∈ P`, `N ⊆ N_C(p)`.
struct Regime {
    p_rays: Vec<Vector>,
    p_lines: Vec<Vector>,
    n_rays: Vec<Vector>,
    n_lines: Vec<Vector>,
}

const ANGLES: usize = 72;
const SPHERE_SAMPLES: usize = 64;

fn sphere_directions(d: usize) -> Vec<Vector> {
    if d == 2 {
        return (0..ANGLES)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / ANGLES as f64;
                vector(&[t.cos(), t.sin()])
            })
            .collect();
    }
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    (0..SPHERE_SAMPLES)
        .map(|_| {
            let v = Vector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
            &v / v.norm()
        })
        .collect()
}

fn block_regimes(cone: &Cone) -> Vec<Regime> {
    if let Some(p) = cone.to_polycone() {
        let faces = enumerate_faces(&p, usize::MAX).expect("uncapped");
        return faces
            .faces
            .iter()
            .map(|f| {
                let (p_rays, p_lines) = f.closure.generators();
                Regime { p_rays, p_lines, n_rays: f.normal_rays.clone(), n_lines: f.normal_lines.clone() }
            })
            .collect();
    }
    let dim = cone.dim();
    let (boundary, normals): (Vec<Vector>, Vec<Vector>) = match cone {
        Cone::Lorentz { axis, sign, .. } => {
            let s = sign.factor();
            sphere_directions(dim - 1)
                .into_iter()
                .map(|r| (lorentz::join(1.0, &r, *axis) * s, lorentz::join(-1.0, &r, *axis) * s))
                .unzip()
        }
        Cone::PowerSurface => (0..ANGLES)
            .map(|k| {
                let t = (-3.0 + 6.0 * k as f64 / (ANGLES - 1) as f64).sinh();
                (vector(&[1.0, t, t.powi(4)]), vector(&[-3.0 * t.powi(4), 4.0 * t.powi(3), -1.0]))
            })
            .unzip(),
        _ => unreachable!("non-polyhedral blocks are Lorentz or power cones"),
    };
    let mut out = Vec::with_capacity(boundary.len() + 2);
    let mut interior = boundary.clone();
    let mut polar = normals.clone();
    if matches!(cone, Cone::PowerSurface) {
        interior.push(vector(&[0.0, 0.0, 1.0]));
        polar.push(vector(&[-1.0, 0.0, 0.0]));
    }
    out.push(Regime { p_rays: interior, p_lines: vec![], n_rays: vec![], n_lines: vec![] });
    out.push(Regime { p_rays: vec![], p_lines: vec![], n_rays: polar, n_lines: vec![] });
    for (d, n) in boundary.into_iter().zip(normals) {
        out.push(Regime { p_rays: vec![d], p_lines: vec![], n_rays: vec![n], n_lines: vec![] });
    }
    out
}

fn embed(v: &Vector, off: usize, dim: usize) -> Vector {
    let mut out = Vector::zeros(dim);
    out.rows_mut(off, v.len()).copy_from(v);
    out
}

/// Search for solutions of the adjoint equation over polyhedral inner pieces of `gph N_K̂`.
/// Any solution found is genuine; finding none proves nothing.
fn by_regimes(reference: &Reference, settings: &Settings) -> Result<CalmnessVerdict> {
    let k = &reference.critical.cone;
    let blocks: Vec<Cone> = match k {
        Cone::Product(fs) => fs.clone(),
        c => vec![c.clone()],
    };
    let l = k.dim();
    let per_block: Vec<(usize, Vec<Regime>)> = {
        let mut off = 0;
        blocks
            .iter()
            .map(|b| {
                let r = (off, block_regimes(b));
                off += b.dim();
                r
            })
            .collect()
    };
    let total: usize = per_block.iter().map(|(_, r)| r.len()).product();
    if total > settings.face_cap {
        return Ok(CalmnessVerdict {
            status: CalmnessStatus::Inconclusive,
            necessary: false,
            method: "sampled: regime search over a non-polyhedral critical cone".into(),
            pieces_checked: 0,
            witness: None,
            note: Some(format!("{total} regime combinations exceed the cap of {}", settings.face_cap)),
        });
    }
    let jac = &reference.jac_g;
    let mut index = vec![0usize; per_block.len()];
    for count in 0..total {
        let mut p_rays = Vec::new();
        let mut p_lines = Vec::new();
        let mut n_rays = Vec::new();
        let mut n_lines = Vec::new();
        for ((off, regimes), &i) in per_block.iter().zip(&index) {
            let r = &regimes[i];
            p_rays.extend(r.p_rays.iter().map(|v| embed(v, *off, l)));
            p_lines.extend(r.p_lines.iter().map(|v| embed(v, *off, l)));
            n_rays.extend(r.n_rays.iter().map(|v| embed(v, *off, l)));
            n_lines.extend(r.n_lines.iter().map(|v| embed(v, *off, l)));
        }
        let piece = regime_piece(&reference.lagrangian, jac, &p_rays, &p_lines, &n_rays, &n_lines, count);
        if let Some(v) = piece.nonzero_element(settings.tol_membership) {
            let (w, _) = piece.certificate(&v, settings.tol_membership).expect("element of its own piece");
            let off = p_rays.len() + p_lines.len();
            let mu = n_rays.iter().chain(n_lines.iter()).enumerate().fold(Vector::zeros(l), |acc, (j, g)| acc + g * w[off + j]);
            if let Some(witness) = verified_witness(reference, &v, &mu, count, settings)? {
                return Ok(CalmnessVerdict {
                    status: CalmnessStatus::Refuted,
                    necessary: false,
                    method: "sampled: regime search over a non-polyhedral critical cone".into(),
                    pieces_checked: count + 1,
                    witness: Some(witness),
                    note: None,
                });
            }
        }
        for (slot, (_, regimes)) in index.iter_mut().zip(&per_block) {
            *slot += 1;
            if *slot < regimes.len() {
                break;
            }
            *slot = 0;
        }
    }
    Ok(CalmnessVerdict {
        status: CalmnessStatus::Inconclusive,
        necessary: false,
        method: "sampled: regime search over a non-polyhedral critical cone".into(),
        pieces_checked: total,
        witness: None,
        note: Some("critical cone is not polyhedral; no nonzero solution found on sampled regimes".into()),
    })
}

/// `L v + J^T μ = 0`, `J v = P_r a + P_l b`, `μ = N_r c + N_l d`, `a, c >= 0`.
fn regime_piece(
    lhs: &Mat,
    jac: &Mat,
    p_rays: &[Vector],
    p_lines: &[Vector],
    n_rays: &[Vector],
    n_lines: &[Vector],
    index: usize,
) -> Piece {
    let (m, l) = (lhs.ncols(), jac.nrows());
    let aux = p_rays.len() + p_lines.len() + n_rays.len() + n_lines.len();
    let mut eq = Mat::zeros(m + l, m + aux);
    eq.view_mut((0, 0), (m, m)).copy_from(lhs);
    eq.view_mut((m, 0), (l, m)).copy_from(jac);
    let mut col = m;
    for g in p_rays.iter().chain(p_lines) {
        eq.view_mut((m, col), (l, 1)).copy_from(&(-g));
        col += 1;
    }
    if !n_rays.is_empty() || !n_lines.is_empty() {
        let gens: Vec<Vector> = n_rays.iter().chain(n_lines).cloned().collect();
        let jt = jac.transpose() * cols_to_mat(&gens, l);
        eq.view_mut((0, col), (m, gens.len())).copy_from(&jt);
    }
    let mut nonneg = vec![true; p_rays.len()];
    nonneg.extend(std::iter::repeat_n(false, p_lines.len()));
    nonneg.extend(std::iter::repeat_n(true, n_rays.len()));
    nonneg.extend(std::iter::repeat_n(false, n_lines.len()));
    Piece { face: index, aux_dim: aux, nonneg, eq_lhs: eq, eq_rhs: Vector::zeros(m + l), v_ineq: Mat::zeros(0, m) }
}

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::input::{Dims, ProblemFile};
use crate::calculus::{critical_cone, extended_polyhedricity, EpStatus, PdcStatus};
use crate::cone::{Cone, Region};
use crate::engine::{solution_map_at, Reference, SolutionMapDerivative};
use crate::error::{Error, Result};
use crate::geometry::{check_nondegeneracy, GEProblem, NondegeneracyReport};
use crate::linalg::{Mat, Vector};
use crate::polycone::{clean_value, PolyCone};
use crate::settings::Settings;
use crate::stability::{certify_with, empirical_calmness_probe, CalmnessVerdict, ProbeReport};

pub const TOOL_VERSION: &str = concat!("gecone ", env!("CARGO_PKG_VERSION"));

pub(crate) fn vals(v: &Vector) -> Vec<f64> {
    v.iter().map(|&x| clean_value(x)).collect()
}

pub(crate) fn rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().map(|&x| clean_value(x)).collect()).collect()
}

/// Scale so the largest entry has magnitude one.
fn unit_max(v: &Vector) -> Vec<f64> {
    let s = v.amax();
    if s == 0.0 {
        vals(v)
    } else {
        vals(&(v / s))
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Flag {
    pub holds: bool,
    pub method: String,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Nondegeneracy {
    pub holds: bool,
    pub rank: usize,
    pub required: usize,
    pub lineality_dim: usize,
    pub smallest_singular_value: f64,
    pub method: String,
}

impl From<&NondegeneracyReport> for Nondegeneracy {
    fn from(r: &NondegeneracyReport) -> Self {
        Nondegeneracy {
            holds: r.holds,
            rank: r.rank,
            required: r.required,
            lineality_dim: r.lineality_dim,
            smallest_singular_value: r.smallest_singular_value,
            method: "certified: SVD rank of [∇g(ȳ) | lin T_Θ(g(ȳ))]".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Assumptions {
    pub a1: Flag,
    pub a2: Nondegeneracy,
    pub a3: Flag,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Feasibility {
    pub g_ybar: Vec<f64>,
    pub region: String,
    pub method: String,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Multiplier {
    pub lambda: Vec<f64>,
    pub residual: f64,
    pub unique: bool,
    pub method: String,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PdcWitnessOut {
    pub b: Vec<f64>,
    pub h: Vec<f64>,
    pub derivative: Vec<f64>,
    pub critical_projection: Vec<f64>,
    pub rel_error: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Pdc {
    pub status: PdcStatus,
    pub method: String,
    pub samples: usize,
    pub max_rel_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<PdcWitnessOut>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CriticalConeOut {
    pub polyhedral: bool,
    pub cone: Cone,
    /// `cone(rays) + span(lines)`; present when polyhedral.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rays: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lines: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polar: Option<PolyCone>,
    pub method: String,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FaceOut {
    pub active: Vec<usize>,
    pub dim: usize,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PieceOut {
    pub face: usize,
    pub face_dim: usize,
    /// A point of the piece, if it is nonempty.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub element: Option<Vec<f64>>,
    /// A unit vector of the piece, if it is not `{0}`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nonzero_direction: Option<Vec<f64>>,
    #[serde(flatten)]
    pub data: crate::engine::Piece,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GraphicalDerivative {
    pub u: Vec<f64>,
    /// `equality` when `∇_x f` is surjective and PDC holds, else `inclusion`.
    pub relation: String,
    pub pdc_holds: bool,
    pub trivial: bool,
    pub empty: bool,
    pub faces: Vec<FaceOut>,
    pub pieces: Vec<PieceOut>,
    pub method: String,
}

impl GraphicalDerivative {
    fn new(ds: &SolutionMapDerivative, u: &Vector, tol: f64) -> Self {
        let faces = ds.faces.faces.iter().map(|f| FaceOut { active: f.active.clone(), dim: f.dim }).collect();
        let pieces = ds
            .set
            .pieces
            .iter()
            .map(|p| PieceOut {
                face: p.face,
                face_dim: ds.faces.faces[p.face].dim,
                element: p.feasible_point(tol).map(|(v, _)| vals(&v)),
                nonzero_direction: if ds.set.is_homogeneous() { p.nonzero_element(tol).map(|v| vals(&v)) } else { None },
                data: p.clone(),
            })
            .collect();
        GraphicalDerivative {
            u: vals(u),
            relation: if ds.equality { "equality" } else { "inclusion" }.into(),
            pdc_holds: ds.pdc_holds,
            trivial: ds.set.is_trivial(tol),
            empty: ds.set.is_empty(tol),
            faces,
            pieces,
            method: "certified: face enumeration of the critical cone".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Probe {
    pub method: String,
    #[serde(flatten)]
    pub table: ProbeReport,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExtendedPolyhedricity {
    pub status: EpStatus,
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_normal: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_direction: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConeProbe {
    pub point: Vec<f64>,
    pub region: String,
    pub tangent_cone: Cone,
    pub normal_cone: Cone,
    /// Critical cone for the unit generator of the normal cone (or `b = 0`).
    pub normal_direction: Vec<f64>,
    pub critical_cone: Cone,
    pub extended_polyhedricity: ExtendedPolyhedricity,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AnalysisReport {
    pub tool_version: String,
    pub input_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub settings: Settings,
    pub dims: Dims,
    pub feasibility: Feasibility,
    pub assumptions: Assumptions,
    pub multiplier: Multiplier,
    pub pdc: Pdc,
    pub critical_cone: CriticalConeOut,
    /// `∇_y L(x̄, ȳ, λ̄)`.
    pub lagrangian_hessian: Vec<Vec<f64>>,
    /// `∇_x f(x̄, ȳ)`.
    pub jacobian_x: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graphical_derivative: Option<GraphicalDerivative>,
    pub calmness: CalmnessVerdict,
    pub probe: Probe,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub cone_probe: Vec<ConeProbe>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<BTreeMap<String, f64>>,
}

impl AnalysisReport {
    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn input_hash(raw: &[u8]) -> String {
    Sha256::digest(raw).iter().map(|b| format!("{b:02x}")).collect()
}

fn region_name(cone: &Cone, z: &Vector) -> Result<String> {
    Ok(match cone {
        Cone::Product(fs) => {
            let parts = fs
                .iter()
                .zip(Cone::split_blocks(fs, z))
                .map(|(f, p)| region_name(f, &p))
                .collect::<Result<Vec<_>>>()?;
            format!("product({})", parts.join(", "))
        }
        c if c.is_polyhedral() => {
            let p = c.to_polycone().expect("polyhedral").canonicalize();
            let scale = crate::tol::MEMBERSHIP * (1.0 + z.norm());
            match p.ineq_rows().iter().filter(|a| a.dot(z) >= -scale).count() {
                0 => "relative interior".into(),
                k => format!("boundary with {k} active constraints"),
            }
        }
        c => match c.region(z)? {
            Region::Interior => "interior".into(),
            Region::Vertex => "vertex".into(),
            Region::Smooth { .. } => "smooth boundary".into(),
        },
    })
}

/// Prefix closed-form reasons with their provenance; sampled and empirical ones already carry it.
fn tagged(method: &str) -> String {
    if ["certified", "sampled", "empirical"].iter().any(|p| method.starts_with(p)) {
        method.into()
    } else {
        format!("certified: {method}")
    }
}

/// Catalogue metadata: reducibility (and hence directional differentiability of the projection).
fn catalogue_flags(cone: &Cone, z: &Vector) -> Result<(Flag, Flag)> {
    let (a1, a3) = match cone {
        Cone::Product(fs) => {
            let mut holds = true;
            let mut notes = Vec::new();
            for (f, p) in fs.iter().zip(Cone::split_blocks(fs, z)) {
                let (a1, _) = catalogue_flags(f, &p)?;
                holds &= a1.holds;
                notes.push(a1.method);
            }
            let m = format!("every block: {}", notes.join("; "));
            return Ok((Flag { holds, method: m.clone() }, Flag { holds, method: m }));
        }
        Cone::Orthant { .. } | Cone::Polyhedral(_) => (
            "catalogue: polyhedral cones are cone reducible at every point",
            "catalogue: polyhedral, hence second-order regular",
        ),
        Cone::Lorentz { .. } => (
            "catalogue: Lorentz cones are cone reducible at every point",
            "catalogue: cone reducible, hence second-order regular",
        ),
        Cone::PowerSurface => match cone.region(z)? {
            Region::Vertex => (
                "catalogue: assumed at the vertex, not verified",
                "catalogue: projection differentiability assumed at the vertex",
            ),
            _ => (
                "catalogue: smooth defining function near the point",
                "catalogue: C2 boundary near the point, hence second-order regular",
            ),
        },
    };
    Ok((Flag { holds: true, method: a1.into() }, Flag { holds: true, method: a3.into() }))
}

fn cone_probe(cone: &Cone, z: &Vector) -> Result<ConeProbe> {
    let tangent = cone.tangent_cone(z)?;
    let normal = cone.normal_cone(z)?;
    let b = match (&normal, cone.region(z)) {
        (_, Ok(Region::Smooth { grad, .. })) => &grad / grad.norm(),
        (n, _) => match n.to_polycone().map(|p| p.generators()) {
            Some((rays, lines)) if rays.len() + lines.len() == 1 => rays.into_iter().chain(lines).next().unwrap(),
            _ => Vector::zeros(z.len()),
        },
    };
    let critical = critical_cone(cone, z, &b)?.cone;
    let ep = extended_polyhedricity(cone, z)?;
    Ok(ConeProbe {
        point: vals(z),
        region: region_name(cone, z)?,
        tangent_cone: tangent,
        normal_cone: normal,
        normal_direction: vals(&b),
        critical_cone: critical,
        extended_polyhedricity: ExtendedPolyhedricity {
            status: ep.status,
            method: tagged(&ep.method),
            witness_normal: ep.witness.as_ref().map(|(b, _)| vals(b)),
            witness_direction: ep.witness.as_ref().map(|(_, h)| vals(h)),
        },
    })
}

struct Clock {
    on: bool,
    last: Instant,
    laps: BTreeMap<String, f64>,
}

impl Clock {
    fn lap(&mut self, stage: &str) {
        if self.on {
            let now = Instant::now();
            self.laps.insert(stage.into(), (now - self.last).as_secs_f64() * 1e3);
            self.last = now;
        }
    }
}

/// Run every stage in order; errors halt the pipeline.
pub fn analyze(file: &ProblemFile, raw: &[u8], settings: &Settings, timings: bool) -> Result<AnalysisReport> {
    settings.validate()?;
    let mut clock = Clock { on: timings, last: Instant::now(), laps: BTreeMap::new() };
    let problem = file.problem()?;
    clock.lap("parse");

    let zbar = problem.check_feasible()?;
    let feasibility = Feasibility {
        g_ybar: vals(&zbar),
        region: region_name(&problem.theta, &zbar)?,
        method: "certified: exact membership".into(),
    };
    let (a1, a3) = catalogue_flags(&problem.theta, &zbar)?;
    let nd = check_nondegeneracy(&problem)?;
    if !nd.holds {
        return Err(Error::AssumptionsUnverified(format!(
            "nondegeneracy fails: rank {} < {} (smallest singular value {:.3e})",
            nd.rank, nd.required, nd.smallest_singular_value
        )));
    }
    let assumptions = Assumptions { a1, a2: Nondegeneracy::from(&nd), a3 };
    clock.lap("assumptions");

    let reference = Reference::new(&problem, settings)?;
    clock.lap("reference");
    let multiplier = Multiplier {
        lambda: vals(&reference.multiplier.lambda),
        residual: reference.multiplier.residual,
        unique: reference.multiplier.unique,
        method: "certified: least squares with normal-cone membership check".into(),
    };
    let pdc = Pdc {
        status: reference.pdc.status,
        method: tagged(&reference.pdc.method),
        samples: reference.pdc.samples,
        max_rel_error: reference.pdc.max_rel_error,
        witness: reference.pdc.witness.as_ref().map(|w| PdcWitnessOut {
            b: vals(&w.b),
            h: vals(&w.h),
            derivative: vals(&w.derivative),
            critical_projection: vals(&w.critical_projection),
            rel_error: w.rel_error,
        }),
    };
    let critical_cone = critical_out(&reference);

    let graphical_derivative = match solution_map_at(&reference, &Vector::zeros(problem.n()), settings.face_cap) {
        Ok(ds) => Some(GraphicalDerivative::new(&ds, &Vector::zeros(problem.n()), settings.tol_membership)),
        Err(Error::NonPolyhedralCriticalCone) => None,
        Err(e) => return Err(e),
    };
    clock.lap("graphicalDerivative");
    let calmness = certify_with(&reference, settings)?;
    clock.lap("calmness");
    let probe = Probe {
        method: "empirical: perturbed equilibria solved by semismooth Newton".into(),
        table: empirical_calmness_probe(&problem, settings)?,
    };
    clock.lap("probe");
    let cone_probe = file
        .cone_probe_points()
        .iter()
        .map(|z| cone_probe(&problem.theta, z))
        .collect::<Result<Vec<_>>>()?;
    clock.lap("coneProbe");

    Ok(AnalysisReport {
        tool_version: TOOL_VERSION.into(),
        input_hash: input_hash(raw),
        name: file.name.clone(),
        settings: settings.clone(),
        dims: file.dims,
        feasibility,
        assumptions,
        multiplier,
        pdc,
        critical_cone,
        lagrangian_hessian: rows(&reference.lagrangian),
        jacobian_x: rows(&reference.fx),
        graphical_derivative,
        calmness,
        probe,
        cone_probe,
        timings_ms: timings.then_some(clock.laps),
    })
}

fn critical_out(reference: &Reference) -> CriticalConeOut {
    match reference.critical.polycone() {
        Some(k) => {
            let k = k.canonicalize();
            let (rays, lines) = k.generators();
            let polar = PolyCone::from_rows(k.dim(), &rays, &lines).canonicalize();
            CriticalConeOut {
                polyhedral: true,
                cone: Cone::Polyhedral(k),
                rays: Some(rays.iter().map(unit_max).collect()),
                lines: Some(lines.iter().map(unit_max).collect()),
                polar: Some(polar),
                method: "certified: closed form at g(ȳ) with normal λ̄".into(),
            }
        }
        None => CriticalConeOut {
            polyhedral: false,
            cone: reference.critical.cone.clone(),
            rays: None,
            lines: None,
            polar: None,
            method: "certified: closed form at g(ȳ) with normal λ̄".into(),
        },
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Homogeneity {
    pub scale: f64,
    pub element: Vec<f64>,
    /// `scale * element ∈ DS(scale * u)`.
    pub scaled_member: bool,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GderivReport {
    pub tool_version: String,
    pub input_hash: String,
    #[serde(flatten)]
    pub derivative: GraphicalDerivative,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub homogeneity: Option<Homogeneity>,
}

impl GderivReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// `DS(x̄, ȳ)(u)` with a homogeneity spot check.
pub fn gderiv(file: &ProblemFile, raw: &[u8], u: &Vector, settings: &Settings) -> Result<GderivReport> {
    settings.validate()?;
    let problem: GEProblem = file.problem()?;
    if u.len() != problem.n() {
        return Err(Error::InvalidInput(format!("u has {} entries, expected n = {}", u.len(), problem.n())));
    }
    problem.check_feasible()?;
    let reference = Reference::new(&problem, settings)?;
    let ds = solution_map_at(&reference, u, settings.face_cap)?;
    let tol = settings.tol_membership;
    let homogeneity = match ds.set.element(tol) {
        Some((_, v)) => {
            let scaled = solution_map_at(&reference, &(u * 2.0), settings.face_cap)?;
            Some(Homogeneity { scale: 2.0, element: vals(&v), scaled_member: scaled.set.contains(&(v * 2.0), tol) })
        }
        None => None,
    };
    Ok(GderivReport {
        tool_version: TOOL_VERSION.into(),
        input_hash: input_hash(raw),
        derivative: GraphicalDerivative::new(&ds, u, tol),
        homogeneity,
    })
}

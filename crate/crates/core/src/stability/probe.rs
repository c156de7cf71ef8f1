use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::geometry::kkt::solve_kkt;
use crate::geometry::{recover_multiplier, trust_radius, GEProblem};
use crate::linalg::Vector;
use crate::settings::Settings;

/// Relative spread of the per-radius ratios below which the modulus counts as bounded.
pub const BOUNDED_VARIATION: f64 = 0.25;
/// Growth of the ratio from the largest to the smallest radius that suggests `|y - ȳ| / |x - x̄|` blows up.
pub const UNBOUNDED_GROWTH: f64 = 5.0;
/// Ratios below this are rounding noise: the solutions did not move.
pub const RATIO_FLOOR: f64 = 1e-8;
const OFFSETS: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ProbeRow {
    pub radius: f64,
    /// `sup |y - ȳ| / |x - x̄|` over the solutions found.
    pub ratio: f64,
    pub solved: usize,
    /// Directions for which no local solution was found.
    pub no_solution: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ProbeReport {
    pub directions: usize,
    pub starts_per_direction: usize,
    pub rows: Vec<ProbeRow>,
    /// Empirical calmness modulus: the largest ratio over all radii.
    pub modulus: f64,
    pub variation: f64,
    pub bounded: bool,
    pub unbounded_suspected: bool,
    /// More than half of all perturbations produced no local solution.
    pub unreliable: bool,
}

fn unit_vectors(rng: &mut ChaCha8Rng, dim: usize, count: usize) -> Vec<Vector> {
    (0..count)
        .map(|_| loop {
            let v = Vector::from_fn(dim, |_, _| StandardNormal.sample(&mut *rng));
            let n = v.norm();
            if n > 1e-8 {
                break v / n;
            }
        })
        .collect()
}

/// Largest local solution distance `|y - ȳ|` of the GE at `x`, or `None` if no start converged.
fn sup_distance(problem: &GEProblem, x: &Vector, starts: &[Vector], nu0: &Vector, radius: f64, settings: &Settings) -> Option<f64> {
    let r = |y: &Vector| {
        let fv = problem.f_at(x, y)?;
        let (_, fy) = problem.f_jacobians(x, y)?;
        Ok((fv, fy))
    };
    let mut best: Option<f64> = None;
    for y0 in starts {
        let Ok(sol) = solve_kkt(&problem.g, &problem.theta, r, y0, nu0, settings.tol_kkt, x.norm() + nu0.norm()) else {
            continue;
        };
        let dist = (&sol.y - &problem.ybar).norm();
        let feasible = problem
            .g
            .eval(&sol.y)
            .and_then(|gy| problem.theta.contains_tol(&gy, settings.tol_membership))
            .unwrap_or(false);
        if feasible && dist <= radius {
            best = Some(best.map_or(dist, |b: f64| b.max(dist)));
        }
    }
    best
}

/// Sample `x = x̄ + r d` and measure how far local solutions move from `ȳ`.
pub fn empirical_calmness_probe(problem: &GEProblem, settings: &Settings) -> Result<ProbeReport> {
    settings.validate()?;
    let (n, m) = (problem.n(), problem.m());
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let dirs = unit_vectors(&mut rng, n, settings.directions);
    let offsets = unit_vectors(&mut rng, m, OFFSETS);
    let radius = trust_radius(problem, settings);
    let nu0 = recover_multiplier(problem, settings.tol_kkt).map(|r| r.lambda).unwrap_or_else(|_| Vector::zeros(problem.l()));

    let mut radii = settings.radii.clone();
    radii.sort_by(|a, b| b.total_cmp(a));
    let starts_for = |r: f64| -> Vec<Vector> {
        let mut s = vec![problem.ybar.clone()];
        for scale in [r, 3.0 * r, 0.1 * radius] {
            s.extend(offsets.iter().map(|o| &problem.ybar + o * scale));
        }
        s
    };
    let jobs: Vec<(usize, usize)> = (0..radii.len()).flat_map(|i| (0..dirs.len()).map(move |j| (i, j))).collect();
    let found: Vec<Option<f64>> = jobs
        .par_iter()
        .map(|&(i, j)| {
            let r = radii[i];
            let x = &problem.xbar + &dirs[j] * r;
            sup_distance(problem, &x, &starts_for(r), &nu0, radius, settings).map(|d| d / r)
        })
        .collect();

    let rows: Vec<ProbeRow> = radii
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let chunk = &found[i * dirs.len()..(i + 1) * dirs.len()];
            let solved = chunk.iter().flatten().count();
            let ratio = chunk.iter().flatten().fold(0.0_f64, |a, &b| a.max(b));
            ProbeRow { radius: r, ratio, solved, no_solution: dirs.len() - solved }
        })
        .collect();
    Ok(summarize(rows, settings.directions, 1 + 3 * OFFSETS))
}

fn summarize(rows: Vec<ProbeRow>, directions: usize, starts: usize) -> ProbeReport {
    let ratios: Vec<f64> = rows.iter().map(|r| if r.ratio < RATIO_FLOOR { 0.0 } else { r.ratio }).collect();
    let max = ratios.iter().copied().fold(0.0_f64, f64::max);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let variation = if max > 0.0 { (max - min) / max } else { 0.0 };
    // Rows are sorted by decreasing radius.
    let (large, small) = (ratios[0], ratios[ratios.len() - 1]);
    let unbounded_suspected = if large > 0.0 { small / large > UNBOUNDED_GROWTH } else { small > 0.0 };
    let total: usize = rows.iter().map(|r| r.solved + r.no_solution).sum();
    let missing: usize = rows.iter().map(|r| r.no_solution).sum();
    ProbeReport {
        directions,
        starts_per_direction: starts,
        modulus: max,
        variation,
        bounded: variation < BOUNDED_VARIATION && !unbounded_suspected,
        unbounded_suspected,
        unreliable: 2 * missing > total,
        rows,
    }
}

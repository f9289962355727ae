use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::momdp::{Momdp, ObjectiveVector, DEFAULT_ENUMERATION_CAP};
use crate::par::{self, Jobs};
use crate::solvers::fmt_f64;

/// Tolerance for dominance and duplicate detection between objective vectors.
pub const DOMINANCE_TOL: f64 = 1e-12;

/// Piecewise-linear Pareto front of a two-objective problem.
///
/// Vertices are ordered by decreasing `J_1` (so increasing `J_2`); the front
/// is the union of the segments between consecutive vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront2D {
    vertices: Vec<ObjectiveVector>,
}

impl ParetoFront2D {
    /// Builds the front from arbitrary vertices, checking order and mutual non-dominance.
    pub fn new(mut vertices: Vec<ObjectiveVector>) -> Result<Self> {
        if vertices.iter().any(|v| v.len() != 2) {
            return Err(Error::Unsupported("front tracing needs two objectives".into()));
        }
        vertices.sort_by(|a, b| b[0].total_cmp(&a[0]));
        for w in vertices.windows(2) {
            if !(w[0][0] > w[1][0] && w[0][1] < w[1][1]) {
                return Err(Error::InvalidParameter(format!(
                    "front vertices {:?} and {:?} are not mutually non-dominated",
                    w[0].0, w[1].0
                )));
            }
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[ObjectiveVector] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// `J_1,J_2` per vertex.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        out.write_record(["J_1", "J_2"])?;
        for v in &self.vertices {
            out.write_record([fmt_f64(v[0]), fmt_f64(v[1])])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `true` when `q` dominates `p`: no worse everywhere, strictly better somewhere.
pub fn dominates(q: &[f64], p: &[f64], tol: f64) -> bool {
    q.iter().zip(p).all(|(a, b)| *a >= *b - tol) && q.iter().zip(p).any(|(a, b)| *a > *b + tol)
}

/// Indices of the non-dominated points, first occurrence kept among near-duplicates.
pub fn non_dominated_indices(points: &[ObjectiveVector], tol: f64) -> Vec<usize> {
    let mut keep: Vec<usize> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if points.iter().any(|q| dominates(q, p, tol)) {
            continue;
        }
        if keep.iter().any(|&k| points[k].max_abs_diff(p) <= tol) {
            continue;
        }
        keep.push(i);
    }
    keep
}

pub fn non_dominated(points: &[ObjectiveVector], tol: f64) -> Vec<ObjectiveVector> {
    non_dominated_indices(points, tol)
        .into_iter()
        .map(|i| points[i].clone())
        .collect()
}

/// Exact objective vectors of every deterministic policy.
pub fn deterministic_objectives(momdp: &Momdp, jobs: Jobs) -> Result<Vec<ObjectiveVector>> {
    let policies = momdp.deterministic_policies(DEFAULT_ENUMERATION_CAP)?;
    par::map(&policies, jobs, |p| momdp.objective_vector(p))
        .into_iter()
        .collect()
}

/// Per-objective `(min, max)` over the achievable set.
///
/// Each coordinate of `J` is linear in the occupancy measure, so its extremes
/// over the polytope are attained by deterministic policies.
pub fn objective_bounds(momdp: &Momdp) -> Result<Vec<(f64, f64)>> {
    let js = deterministic_objectives(momdp, Jobs::ALL)?;
    Ok((0..momdp.n_objectives())
        .map(|l| {
            js.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), j| {
                (lo.min(j[l]), hi.max(j[l]))
            })
        })
        .collect())
}

/// Pareto-optimal vertices of the achievable objective polytope, for `m = 2`.
///
/// Enumerates all deterministic policies, keeps the non-dominated objective
/// vectors and then the strictly convex corners of their upper-right hull.
pub fn pareto_front_oracle(momdp: &Momdp) -> Result<ParetoFront2D> {
    if momdp.n_objectives() != 2 {
        return Err(Error::Unsupported(format!(
            "front tracing needs two objectives, got {}",
            momdp.n_objectives()
        )));
    }
    let js = deterministic_objectives(momdp, Jobs::ALL)?;
    Ok(ParetoFront2D {
        vertices: upper_hull(non_dominated(&js, DOMINANCE_TOL)),
    })
}

/// Strictly convex corners of a non-dominated 2-D point set, by decreasing `J_1`.
fn upper_hull(mut points: Vec<ObjectiveVector>) -> Vec<ObjectiveVector> {
    points.sort_by(|a, b| b[0].total_cmp(&a[0]));
    let scale = points
        .iter()
        .flat_map(|p| p.iter().map(|x| x.abs()))
        .fold(1.0, f64::max);
    let mut hull: Vec<ObjectiveVector> = Vec::with_capacity(points.len());
    for p in points {
        while hull.len() >= 2 {
            let a = &hull[hull.len() - 2];
            let b = &hull[hull.len() - 1];
            // walking toward larger J_2 the boundary turns counter-clockwise
            let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
            if cross <= DOMINANCE_TOL * scale * scale {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

fn point_segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = (a[0] + t * dx, a[1] + t * dy);
    ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt()
}

/// Euclidean distance from `point` to the union of the front's vertices and segments.
pub fn distance_to_front(front: &ParetoFront2D, point: &[f64]) -> Result<f64> {
    if point.len() != 2 {
        return Err(Error::Unsupported("distance to front needs two objectives".into()));
    }
    let v = &front.vertices;
    match v.len() {
        0 => Err(Error::Empty("front")),
        1 => Ok(point_segment_distance(point, &v[0], &v[0])),
        _ => Ok(v
            .windows(2)
            .map(|w| point_segment_distance(point, &w[0], &w[1]))
            .fold(f64::INFINITY, f64::min)),
    }
}

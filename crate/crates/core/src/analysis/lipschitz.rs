use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::momdp::ObjectiveVector;
use crate::scalarization::Preference;

/// Relative tolerance under which two preference distances count as equally near.
const NEIGHBOUR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    /// `max ||J - J'|| / ||w - w'||` over adjacent pairs.
    pub max_ratio: f64,
    pub l_theory: f64,
    /// Indices into the sweep of the maximizing pair.
    pub argmax: (usize, usize),
    pub pairs: usize,
    pub exceeds: bool,
}

/// Empirical Lipschitz ratio of `w -> J(w)` over adjacent grid pairs.
///
/// Two sweep points are adjacent when either is among the other's nearest
/// neighbours in preference space.
pub fn lipschitz_empirical(
    sweep: &[(Preference, ObjectiveVector)],
    l_theory: f64,
) -> Result<LipschitzReport> {
    if sweep.len() < 2 {
        return Err(Error::InvalidParameter(
            "Lipschitz estimate needs at least two sweep points".into(),
        ));
    }
    let prefs: Vec<&[f64]> = sweep.iter().map(|(p, _)| p.omega()).collect();
    let mut max_ratio = 0.0;
    let mut argmax = (0, 1);
    let pairs = adjacent_pairs(&prefs)?;
    for &(i, k) in &pairs {
        let ratio = sweep[i].1.distance(&sweep[k].1) / euclid(prefs[i], prefs[k]);
        if ratio > max_ratio {
            max_ratio = ratio;
            argmax = (i, k);
        }
    }
    let pairs = pairs.len();
    Ok(LipschitzReport {
        max_ratio,
        l_theory,
        argmax,
        pairs,
        exceeds: max_ratio > l_theory,
    })
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Unordered pairs `(i, k)`, `i < k`, where either point is among the other's
/// nearest neighbours, in lexicographic order.
pub fn adjacent_pairs(points: &[&[f64]]) -> Result<Vec<(usize, usize)>> {
    let n = points.len();
    let mut adjacent = vec![false; n * n];
    for i in 0..n {
        let d: Vec<f64> = (0..n)
            .map(|k| if k == i { f64::INFINITY } else { euclid(points[i], points[k]) })
            .collect();
        let nearest = d.iter().copied().fold(f64::INFINITY, f64::min);
        if nearest == 0.0 {
            return Err(Error::InvalidParameter(format!("duplicate preference at index {i}")));
        }
        for (k, dk) in d.iter().enumerate() {
            if *dk <= nearest * (1.0 + NEIGHBOUR_TOL) {
                adjacent[i.min(k) * n + i.max(k)] = true;
            }
        }
    }
    Ok((0..n)
        .flat_map(|i| (i + 1..n).map(move |k| (i, k)))
        .filter(|&(i, k)| adjacent[i * n + k])
        .collect())
}

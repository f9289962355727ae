use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::momdp::ObjectiveVector;
use crate::scalarization::{linear_utility, Preference};

use super::front::{non_dominated, DOMINANCE_TOL};

/// Largest objective dimension for which the hypervolume is computed exactly.
pub const MAX_HV_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub hypervolume: f64,
    pub eum: f64,
    pub sparsity: f64,
    pub reference_point: Vec<f64>,
    pub preference_set_id: String,
}

fn check_dims(points: &[ObjectiveVector], m: usize) -> Result<()> {
    match points.iter().find(|p| p.len() != m) {
        Some(p) => Err(Error::DimensionMismatch {
            what: "objective vector",
            expected: m,
            got: p.len(),
        }),
        None => Ok(()),
    }
}

/// Component-wise minimum of a point set.
pub fn componentwise_min(points: &[ObjectiveVector]) -> Result<Vec<f64>> {
    let first = points.first().ok_or(Error::Empty("points"))?;
    check_dims(points, first.len())?;
    Ok((0..first.len())
        .map(|l| points.iter().map(|p| p[l]).fold(f64::INFINITY, f64::min))
        .collect())
}

/// Volume dominated by `points` and bounded below by `reference` (maximization).
///
/// Points that do not strictly exceed the reference in every objective are discarded.
pub fn hypervolume(points: &[ObjectiveVector], reference: &[f64]) -> Result<f64> {
    let m = reference.len();
    if m == 0 {
        return Err(Error::Empty("reference point"));
    }
    if m > MAX_HV_DIM {
        return Err(Error::Unsupported(format!(
            "hypervolume is limited to {MAX_HV_DIM} objectives, got {m}"
        )));
    }
    check_dims(points, m)?;
    let shifted: Vec<Vec<f64>> = points
        .iter()
        .filter(|p| p.iter().zip(reference).all(|(x, r)| x > r))
        .map(|p| p.iter().zip(reference).map(|(x, r)| x - r).collect())
        .collect();
    Ok(volume(shifted))
}

/// Hypervolume against the origin of points that are all strictly positive.
fn volume(mut pts: Vec<Vec<f64>>) -> f64 {
    if pts.is_empty() {
        return 0.0;
    }
    let m = pts[0].len();
    match m {
        1 => pts.iter().map(|p| p[0]).fold(0.0, f64::max),
        2 => {
            pts.sort_by(|a, b| b[0].total_cmp(&a[0]).then(b[1].total_cmp(&a[1])));
            let mut area = 0.0;
            let mut top = 0.0;
            for p in &pts {
                if p[1] > top {
                    area += p[0] * (p[1] - top);
                    top = p[1];
                }
            }
            area
        }
        _ => {
            // slice along the last objective, from the top down
            pts.sort_by(|a, b| b[m - 1].total_cmp(&a[m - 1]));
            let mut total = 0.0;
            let mut active: Vec<Vec<f64>> = Vec::with_capacity(pts.len());
            for i in 0..pts.len() {
                active.push(pts[i][..m - 1].to_vec());
                let lower = pts.get(i + 1).map_or(0.0, |p| p[m - 1]);
                let height = pts[i][m - 1] - lower;
                if height > 0.0 {
                    total += height * volume(active.clone());
                }
            }
            total
        }
    }
}

/// Mean over `prefs` of the best linear utility attained by any point.
pub fn expected_utility_metric(points: &[ObjectiveVector], prefs: &[Preference]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Empty("points"));
    }
    if prefs.is_empty() {
        return Err(Error::Empty("preferences"));
    }
    let mut total = 0.0;
    for pref in prefs {
        let mut best = f64::NEG_INFINITY;
        for p in points {
            best = best.max(linear_utility(p, pref)?);
        }
        total += best;
    }
    Ok(total / prefs.len() as f64)
}

/// Squared consecutive gaps per sorted objective, divided by `|P| - 1`.
///
/// Evaluated on the points as given; [`metric_report`] filters to the
/// non-dominated subset first. A singleton has sparsity 0.
pub fn sparsity(points: &[ObjectiveVector]) -> Result<f64> {
    let first = points.first().ok_or(Error::Empty("points"))?;
    let m = first.len();
    check_dims(points, m)?;
    if points.len() < 2 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for l in 0..m {
        let mut col: Vec<f64> = points.iter().map(|p| p[l]).collect();
        col.sort_by(f64::total_cmp);
        total += col.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>();
    }
    Ok(total / (points.len() - 1) as f64)
}

/// HV, EUM and SP of a point set. `reference = None` uses the component-wise minimum.
pub fn metric_report(
    points: &[ObjectiveVector],
    reference: Option<&[f64]>,
    prefs: &[Preference],
    preference_set_id: impl Into<String>,
) -> Result<MetricReport> {
    let reference_point = match reference {
        Some(r) => r.to_vec(),
        None => componentwise_min(points)?,
    };
    let front = non_dominated(points, DOMINANCE_TOL);
    Ok(MetricReport {
        hypervolume: hypervolume(points, &reference_point)?,
        eum: expected_utility_metric(points, prefs)?,
        sparsity: sparsity(&front)?,
        reference_point,
        preference_set_id: preference_set_id.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::pareto_front_oracle;
    use crate::harness::toy_momdp;
    use crate::scalarization::preference_grid;
    use proptest::prelude::*;

    fn pts(raw: &[&[f64]]) -> Vec<ObjectiveVector> {
        raw.iter().map(|p| ObjectiveVector(p.to_vec())).collect()
    }

    /// Inclusion-exclusion over all non-empty subsets.
    fn hv_inclusion_exclusion(points: &[Vec<f64>], reference: &[f64]) -> f64 {
        let kept: Vec<&Vec<f64>> = points
            .iter()
            .filter(|p| p.iter().zip(reference).all(|(x, r)| x > r))
            .collect();
        let n = kept.len();
        let mut total = 0.0;
        for mask in 1u32..(1 << n) {
            let mut corner: Vec<f64> = vec![f64::INFINITY; reference.len()];
            for (i, p) in kept.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    for (c, x) in corner.iter_mut().zip(p.iter()) {
                        *c = c.min(*x);
                    }
                }
            }
            let vol: f64 = corner.iter().zip(reference).map(|(c, r)| c - r).product();
            if mask.count_ones() % 2 == 1 {
                total += vol;
            } else {
                total -= vol;
            }
        }
        total
    }

    /// Counts cell centres of a uniform lattice inside the dominated region.
    fn hv_lattice(points: &[Vec<f64>], lo: f64, hi: f64, cells: usize) -> f64 {
        let h = (hi - lo) / cells as f64;
        let mut count = 0usize;
        for i in 0..cells {
            for k in 0..cells {
                let (x, y) = (lo + (i as f64 + 0.5) * h, lo + (k as f64 + 0.5) * h);
                if points.iter().any(|p| p[0] >= x && p[1] >= y) {
                    count += 1;
                }
            }
        }
        count as f64 * h * h
    }

    #[test]
    fn unit_box_and_two_boxes() {
        assert_eq!(hypervolume(&pts(&[&[1.0, 1.0]]), &[0.0, 0.0]).unwrap(), 1.0);
        let two = pts(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let hv = hypervolume(&two, &[0.0, 0.0]).unwrap();
        assert!((hv - 3.0).abs() < 1e-12);
        let raw: Vec<Vec<f64>> = two.iter().map(|p| p.0.clone()).collect();
        assert!((hv_lattice(&raw, 0.0, 2.0, 400) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn points_not_above_reference_are_discarded() {
        let p = pts(&[&[1.0, 1.0], &[-1.0, 5.0], &[3.0, 0.0]]);
        assert_eq!(hypervolume(&p, &[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(hypervolume(&pts(&[&[-1.0, -1.0]]), &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn dimension_limits() {
        let five = pts(&[&[1.0; 5]]);
        assert!(matches!(hypervolume(&five, &[0.0; 5]), Err(Error::Unsupported(_))));
        assert!(hypervolume(&pts(&[&[1.0, 1.0]]), &[0.0, 0.0, 0.0]).is_err());
        assert_eq!(hypervolume(&pts(&[&[2.0], &[3.0]]), &[1.0]).unwrap(), 2.0);
    }

    #[test]
    fn three_d_boxes() {
        let p = pts(&[&[1.0, 1.0, 1.0], &[2.0, 0.5, 0.5]]);
        // 1 + 2*0.5*0.5 - 1*0.5*0.5
        assert!((hypervolume(&p, &[0.0; 3]).unwrap() - 1.25).abs() < 1e-15);
    }

    #[test]
    fn eum_cases() {
        let p = pts(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let prefs = vec![
            Preference::new(vec![1.0, 0.0]).unwrap(),
            Preference::new(vec![0.0, 1.0]).unwrap(),
        ];
        assert_eq!(expected_utility_metric(&p, &prefs).unwrap(), 1.0);

        let single = pts(&[&[2.0, 4.0]]);
        let grid = preference_grid(11, 2, 0.0).unwrap();
        let mean: f64 = grid.iter().map(|w| 2.0 * w.omega()[0] + 4.0 * w.omega()[1]).sum::<f64>() / 11.0;
        assert!((expected_utility_metric(&single, &grid).unwrap() - mean).abs() < 1e-12);

        assert!(expected_utility_metric(&[], &prefs).is_err());
        assert!(expected_utility_metric(&p, &[]).is_err());
    }

    #[test]
    fn eum_on_toy_front_matches_double_loop() {
        let front = pareto_front_oracle(&toy_momdp()).unwrap();
        let grid = preference_grid(100, 2, 0.0).unwrap();
        let mut acc = 0.0;
        for w in &grid {
            let mut best = f64::NEG_INFINITY;
            for v in front.vertices() {
                best = best.max(w.omega()[0] * v[0] + w.omega()[1] * v[1]);
            }
            acc += best;
        }
        let got = expected_utility_metric(front.vertices(), &grid).unwrap();
        assert!((got - acc / 100.0).abs() < 1e-12);
    }

    #[test]
    fn sparsity_cases() {
        assert_eq!(sparsity(&pts(&[&[0.0, 0.0], &[1.0, 1.0]])).unwrap(), 2.0);
        assert_eq!(sparsity(&pts(&[&[3.0, 1.0]])).unwrap(), 0.0);
        assert!(sparsity(&[]).is_err());
        // n equally spaced points on the segment (0,1)-(1,0): SP = 2 / (n-1)^2
        let mut prev = f64::INFINITY;
        for n in [2usize, 5, 10] {
            let line: Vec<ObjectiveVector> = (0..n)
                .map(|i| {
                    let t = i as f64 / (n - 1) as f64;
                    ObjectiveVector(vec![t, 1.0 - t])
                })
                .collect();
            let sp = sparsity(&line).unwrap();
            assert!((sp - 2.0 / ((n - 1) * (n - 1)) as f64).abs() < 1e-12);
            assert!(sp < prev);
            prev = sp;
        }
    }

    #[test]
    fn report_uses_min_reference_and_front_for_sparsity() {
        let p = pts(&[&[0.0, 2.0], &[2.0, 0.0], &[1.0, 1.0], &[0.5, 0.5]]);
        let prefs = preference_grid(3, 2, 0.0).unwrap();
        let rep = metric_report(&p, None, &prefs, "grid3").unwrap();
        assert_eq!(rep.reference_point, vec![0.0, 0.0]);
        assert!((rep.hypervolume - 1.0).abs() < 1e-15);
        // sorted front coordinates 0,1,2 in each objective
        assert!((rep.sparsity - 2.0).abs() < 1e-15);
        assert!(rep.hypervolume >= 0.0 && rep.sparsity >= 0.0);
    }

    fn point_sets(m: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(-0.5..3.0f64, m), 1..9)
    }

    proptest! {
        #[test]
        fn hv_matches_inclusion_exclusion(m in 2usize..=4, seed_pts in point_sets(4)) {
            let raw: Vec<Vec<f64>> = seed_pts.iter().map(|p| p[..m].to_vec()).collect();
            let reference = vec![0.0; m];
            let p: Vec<ObjectiveVector> = raw.iter().cloned().map(ObjectiveVector).collect();
            let fast = hypervolume(&p, &reference).unwrap();
            let slow = hv_inclusion_exclusion(&raw, &reference);
            prop_assert!((fast - slow).abs() <= 1e-9 * (1.0 + slow.abs()), "{fast} vs {slow}");
        }

        #[test]
        fn hv_monotone_under_insertion(raw in point_sets(3), extra in prop::collection::vec(0.0..3.0f64, 3)) {
            let mut p: Vec<ObjectiveVector> = raw.into_iter().map(ObjectiveVector).collect();
            let before = hypervolume(&p, &[0.0; 3]).unwrap();
            p.push(ObjectiveVector(extra));
            let after = hypervolume(&p, &[0.0; 3]).unwrap();
            prop_assert!(after >= before - 1e-12);
        }

        #[test]
        fn eum_invariant_under_front_filtering(raw in point_sets(2), n in 2usize..20) {
            let p: Vec<ObjectiveVector> = raw.into_iter().map(ObjectiveVector).collect();
            let prefs = preference_grid(n, 2, 0.0).unwrap();
            let all = expected_utility_metric(&p, &prefs).unwrap();
            let front = expected_utility_metric(&non_dominated(&p, DOMINANCE_TOL), &prefs).unwrap();
            prop_assert!((all - front).abs() < 1e-12);
        }

        #[test]
        fn sparsity_non_negative(raw in point_sets(3)) {
            let p: Vec<ObjectiveVector> = raw.into_iter().map(ObjectiveVector).collect();
            prop_assert!(sparsity(&p).unwrap() >= 0.0);
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::momdp::{ObjectiveVector, Momdp, Policy};
use crate::scalarization::Preference;

/// Output of linear-scalarization value iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSolution {
    pub policy: Policy,
    pub j: ObjectiveVector,
    pub sweeps: usize,
}

/// Relative margin an action's value must exceed the incumbent by to win the argmax.
const TIE_TOL: f64 = 1e-12;

/// Standard discounted value iteration on `r_w(s,a) = <w, r(s,a)>`.
///
/// Stops when `||V_{n+1} - V_n||_inf <= tol (1-gamma) / (2 gamma)`, then returns
/// the greedy deterministic policy (lowest action index on ties) and its exact
/// vector objective.
pub fn value_iteration_linear(momdp: &Momdp, pref: &Preference, tol: f64) -> Result<LinearSolution> {
    let reward = momdp.scalarized_rewards(pref.omega())?;
    let (ns, na) = (momdp.n_states(), momdp.n_actions());
    let g = momdp.gamma();
    let threshold = tol * (1.0 - g) / (2.0 * g);

    let backup = |v: &[f64], s: usize, a: usize| -> f64 {
        let next: f64 = momdp.transition_row(a, s).iter().zip(v).map(|(p, v)| p * v).sum();
        reward[s * na + a] + g * next
    };

    let mut v = vec![0.0; ns];
    let mut sweeps = 0;
    loop {
        let next: Vec<f64> = (0..ns)
            .map(|s| (0..na).map(|a| backup(&v, s, a)).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let diff = v.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        sweeps += 1;
        if diff <= threshold {
            break;
        }
    }

    let actions: Vec<usize> = (0..ns)
        .map(|s| {
            let mut best = 0;
            let mut best_q = backup(&v, s, 0);
            for a in 1..na {
                let q = backup(&v, s, a);
                if q > best_q + TIE_TOL * (1.0 + best_q.abs()) {
                    best = a;
                    best_q = q;
                }
            }
            best
        })
        .collect();
    let policy = Policy::deterministic(na, &actions)?;
    let j = momdp.objective_vector(&policy)?;
    Ok(LinearSolution { policy, j, sweeps })
}

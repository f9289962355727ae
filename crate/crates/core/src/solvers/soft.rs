//! KL-regularized policy evaluation and improvement.
//!
//! For a scalar reward `r`, reference policy `pi_ref` and temperature `alpha`,
//! the soft Bellman operator is
//!
//! ```text
//! (T Q)(s,a) = r(s,a) + gamma * E_{s'}[ chi(s') ]
//! chi(s')    = alpha * log sum_b pi_ref(b|s') exp(Q(s',b) / alpha)
//! ```
//!
//! a `gamma`-contraction in the sup norm. The improved policy is the
//! state-wise Gibbs reweighting `pi(a|s) ∝ pi_ref(a|s) exp(Q(s,a) / alpha)`.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::momdp::{Momdp, Policy};

/// Stopping rule for the soft Bellman fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerSolve {
    /// Stop once `||T Q - Q||_inf <= tol`.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for InnerSolve {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_sweeps: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftQ {
    /// `[state][action]`
    pub q: Vec<f64>,
    /// `residuals[n] = ||Q_{n+1} - Q_n||_inf` for every sweep performed.
    pub residuals: Vec<f64>,
}

impl SoftQ {
    pub fn sweeps(&self) -> usize {
        self.residuals.len()
    }

    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(f64::INFINITY)
    }
}

/// `chi(s') = alpha * log sum_b pi(b|s') exp(Q(s',b)/alpha)`, max-shifted.
pub(crate) fn soft_value(q_row: &[f64], pi_row: &[f64], alpha: f64) -> f64 {
    let max = q_row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = q_row
        .iter()
        .zip(pi_row)
        .map(|(q, p)| p * ((q - max) / alpha).exp())
        .sum();
    max + alpha * sum.ln()
}

/// One application of the soft Bellman operator.
pub fn soft_bellman_apply(
    momdp: &Momdp,
    reward: &[f64],
    pi_ref: &Policy,
    alpha: f64,
    q: &[f64],
    out: &mut [f64],
) {
    let (ns, na) = (momdp.n_states(), momdp.n_actions());
    let chi: Vec<f64> = (0..ns)
        .map(|s| soft_value(&q[s * na..(s + 1) * na], pi_ref.row(s), alpha))
        .collect();
    let g = momdp.gamma();
    for s in 0..ns {
        for a in 0..na {
            let next: f64 = momdp
                .transition_row(a, s)
                .iter()
                .zip(&chi)
                .map(|(p, c)| p * c)
                .sum();
            out[s * na + a] = reward[s * na + a] + g * next;
        }
    }
}

/// Solves the soft Bellman fixed point by successive approximation from `q0`
/// (zero when `None`).
pub fn soft_bellman_solve(
    momdp: &Momdp,
    reward: &[f64],
    pi_ref: &Policy,
    alpha: f64,
    opts: &InnerSolve,
    q0: Option<&[f64]>,
) -> Result<SoftQ> {
    let size = momdp.n_states() * momdp.n_actions();
    check_len("scalar reward", size, reward.len())?;
    check_len("reference policy", size, pi_ref.probs().len())?;
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    pi_ref.require_full_support()?;

    let mut q = match q0 {
        Some(q0) => {
            check_len("initial Q", size, q0.len())?;
            q0.to_vec()
        }
        None => vec![0.0; size],
    };
    let mut next = vec![0.0; size];
    let mut residuals = Vec::new();
    for _ in 0..opts.max_sweeps {
        soft_bellman_apply(momdp, reward, pi_ref, alpha, &q, &mut next);
        let residual = q
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut q, &mut next);
        residuals.push(residual);
        if residual <= opts.tol {
            return Ok(SoftQ { q, residuals });
        }
        if !residual.is_finite() {
            break;
        }
    }
    Err(Error::InnerNotConverged {
        tol: opts.tol,
        iters: residuals.len(),
        residual: residuals.last().copied().unwrap_or(f64::NAN),
    })
}

/// `pi(a|s) ∝ pi_ref(a|s) exp(Q(s,a)/alpha)`, normalized per state.
///
/// Entries that underflow to zero are floored at the smallest positive normal
/// `f64`, so the result always has full support.
pub fn multiplicative_improvement(pi_ref: &Policy, q: &[f64], alpha: f64) -> Result<Policy> {
    let (ns, na) = (pi_ref.n_states(), pi_ref.n_actions());
    check_len("Q", ns * na, q.len())?;
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    pi_ref.require_full_support()?;
    let mut w = vec![0.0; ns * na];
    for s in 0..ns {
        let q_row = &q[s * na..(s + 1) * na];
        let max = q_row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let row = &mut w[s * na..(s + 1) * na];
        for ((o, qa), p) in row.iter_mut().zip(q_row).zip(pi_ref.row(s)) {
            *o = p * ((qa - max) / alpha).exp();
        }
        let sum: f64 = row.iter().sum();
        for o in row.iter_mut() {
            *o = (*o / sum).max(f64::MIN_POSITIVE);
        }
    }
    Ok(Policy::from_weights(ns, na, w))
}

//! Planning algorithms over a known MOMDP.
//!
//! * [`value_iteration_linear`]: linear scalarization baseline.
//! * [`cmdpi`]: mirror-descent policy iteration on the STCH utility. Each outer
//!   step re-weights the objectives by the utility gradient at the current
//!   return, solves the soft Bellman fixed point with the current policy as
//!   reference and applies the multiplicative update.
//! * [`capql_planning`]: the same loop with the reference frozen to uniform.

mod certificate;
mod linear;
mod soft;

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

pub use certificate::{
    mirror_descent_certificate, CertificateEntry, CertificateReport, CERTIFICATE_SLACK,
};
pub use linear::{value_iteration_linear, LinearSolution};
pub use soft::{
    multiplicative_improvement, soft_bellman_apply, soft_bellman_solve, InnerSolve, SoftQ,
};

use crate::error::{check_len, Error, Result};
use crate::momdp::{Momdp, ObjectiveVector, Policy};
use crate::scalarization::{linear_utility, stch_gradient, stch_utility, Preference, StchParams};

/// Objective weights used by the CAPQL reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapqlWeights {
    /// Gradient of the STCH utility at the current return (same as CMDPI).
    #[default]
    Stch,
    /// Fixed preference weights, i.e. linear utility.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// KL temperature. `None` means `1 / tau`.
    pub alpha: Option<f64>,
    pub max_outer_iters: usize,
    pub inner: InnerSolve,
    /// Stop once `||J_{k+1} - J_k||_inf <= outer_tol`; `0` runs all `max_outer_iters`.
    pub outer_tol: f64,
    pub rng_seed: u64,
    /// Start each soft Bellman solve from the previous `Q` instead of zero.
    pub warm_start: bool,
    pub capql_weights: CapqlWeights,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha: None,
            max_outer_iters: 2000,
            inner: InnerSolve::default(),
            outer_tol: 1e-9,
            rng_seed: 0,
            warm_start: false,
            capql_weights: CapqlWeights::Stch,
        }
    }
}

impl SolverConfig {
    pub fn alpha_for(&self, tau: f64) -> f64 {
        self.alpha.unwrap_or(1.0 / tau)
    }

    fn check(&self, tau: f64) -> Result<f64> {
        let alpha = self.alpha_for(tau);
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        if !(self.inner.tol > 0.0) || !(self.outer_tol >= 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        Ok(alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
}

/// State of one outer iteration `k`: the policy `pi_k`, its exact return and utility,
/// and the inner solve that produced `pi_{k+1}` (zero residual on the last record).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    pub policy: Policy,
    pub j: ObjectiveVector,
    pub utility: f64,
    /// Objective weights `g_k` used for the scalar reward.
    pub weights: Vec<f64>,
    pub bellman_residual: f64,
    pub inner_sweeps: usize,
    /// `||pi_k - pi_{k-1}||_inf`, zero for `k = 0`.
    pub policy_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub alpha: f64,
    pub records: Vec<TraceRecord>,
    pub final_policy: Policy,
    pub termination: Termination,
}

impl SolveTrace {
    pub fn last(&self) -> &TraceRecord {
        self.records.last().expect("trace always holds the initial record")
    }

    pub fn final_j(&self) -> &ObjectiveVector {
        &self.last().j
    }

    pub fn final_utility(&self) -> f64 {
        self.last().utility
    }

    /// Number of outer updates performed.
    pub fn iterations(&self) -> usize {
        self.records.len() - 1
    }

    pub fn max_utility(&self) -> f64 {
        self.records.iter().map(|r| r.utility).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn write_json(&self, w: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    /// One row per record: `k,utility,J_1..J_m,bellman_residual,policy_delta`.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let m = self.records[0].j.len();
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        let mut header = vec!["k".to_string(), "utility".to_string()];
        header.extend((1..=m).map(|l| format!("J_{l}")));
        header.push("bellman_residual".into());
        header.push("policy_delta".into());
        out.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.k.to_string(), fmt_f64(r.utility)];
            row.extend(r.j.iter().map(|x| fmt_f64(*x)));
            row.push(fmt_f64(r.bellman_residual));
            row.push(fmt_f64(r.policy_delta));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// 17 significant digits, round-trip exact.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Per-state Dirichlet(1, ..., 1) policy, deterministic in `seed`.
pub fn random_policy(momdp: &Momdp, seed: u64) -> Policy {
    let (ns, na) = (momdp.n_states(), momdp.n_actions());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..ns * na)
        .map(|_| {
            let x: f64 = Exp1.sample(&mut rng);
            x.max(f64::MIN_POSITIVE)
        })
        .collect();
    Policy::from_weights(ns, na, w)
}

/// How the outer loop scalarizes and which reference it regularizes toward.
#[derive(Debug, Clone, Copy)]
enum Variant {
    /// STCH gradient weights, previous iterate as reference.
    Cmdpi,
    /// Uniform reference with the given weights.
    Capql(CapqlWeights),
}

pub fn cmdpi(
    momdp: &Momdp,
    pref: &Preference,
    params: &StchParams,
    cfg: &SolverConfig,
    pi0: &Policy,
) -> Result<SolveTrace> {
    outer_loop(momdp, pref, params, cfg, pi0, Variant::Cmdpi)
}

/// CAPQL planning: the CMDPI loop with the reference policy fixed to uniform,
/// started from `random_policy(momdp, cfg.rng_seed)`.
pub fn capql_planning(
    momdp: &Momdp,
    pref: &Preference,
    params: &StchParams,
    cfg: &SolverConfig,
) -> Result<SolveTrace> {
    let pi0 = random_policy(momdp, cfg.rng_seed);
    outer_loop(momdp, pref, params, cfg, &pi0, Variant::Capql(cfg.capql_weights))
}

fn outer_loop(
    momdp: &Momdp,
    pref: &Preference,
    params: &StchParams,
    cfg: &SolverConfig,
    pi0: &Policy,
    variant: Variant,
) -> Result<SolveTrace> {
    let m = momdp.n_objectives();
    check_len("preference", m, pref.dim())?;
    check_len("utopia", m, params.utopia.len())?;
    check_len("initial policy", momdp.n_states() * momdp.n_actions(), pi0.probs().len())?;
    pi0.require_full_support()?;
    let alpha = cfg.check(params.tau)?;
    let uniform = Policy::uniform(momdp.n_states(), momdp.n_actions());

    let linear = matches!(variant, Variant::Capql(CapqlWeights::Linear));
    let utility = |j: &[f64]| -> Result<f64> {
        if linear {
            linear_utility(j, pref)
        } else {
            stch_utility(j, pref, params)
        }
    };
    let weights = |j: &[f64]| -> Result<Vec<f64>> {
        if linear {
            Ok(pref.omega().to_vec())
        } else {
            stch_gradient(j, pref, params)
        }
    };

    let mut pi = pi0.clone();
    let mut j = momdp.objective_vector(&pi)?;
    let mut records = Vec::with_capacity(cfg.max_outer_iters.min(1 << 16) + 1);
    records.push(TraceRecord {
        k: 0,
        policy: pi.clone(),
        utility: utility(&j)?,
        weights: weights(&j)?,
        j: j.clone(),
        bellman_residual: 0.0,
        inner_sweeps: 0,
        policy_delta: 0.0,
    });
    let mut q_prev: Option<Vec<f64>> = None;
    let mut termination = Termination::MaxIterations;

    for k in 0..cfg.max_outer_iters {
        let g = records[k].weights.clone();
        let reward = momdp.scalarized_rewards(&g)?;
        let reference = match variant {
            Variant::Cmdpi => &pi,
            Variant::Capql(_) => &uniform,
        };
        let warm = if cfg.warm_start { q_prev.as_deref() } else { None };
        let sol = soft_bellman_solve(momdp, &reward, reference, alpha, &cfg.inner, warm)?;
        let next = multiplicative_improvement(reference, &sol.q, alpha)?;
        let next_j = momdp.objective_vector(&next)?;

        let current = &mut records[k];
        current.bellman_residual = sol.final_residual();
        current.inner_sweeps = sol.sweeps();

        let delta_j = next_j.max_abs_diff(&j);
        records.push(TraceRecord {
            k: k + 1,
            policy_delta: next.max_abs_diff(&pi),
            policy: next.clone(),
            utility: utility(&next_j)?,
            weights: weights(&next_j)?,
            j: next_j.clone(),
            bellman_residual: 0.0,
            inner_sweeps: 0,
        });
        pi = next;
        j = next_j;
        q_prev = Some(sol.q);
        if delta_j <= cfg.outer_tol {
            termination = Termination::Converged;
            break;
        }
    }

    Ok(SolveTrace {
        alpha,
        records,
        final_policy: pi,
        termination,
    })
}

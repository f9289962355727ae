//! Smooth Tchebycheff and linear utilities over objective vectors.
//!
//! The smooth Tchebycheff (STCH) utility of an objective vector `f` is
//!
//! ```text
//! u(f, w) = -tau * log sum_k exp(w_k (I_k - f_k) / tau)
//! ```
//!
//! where `I` is a utopia point upper-bounding every attainable `f_k`. It is
//! concave and strictly increasing in each coordinate, and tends to the
//! weighted Tchebycheff utility `-max_k w_k (I_k - f_k)` as `tau -> 0`.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::momdp::Momdp;

/// Simplex-sum tolerance for preferences.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// A point on the probability simplex, optionally floored at `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preference {
    omega: Vec<f64>,
    delta: f64,
}

impl Preference {
    pub fn new(omega: Vec<f64>) -> Result<Self> {
        Self::with_floor(omega, 0.0)
    }

    pub fn with_floor(omega: Vec<f64>, delta: f64) -> Result<Self> {
        if omega.is_empty() {
            return Err(Error::InvalidPreference("empty preference".into()));
        }
        if !(delta >= 0.0) {
            return Err(Error::InvalidPreference(format!("negative floor {delta}")));
        }
        let sum: f64 = omega.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidPreference(format!("sums to {sum}")));
        }
        if let Some(w) = omega.iter().find(|w| !(**w >= delta - SIMPLEX_TOL)) {
            return Err(Error::InvalidPreference(format!(
                "entry {w} below floor {delta}"
            )));
        }
        Ok(Self { omega, delta })
    }

    /// Normalizes any non-negative, not-all-zero weight vector onto the simplex.
    pub fn normalized(weights: &[f64]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w >= 0.0)) || !(sum > 0.0) {
            return Err(Error::InvalidPreference(format!(
                "cannot normalize {weights:?}"
            )));
        }
        Self::new(weights.iter().map(|w| w / sum).collect())
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }

    pub fn max_weight(&self) -> f64 {
        self.omega.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_interior(&self) -> bool {
        self.omega.iter().all(|w| *w > 0.0)
    }
}

/// STCH smoothing temperature and utopia point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StchParams {
    pub tau: f64,
    pub utopia: Vec<f64>,
}

impl StchParams {
    pub fn new(tau: f64, utopia: Vec<f64>) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
        }
        Ok(Self { tau, utopia })
    }

    /// Temperature `tau` with the tabular utopia point of `momdp`.
    pub fn for_momdp(momdp: &Momdp, tau: f64) -> Result<Self> {
        Self::new(tau, utopia_from_momdp(momdp))
    }
}

/// Scaled gaps `w_k (I_k - f_k) / tau`.
fn scaled_gaps(f: &[f64], pref: &Preference, params: &StchParams) -> Result<Vec<f64>> {
    check_len("objective vector", pref.dim(), f.len())?;
    check_len("utopia", pref.dim(), params.utopia.len())?;
    Ok(f.iter()
        .zip(&pref.omega)
        .zip(&params.utopia)
        .map(|((f, w), i)| w * (i - f) / params.tau)
        .collect())
}

/// `log sum exp(z)`, shifted by the max for overflow safety.
pub fn log_sum_exp(z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + z.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

pub fn stch_utility(f: &[f64], pref: &Preference, params: &StchParams) -> Result<f64> {
    let z = scaled_gaps(f, pref, params)?;
    Ok(-params.tau * log_sum_exp(&z))
}

/// `grad_f u = w ⊙ softmax(w ⊙ (I - f) / tau)`.
pub fn stch_gradient(f: &[f64], pref: &Preference, params: &StchParams) -> Result<Vec<f64>> {
    let z = scaled_gaps(f, pref, params)?;
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|x| (x - max).exp()).collect();
    let total: f64 = e.iter().sum();
    Ok(e.iter()
        .zip(&pref.omega)
        .map(|(e, w)| w * e / total)
        .collect())
}

/// Weighted Tchebycheff utility `-max_k w_k (I_k - f_k)`, the `tau -> 0` limit of STCH.
pub fn tchebycheff_utility(f: &[f64], pref: &Preference, utopia: &[f64]) -> Result<f64> {
    check_len("objective vector", pref.dim(), f.len())?;
    check_len("utopia", pref.dim(), utopia.len())?;
    Ok(-f
        .iter()
        .zip(&pref.omega)
        .zip(utopia)
        .map(|((f, w), i)| w * (i - f))
        .fold(f64::NEG_INFINITY, f64::max))
}

pub fn linear_utility(f: &[f64], pref: &Preference) -> Result<f64> {
    check_len("objective vector", pref.dim(), f.len())?;
    Ok(f.iter().zip(&pref.omega).map(|(f, w)| f * w).sum())
}

/// Tabular utopia point `I_l = max_{s,a} |r_l(s,a)| / (1 - gamma)`.
///
/// This dominates every attainable `J_l` only when the rewards of objective `l`
/// are sign-constrained; it is not checked here.
pub fn utopia_from_momdp(momdp: &Momdp) -> Vec<f64> {
    let m = momdp.n_objectives();
    let scale = 1.0 / (1.0 - momdp.gamma());
    let mut out = vec![0.0f64; m];
    for r in momdp.rewards().chunks_exact(m) {
        for (o, x) in out.iter_mut().zip(r) {
            *o = o.max(x.abs() * scale);
        }
    }
    out
}

/// Theoretical constants for the preference-to-objective map and the mirror-descent step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    /// Lipschitz constant `U / mu_strong` of `w -> J^w` on the floored simplex.
    pub lipschitz_l: f64,
    /// Relative-smoothness constant of `-u(J(mu))` w.r.t. the conditional entropy, when computed.
    pub rel_smooth_l: Option<f64>,
    /// `I_i - max J_i` per objective.
    pub alpha: Vec<f64>,
    pub alpha_star: f64,
    /// `I_i - min J_i` per objective.
    pub beta: Vec<f64>,
    pub u_bound: f64,
    pub mu_strong: f64,
    pub delta: f64,
    pub tau: f64,
}

/// Lipschitz constant of the STCH optimizer map over `{w : w_i >= delta}`.
///
/// `bounds[i] = (min, max)` of attainable `J_i`. With `alpha_i = I_i - max_i`,
/// `beta_i = I_i - min_i`:
///
/// ```text
/// mu = (delta/tau)^2 exp(delta * min_i alpha_i / tau)
/// U  = max_i (1/tau)(1 + beta_i/tau) exp(beta_i/tau)
/// L  = U / mu
/// ```
pub fn lipschitz_constant(
    bounds: &[(f64, f64)],
    utopia: &[f64],
    delta: f64,
    tau: f64,
) -> Result<ConstantsReport> {
    check_len("utopia", bounds.len(), utopia.len())?;
    if bounds.is_empty() {
        return Err(Error::Empty("objective bounds"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta {delta} not in (0,1)")));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    let alpha: Vec<f64> = bounds.iter().zip(utopia).map(|((_, hi), i)| i - hi).collect();
    let beta: Vec<f64> = bounds.iter().zip(utopia).map(|((lo, _), i)| i - lo).collect();
    if let Some((index, &gap)) = alpha.iter().enumerate().find(|(_, a)| !(**a > 0.0)) {
        return Err(Error::NonDominatingUtopia { index, gap });
    }
    let alpha_star = alpha.iter().copied().fold(f64::INFINITY, f64::min);
    let mu_strong = (delta / tau).powi(2) * (delta * alpha_star / tau).exp();
    let u_bound = beta
        .iter()
        .map(|b| (1.0 + b / tau) * (b / tau).exp() / tau)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ConstantsReport {
        lipschitz_l: u_bound / mu_strong,
        rel_smooth_l: None,
        alpha,
        alpha_star,
        beta,
        u_bound,
        mu_strong,
        delta,
        tau,
    })
}

/// `L_rel = w_max^2 R_{1,max}^2 / (4 tau (1 - gamma)^4)` with `R_{1,max} = max_{s,a} ||r(s,a)||_1`.
pub fn relative_smoothness_constant(momdp: &Momdp, pref: &Preference, tau: f64) -> Result<f64> {
    check_len("preference", momdp.n_objectives(), pref.dim())?;
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    let r1 = momdp
        .rewards()
        .chunks_exact(momdp.n_objectives())
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let w = pref.max_weight();
    Ok(w * w * r1 * r1 / (4.0 * tau * (1.0 - momdp.gamma()).powi(4)))
}

/// Deterministic, equally spaced preferences on the `m`-simplex.
///
/// Points are the lattice `{k / (n - 1)}` with `sum k = n - 1`, ordered
/// lexicographically by `k` (for `m = 2`: `(i/(n-1), 1 - i/(n-1))`,
/// `i = 0..n`). With `delta > 0` each point is mapped affinely into the
/// floored simplex, `w -> delta + (1 - m delta) w`, which keeps spacing equal
/// and every entry at least `delta`.
pub fn preference_grid(n: usize, m: usize, delta: f64) -> Result<Vec<Preference>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("grid needs n >= 2, got {n}")));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("grid needs m >= 1".into()));
    }
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter(format!("negative floor {delta}")));
    }
    let total = m as f64 * delta;
    if total > 1.0 {
        return Err(Error::InfeasibleFloor { m, total });
    }
    let steps = n - 1;
    let shrink = 1.0 - total;
    let mut out = Vec::new();
    let mut counts = vec![0usize; m];
    lattice(&mut counts, 0, steps, &mut |k| {
        let omega: Vec<f64> = k
            .iter()
            .map(|&k| delta + shrink * (k as f64 / steps as f64))
            .collect();
        out.push(omega);
    });
    out.into_iter()
        .map(|w| {
            // re-project rounding error so the simplex check holds exactly
            let sum: f64 = w.iter().sum();
            let w = w.into_iter().map(|x| x / sum).collect();
            Preference::with_floor(w, delta)
        })
        .collect()
}

fn lattice(counts: &mut [usize], pos: usize, remaining: usize, emit: &mut dyn FnMut(&[usize])) {
    if pos + 1 == counts.len() {
        counts[pos] = remaining;
        emit(counts);
        return;
    }
    for k in 0..=remaining {
        counts[pos] = k;
        lattice(counts, pos + 1, remaining - k, emit);
    }
}

//! Finite discounted multi-objective MDPs and their exact evaluation.
//!
//! Every quantity here is computed by dense linear solves, so results carry no
//! iteration tolerance. Layouts are flat and row-major:
//! kernel is `[action][state][next_state]`, rewards are `[state][action][objective]`,
//! policies are `[state][action]`.

use std::fs;
use std::ops::Deref;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Row-sum tolerance for stochastic vectors and matrices.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Largest number of deterministic policies `deterministic_policies` will build by default.
pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Momdp {
    n_states: usize,
    n_actions: usize,
    n_objectives: usize,
    gamma: f64,
    p0: Vec<f64>,
    kernel: Vec<f64>,
    rewards: Vec<f64>,
}

impl Momdp {
    /// Builds and validates an environment from flat arrays (see module docs for layout).
    pub fn new(
        n_states: usize,
        n_actions: usize,
        n_objectives: usize,
        gamma: f64,
        p0: Vec<f64>,
        kernel: Vec<f64>,
        rewards: Vec<f64>,
    ) -> Result<Self> {
        let momdp = Self {
            n_states,
            n_actions,
            n_objectives,
            gamma,
            p0,
            kernel,
            rewards,
        };
        momdp.validate()?;
        Ok(momdp)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with(STOCHASTIC_TOL)
    }

    /// Checks every structural invariant, reporting the first violation found.
    pub fn validate_with(&self, tol: f64) -> Result<()> {
        let (ns, na, m) = (self.n_states, self.n_actions, self.n_objectives);
        if ns == 0 || na == 0 || m == 0 {
            return Err(Error::InvalidMomdp(format!(
                "sizes must be positive (states {ns}, actions {na}, objectives {m})"
            )));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidMomdp(format!(
                "gamma {} not in (0,1)",
                self.gamma
            )));
        }
        check_len("p0", ns, self.p0.len())?;
        check_len("kernel", na * ns * ns, self.kernel.len())?;
        check_len("rewards", ns * na * m, self.rewards.len())?;

        for a in 0..na {
            for s in 0..ns {
                let row = self.transition_row(a, s);
                if let Some(bad) = row.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
                    return Err(Error::InvalidMomdp(format!(
                        "row not stochastic: P[{a}][{s}] has entry {bad}"
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > tol {
                    return Err(Error::InvalidMomdp(format!(
                        "row not stochastic: P[{a}][{s}] sums to {sum}"
                    )));
                }
            }
        }

        let p0_sum: f64 = self.p0.iter().sum();
        if self.p0.iter().any(|p| !p.is_finite() || *p < 0.0) || (p0_sum - 1.0).abs() > tol {
            return Err(Error::InvalidMomdp(format!(
                "p0 not a distribution (sum {p0_sum})"
            )));
        }
        if let Some(s) = self.p0.iter().position(|p| *p <= 0.0) {
            return Err(Error::InvalidMomdp(format!(
                "p0 not full support: p0[{s}] = 0"
            )));
        }
        if let Some(r) = self.rewards.iter().find(|r| !r.is_finite()) {
            return Err(Error::InvalidMomdp(format!("reward not finite: {r}")));
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_objectives(&self) -> usize {
        self.n_objectives
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn p0(&self) -> &[f64] {
        &self.p0
    }

    /// `P(· | s, a)` as a slice over next states.
    pub fn transition_row(&self, a: usize, s: usize) -> &[f64] {
        let ns = self.n_states;
        let start = (a * ns + s) * ns;
        &self.kernel[start..start + ns]
    }

    pub fn reward(&self, s: usize, a: usize) -> &[f64] {
        let m = self.n_objectives;
        let start = (s * self.n_actions + a) * m;
        &self.rewards[start..start + m]
    }

    /// All rewards, `[state][action][objective]`.
    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    /// Returns a copy with a replacement reward table, `[state][action][objective]`.
    pub fn with_rewards(&self, n_objectives: usize, rewards: Vec<f64>) -> Result<Self> {
        Self::new(
            self.n_states,
            self.n_actions,
            n_objectives,
            self.gamma,
            self.p0.clone(),
            self.kernel.clone(),
            rewards,
        )
    }

    /// Returns a copy with a different discount factor.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        let mut out = self.clone();
        out.gamma = gamma;
        out.validate()?;
        Ok(out)
    }

    /// Scalar reward `<w, r(s,a)>`, `[state][action]`.
    pub fn scalarized_rewards(&self, weights: &[f64]) -> Result<Vec<f64>> {
        check_len("reward weights", self.n_objectives, weights.len())?;
        Ok(self
            .rewards
            .chunks_exact(self.n_objectives)
            .map(|r| dot(r, weights))
            .collect())
    }

    fn check_policy(&self, pi: &Policy) -> Result<()> {
        check_len("policy states", self.n_states, pi.n_states)?;
        check_len("policy actions", self.n_actions, pi.n_actions)
    }

    /// `P_pi(s, s') = sum_a pi(a|s) P(s'|s,a)`, row-major.
    pub fn induced_kernel(&self, pi: &Policy) -> Result<Vec<f64>> {
        self.check_policy(pi)?;
        let ns = self.n_states;
        let mut out = vec![0.0; ns * ns];
        for s in 0..ns {
            let row = &mut out[s * ns..(s + 1) * ns];
            for (a, &p) in pi.row(s).iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for (o, t) in row.iter_mut().zip(self.transition_row(a, s)) {
                    *o += p * t;
                }
            }
        }
        Ok(out)
    }

    /// Discounted state occupancy: solves `(I - gamma P_pi^T) rho = (1 - gamma) p0`.
    pub fn state_occupancy(&self, pi: &Policy) -> Result<Vec<f64>> {
        let ns = self.n_states;
        let kernel = self.induced_kernel(pi)?;
        let g = self.gamma;
        let a = DMatrix::from_fn(ns, ns, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            id - g * kernel[j * ns + i]
        });
        let b = DVector::from_iterator(ns, self.p0.iter().map(|p| (1.0 - g) * p));
        let rho = a.lu().solve(&b).ok_or(Error::Singular)?;
        Ok(rho.iter().copied().collect())
    }

    pub fn occupancy_measure(&self, pi: &Policy) -> Result<OccupancyMeasure> {
        let rho = self.state_occupancy(pi)?;
        let na = self.n_actions;
        let mut mu = vec![0.0; self.n_states * na];
        for (s, r) in rho.iter().enumerate() {
            for (a, p) in pi.row(s).iter().enumerate() {
                mu[s * na + a] = r * p;
            }
        }
        Ok(OccupancyMeasure {
            n_states: self.n_states,
            n_actions: na,
            mu,
            rho,
        })
    }

    /// `J(mu) = (1/(1-gamma)) sum_{s,a} mu(s,a) r(s,a)` for an arbitrary occupancy measure.
    pub fn objective_of_occupancy(&self, occ: &OccupancyMeasure) -> Result<ObjectiveVector> {
        check_len("occupancy", self.n_states * self.n_actions, occ.mu.len())?;
        let m = self.n_objectives;
        let mut j = vec![0.0; m];
        for (mu, r) in occ.mu.iter().zip(self.rewards.chunks_exact(m)) {
            for (jl, rl) in j.iter_mut().zip(r) {
                *jl += mu * rl;
            }
        }
        let scale = 1.0 / (1.0 - self.gamma);
        Ok(ObjectiveVector(j.into_iter().map(|x| x * scale).collect()))
    }

    /// Exact vector return of `pi`, via the occupancy measure.
    pub fn objective_vector(&self, pi: &Policy) -> Result<ObjectiveVector> {
        let occ = self.occupancy_measure(pi)?;
        self.objective_of_occupancy(&occ)
    }

    /// Exact vector return via per-objective policy evaluation,
    /// `(I - gamma P_pi) V_l = r_l^pi`, averaged under `p0`.
    pub fn objective_vector_by_values(&self, pi: &Policy) -> Result<ObjectiveVector> {
        let values = self.policy_values(pi)?;
        let (ns, m) = (self.n_states, self.n_objectives);
        let j = (0..m)
            .map(|l| (0..ns).map(|s| self.p0[s] * values[s * m + l]).sum())
            .collect();
        Ok(ObjectiveVector(j))
    }

    /// Vector value function `V^pi`, `[state][objective]`.
    pub fn policy_values(&self, pi: &Policy) -> Result<Vec<f64>> {
        let (ns, m) = (self.n_states, self.n_objectives);
        let kernel = self.induced_kernel(pi)?;
        let g = self.gamma;
        let a = DMatrix::from_fn(ns, ns, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            id - g * kernel[i * ns + j]
        });
        let b = DMatrix::from_fn(ns, m, |s, l| {
            pi.row(s)
                .iter()
                .enumerate()
                .map(|(a, p)| p * self.reward(s, a)[l])
                .sum()
        });
        let v = a.lu().solve(&b).ok_or(Error::Singular)?;
        let mut out = vec![0.0; ns * m];
        for s in 0..ns {
            for l in 0..m {
                out[s * m + l] = v[(s, l)];
            }
        }
        Ok(out)
    }

    /// All `|A|^|S|` deterministic policies, state 0 as the most significant digit.
    pub fn deterministic_policies(&self, cap: usize) -> Result<Vec<Policy>> {
        let (ns, na) = (self.n_states, self.n_actions);
        let count = (na as f64).powi(ns as i32);
        if count > cap as f64 {
            return Err(Error::EnumerationCap { count, cap });
        }
        let count = count as usize;
        let mut out = Vec::with_capacity(count);
        let mut actions = vec![0usize; ns];
        for idx in 0..count {
            let mut rest = idx;
            for s in (0..ns).rev() {
                actions[s] = rest % na;
                rest /= na;
            }
            out.push(Policy::deterministic(na, &actions)?);
        }
        Ok(out)
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: MomdpJson = serde_json::from_str(text)?;
        raw.try_into()
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&MomdpJson::from(self))?)
    }
}

/// On-disk form. `kernel` holds one matrix per action, either as nested rows or
/// as a flat row-major array; rewards are listed per `(s, a)`, state-major.
#[derive(Debug, Serialize, Deserialize)]
struct MomdpJson {
    n_states: usize,
    n_actions: usize,
    n_objectives: usize,
    gamma: f64,
    p0: Vec<f64>,
    kernel: Vec<KernelMatrix>,
    rewards: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum KernelMatrix {
    Rows(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

impl TryFrom<MomdpJson> for Momdp {
    type Error = Error;

    fn try_from(raw: MomdpJson) -> Result<Self> {
        let ns = raw.n_states;
        check_len("kernel actions", raw.n_actions, raw.kernel.len())?;
        let mut kernel = Vec::with_capacity(raw.n_actions * ns * ns);
        for matrix in raw.kernel {
            match matrix {
                KernelMatrix::Rows(rows) => {
                    check_len("kernel rows", ns, rows.len())?;
                    for row in rows {
                        check_len("kernel row", ns, row.len())?;
                        kernel.extend(row);
                    }
                }
                KernelMatrix::Flat(flat) => {
                    check_len("kernel matrix", ns * ns, flat.len())?;
                    kernel.extend(flat);
                }
            }
        }
        check_len("rewards", ns * raw.n_actions, raw.rewards.len())?;
        let mut rewards = Vec::with_capacity(ns * raw.n_actions * raw.n_objectives);
        for r in raw.rewards {
            check_len("reward vector", raw.n_objectives, r.len())?;
            rewards.extend(r);
        }
        Momdp::new(
            ns,
            raw.n_actions,
            raw.n_objectives,
            raw.gamma,
            raw.p0,
            kernel,
            rewards,
        )
    }
}

impl From<&Momdp> for MomdpJson {
    fn from(m: &Momdp) -> Self {
        let ns = m.n_states;
        let kernel = (0..m.n_actions)
            .map(|a| {
                KernelMatrix::Rows((0..ns).map(|s| m.transition_row(a, s).to_vec()).collect())
            })
            .collect();
        let rewards = m
            .rewards
            .chunks_exact(m.n_objectives)
            .map(<[f64]>::to_vec)
            .collect();
        Self {
            n_states: ns,
            n_actions: m.n_actions,
            n_objectives: m.n_objectives,
            gamma: m.gamma,
            p0: m.p0.clone(),
            kernel,
            rewards,
        }
    }
}

/// Stationary randomized policy, row-stochastic over actions for every state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Policy {
    n_states: usize,
    n_actions: usize,
    probs: Vec<f64>,
}

impl Policy {
    pub fn new(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Result<Self> {
        check_len("policy", n_states * n_actions, probs.len())?;
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidPolicy("empty policy".into()));
        }
        for (s, row) in probs.chunks_exact(n_actions).enumerate() {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::InvalidPolicy(format!(
                    "row {s} has a negative or non-finite entry"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidPolicy(format!("row {s} sums to {sum}")));
            }
        }
        Ok(Self {
            n_states,
            n_actions,
            probs,
        })
    }

    /// Normalizes each row of non-negative weights into a distribution.
    pub(crate) fn from_weights(n_states: usize, n_actions: usize, mut w: Vec<f64>) -> Self {
        for row in w.chunks_exact_mut(n_actions) {
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|x| *x /= sum);
        }
        Self {
            n_states,
            n_actions,
            probs: w,
        }
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            probs: vec![1.0 / n_actions as f64; n_states * n_actions],
        }
    }

    /// One unit entry per state at `actions[s]`.
    pub fn deterministic(n_actions: usize, actions: &[usize]) -> Result<Self> {
        let mut probs = vec![0.0; actions.len() * n_actions];
        for (s, &a) in actions.iter().enumerate() {
            if a >= n_actions {
                return Err(Error::InvalidPolicy(format!(
                    "action {a} out of range at state {s}"
                )));
            }
            probs[s * n_actions + a] = 1.0;
        }
        Self::new(actions.len(), n_actions, probs)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.n_actions + a]
    }

    pub fn is_full_support(&self) -> bool {
        self.probs.iter().all(|p| *p > 0.0)
    }

    pub fn require_full_support(&self) -> Result<()> {
        match self.probs.iter().position(|p| *p <= 0.0) {
            None => Ok(()),
            Some(i) => Err(Error::NotFullSupport {
                state: i / self.n_actions,
                action: i % self.n_actions,
                value: self.probs[i],
            }),
        }
    }

    /// `max_{s,a} |pi(a|s) - other(a|s)|`.
    pub fn max_abs_diff(&self, other: &Policy) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<Vec<f64>>> for Policy {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        let ns = rows.len();
        let na = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != na) {
            return Err(Error::InvalidPolicy("ragged rows".into()));
        }
        Self::new(ns, na, rows.concat())
    }
}

impl From<Policy> for Vec<Vec<f64>> {
    fn from(p: Policy) -> Self {
        p.probs.chunks_exact(p.n_actions).map(<[f64]>::to_vec).collect()
    }
}

/// Discounted state-action occupancy measure `mu` with its state marginal `rho`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyMeasure {
    pub n_states: usize,
    pub n_actions: usize,
    /// `[state][action]`
    pub mu: Vec<f64>,
    pub rho: Vec<f64>,
}

impl OccupancyMeasure {
    /// Builds from `mu` alone, recomputing the marginal.
    pub fn from_mu(n_states: usize, n_actions: usize, mu: Vec<f64>) -> Result<Self> {
        check_len("occupancy", n_states * n_actions, mu.len())?;
        let rho = mu.chunks_exact(n_actions).map(|r| r.iter().sum()).collect();
        Ok(Self {
            n_states,
            n_actions,
            mu,
            rho,
        })
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.mu[s * self.n_actions + a]
    }

    pub fn total_mass(&self) -> f64 {
        self.mu.iter().sum()
    }

    pub fn is_interior(&self) -> bool {
        self.mu.iter().all(|m| *m > 0.0)
    }

    /// Conditional policy `pi_mu(a|s) = mu(s,a) / rho(s)`.
    pub fn policy(&self) -> Result<Policy> {
        let na = self.n_actions;
        let mut probs = Vec::with_capacity(self.mu.len());
        for (s, row) in self.mu.chunks_exact(na).enumerate() {
            let rho: f64 = row.iter().sum();
            if !(rho > 0.0) {
                return Err(Error::ZeroMarginal { state: s });
            }
            probs.extend(row.iter().map(|m| m / rho));
        }
        Ok(Policy::from_weights(self.n_states, na, probs))
    }
}

/// Vector of expected discounted returns, one entry per objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectiveVector(pub Vec<f64>);

impl ObjectiveVector {
    pub fn max_abs_diff(&self, other: &ObjectiveVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn distance(&self, other: &ObjectiveVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

impl Deref for ObjectiveVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ObjectiveVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::toy_momdp;

    fn single_state(n_actions: usize, gamma: f64, rewards: Vec<f64>) -> Momdp {
        let m = rewards.len() / n_actions;
        Momdp::new(1, n_actions, m, gamma, vec![1.0], vec![1.0; n_actions], rewards).unwrap()
    }

    #[test]
    fn toy_env_validates() {
        toy_momdp().validate().unwrap();
    }

    #[test]
    fn p0_without_full_support_is_rejected() {
        let toy = toy_momdp();
        let mut raw: serde_json::Value = serde_json::from_str(&toy.to_json_string().unwrap()).unwrap();
        raw["p0"] = serde_json::json!([1.0, 0.0, 0.0, 0.0]);
        let err = Momdp::from_json_str(&raw.to_string()).unwrap_err();
        assert!(err.to_string().contains("p0 not full support"), "{err}");
    }

    #[test]
    fn short_row_is_rejected() {
        let toy = toy_momdp();
        let mut raw: serde_json::Value = serde_json::from_str(&toy.to_json_string().unwrap()).unwrap();
        raw["kernel"][1][2] = serde_json::json!([0.0, 0.1, 0.0, 0.8]);
        let err = Momdp::from_json_str(&raw.to_string()).unwrap_err();
        assert!(err.to_string().contains("row not stochastic"), "{err}");
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let err = Momdp::new(2, 1, 1, 0.5, vec![0.5, 0.5], vec![1.0, 0.0, 0.0], vec![0.0; 2])
            .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { what: "kernel", .. }));
    }

    #[test]
    fn json_accepts_flat_kernel_matrices() {
        let text = r#"{"n_states":2,"n_actions":1,"n_objectives":1,"gamma":0.9,
            "p0":[0.5,0.5],"kernel":[[0.0,1.0,1.0,0.0]],"rewards":[[1.0],[2.0]]}"#;
        let m = Momdp::from_json_str(text).unwrap();
        assert_eq!(m.transition_row(0, 0), &[0.0, 1.0]);
        let back = Momdp::from_json_str(&m.to_json_string().unwrap()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn induced_kernel_selects_and_mixes_actions() {
        let toy = toy_momdp();
        let all_left = Policy::deterministic(2, &[0, 0, 0, 0]).unwrap();
        let k = toy.induced_kernel(&all_left).unwrap();
        for s in 0..4 {
            assert_eq!(&k[s * 4..s * 4 + 4], toy.transition_row(0, s));
        }
        let k = toy.induced_kernel(&Policy::uniform(4, 2)).unwrap();
        for s in 0..4 {
            for t in 0..4 {
                let want = 0.5 * toy.transition_row(0, s)[t] + 0.5 * toy.transition_row(1, s)[t];
                assert_eq!(k[s * 4 + t], want);
            }
            let sum: f64 = k[s * 4..s * 4 + 4].iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn single_state_occupancy_is_one() {
        let m = single_state(1, 0.9, vec![3.0]);
        let pi = Policy::uniform(1, 1);
        assert_eq!(m.state_occupancy(&pi).unwrap(), vec![1.0]);
        let occ = m.occupancy_measure(&pi).unwrap();
        assert!((occ.get(0, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn always_left_occupancy_ordering() {
        // Independent route: iterate rho <- (1-g) p0 + g P^T rho to its fixed point.
        let toy = toy_momdp();
        let pi = Policy::deterministic(2, &[0, 0, 0, 0]).unwrap();
        let rho = toy.state_occupancy(&pi).unwrap();
        let k = toy.induced_kernel(&pi).unwrap();
        let mut it = vec![0.25; 4];
        for _ in 0..400 {
            let mut next: Vec<f64> = toy.p0().iter().map(|p| 0.2 * p).collect();
            for s in 0..4 {
                for t in 0..4 {
                    next[t] += 0.8 * it[s] * k[s * 4 + t];
                }
            }
            it = next;
        }
        for (a, b) in rho.iter().zip(&it) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(rho[0] > rho[1] && rho[1] > rho[2] && rho[2] >= rho[3]);
        assert!((rho[3] - 0.2 * 0.25).abs() < 1e-15);
    }

    #[test]
    fn always_left_objective_matches_hand_recursion() {
        let toy = toy_momdp();
        let pi = Policy::deterministic(2, &[0, 0, 0, 0]).unwrap();
        let j = toy.objective_vector(&pi).unwrap();
        assert!((j[0] - 0.25).abs() < 1e-12, "{j:?}");
        assert!((j[1] - 1.94).abs() < 1e-12, "{j:?}");
        let jv = toy.objective_vector_by_values(&pi).unwrap();
        assert!(j.max_abs_diff(&jv) < 1e-12);
    }

    #[test]
    fn zero_rewards_give_zero_objective() {
        let toy = toy_momdp();
        let zero = toy.with_rewards(2, vec![0.0; 16]).unwrap();
        let j = zero.objective_vector(&Policy::uniform(4, 2)).unwrap();
        assert_eq!(j.0, vec![0.0, 0.0]);
    }

    #[test]
    fn uniform_occupancy_matches_truncated_series() {
        // (1-g) sum_t g^t Pr(s_t, a_t), 200 steps of the forward recursion
        let toy = toy_momdp();
        let pi = Policy::uniform(4, 2);
        let k = toy.induced_kernel(&pi).unwrap();
        let mut d = toy.p0().to_vec();
        let mut mu = vec![0.0; 8];
        let mut w = 0.2;
        for _ in 0..200 {
            for s in 0..4 {
                for a in 0..2 {
                    mu[s * 2 + a] += w * d[s] * pi.prob(s, a);
                }
            }
            let mut next = vec![0.0; 4];
            for s in 0..4 {
                for t in 0..4 {
                    next[t] += d[s] * k[s * 4 + t];
                }
            }
            d = next;
            w *= 0.8;
        }
        let occ = toy.occupancy_measure(&pi).unwrap();
        for (a, b) in occ.mu.iter().zip(&mu) {
            assert!((a - b).abs() < 1e-8);
        }
        assert!((occ.total_mass() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_marginal_is_rejected() {
        let occ = OccupancyMeasure::from_mu(2, 2, vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!(matches!(occ.policy(), Err(Error::ZeroMarginal { state: 1 })));
    }

    #[test]
    fn uniform_round_trips_through_occupancy() {
        let toy = toy_momdp();
        let pi = Policy::uniform(4, 2);
        let back = toy.occupancy_measure(&pi).unwrap().policy().unwrap();
        assert!(back.max_abs_diff(&pi) < 1e-12);
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(toy_momdp().deterministic_policies(DEFAULT_ENUMERATION_CAP).unwrap().len(), 16);
        let one = single_state(3, 0.5, vec![0.0; 3]);
        let pols = one.deterministic_policies(DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(pols.len(), 3);
        for p in toy_momdp().deterministic_policies(16).unwrap() {
            for s in 0..4 {
                assert_eq!(p.row(s).iter().filter(|x| **x == 1.0).count(), 1);
            }
        }
        assert!(matches!(
            toy_momdp().deterministic_policies(15),
            Err(Error::EnumerationCap { .. })
        ));
    }

    #[test]
    fn policy_rows_must_be_stochastic() {
        assert!(Policy::new(1, 2, vec![0.5, 0.6]).is_err());
        assert!(Policy::new(1, 2, vec![-0.1, 1.1]).is_err());
        let p: Policy = serde_json::from_str("[[0.25,0.75]]").unwrap();
        assert_eq!(p.prob(0, 1), 0.75);
    }
}

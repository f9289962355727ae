use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use crate::analysis::{
    adjacent_pairs, bregman_divergence, lipschitz_empirical, objective_bounds,
    occupancy_weighted_kl,
};
use crate::error::{Error, Result};
use crate::momdp::{Momdp, ObjectiveVector, Policy};
use crate::par::{self, Jobs};
use crate::scalarization::{
    lipschitz_constant, preference_grid, relative_smoothness_constant,
    Preference, StchParams,
};
use crate::solvers::{cmdpi, mirror_descent_certificate, random_policy, SolverConfig, SolveTrace};

use super::envs::random_momdp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Uniqueness,
    Lipschitz,
    Bregman,
    Rate,
    Continuity,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Uniqueness,
        Suite::Lipschitz,
        Suite::Bregman,
        Suite::Rate,
        Suite::Continuity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Uniqueness => "uniqueness",
            Suite::Lipschitz => "lipschitz",
            Suite::Bregman => "bregman",
            Suite::Rate => "rate",
            Suite::Continuity => "continuity",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown suite `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub suites: Vec<Suite>,
    pub tau: f64,
    /// Outer iteration cap for runs meant to converge (uniqueness, Lipschitz).
    pub outer_iters: usize,
    pub uniqueness_seeds: u64,
    pub uniqueness_gap: f64,
    pub lipschitz_delta: f64,
    pub lipschitz_prefs: usize,
    pub bregman_pairs: u64,
    pub bregman_tol: f64,
    /// Iterations of the certified run; the comparator runs ten times longer.
    pub rate_iters: usize,
    pub continuity_k: usize,
    /// Coarse grid size `n`; the fine grid has `2n - 1` points.
    pub continuity_prefs: usize,
    /// Accepted range of `gap(h) / gap(h/2)`.
    pub continuity_window: (f64, f64),
    pub jobs: Jobs,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            suites: Suite::ALL.to_vec(),
            tau: 0.1,
            outer_iters: 10_000,
            uniqueness_seeds: 20,
            uniqueness_gap: 1e-5,
            lipschitz_delta: 0.05,
            lipschitz_prefs: 100,
            bregman_pairs: 100,
            bregman_tol: 1e-9,
            rate_iters: 100,
            continuity_k: 50,
            continuity_prefs: 11,
            continuity_window: (0.5, 8.0),
            jobs: Jobs::ALL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyEntry {
    pub suite: Suite,
    pub metric: String,
    pub bound: f64,
    pub measured: f64,
    pub pass: bool,
    /// Set when the suite could not be evaluated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub entries: Vec<VerifyEntry>,
    pub all_pass: bool,
}

impl VerifyReport {
    pub fn write_json(&self, w: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn entry(&self, suite: Suite) -> Option<&VerifyEntry> {
        self.entries.iter().find(|e| e.suite == suite)
    }
}

/// Runs the selected verifier suites. Suite failures, including numerical
/// errors inside a suite, become failing entries rather than errors.
pub fn verify_all(env: &Momdp, cfg: &VerifyConfig) -> VerifyReport {
    let mut suites = cfg.suites.clone();
    suites.sort();
    suites.dedup();
    let entries: Vec<VerifyEntry> = suites
        .into_iter()
        .map(|suite| {
            let (metric, default_bound) = describe(suite, cfg);
            match run_suite(suite, env, cfg) {
                Ok((measured, bound, pass)) => VerifyEntry {
                    suite,
                    metric,
                    bound,
                    measured,
                    pass,
                    error: None,
                },
                Err(e) => VerifyEntry {
                    suite,
                    metric,
                    bound: default_bound,
                    measured: f64::NAN,
                    pass: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let all_pass = entries.iter().all(|e| e.pass);
    VerifyReport { entries, all_pass }
}

fn describe(suite: Suite, cfg: &VerifyConfig) -> (String, f64) {
    match suite {
        Suite::Uniqueness => ("max pairwise final J distance across inits".into(), cfg.uniqueness_gap),
        Suite::Lipschitz => ("max adjacent |dJ| / |dw| against the theoretical constant".into(), f64::NAN),
        Suite::Bregman => ("max |KL - Bregman| over policy pairs".into(), cfg.bregman_tol),
        Suite::Rate => ("max_k (gap_k - L_rel D0 / k) within slack".into(), crate::solvers::CERTIFICATE_SLACK),
        Suite::Continuity => (
            format!(
                "coarse/fine max adjacent policy gap ratio in [{}, {}]",
                cfg.continuity_window.0, cfg.continuity_window.1
            ),
            cfg.continuity_window.0,
        ),
    }
}

/// `(measured, bound, pass)` of one suite.
fn run_suite(suite: Suite, env: &Momdp, cfg: &VerifyConfig) -> Result<(f64, f64, bool)> {
    match suite {
        Suite::Uniqueness => {
            let gap = uniqueness_gap(env, cfg)?;
            Ok((gap, cfg.uniqueness_gap, gap <= cfg.uniqueness_gap))
        }
        Suite::Lipschitz => {
            let (ratio, l) = lipschitz_check(env, cfg)?;
            Ok((ratio, l, ratio <= l))
        }
        Suite::Bregman => {
            let gap = bregman_identity_gap(env, cfg)?;
            Ok((gap, cfg.bregman_tol, gap <= cfg.bregman_tol))
        }
        Suite::Rate => {
            let (excess, violations) = rate_certificate(env, cfg)?;
            Ok((excess, crate::solvers::CERTIFICATE_SLACK, violations == 0))
        }
        Suite::Continuity => {
            let ratio = continuity_ratio(env, cfg)?;
            let (lo, hi) = cfg.continuity_window;
            Ok((ratio, lo, ratio >= lo && ratio <= hi))
        }
    }
}

fn converged_cfg(cfg: &VerifyConfig) -> SolverConfig {
    SolverConfig {
        max_outer_iters: cfg.outer_iters,
        warm_start: true,
        ..Default::default()
    }
}

/// Five interior preferences spread over the simplex.
fn interior_preferences(m: usize) -> Result<Vec<Preference>> {
    let mut n = 2;
    let mut grid = preference_grid(n, m, 0.1)?;
    while grid.len() < 5 {
        n += 1;
        grid = preference_grid(n, m, 0.1)?;
    }
    let len = grid.len();
    Ok((0..5).map(|i| grid[i * (len - 1) / 4].clone()).collect())
}

/// Largest Euclidean distance between final objective vectors of CMDPI runs
/// started from different random policies, over five preferences.
pub fn uniqueness_gap(env: &Momdp, cfg: &VerifyConfig) -> Result<f64> {
    let params = StchParams::for_momdp(env, cfg.tau)?;
    let solver = converged_cfg(cfg);
    let prefs = interior_preferences(env.n_objectives())?;
    let jobs: Vec<(usize, u64)> = (0..prefs.len())
        .flat_map(|p| (0..cfg.uniqueness_seeds).map(move |s| (p, s)))
        .collect();
    let finals = par::map(&jobs, cfg.jobs, |&(p, seed)| {
        cmdpi(env, &prefs[p], &params, &solver, &random_policy(env, seed)).map(|t| t.final_j().clone())
    })
    .into_iter()
    .collect::<Result<Vec<ObjectiveVector>>>()?;
    let per = cfg.uniqueness_seeds as usize;
    let mut worst: f64 = 0.0;
    for group in finals.chunks(per.max(1)) {
        for (i, a) in group.iter().enumerate() {
            for b in &group[i + 1..] {
                worst = worst.max(a.distance(b));
            }
        }
    }
    Ok(worst)
}

/// Converged CMDPI objectives over the floored grid against the theoretical
/// constant built from the achievable objective range. Returns `(ratio, L)`.
pub fn lipschitz_check(env: &Momdp, cfg: &VerifyConfig) -> Result<(f64, f64)> {
    let params = StchParams::for_momdp(env, cfg.tau)?;
    let bounds = objective_bounds(env)?;
    let l = lipschitz_constant(&bounds, &params.utopia, cfg.lipschitz_delta, cfg.tau)?.lipschitz_l;
    let prefs = preference_grid(cfg.lipschitz_prefs, env.n_objectives(), cfg.lipschitz_delta)?;
    let solver = converged_cfg(cfg);
    let pi0 = random_policy(env, 0);
    let sweep = par::map(&prefs, cfg.jobs, |p| {
        cmdpi(env, p, &params, &solver, &pi0).map(|t| (p.clone(), t.final_j().clone()))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok((lipschitz_empirical(&sweep, l)?.max_ratio, l))
}

/// Largest `|KL - Bregman|` over random full-support policy pairs on `env`
/// and two random environments of the same shape.
pub fn bregman_identity_gap(env: &Momdp, cfg: &VerifyConfig) -> Result<f64> {
    let (ns, na, m, g) = (env.n_states(), env.n_actions(), env.n_objectives(), env.gamma());
    let envs = vec![
        env.clone(),
        random_momdp(ns, na, m, g, 1)?,
        random_momdp(ns, na, m, g, 2)?,
    ];
    let mut worst: f64 = 0.0;
    for e in &envs {
        for pair in 0..cfg.bregman_pairs {
            let pi = random_policy(e, 2 * pair);
            let pi_ref = random_policy(e, 2 * pair + 1);
            let kl = occupancy_weighted_kl(e, &pi, &pi_ref)?;
            let d = bregman_divergence(e, &e.occupancy_measure(&pi)?, &e.occupancy_measure(&pi_ref)?)?;
            worst = worst.max((kl - d).abs());
        }
    }
    Ok(worst)
}

/// Output of [`rate_certificate_run`].
#[derive(Debug, Clone)]
pub struct RateRun {
    pub l_rel: f64,
    pub trace: SolveTrace,
    pub comparator: SolveTrace,
    pub d0: f64,
}

/// Runs CMDPI with the step `alpha = L_rel (1 - gamma)` for `iters`
/// iterations and the same configuration for `10 iters` as comparator.
pub fn rate_certificate_run(env: &Momdp, pref: &Preference, tau: f64, iters: usize) -> Result<RateRun> {
    let params = StchParams::for_momdp(env, tau)?;
    let l_rel = relative_smoothness_constant(env, pref, tau)?;
    let alpha = l_rel * (1.0 - env.gamma());
    let pi0 = random_policy(env, 0);
    let cfg = SolverConfig {
        alpha: Some(alpha),
        max_outer_iters: iters,
        outer_tol: 0.0,
        warm_start: true,
        ..Default::default()
    };
    let trace = cmdpi(env, pref, &params, &cfg, &pi0)?;
    let long = SolverConfig { max_outer_iters: 10 * iters, ..cfg };
    let comparator = cmdpi(env, pref, &params, &long, &pi0)?;
    let d0 = bregman_divergence(
        env,
        &env.occupancy_measure(&comparator.final_policy)?,
        &env.occupancy_measure(&pi0)?,
    )?;
    Ok(RateRun { l_rel, trace, comparator, d0 })
}

/// `(max excess, violations)` of the rate certificate at the barycentric preference.
pub fn rate_certificate(env: &Momdp, cfg: &VerifyConfig) -> Result<(f64, usize)> {
    let m = env.n_objectives();
    let pref = Preference::new(vec![1.0 / m as f64; m])?;
    let run = rate_certificate_run(env, &pref, cfg.tau, cfg.rate_iters)?;
    let rep = mirror_descent_certificate(&run.trace, run.comparator.final_utility(), run.l_rel, run.d0)?;
    Ok((rep.max_excess, rep.violations))
}

/// Largest sup-norm policy difference between adjacent grid points after a
/// fixed number of CMDPI steps from a shared initial policy.
pub fn max_adjacent_policy_gap(
    env: &Momdp,
    prefs: &[Preference],
    tau: f64,
    k: usize,
    pi0: &Policy,
    jobs: Jobs,
) -> Result<f64> {
    let params = StchParams::for_momdp(env, tau)?;
    let cfg = SolverConfig {
        max_outer_iters: k,
        outer_tol: 0.0,
        ..Default::default()
    };
    let policies = par::map(prefs, jobs, |p| cmdpi(env, p, &params, &cfg, pi0).map(|t| t.final_policy))
        .into_iter()
        .collect::<Result<Vec<Policy>>>()?;
    let points: Vec<&[f64]> = prefs.iter().map(|p| p.omega()).collect();
    Ok(adjacent_pairs(&points)?
        .into_iter()
        .map(|(i, k)| policies[i].max_abs_diff(&policies[k]))
        .fold(0.0, f64::max))
}

/// `gap(h) / gap(h/2)` for a coarse grid and the grid with half its spacing.
pub fn continuity_ratio(env: &Momdp, cfg: &VerifyConfig) -> Result<f64> {
    let m = env.n_objectives();
    let n = cfg.continuity_prefs;
    let pi0 = random_policy(env, 0);
    let coarse = preference_grid(n, m, cfg.lipschitz_delta)?;
    let fine = preference_grid(2 * n - 1, m, cfg.lipschitz_delta)?;
    let gc = max_adjacent_policy_gap(env, &coarse, cfg.tau, cfg.continuity_k, &pi0, cfg.jobs)?;
    let gf = max_adjacent_policy_gap(env, &fine, cfg.tau, cfg.continuity_k, &pi0, cfg.jobs)?;
    if gf == 0.0 {
        // a constant map is trivially continuous
        return Ok(if gc == 0.0 { 2.0 } else { f64::INFINITY });
    }
    Ok(gc / gf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::toy_momdp;

    fn quick() -> VerifyConfig {
        VerifyConfig {
            uniqueness_seeds: 3,
            lipschitz_prefs: 11,
            bregman_pairs: 10,
            rate_iters: 20,
            ..Default::default()
        }
    }

    #[test]
    fn suite_filter_and_names() {
        let cfg = VerifyConfig { suites: vec![Suite::Bregman, Suite::Bregman], ..quick() };
        let rep = verify_all(&toy_momdp(), &cfg);
        assert_eq!(rep.entries.len(), 1);
        assert!(rep.all_pass);
        assert_eq!("rate".parse::<Suite>().unwrap(), Suite::Rate);
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn quick_battery_passes_on_toy() {
        let rep = verify_all(&toy_momdp(), &quick());
        for e in &rep.entries {
            assert!(e.pass, "{e:?}");
        }
        let json = serde_json::to_value(&rep).unwrap();
        assert_eq!(json["entries"][0]["suite"], "uniqueness");
    }

    #[test]
    fn failures_become_entries() {
        // the rewards of objective 2 reach the utopia bound, so the Lipschitz constant is undefined
        let env = toy_momdp().with_rewards(2, vec![1.0; 16]).unwrap();
        let cfg = VerifyConfig { suites: vec![Suite::Lipschitz], ..quick() };
        let rep = verify_all(&env, &cfg);
        assert!(!rep.all_pass);
        assert!(rep.entries[0].error.is_some());
    }

    #[test]
    fn interior_preferences_are_distinct() {
        for m in 2..=4 {
            let p = interior_preferences(m).unwrap();
            assert_eq!(p.len(), 5);
            assert!(p.iter().all(|x| x.is_interior()));
        }
    }
}

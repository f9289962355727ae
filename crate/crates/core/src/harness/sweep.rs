use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analysis::{distance_to_front, pareto_front_oracle, ParetoFront2D};
use crate::error::{Error, Result};
use crate::momdp::Momdp;
use crate::par::{self, Jobs};
use crate::scalarization::{linear_utility, preference_grid, stch_utility, Preference, StchParams};
use crate::solvers::{
    capql_planning, cmdpi, fmt_f64, random_policy, value_iteration_linear, SolverConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    LinearVi,
    Cmdpi,
    Capql,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::LinearVi, Method::Cmdpi, Method::Capql];

    pub fn name(self) -> &'static str {
        match self {
            Method::LinearVi => "linear_vi",
            Method::Cmdpi => "cmdpi",
            Method::Capql => "capql",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear_vi" | "vi" => Ok(Method::LinearVi),
            "cmdpi" => Ok(Method::Cmdpi),
            "capql" => Ok(Method::Capql),
            other => Err(Error::InvalidParameter(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub env: Momdp,
    pub methods: Vec<Method>,
    pub n_prefs: usize,
    pub delta: f64,
    pub taus: Vec<f64>,
    /// Paired with `taus`; `None` uses `alpha = 1 / tau`.
    pub alphas: Option<Vec<f64>>,
    /// Empty means `[0]`.
    pub seeds: Vec<u64>,
    /// Base configuration for the STCH methods; `alpha` and `rng_seed` are set per row.
    pub solver: SolverConfig,
    pub vi_tol: f64,
    /// Fill `runtime_ms`; otherwise it is written as 0 so output is reproducible.
    pub record_timing: bool,
    pub jobs: Jobs,
}

impl SweepSpec {
    pub fn new(env: Momdp) -> Self {
        Self {
            env,
            methods: vec![Method::Cmdpi],
            n_prefs: 100,
            delta: 0.0,
            taus: vec![1.0, 0.1, 0.01],
            alphas: None,
            seeds: Vec::new(),
            solver: SolverConfig::default(),
            vi_tol: 1e-10,
            record_timing: false,
            jobs: Jobs::ALL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("sweep needs at least one method".into()));
        }
        if self.n_prefs < 2 {
            return Err(Error::InvalidParameter(format!(
                "sweep needs at least 2 preferences, got {}",
                self.n_prefs
            )));
        }
        let stch = self.methods.iter().any(|m| *m != Method::LinearVi);
        if stch && self.taus.is_empty() {
            return Err(Error::InvalidParameter("STCH methods need at least one tau".into()));
        }
        if let Some(t) = self.taus.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {t}")));
        }
        if let Some(a) = &self.alphas {
            if a.len() != self.taus.len() {
                return Err(Error::DimensionMismatch {
                    what: "alpha list",
                    expected: self.taus.len(),
                    got: a.len(),
                });
            }
            if let Some(x) = a.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
                return Err(Error::InvalidParameter(format!("alpha must be positive, got {x}")));
            }
        }
        if !(self.vi_tol > 0.0) {
            return Err(Error::InvalidParameter("vi tolerance must be positive".into()));
        }
        Ok(())
    }

    fn seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![0]
        } else {
            self.seeds.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: Method,
    pub tau: Option<f64>,
    pub alpha: Option<f64>,
    pub seed: u64,
    pub omega_index: usize,
    pub omega: Vec<f64>,
    /// Empty when the run failed.
    pub j: Vec<f64>,
    /// Linear utility for `linear_vi`, STCH utility otherwise.
    pub utility: Option<f64>,
    pub iters: usize,
    /// Present for two-objective environments.
    pub dist_front: Option<f64>,
    pub runtime_ms: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub n_objectives: usize,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, Copy)]
struct Job {
    method: Method,
    tau: Option<f64>,
    alpha: Option<f64>,
    omega_index: usize,
    seed: u64,
}

/// Runs every (method config, preference, seed) combination.
///
/// Rows come back sorted by method, tau, preference index and seed whatever
/// the degree of parallelism. Failed runs are recorded in the row's `error`.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let m = spec.env.n_objectives();
    let prefs = preference_grid(spec.n_prefs, m, spec.delta)?;
    let front = if m == 2 { pareto_front_oracle(&spec.env).ok() } else { None };

    let mut jobs = Vec::new();
    for &method in &spec.methods {
        let configs: Vec<(Option<f64>, Option<f64>)> = match method {
            Method::LinearVi => vec![(None, None)],
            _ => spec
                .taus
                .iter()
                .enumerate()
                .map(|(i, &t)| {
                    let a = spec.alphas.as_ref().map_or(1.0 / t, |a| a[i]);
                    (Some(t), Some(a))
                })
                .collect(),
        };
        for (tau, alpha) in configs {
            for omega_index in 0..prefs.len() {
                for seed in spec.seeds() {
                    jobs.push(Job { method, tau, alpha, omega_index, seed });
                }
            }
        }
    }

    let mut rows = par::map(&jobs, spec.jobs, |job| {
        run_job(spec, &prefs[job.omega_index], front.as_ref(), job)
    });
    rows.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(a.tau.partial_cmp(&b.tau).unwrap_or(std::cmp::Ordering::Equal))
            .then(a.omega_index.cmp(&b.omega_index))
            .then(a.seed.cmp(&b.seed))
    });
    Ok(SweepResult { n_objectives: m, rows })
}

fn run_job(spec: &SweepSpec, pref: &Preference, front: Option<&ParetoFront2D>, job: &Job) -> SweepRow {
    let start = Instant::now();
    let outcome = solve_one(spec, pref, job);
    let runtime_ms = if spec.record_timing {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    };
    let mut row = SweepRow {
        method: job.method,
        tau: job.tau,
        alpha: job.alpha,
        seed: job.seed,
        omega_index: job.omega_index,
        omega: pref.omega().to_vec(),
        j: Vec::new(),
        utility: None,
        iters: 0,
        dist_front: None,
        runtime_ms,
        error: None,
    };
    match outcome {
        Ok((j, utility, iters)) => {
            row.dist_front = front.and_then(|f| distance_to_front(f, &j).ok());
            row.j = j;
            row.utility = Some(utility);
            row.iters = iters;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

fn solve_one(spec: &SweepSpec, pref: &Preference, job: &Job) -> Result<(Vec<f64>, f64, usize)> {
    let env = &spec.env;
    match (job.method, job.tau) {
        (Method::LinearVi, _) => {
            let sol = value_iteration_linear(env, pref, spec.vi_tol)?;
            let u = linear_utility(&sol.j, pref)?;
            Ok((sol.j.0, u, sol.sweeps))
        }
        (method, Some(tau)) => {
            let params = StchParams::for_momdp(env, tau)?;
            let cfg = SolverConfig {
                alpha: job.alpha,
                rng_seed: job.seed,
                ..spec.solver.clone()
            };
            let trace = if method == Method::Cmdpi {
                cmdpi(env, pref, &params, &cfg, &random_policy(env, job.seed))?
            } else {
                capql_planning(env, pref, &params, &cfg)?
            };
            let j = trace.final_j().clone();
            let u = stch_utility(&j, pref, &params)?;
            Ok((j.0, u, trace.iterations()))
        }
        (method, None) => Err(Error::InvalidParameter(format!("{method} needs tau"))),
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

impl SweepResult {
    /// Column names: `method,tau,alpha,seed,omega_1..,J_1..,utility,iters,dist_front,runtime_ms`.
    pub fn csv_header(&self) -> Vec<String> {
        let m = self.n_objectives;
        let mut h: Vec<String> = ["method", "tau", "alpha", "seed"].map(String::from).to_vec();
        h.extend((1..=m).map(|i| format!("omega_{i}")));
        h.extend((1..=m).map(|i| format!("J_{i}")));
        h.extend(["utility", "iters", "dist_front", "runtime_ms"].map(String::from));
        h
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let m = self.n_objectives;
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        out.write_record(self.csv_header())?;
        for r in &self.rows {
            let mut rec = vec![
                r.method.to_string(),
                opt(r.tau),
                opt(r.alpha),
                r.seed.to_string(),
            ];
            rec.extend(r.omega.iter().map(|x| fmt_f64(*x)));
            rec.extend((0..m).map(|i| r.j.get(i).map(|x| fmt_f64(*x)).unwrap_or_default()));
            rec.push(opt(r.utility));
            rec.push(r.iters.to_string());
            rec.push(opt(r.dist_front));
            rec.push(fmt_f64(r.runtime_ms));
            out.write_record(rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_json(&self, w: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn read_json(r: impl Read) -> Result<Self> {
        Ok(serde_json::from_reader(r)?)
    }

    /// Rows of one method (and tau, when given).
    pub fn select(&self, method: Method, tau: Option<f64>) -> impl Iterator<Item = &SweepRow> {
        self.rows
            .iter()
            .filter(move |r| r.method == method && (tau.is_none() || r.tau == tau))
    }
}

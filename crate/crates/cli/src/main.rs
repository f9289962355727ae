//! `cmdpi`: solve, sweep, verify and score tabular multi-objective MDPs.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 verification failure.
//! Results go to standard output as JSON; diagnostics go to standard error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cmdpi_core::analysis::{distance_to_front, metric_report, pareto_front_oracle};
use cmdpi_core::harness::{load_env, run_sweep, verify_all, Method, Suite, SweepSpec, VerifyConfig};
use cmdpi_core::momdp::ObjectiveVector;
use cmdpi_core::scalarization::{linear_utility, preference_grid, stch_utility};
use cmdpi_core::solvers::{
    capql_planning, cmdpi, random_policy, value_iteration_linear, CapqlWeights, LinearSolution,
    SolveTrace,
};
use cmdpi_core::{Jobs, Momdp, Preference, SolverConfig, StchParams};

const SEED_ENV: &str = "CMDPI_SEED";

#[derive(Debug, Parser)]
#[command(name = "cmdpi", version, about = "Multi-objective MDP planning with smooth Tchebycheff scalarization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one preference and print the final objective vector.
    Solve(SolveArgs),
    /// Run a preference sweep and write the result table.
    Sweep(SweepArgs),
    /// Run the verification battery.
    Verify(VerifyArgs),
    /// Hypervolume, expected utility and sparsity of a point set.
    Metrics(MetricsArgs),
}

#[derive(Debug, Args)]
struct EnvArg {
    /// `builtin:toy` or a path to an environment JSON file.
    #[arg(long, default_value = "builtin:toy")]
    env: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SolveMethod {
    Vi,
    Cmdpi,
    Capql,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WeightsArg {
    Stch,
    Linear,
}

impl From<WeightsArg> for CapqlWeights {
    fn from(w: WeightsArg) -> Self {
        match w {
            WeightsArg::Stch => CapqlWeights::Stch,
            WeightsArg::Linear => CapqlWeights::Linear,
        }
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    env: EnvArg,
    #[arg(long, value_enum, default_value = "cmdpi")]
    method: SolveMethod,
    /// Preference weights, comma separated, summing to 1.
    #[arg(long, value_delimiter = ',', required = true)]
    omega: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    tau: f64,
    /// KL temperature; defaults to 1 / tau.
    #[arg(long)]
    alpha: Option<f64>,
    /// Maximum outer iterations.
    #[arg(long, default_value_t = 2000)]
    iters: usize,
    /// Stop once the objective moves less than this (sup-norm) between iterations.
    #[arg(long, default_value_t = 1e-9)]
    outer_tol: f64,
    /// Initial-policy seed; overridden by CMDPI_SEED.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Weights used by CAPQL.
    #[arg(long, value_enum, default_value = "stch")]
    capql_weights: WeightsArg,
    /// Value-iteration tolerance.
    #[arg(long, default_value_t = 1e-10)]
    vi_tol: f64,
    /// Write the full solve output (including the trace) as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    env: EnvArg,
    /// Methods, comma separated: linear_vi (or vi), cmdpi, capql.
    #[arg(long, value_delimiter = ',', default_value = "cmdpi")]
    method: Vec<String>,
    #[arg(long, default_value_t = 100)]
    n_prefs: usize,
    /// Floor on every preference weight.
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long, value_delimiter = ',', default_value = "1,0.1,0.01")]
    tau_list: Vec<f64>,
    /// Paired with --tau-list; defaults to 1 / tau.
    #[arg(long, value_delimiter = ',')]
    alpha_list: Option<Vec<f64>>,
    /// Seeds, comma separated; defaults to 0. CMDPI_SEED replaces the list.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 2000)]
    iters: usize,
    #[arg(long, default_value_t = 1e-9)]
    outer_tol: f64,
    #[arg(long, value_enum, default_value = "stch")]
    capql_weights: WeightsArg,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Defaults to json for `.json` outputs and csv otherwise.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Record wall-clock time per row (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    env: EnvArg,
    /// Suites to run, comma separated; all when omitted.
    #[arg(long, value_delimiter = ',')]
    suite: Vec<String>,
    #[arg(long, default_value_t = 0.1)]
    tau: f64,
    /// Outer iteration cap for converged runs.
    #[arg(long)]
    iters: Option<usize>,
    /// Iterations of the certified rate run.
    #[arg(long)]
    rate_iters: Option<usize>,
    /// Also write the report to this file.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("reference_source").required(true).args(["reference", "ref_auto"])))]
struct MetricsArgs {
    /// CSV with a header; uses the J_1.. columns when present, otherwise every column.
    #[arg(long)]
    points: PathBuf,
    /// Hypervolume reference point, comma separated.
    #[arg(long = "ref", value_delimiter = ',')]
    reference: Option<Vec<f64>>,
    /// Use the component-wise minimum of the points as reference.
    #[arg(long)]
    ref_auto: bool,
    /// Size of the preference grid for the expected utility.
    #[arg(long, default_value_t = 100)]
    prefs: usize,
}

enum Failure {
    Usage(String),
    Runtime(String),
    Verification,
}

impl From<cmdpi_core::Error> for Failure {
    fn from(e: cmdpi_core::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Metrics(a) => cmd_metrics(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(Failure::Verification) => {
            eprintln!("verification failed");
            ExitCode::from(3)
        }
    }
}

fn seed_override() -> CliResult<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn jobs(n: Option<usize>) -> CliResult<Jobs> {
    match n {
        Some(0) => Err(Failure::Usage("--jobs must be at least 1".into())),
        n => Ok(Jobs(n)),
    }
}

fn env(arg: &EnvArg) -> CliResult<Momdp> {
    Ok(load_env(&arg.env)?)
}

fn print_json(value: &impl Serialize) -> CliResult {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

#[derive(Serialize)]
struct SolveSummary {
    method: &'static str,
    omega: Vec<f64>,
    tau: Option<f64>,
    alpha: Option<f64>,
    seed: u64,
    #[serde(rename = "J")]
    j: ObjectiveVector,
    utility: f64,
    iters: usize,
    termination: Option<cmdpi_core::solvers::Termination>,
    dist_front: Option<f64>,
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    #[serde(flatten)]
    summary: &'a SolveSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<&'a SolveTrace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    solution: Option<&'a LinearSolution>,
}

fn cmd_solve(a: SolveArgs) -> CliResult {
    let momdp = env(&a.env)?;
    let pref = Preference::new(a.omega.clone()).map_err(|e| Failure::Usage(format!("--omega: {e}")))?;
    let seed = seed_override()?.unwrap_or(a.seed);
    let front = if momdp.n_objectives() == 2 { pareto_front_oracle(&momdp).ok() } else { None };
    let dist = |j: &ObjectiveVector| front.as_ref().and_then(|f| distance_to_front(f, j).ok());

    let (summary, trace, solution) = match a.method {
        SolveMethod::Vi => {
            let sol = value_iteration_linear(&momdp, &pref, a.vi_tol)?;
            let summary = SolveSummary {
                method: "linear_vi",
                omega: a.omega,
                tau: None,
                alpha: None,
                seed,
                utility: linear_utility(&sol.j, &pref)?,
                iters: sol.sweeps,
                termination: None,
                dist_front: dist(&sol.j),
                j: sol.j.clone(),
            };
            (summary, None, Some(sol))
        }
        method => {
            let params = StchParams::for_momdp(&momdp, a.tau).map_err(|e| Failure::Usage(format!("--tau: {e}")))?;
            let cfg = SolverConfig {
                alpha: a.alpha,
                max_outer_iters: a.iters,
                outer_tol: a.outer_tol,
                rng_seed: seed,
                capql_weights: a.capql_weights.into(),
                ..Default::default()
            };
            let trace = match method {
                SolveMethod::Cmdpi => cmdpi(&momdp, &pref, &params, &cfg, &random_policy(&momdp, seed))?,
                _ => capql_planning(&momdp, &pref, &params, &cfg)?,
            };
            let j = trace.final_j().clone();
            let summary = SolveSummary {
                method: if matches!(method, SolveMethod::Cmdpi) { "cmdpi" } else { "capql" },
                omega: a.omega,
                tau: Some(a.tau),
                alpha: Some(trace.alpha),
                seed,
                utility: stch_utility(&j, &pref, &params)?,
                iters: trace.iterations(),
                termination: Some(trace.termination),
                dist_front: dist(&j),
                j,
            };
            (summary, Some(trace), None)
        }
    };
    if let Some(path) = &a.out {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(
            &mut w,
            &SolveOutput { summary: &summary, trace: trace.as_ref(), solution: solution.as_ref() },
        )?;
        writeln!(w)?;
        w.flush()?;
    }
    print_json(&summary)
}

fn cmd_sweep(a: SweepArgs) -> CliResult {
    let methods = a
        .method
        .iter()
        .map(|m| m.parse::<Method>().map_err(|e| Failure::Usage(format!("--method: {e}"))))
        .collect::<CliResult<Vec<_>>>()?;
    let seeds = match seed_override()? {
        Some(s) => vec![s],
        None => a.seeds,
    };
    let spec = SweepSpec {
        methods,
        n_prefs: a.n_prefs,
        delta: a.delta,
        taus: a.tau_list,
        alphas: a.alpha_list,
        seeds,
        solver: SolverConfig {
            max_outer_iters: a.iters,
            outer_tol: a.outer_tol,
            capql_weights: a.capql_weights.into(),
            ..Default::default()
        },
        record_timing: a.timing,
        jobs: jobs(a.jobs)?,
        ..SweepSpec::new(env(&a.env)?)
    };
    spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let format = a.format.unwrap_or_else(|| match &a.out {
        Some(p) if p.extension().is_some_and(|e| e == "json") => Format::Json,
        _ => Format::Csv,
    });
    // open the output before the (possibly long) sweep so a bad path fails fast
    let mut sink: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    let result = run_sweep(&spec)?;
    let failed = result.rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} of {} runs failed; see the JSON output for messages", result.rows.len());
    }
    match format {
        Format::Csv => result.write_csv(&mut sink)?,
        Format::Json => {
            result.write_json(&mut sink)?;
            writeln!(sink)?;
        }
    }
    sink.flush()?;
    if let Some(p) = &a.out {
        eprintln!("wrote {} rows to {}", result.rows.len(), p.display());
    }
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> CliResult {
    let momdp = env(&a.env)?;
    let mut cfg = VerifyConfig { tau: a.tau, jobs: jobs(a.jobs)?, ..Default::default() };
    if !a.suite.is_empty() {
        cfg.suites = a
            .suite
            .iter()
            .map(|s| s.parse::<Suite>().map_err(|e| Failure::Usage(format!("--suite: {e}"))))
            .collect::<CliResult<_>>()?;
    }
    if let Some(k) = a.iters {
        cfg.outer_iters = k;
    }
    if let Some(k) = a.rate_iters {
        cfg.rate_iters = k;
    }
    let report = verify_all(&momdp, &cfg);
    if let Some(path) = &a.report {
        let mut w = create(path)?;
        report.write_json(&mut w)?;
        writeln!(w)?;
        w.flush()?;
    }
    print_json(&report)?;
    for e in &report.entries {
        eprintln!(
            "{:<11} {}  measured {:e}  bound {:e}",
            e.suite.name(),
            if e.pass { "pass" } else { "FAIL" },
            e.measured,
            e.bound
        );
    }
    if report.all_pass {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

/// Objective vectors from a CSV file. Rows with empty objective cells (failed
/// sweep runs) are skipped; any other non-numeric cell is a usage error.
fn read_points(path: &Path) -> CliResult<Vec<ObjectiveVector>> {
    let file = File::open(path).map_err(|e| Failure::Runtime(format!("cannot read {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let malformed = |msg: String| Failure::Usage(format!("malformed points file {}: {msg}", path.display()));
    let header = reader.headers().map_err(|e| malformed(e.to_string()))?.clone();
    let j_cols: Vec<usize> = (1..)
        .map_while(|i| header.iter().position(|h| h == format!("J_{i}")))
        .collect();
    let cols: Vec<usize> = if j_cols.is_empty() { (0..header.len()).collect() } else { j_cols };
    if cols.is_empty() {
        return Err(malformed("no columns".into()));
    }
    let mut points = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| malformed(e.to_string()))?;
        let cells: Vec<&str> = cols.iter().map(|&c| rec.get(c).unwrap_or("")).collect();
        if cells.iter().all(|c| c.is_empty()) {
            continue;
        }
        let p = cells
            .iter()
            .map(|c| c.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| malformed(format!("row {} is not numeric", line + 2)))?;
        points.push(ObjectiveVector(p));
    }
    if points.is_empty() {
        return Err(malformed("no points".into()));
    }
    Ok(points)
}

fn cmd_metrics(a: MetricsArgs) -> CliResult {
    let points = read_points(&a.points)?;
    let m = points[0].len();
    let reference = if a.ref_auto { None } else { a.reference.as_deref() };
    if let Some(r) = reference {
        if r.len() != m {
            return Err(Failure::Usage(format!("--ref has {} entries, points have {m}", r.len())));
        }
    }
    let prefs = preference_grid(a.prefs, m, 0.0).map_err(|e| Failure::Usage(format!("--prefs: {e}")))?;
    let report = metric_report(&points, reference, &prefs, format!("simplex-grid-m{m}-n{}", a.prefs))?;
    print_json(&report)
}

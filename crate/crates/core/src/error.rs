use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid MOMDP: {0}")]
    InvalidMomdp(String),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid preference: {0}")]
    InvalidPreference(String),

    #[error("reference policy not full support: pi({action}|{state}) = {value}")]
    NotFullSupport {
        state: usize,
        action: usize,
        value: f64,
    },

    #[error("occupancy marginal is zero at state {state}")]
    ZeroMarginal { state: usize },

    #[error("deterministic policy count {count} exceeds cap {cap}")]
    EnumerationCap { count: f64, cap: usize },

    #[error("utopia does not strictly dominate objective {index}: alpha_i = {gap} <= 0")]
    NonDominatingUtopia { index: usize, gap: f64 },

    #[error("infeasible floor: {m} * delta = {total} > 1")]
    InfeasibleFloor { m: usize, total: f64 },

    #[error("soft Bellman iteration did not reach tolerance {tol} in {iters} sweeps (residual {residual})")]
    InnerNotConverged { tol: f64, iters: usize, residual: f64 },

    #[error("linear system is singular")]
    Singular,

    #[error("inconsistent oracle: u* = {u_star} below trace maximum {trace_max}")]
    InconsistentOracle { u_star: f64, trace_max: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}

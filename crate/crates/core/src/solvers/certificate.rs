use serde::{Deserialize, Serialize};

use super::SolveTrace;
use crate::error::{Error, Result};

/// Excess over the bound tolerated before an entry counts as a violation.
pub const CERTIFICATE_SLACK: f64 = 1e-7;

/// Allowed amount by which a trace may exceed the oracle optimum.
const ORACLE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateEntry {
    pub k: usize,
    pub gap: f64,
    pub bound: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub u_star: f64,
    pub l_rel: f64,
    pub d0: f64,
    pub entries: Vec<CertificateEntry>,
    pub violations: usize,
    /// `max_k (gap_k - bound_k)`; non-positive when the rate holds everywhere.
    pub max_excess: f64,
}

/// Checks the `O(1/k)` mirror-descent rate `u* - u_k <= (L_rel / k) D0` for every `k >= 1`.
pub fn mirror_descent_certificate(
    trace: &SolveTrace,
    u_star: f64,
    l_rel: f64,
    d0: f64,
) -> Result<CertificateReport> {
    let trace_max = trace.max_utility();
    if u_star < trace_max - ORACLE_SLACK {
        return Err(Error::InconsistentOracle { u_star, trace_max });
    }
    let entries: Vec<CertificateEntry> = trace
        .records
        .iter()
        .filter(|r| r.k >= 1)
        .map(|r| {
            let gap = u_star - r.utility;
            let bound = l_rel / r.k as f64 * d0;
            CertificateEntry {
                k: r.k,
                gap,
                bound,
                violated: gap > bound + CERTIFICATE_SLACK,
            }
        })
        .collect();
    let violations = entries.iter().filter(|e| e.violated).count();
    let max_excess = entries
        .iter()
        .map(|e| e.gap - e.bound)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(CertificateReport {
        u_star,
        l_rel,
        d0,
        entries,
        violations,
        max_excess,
    })
}

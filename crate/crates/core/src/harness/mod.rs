//! Builtin environments, preference sweeps and the verification battery.

mod envs;
mod sweep;
mod verify;

pub use envs::{builtin, load_env, random_momdp, toy_momdp};
pub use sweep::{run_sweep, Method, SweepResult, SweepRow, SweepSpec};
pub use verify::{
    bregman_identity_gap, continuity_ratio, lipschitz_check, max_adjacent_policy_gap,
    rate_certificate, rate_certificate_run, uniqueness_gap, verify_all, RateRun, Suite,
    VerifyConfig, VerifyEntry, VerifyReport,
};

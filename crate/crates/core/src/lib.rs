//! Tabular multi-objective MDP planning with smooth Tchebycheff scalarization.
//!
//! * [`momdp`]: environments, policies, occupancy measures and exact evaluation.
//! * [`scalarization`]: STCH, Tchebycheff and linear utilities, preference grids
//!   and the theoretical constants.
//! * [`solvers`]: linear value iteration, CMDPI, CAPQL planning, the soft
//!   Bellman solver and the rate certificate.
//! * [`analysis`]: divergences, Pareto fronts and front-quality metrics.
//! * [`harness`]: builtin environments, sweeps and the verification battery.
//!
//! Batch work goes through [`par::map`], parallel with the default `parallel`
//! feature and sequential without it.

pub mod analysis;
pub mod error;
pub mod harness;
pub mod momdp;
pub mod par;
pub mod scalarization;
pub mod solvers;

pub use error::{Error, Result};
pub use momdp::{Momdp, ObjectiveVector, OccupancyMeasure, Policy};
pub use par::Jobs;
pub use scalarization::{Preference, StchParams};
pub use solvers::{SolveTrace, SolverConfig};

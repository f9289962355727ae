//! Divergences, Pareto fronts and front-quality metrics.

mod divergence;
mod front;
mod lipschitz;
mod metrics;

pub use divergence::{bregman_divergence, conditional_negentropy, occupancy_weighted_kl};
pub use front::{
    deterministic_objectives, distance_to_front, dominates, non_dominated, non_dominated_indices,
    objective_bounds, pareto_front_oracle, ParetoFront2D, DOMINANCE_TOL,
};
pub use lipschitz::{adjacent_pairs, lipschitz_empirical, LipschitzReport};
pub use metrics::{
    componentwise_min, expected_utility_metric, hypervolume, metric_report, sparsity, MetricReport,
    MAX_HV_DIM,
};

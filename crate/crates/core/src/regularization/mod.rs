//! Sup/inf-convolution of path functionals over time changes and paths.

mod finite_dim;
mod partition;
mod penalty;
mod search;
mod terms;

pub use finite_dim::FiniteDim;
pub use partition::{kappa_transform, partition, KappaTransform, PartitionScheme, Side};
pub use penalty::{penalty, penalty_capped, prune_bounds, PruneBox};
pub use search::{regularize, Direction, RegParams, RegularizationResult, SearchConfig};
pub use terms::{
    delta_n, delta_prime_n, error_terms, origin_constant, power_bound_check, power_bound_slack, step_v_constant,
    terminal_distance_bound, terminal_ranges, ErrorInputs, ErrorTerms,
};

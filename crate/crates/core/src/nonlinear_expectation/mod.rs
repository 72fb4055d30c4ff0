//! Controlled binary lattice standing in for the bounded-characteristics
//! semimartingale laws, with sup/inf expectations and stopping.

mod expectation;
mod lattice;
mod markov;
mod moments;
mod oracle;
mod tree;

pub use expectation::{
    builtin_payoff, hitting_time, lattice_dump, sampled_lower_bound, sup_expectation, PayoffOnTree, SampledBound,
    BUILTIN_PAYOFFS,
};
pub(crate) use expectation::hitting_index;
pub use lattice::{build_lattice, AxisControl, ControlGrids, LatticeModel, DEFAULT_DEPTH_CAP};
pub use markov::{solve_markov, ExitMass, MarkovSolution};
pub use moments::{
    moment_check, moment_check_exhaustive, moment_check_sup, MomentReport, MomentViolation, StoppingFamily,
};
pub(crate) use oracle::HistoryTable;
pub use oracle::{enumerate_stopping, enumerate_strategies, strategy_dump, EnumerationResult};
pub use tree::{solve_tree, Contact, Mode, NodeRecord, NodeRule, NodeView, TreeSolution};

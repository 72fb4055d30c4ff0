//! Driftless controlled diffusions: simulation, value functions and the
//! measured continuity moduli of the value in `d_p`.

mod engines;
mod moduli;
mod problem;

pub use engines::{
    lattice_value, monte_carlo_value, policy_value, simulate, split_rng, value, Policy, Resolution, Trajectory, ValueEstimate,
};
pub use problem::{control_grid, path_problem, problem, ControlProblem, Engine, Sigma, PROBLEMS};
pub use moduli::{
    bounds_for, c_tilde, calibrate_burkholder, holder_fit, holder_pairs, measure_c_hat, modulus_joint_with,
    modulus_space, modulus_space_with, modulus_time, modulus_time_with, random_joint_pairs, random_space_pairs,
    random_time_pairs, BurkholderSpec, CHat, CHatSpec, Calibration, JointPair, ModulusBounds, ModulusKind,
    ModulusReport, ModulusRow, ModulusSpec, SpacePair, TimePair,
};

//! Optimal stopping under the sup-expectation, path-dependent jets and
//! viscosity checks, finite-dimensional tangency residuals, nonlinearity
//! audits and the discount transforms.

mod audit;
mod classical;
mod comparison;
mod envelope;
mod nonlinearity;
mod paraboloid;
mod visc;

pub use audit::{
    assumption_audit, discount_round_trip, gbar_chain_check, AuditCheck, AuditReport, AuditSpec, ChainReport, RoundTrip,
};
pub use classical::{classical_jet_residual, ClassicalReport, Stencil, StencilReport};
pub use comparison::{comparison_experiment, ComparisonReport, ComparisonSpec, Diagnostic, PointwiseCheck};
pub use envelope::{
    contact_point, contact_point_at, jet_test_pl, snell_envelope, ContactPoint, EnvelopeNode, JetOracle, JetTest,
    SnellEnvelope,
};
pub use nonlinearity::{
    discount_functional, nonlinearity, transform_discount, transform_gbar, Nonlinearity, NONLINEARITIES,
};
pub use paraboloid::Paraboloid;
pub use visc::{
    candidates, fd_jet, sample_points, visc_check, FoundJet, JetGrid, NonSolution, PointReport, SamplePoint,
    SampleSpec, ViscConfig, ViscosityReport, NON_SOLUTIONS, SOLUTIONS,
};

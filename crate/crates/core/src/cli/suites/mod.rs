//! One suite per acceptance criterion.

use super::config::ExperimentConfig;
use super::report::SuiteReport;
use crate::error::Result;

mod comparison;
mod control;
mod expectation;
mod metric;
mod regularization;
mod residual;
mod step;
mod stopping;
mod terminal;
mod transforms;

pub struct SuiteInfo {
    pub name: &'static str,
    pub criterion: usize,
    pub title: &'static str,
    pub budget_seconds: f64,
    pub run: fn(&ExperimentConfig) -> Result<SuiteReport>,
}

pub const SUITES: &[SuiteInfo] = &[
    SuiteInfo { name: "metric-axioms", criterion: 1, title: "d_p pseudo-metric axioms and limits", budget_seconds: 10.0, run: metric::run },
    SuiteInfo { name: "regularization", criterion: 2, title: "sup/inf-convolution monotonicity, bounds and convergence", budget_seconds: 600.0, run: regularization::run },
    SuiteInfo { name: "terminal-regularity", criterion: 3, title: "finite-dimensional regularization: terminal deviation and regularity", budget_seconds: 300.0, run: terminal::run },
    SuiteInfo { name: "nonlinear-expectation", criterion: 4, title: "lattice sup-expectation, moments and moment bounds", budget_seconds: 120.0, run: expectation::run },
    SuiteInfo { name: "stopping-jets", criterion: 5, title: "Snell envelope, contact points and viscosity checks", budget_seconds: 180.0, run: stopping::run },
    SuiteInfo { name: "classical-residual", criterion: 6, title: "classical jet residuals of the regularization", budget_seconds: 480.0, run: residual::run },
    SuiteInfo { name: "step-inequality", criterion: 7, title: "power-bound inequality", budget_seconds: 5.0, run: step::run },
    SuiteInfo { name: "transforms", criterion: 8, title: "discount and G-bar transforms", budget_seconds: 5.0, run: transforms::run },
    SuiteInfo { name: "comparison", criterion: 9, title: "comparison of sub- and supersolutions", budget_seconds: 300.0, run: comparison::run },
    SuiteInfo { name: "control-moduli", criterion: 10, title: "controlled diffusion values and continuity moduli", budget_seconds: 600.0, run: control::run },
];

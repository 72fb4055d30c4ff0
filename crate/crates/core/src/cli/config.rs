//! Experiment configuration: a TOML file with one table per module.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::control_bench::ModulusSpec;
use crate::error::{Error, Result};
use crate::nonlinear_expectation::ControlGrids;
use crate::regularization::SearchConfig;
use crate::stopping_viscosity::{SampleSpec, ViscConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// a suite name or `all`
    pub suite: String,
    pub seed: u64,
    pub out: PathBuf,
    /// metric order, odd and at least 3
    pub p: u32,
    pub dim: usize,
    pub horizon: f64,
    pub metric: MetricConfig,
    pub regularization: RegularizationConfig,
    pub terminal: TerminalConfig,
    pub expectation: ExpectationConfig,
    pub stopping: StoppingConfig,
    pub residual: ResidualConfig,
    pub step: StepConfig,
    pub transforms: TransformConfig,
    pub comparison: ComparisonConfig,
    pub control: ControlConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            suite: "all".into(),
            seed: 1,
            out: PathBuf::from("ppde-out"),
            p: 3,
            dim: 1,
            horizon: 1.0,
            metric: MetricConfig::default(),
            regularization: RegularizationConfig::default(),
            terminal: TerminalConfig::default(),
            expectation: ExpectationConfig::default(),
            stopping: StoppingConfig::default(),
            residual: ResidualConfig::default(),
            step: StepConfig::default(),
            transforms: TransformConfig::default(),
            comparison: ComparisonConfig::default(),
            control: ControlConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConfig {
    /// grid steps, a power of two
    pub steps: usize,
    pub samples: usize,
    pub orders: Vec<u32>,
    pub limit_pairs: usize,
    pub scale: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self { steps: 64, samples: 1000, orders: vec![3, 5, 9, 15, 31], limit_pairs: 200, scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularizationConfig {
    /// partition exponent, `0 < a < 1/(5p)`
    pub a: f64,
    pub schedule: Vec<f64>,
    pub functionals: Vec<String>,
    /// largest allowed `|u^n(0) − u(0)|` at the last `n`
    pub final_deviation: f64,
    pub search: SearchConfig,
}

impl Default for RegularizationConfig {
    fn default() -> Self {
        Self {
            a: 0.05,
            schedule: vec![4.0, 8.0, 16.0, 32.0],
            functionals: vec!["soft-endpoint".into(), "soft-integral".into(), "time".into()],
            final_deviation: 0.05,
            search: SearchConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TerminalConfig {
    pub schedule: Vec<f64>,
    pub functionals: Vec<String>,
    /// sampled `(i, x)` per `n` and functional
    pub samples: usize,
    pub time_pairs: usize,
    pub semicontinuity_tolerance: f64,
    pub grid_steps: usize,
}

impl Default for TerminalConfig {
    fn default() -> Self {
        Self {
            schedule: vec![4.0, 8.0, 16.0],
            functionals: vec!["soft-endpoint".into(), "soft-integral".into()],
            samples: 6,
            time_pairs: 6,
            semicontinuity_tolerance: 1e-3,
            grid_steps: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpectationConfig {
    /// `L`
    pub bound: f64,
    pub depths: Vec<usize>,
    pub exhaustive_depth: usize,
    pub depth_cap: usize,
    pub grids: ControlGrids,
    pub moment_tolerance: f64,
    pub hitting_delta: f64,
}

impl Default for ExpectationConfig {
    fn default() -> Self {
        Self {
            bound: 1.0,
            depths: vec![4, 8, 12],
            exhaustive_depth: 3,
            depth_cap: crate::nonlinear_expectation::DEFAULT_DEPTH_CAP,
            grids: ControlGrids::default(),
            moment_tolerance: 0.02,
            hitting_delta: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StoppingConfig {
    pub bound: f64,
    /// depth of the Snell-versus-enumeration check
    pub exhaustive_depth: usize,
    /// lattice steps for contact-point instances
    pub contact_steps: usize,
    pub random_payoffs: usize,
    pub visc: ViscConfig,
    pub samples: SampleSpec,
}

impl Default for StoppingConfig {
    fn default() -> Self {
        Self {
            bound: 1.0,
            exhaustive_depth: 3,
            contact_steps: 4,
            random_payoffs: 4,
            visc: ViscConfig { steps: 3, ..Default::default() },
            samples: SampleSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResidualConfig {
    pub schedule: Vec<f64>,
    /// stencil centres per `(u, n)`
    pub points: usize,
    pub ds: f64,
    pub dx: f64,
    pub x_range: f64,
    pub pass_fraction: f64,
    pub search: SearchConfig,
}

impl Default for ResidualConfig {
    fn default() -> Self {
        Self {
            schedule: vec![8.0, 16.0],
            points: 12,
            ds: 0.01,
            dx: 0.05,
            x_range: 1.0,
            pass_fraction: 0.95,
            search: SearchConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepConfig {
    pub samples: usize,
    pub dims: Vec<usize>,
    pub orders: Vec<u32>,
    pub range: f64,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self { samples: 100_000, dims: vec![1, 3], orders: vec![3, 5], range: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformConfig {
    pub samples: usize,
    pub discounts: Vec<f64>,
    pub round_trip_tolerance: f64,
}

impl Default for TransformConfig {
    fn default() -> Self {
        Self { samples: 10_000, discounts: vec![0.5, 1.0, 2.0], round_trip_tolerance: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComparisonConfig {
    pub offsets: Vec<f64>,
    pub samples: usize,
    pub schedule: Vec<f64>,
    pub tolerance: f64,
    pub search: SearchConfig,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        Self {
            offsets: vec![0.05, 0.1],
            samples: 500,
            schedule: vec![4.0, 8.0, 16.0],
            tolerance: 1e-9,
            search: SearchConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlConfig {
    pub pairs: usize,
    pub joint_pairs: usize,
    pub modulus_problem: String,
    pub holder_problem: String,
    pub holder_k: Vec<i32>,
    pub holder_range: [f64; 2],
    pub value_tolerance: f64,
    pub refinement: Vec<usize>,
    pub modulus: ModulusSpec,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            pairs: 50,
            joint_pairs: 20,
            modulus_problem: "tanh-vol".into(),
            holder_problem: "bm-abs".into(),
            holder_k: vec![2, 3, 4, 5, 6, 7],
            holder_range: [0.4, 0.6],
            value_tolerance: 0.02,
            refinement: vec![5, 9, 17],
            modulus: ModulusSpec::default(),
        }
    }
}

/// A validation finding; `line` is 1-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.key, self.message),
            None => write!(f, "{}: {}", self.key, self.message),
        }
    }
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key` under `[section]` (`None` for the top level).
pub fn locate(text: &str, dotted: &str) -> Option<usize> {
    let (section, key) = match dotted.rsplit_once('.') {
        Some((s, k)) => (Some(s), k),
        None => (None, dotted),
    };
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(h) = line.strip_prefix('[') {
            current = Some(h.trim_end_matches(']').trim().to_string());
            continue;
        }
        if current.as_deref() != section {
            continue;
        }
        if let Some(rest) = line.strip_prefix(key) {
            if rest.trim_start().starts_with('=') {
                return Some(i + 1);
            }
        }
    }
    if let Some(s) = section {
        // key absent: point at the section header
        return text.lines().position(|l| l.trim().trim_start_matches('[').trim_end_matches(']').trim() == s).map(|i| i + 1);
    }
    None
}

/// Parses TOML; syntax and schema errors carry the line of the offending span.
pub fn parse(text: &str) -> std::result::Result<ExperimentConfig, Diagnostic> {
    toml::from_str(text).map_err(|e| Diagnostic {
        line: e.span().map(|s| line_of_offset(text, s.start)),
        key: "config".into(),
        message: e.message().trim().to_string(),
    })
}

fn odd_order(p: u32) -> bool {
    p >= 3 && p % 2 == 1
}

/// Schema and range checks only.
pub fn validate(cfg: &ExperimentConfig, text: Option<&str>) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut bad = |key: &str, message: String| {
        out.push(Diagnostic { line: text.and_then(|t| locate(t, key)), key: key.to_string(), message });
    };
    if cfg.suite != "all" && !super::suites::SUITES.iter().any(|s| s.name == cfg.suite) {
        bad("suite", format!("unknown suite `{}`", cfg.suite));
    }
    if !odd_order(cfg.p) {
        bad("p", format!("metric order must be odd and at least 3, got {}", cfg.p));
    }
    if cfg.dim == 0 {
        bad("dim", "dimension must be at least 1".into());
    }
    if !(cfg.horizon > 0.0 && cfg.horizon.is_finite()) {
        bad("horizon", format!("horizon must be positive, got {}", cfg.horizon));
    }
    let m = &cfg.metric;
    if !m.steps.is_power_of_two() {
        bad("metric.steps", format!("grid steps must be a power of two, got {}", m.steps));
    }
    if m.orders.iter().any(|&q| !odd_order(q)) {
        bad("metric.orders", "every order must be odd and at least 3".into());
    }
    if m.orders.windows(2).any(|w| w[0] >= w[1]) {
        bad("metric.orders", "orders must increase".into());
    }
    let r = &cfg.regularization;
    let a_max = 1.0 / (5.0 * cfg.p as f64);
    if !(r.a > 0.0 && r.a < a_max) {
        bad("regularization.a", format!("need 0 < a < 1/(5p) = {a_max:.6}, got {}", r.a));
    }
    for (key, sched) in [
        ("regularization.schedule", &r.schedule),
        ("terminal.schedule", &cfg.terminal.schedule),
        ("residual.schedule", &cfg.residual.schedule),
        ("comparison.schedule", &cfg.comparison.schedule),
    ] {
        if sched.is_empty() || sched.iter().any(|&n| !(n >= 1.0)) || sched.windows(2).any(|w| w[0] >= w[1]) {
            bad(key, "schedule must be a nonempty increasing list of n ≥ 1".into());
        }
    }
    for (key, f) in [("regularization.functionals", &r.functionals), ("terminal.functionals", &cfg.terminal.functionals)] {
        for name in f.iter() {
            if !crate::functional::CATALOG.contains(&name.as_str()) {
                bad(key, format!("unknown functional `{name}`"));
            }
        }
    }
    if !cfg.terminal.grid_steps.is_power_of_two() {
        bad("terminal.grid_steps", format!("grid steps must be a power of two, got {}", cfg.terminal.grid_steps));
    }
    let e = &cfg.expectation;
    if !(e.bound >= 0.0) {
        bad("expectation.bound", "L must be nonnegative".into());
    }
    if e.exhaustive_depth > e.depth_cap {
        bad(
            "expectation.exhaustive_depth",
            format!("exhaustive depth {} exceeds the depth cap {}", e.exhaustive_depth, e.depth_cap),
        );
    }
    if e.depths.is_empty() || e.depths.contains(&0) {
        bad("expectation.depths", "depths must be positive".into());
    }
    if e.grids.drift_points % 2 == 0 || e.grids.vol_points == 0 {
        bad("expectation.grids", "drift_points must be odd and vol_points positive".into());
    }
    let s = &cfg.stopping;
    if s.exhaustive_depth == 0 || s.exhaustive_depth > e.depth_cap {
        bad("stopping.exhaustive_depth", format!("must lie in 1..={}", e.depth_cap));
    }
    if s.visc.steps > e.depth_cap {
        bad("stopping.visc.steps", format!("lattice steps exceed the depth cap {}", e.depth_cap));
    }
    let rs = &cfg.residual;
    if !(rs.ds > 0.0 && rs.dx > 0.0) {
        bad("residual.ds", "stencil spacings must be positive".into());
    }
    if !(0.0..=1.0).contains(&rs.pass_fraction) {
        bad("residual.pass_fraction", "must lie in [0, 1]".into());
    }
    if cfg.step.orders.iter().any(|&q| !odd_order(q)) {
        bad("step.orders", "every order must be odd and at least 3".into());
    }
    if cfg.comparison.offsets.iter().any(|&c| !(c >= 0.0)) {
        bad("comparison.offsets", "offsets must be nonnegative".into());
    }
    let c = &cfg.control;
    for (key, name) in [("control.modulus_problem", &c.modulus_problem), ("control.holder_problem", &c.holder_problem)] {
        if !crate::control_bench::PROBLEMS.contains(&name.as_str()) {
            bad(key, format!("unknown control problem `{name}`"));
        }
    }
    if c.holder_k.len() < 2 {
        bad("control.holder_k", "need at least two increments for a fit".into());
    }
    if c.refinement.iter().any(|&n| n == 0) {
        bad("control.refinement", "control grids need at least one point".into());
    }
    out
}

/// Reads, parses and validates a config file.
pub fn load(path: &Path) -> Result<(ExperimentConfig, String)> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let cfg = parse(&text).map_err(|d| Error::Config { line: d.line, message: d.message })?;
    Ok((cfg, text))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_and_round_trips() {
        let cfg = ExperimentConfig::default();
        assert!(validate(&cfg, None).is_empty());
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(parse(&text).unwrap(), cfg);
    }

    #[test]
    fn range_rules_point_at_lines() {
        let text = "seed = 3\np = 3\n\n[regularization]\nschedule = [4.0]\na = 0.1\n";
        let cfg = parse(text).unwrap();
        let d = validate(&cfg, Some(text));
        assert_eq!(d.len(), 1);
        assert_eq!((d[0].line, d[0].key.as_str()), (Some(6), "regularization.a"));

        let text = "p = 4\n";
        let d = validate(&parse(text).unwrap(), Some(text));
        assert!(d.iter().any(|x| x.key == "p" && x.line == Some(1)));
    }

    #[test]
    fn schema_errors_carry_lines() {
        let e = parse("seed = 1\n[metric]\nstep = 64\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        let e = parse("seed = \"x\"\n").unwrap_err();
        assert_eq!(e.line, Some(1));
    }

    #[test]
    fn power_of_two_grid() {
        let text = "[metric]\nsteps = 48\n";
        let d = validate(&parse(text).unwrap(), Some(text));
        assert_eq!(d[0].line, Some(2));
    }
}

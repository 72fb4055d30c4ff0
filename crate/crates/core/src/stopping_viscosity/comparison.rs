//! Pointwise comparison on sampled points and the regularization
//! diagnostics behind it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::audit::{assumption_audit, AuditReport, AuditSpec};
use super::nonlinearity::Nonlinearity;
use super::visc::{sample_points, SampleSpec};
use crate::error::{config, Result};
use crate::functional::{Modulus, SharedFunctional};
use crate::path_space::{pw_distance, step_path, PwPath};
use crate::regularization::{origin_constant, partition, regularize, Direction, RegParams, SearchConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComparisonSpec {
    pub samples: SampleSpec,
    pub tolerance: f64,
    pub schedule: Vec<f64>,
    pub p: f64,
    /// partition exponent `a`
    pub a: f64,
    pub search: SearchConfig,
    /// terminal points used to measure `ρ_n`
    pub terminal_points: usize,
    pub audit_samples: usize,
}

impl Default for ComparisonSpec {
    fn default() -> Self {
        Self {
            samples: SampleSpec { points: 500, t_max: 1.0, ..Default::default() },
            tolerance: 1e-9,
            schedule: vec![4.0, 8.0, 16.0],
            p: 3.0,
            a: 0.05,
            search: SearchConfig::default(),
            terminal_points: 4,
            audit_samples: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointwiseCheck {
    pub samples: usize,
    /// `min (v − u)` over the sampled points
    pub min_margin: f64,
    pub violations: usize,
    pub witness: Option<(f64, Vec<f64>)>,
    /// `min (v − u)(T, ·)` over the same paths
    pub terminal_margin: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub n: f64,
    /// `u^n(𝟎)`
    pub u_reg: f64,
    /// `v_n(𝟎)`
    pub v_reg: f64,
    pub difference: f64,
    pub gap: f64,
    /// measured terminal deviation
    pub rho_n: f64,
    pub bound: f64,
    pub within_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub u: String,
    pub v: String,
    pub nonlinearity: String,
    pub audit: AuditReport,
    pub pointwise: PointwiseCheck,
    pub diagnostics: Vec<Diagnostic>,
    pub bound_decreasing: bool,
    /// `C`, from the prune box
    pub c: f64,
    /// Lipschitz constant used for `ρ^u` and `ρ^v`
    pub modulus_k: f64,
    pub modulus_measured: bool,
    pub warnings: Vec<String>,
    /// the pointwise comparison held
    pub passed: bool,
}

fn lip_estimate(u: &SharedFunctional, v: &SharedFunctional, pts: &[(f64, PwPath)], p: f64, horizon: f64) -> f64 {
    let mut k = 0.0f64;
    for w in pts.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let d = pw_distance(a.0, &a.1, b.0, &b.1, p, horizon);
        if d > 1e-9 {
            for f in [u, v] {
                k = k.max((f.eval(a.0, &a.1) - f.eval(b.0, &b.1)).abs() / d);
            }
        }
    }
    k
}

/// Checks `u ≤ v` on sampled points, then compares `(u^n − v_n)(𝟎)` with
/// `e^{2L₀T} max{2ρ_n, C n^{-a/(p+1)} + ρ̄(n^{-1/(p+1)} + C n^{-1/(10p)})}`.
/// The first part is a hard check; the bound is advisory.
pub fn comparison_experiment(
    u: &SharedFunctional,
    v: &SharedFunctional,
    g: &Nonlinearity,
    spec: &ComparisonSpec,
) -> Result<ComparisonReport> {
    let horizon = spec.samples.horizon;
    let audit = assumption_audit(
        g,
        &AuditSpec { samples: spec.audit_samples, horizon, p: spec.p, ..Default::default() },
    )?;
    if !audit.passed {
        return config(format!("nonlinearity `{}` fails its assumption audit", g.name));
    }
    let dim = g.dim;
    let pts: Vec<(f64, PwPath)> = sample_points(&spec.samples, dim)?.into_iter().map(|s| (s.t, s.path)).collect();
    let mut pw = PointwiseCheck {
        samples: pts.len(),
        min_margin: f64::INFINITY,
        violations: 0,
        witness: None,
        terminal_margin: f64::INFINITY,
        passed: true,
    };
    for (t, path) in &pts {
        let m = v.eval(*t, path) - u.eval(*t, path);
        pw.min_margin = pw.min_margin.min(m);
        if m < -spec.tolerance {
            pw.violations += 1;
            if pw.witness.is_none() {
                pw.witness = Some((*t, path.eval(*t)));
            }
        }
        pw.terminal_margin = pw.terminal_margin.min(v.eval(horizon, path) - u.eval(horizon, path));
    }
    pw.passed = pw.violations == 0 && pw.terminal_margin >= -spec.tolerance;

    let mut warnings = Vec::new();
    let (modulus_k, modulus_measured) = match (u.modulus(), v.modulus()) {
        (Some(Modulus::Linear { k: a }), Some(Modulus::Linear { k: b })) => (a.max(b), false),
        _ => (lip_estimate(u, v, &pts, spec.p, horizon), true),
    };
    let rho = Modulus::Linear { k: modulus_k };
    let params = RegParams::new(spec.p, horizon);
    let origin = PwPath::zero(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.samples.seed ^ 0xC0FFEE);
    let mut diagnostics = Vec::new();
    let mut c_max = 0.0f64;
    for &n in &spec.schedule {
        let ru = regularize(u.as_ref(), n, 0.0, &origin, Direction::Sub, &spec.search, params)?;
        let rv = regularize(v.as_ref(), n, 0.0, &origin, Direction::Super, &spec.search, params)?;
        if !(ru.certified && rv.certified) {
            warnings.push(format!("n = {n}: regularization not certified"));
        }
        let scheme = partition(n, spec.a, horizon, spec.p)?;
        let mut rho_n = 0.0f64;
        for j in 0..spec.terminal_points {
            let i = 1 + j % scheme.m.min(3);
            let jumps: Vec<f64> = (0..(i - 1) * dim).map(|_| rng.random_range(-0.5..=0.5)).collect();
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let eta = step_path(&scheme.skeleton(i, dim, &jumps)?, &x);
            let tu = regularize(u.as_ref(), n, horizon, &eta, Direction::Sub, &spec.search, params)?;
            let tv = regularize(v.as_ref(), n, horizon, &eta, Direction::Super, &spec.search, params)?;
            let du = (tu.value - u.eval(horizon, &eta)).abs() + tu.gap;
            let dv = (tv.value - v.eval(horizon, &eta)).abs() + tv.gap;
            rho_n = rho_n.max(du).max(dv);
        }
        let c = origin_constant(1.0 + 2.0 * ru.bound.max(rv.bound), spec.p, horizon);
        c_max = c_max.max(c);
        let rho_bar = |x: f64| g.rho.apply(x) + g.l0 * rho.apply(x);
        let p = spec.p;
        let inner = c * n.powf(-spec.a / (p + 1.0)) + rho_bar(n.powf(-1.0 / (p + 1.0)) + c * n.powf(-1.0 / (10.0 * p)));
        let bound = (2.0 * g.l0 * horizon).exp() * (2.0 * rho_n).max(inner);
        let gap = ru.gap + rv.gap;
        let difference = ru.value - rv.value;
        let within = difference <= bound + gap;
        if !within {
            warnings.push(format!("n = {n}: (u^n - v_n)(0) = {difference} exceeds the bound {bound} (C = {c})"));
        }
        diagnostics.push(Diagnostic { n, u_reg: ru.value, v_reg: rv.value, difference, gap, rho_n, bound, within_bound: within });
    }
    let bound_decreasing = diagnostics.windows(2).all(|w| w[1].bound <= w[0].bound * (1.0 + 1e-12));
    if !bound_decreasing {
        warnings.push("bound sequence is not decreasing over the schedule".into());
    }
    let passed = pw.passed;
    Ok(ComparisonReport {
        u: u.name(),
        v: v.name(),
        nonlinearity: g.name.clone(),
        audit,
        pointwise: pw,
        diagnostics,
        bound_decreasing,
        c: c_max,
        modulus_k,
        modulus_measured,
        warnings,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::{catalog, Offset};
    use crate::stopping_viscosity::nonlinearity;
    use std::sync::Arc;

    fn quick() -> ComparisonSpec {
        ComparisonSpec {
            samples: SampleSpec { points: 40, t_max: 1.0, ..Default::default() },
            schedule: vec![4.0, 8.0],
            search: SearchConfig { budget: 4000, restarts: 2, ..Default::default() },
            terminal_points: 2,
            audit_samples: 50,
            ..Default::default()
        }
    }

    #[test]
    fn equal_functionals_pass() {
        let u = catalog("soft-endpoint", 1.0, 1).unwrap();
        let r = comparison_experiment(&u, &u, &nonlinearity("zero", 1, 1.0).unwrap(), &quick()).unwrap();
        assert!(r.passed);
        assert_eq!(r.pointwise.min_margin, 0.0);
        assert!(r.diagnostics.iter().all(|d| d.difference >= -1e-6));
    }

    #[test]
    fn shifted_constant_keeps_margin() {
        let u = catalog("constant", 1.0, 1).unwrap();
        let v: SharedFunctional = Arc::new(Offset::new(u.clone(), 0.1));
        let r = comparison_experiment(&u, &v, &nonlinearity("zero", 1, 1.0).unwrap(), &quick()).unwrap();
        assert!(r.passed);
        assert!(r.pointwise.min_margin >= 0.1 - 1e-12);
        for d in &r.diagnostics {
            assert!(d.difference <= -0.1 + 2.0 * d.gap, "{d:?}");
        }
    }

    #[test]
    fn reversed_order_fails_hard() {
        let u = catalog("constant", 1.0, 1).unwrap();
        let v: SharedFunctional = Arc::new(Offset::new(u.clone(), -0.05));
        let r = comparison_experiment(&u, &v, &nonlinearity("zero", 1, 1.0).unwrap(), &quick()).unwrap();
        assert!(!r.passed && r.pointwise.witness.is_some());
    }

    #[test]
    fn non_elliptic_nonlinearity_is_rejected() {
        let u = catalog("constant", 1.0, 1).unwrap();
        assert!(comparison_experiment(&u, &u, &nonlinearity("anti-laplacian", 1, 1.0).unwrap(), &quick()).is_err());
    }
}

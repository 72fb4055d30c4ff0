use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::expectation::hitting_index;
use super::lattice::LatticeModel;
use super::markov::solve_markov;
use super::oracle::{policy_moments, sign_tree_len, strategy_dump, HistoryTable};
use super::tree::{Mode, NodeRule, NodeView};
use crate::error::{config, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum StoppingFamily {
    /// `H ≡ time ∧ T`
    Deterministic { time: f64 },
    /// `H_δ`
    Hitting { delta: f64 },
}

impl StoppingFamily {
    pub fn stops(&self, model: &LatticeModel, k: usize, x: &[f64]) -> bool {
        let t = model.time(k);
        k == model.steps()
            || match *self {
                StoppingFamily::Deterministic { time } => t >= time - 1e-12 * time.max(1.0),
                StoppingFamily::Hitting { delta } => hitting_index(delta, t, x),
            }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentViolation {
    pub strategy: String,
    pub inequality: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub policy: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub family: StoppingFamily,
    pub exhaustive: bool,
    pub strategies: u64,
    /// `L`
    pub drift_constant: f64,
    /// `2 d L² (T + 1)`
    pub second_constant: f64,
    /// largest `|E B^a_H| / (L E H)` seen
    pub max_drift_ratio: f64,
    /// largest `E|B_H|² / (2 d L² (T+1) E H)` seen
    pub max_second_ratio: f64,
    pub violations: Vec<MomentViolation>,
    pub passed: bool,
}

const REL: f64 = 1e-12;
const ABS: f64 = 1e-15;
const MAX_LISTED: usize = 20;

struct Check {
    c1: f64,
    c2: f64,
}

impl Check {
    /// Returns the two ratios and the failing inequalities.
    fn run(&self, eh: f64, eb: &[f64], eb2: f64) -> (f64, f64, Vec<(&'static str, f64, f64)>) {
        let mut bad = Vec::new();
        let rhs1 = self.c1 * eh;
        let lhs1 = eb.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if lhs1 > rhs1 * (1.0 + REL) + ABS {
            bad.push(("|E[B_H]| <= L E[H]", lhs1, rhs1));
        }
        let rhs2 = self.c2 * eh;
        if eb2 > rhs2 * (1.0 + REL) + ABS {
            bad.push(("E|B_H|^2 <= 2dL^2(T+1) E[H]", eb2, rhs2));
        }
        let ratio = |l: f64, r: f64| if r > 0.0 { l / r } else if l > ABS { f64::INFINITY } else { 0.0 };
        (ratio(lhs1, rhs1), ratio(eb2, rhs2), bad)
    }
}

fn constants(model: &LatticeModel) -> Check {
    let l = model.bound();
    Check { c1: l, c2: 2.0 * model.dim() as f64 * l * l * (model.horizon() + 1.0) }
}

/// Checks both moment bounds for every strategy of the lattice.
pub fn moment_check_exhaustive(model: &LatticeModel, family: StoppingFamily) -> Result<MomentReport> {
    let rule = |v: &NodeView| {
        if family.stops(model, v.k, v.current()) {
            NodeRule::Absorb(0.0)
        } else {
            NodeRule::Continue
        }
    };
    let tab = HistoryTable::build(model, &rule)?;
    let controls = model.joint_controls() as u64;
    let m = sign_tree_len(model);
    let total = (controls as f64).powi(m as i32);
    if total > 5e8 {
        return config(format!("{total} strategies exceed the enumeration budget"));
    }
    let per_root = controls.pow((m - 1) as u32);
    let check = constants(model);
    let parts: Vec<(f64, f64, Vec<MomentViolation>)> = (0..controls)
        .into_par_iter()
        .map(|root| {
            let mut policy = vec![0u32; m];
            policy[0] = root as u32;
            let (mut r1, mut r2, mut viol) = (0.0f64, 0.0f64, Vec::new());
            for idx in 0..per_root {
                let (eh, eb, eb2) = policy_moments(model, &tab, &policy);
                let (a, b, bad) = check.run(eh, &eb, eb2);
                r1 = r1.max(a);
                r2 = r2.max(b);
                for (ineq, lhs, rhs) in bad {
                    if viol.len() < MAX_LISTED {
                        viol.push(MomentViolation {
                            strategy: format!("{root}:{idx}"),
                            inequality: ineq,
                            lhs,
                            rhs,
                            policy: strategy_dump(model, &policy),
                        });
                    }
                }
                for digit in policy[1..].iter_mut() {
                    *digit += 1;
                    if (*digit as u64) < controls {
                        break;
                    }
                    *digit = 0;
                }
            }
            (r1, r2, viol)
        })
        .collect();
    let mut report = MomentReport {
        family,
        exhaustive: true,
        strategies: per_root * controls,
        drift_constant: check.c1,
        second_constant: check.c2,
        max_drift_ratio: 0.0,
        max_second_ratio: 0.0,
        violations: Vec::new(),
        passed: true,
    };
    for (a, b, v) in parts {
        report.max_drift_ratio = report.max_drift_ratio.max(a);
        report.max_second_ratio = report.max_second_ratio.max(b);
        report.violations.extend(v);
    }
    report.violations.truncate(MAX_LISTED);
    report.passed = report.violations.is_empty();
    Ok(report)
}

/// Checks the bounds for the strategies that maximise `E|B_H|²` and
/// maximise/minimise `E[B^a_H]` on the recombining lattice (any depth).
pub fn moment_check_sup(model: &LatticeModel, family: StoppingFamily) -> Result<MomentReport> {
    let check = constants(model);
    let mut objectives: Vec<(String, Mode, Box<dyn Fn(&[f64]) -> f64 + Sync>)> =
        vec![("max E|B_H|^2".into(), Mode::Sup, Box::new(|x: &[f64]| x.iter().map(|v| v * v).sum()))];
    for a in 0..model.dim() {
        objectives.push((format!("max E[B^{a}_H]"), Mode::Sup, Box::new(move |x: &[f64]| x[a])));
        objectives.push((format!("min E[B^{a}_H]"), Mode::Inf, Box::new(move |x: &[f64]| x[a])));
    }
    let mut report = MomentReport {
        family,
        exhaustive: false,
        strategies: objectives.len() as u64,
        drift_constant: check.c1,
        second_constant: check.c2,
        max_drift_ratio: 0.0,
        max_second_ratio: 0.0,
        violations: Vec::new(),
        passed: true,
    };
    for (name, mode, g) in &objectives {
        let rule = |k: usize, _t: f64, x: &[f64]| {
            if family.stops(model, k, x) {
                NodeRule::Absorb(g(x))
            } else {
                NodeRule::Continue
            }
        };
        let sol = solve_markov(model, *mode, &rule)?;
        let exits = sol.exit_distribution(model);
        let eh: f64 = exits.iter().map(|e| e.p * e.t).sum();
        let mut eb = vec![0.0; model.dim()];
        let mut eb2 = 0.0;
        for e in &exits {
            for (s, v) in eb.iter_mut().zip(&e.x) {
                *s += e.p * v;
            }
            eb2 += e.p * e.x.iter().map(|v| v * v).sum::<f64>();
        }
        let (a, b, bad) = check.run(eh, &eb, eb2);
        report.max_drift_ratio = report.max_drift_ratio.max(a);
        report.max_second_ratio = report.max_second_ratio.max(b);
        for (ineq, lhs, rhs) in bad {
            report.violations.push(MomentViolation {
                strategy: name.clone(),
                inequality: ineq,
                lhs,
                rhs,
                policy: serde_json::Value::Null,
            });
        }
    }
    report.passed = report.violations.is_empty();
    Ok(report)
}

/// Exhaustive when the lattice is small enough, sup-strategies otherwise.
pub fn moment_check(model: &LatticeModel, family: StoppingFamily) -> Result<MomentReport> {
    match moment_check_exhaustive(model, family) {
        Ok(r) => Ok(r),
        Err(crate::Error::Configuration(_)) => moment_check_sup(model, family),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinear_expectation::lattice::{build_lattice, ControlGrids};

    #[test]
    fn zero_bound_both_sides_zero() {
        let m = build_lattice(0.0, 1.0, 3, 1, ControlGrids::default()).unwrap();
        let r = moment_check_exhaustive(&m, StoppingFamily::Hitting { delta: 0.5 }).unwrap();
        assert!(r.passed);
        assert_eq!(r.strategies, 1);
    }

    #[test]
    fn boundary_case_passes_with_equality() {
        // the maximiser of E[B_T] is α ≡ L with β ≡ 0 (first in grid order)
        let m = build_lattice(1.0, 1.0, 4, 1, ControlGrids::default()).unwrap();
        let r = moment_check_sup(&m, StoppingFamily::Deterministic { time: 1.0 }).unwrap();
        assert!(r.passed);
        assert!((r.max_drift_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn small_exhaustive_passes() {
        let m = build_lattice(1.0, 1.0, 2, 1, ControlGrids::default()).unwrap();
        let r = moment_check_exhaustive(&m, StoppingFamily::Hitting { delta: 0.5 }).unwrap();
        assert!(r.passed, "{:?}", r.violations);
        assert_eq!(r.strategies, 729);
        assert!(r.max_second_ratio <= 1.0);
    }
}

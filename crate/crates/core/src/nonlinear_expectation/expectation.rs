use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::lattice::{JointMoves, LatticeModel};
use super::markov::solve_markov;
use super::tree::{solve_tree, Mode, NodeRule, NodeView};
use crate::error::{config, domain, Result};
use crate::functional::SharedFunctional;
use crate::path_space::euclid;

type PathFn = dyn Fn(&NodeView) -> f64 + Send + Sync;
type PointFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Adapted payoff on the lattice. Values only see the history up to the
/// node, so adaptedness holds by construction.
#[derive(Clone)]
pub enum PayoffOnTree {
    /// `g(B_T)`; solved on the recombining lattice at any depth
    Terminal(Arc<PointFn>),
    /// `f(B_{0..T})`; solved on the history tree
    Path(Arc<PathFn>),
}

impl PayoffOnTree {
    pub fn terminal(g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self::Terminal(Arc::new(g))
    }

    pub fn path(f: impl Fn(&NodeView) -> f64 + Send + Sync + 'static) -> Self {
        Self::Path(Arc::new(f))
    }

    /// `u(T, B)` with the lattice path linearly interpolated.
    pub fn from_functional(u: SharedFunctional) -> Self {
        Self::path(move |v| u.eval(v.t, &v.to_pw()))
    }

    pub fn adapted(&self) -> bool {
        true
    }

    pub fn eval_terminal(&self, v: &NodeView) -> f64 {
        match self {
            Self::Terminal(g) => g(v.current()),
            Self::Path(f) => f(v),
        }
    }

    /// Sum of weighted payoffs; terminal if every part is terminal.
    pub fn combine(parts: Vec<(f64, PayoffOnTree)>) -> Self {
        if parts.iter().all(|(_, p)| matches!(p, Self::Terminal(_))) {
            let gs: Vec<(f64, Arc<PointFn>)> = parts
                .into_iter()
                .map(|(w, p)| match p {
                    Self::Terminal(g) => (w, g),
                    Self::Path(_) => unreachable!(),
                })
                .collect();
            Self::terminal(move |x| gs.iter().map(|(w, g)| w * g(x)).sum())
        } else {
            Self::path(move |v| parts.iter().map(|(w, p)| w * p.eval_terminal(v)).sum())
        }
    }
}

pub const BUILTIN_PAYOFFS: &[&str] = &["zero", "endpoint", "endpoint-squared", "abs-endpoint", "running-max", "average"];

pub fn builtin_payoff(name: &str) -> Result<PayoffOnTree> {
    Ok(match name {
        "zero" => PayoffOnTree::terminal(|_| 0.0),
        "endpoint" => PayoffOnTree::terminal(|x| x[0]),
        "endpoint-squared" => PayoffOnTree::terminal(|x| x.iter().map(|v| v * v).sum()),
        "abs-endpoint" => PayoffOnTree::terminal(euclid),
        "running-max" => PayoffOnTree::path(|v| (0..=v.k).map(|j| v.node(j)[0]).fold(f64::NEG_INFINITY, f64::max)),
        "average" => PayoffOnTree::path(|v| (0..=v.k).map(|j| v.node(j)[0]).sum::<f64>() / (v.k + 1) as f64),
        other => return config(format!("unknown payoff `{other}`; known: {}", BUILTIN_PAYOFFS.join(", "))),
    })
}

/// `sup_P E^P[f]` (or `inf`) over control-grid strategies.
pub fn sup_expectation(model: &LatticeModel, payoff: &PayoffOnTree, mode: Mode) -> Result<f64> {
    let n = model.steps();
    match payoff {
        PayoffOnTree::Terminal(g) => {
            let rule = |k: usize, _t: f64, x: &[f64]| if k == n { NodeRule::Absorb(g(x)) } else { NodeRule::Continue };
            Ok(solve_markov(model, mode, &rule)?.value)
        }
        PayoffOnTree::Path(f) => {
            let rule = |v: &NodeView| if v.k == n { NodeRule::Absorb(f(v)) } else { NodeRule::Continue };
            Ok(solve_tree(model, mode, &rule, false)?.value)
        }
    }
}

/// Whether a node at time `t` with value `x` has reached `H_δ`.
pub(crate) fn hitting_index(delta: f64, t: f64, x: &[f64]) -> bool {
    euclid(x) >= delta || t >= delta - 1e-12 * delta.max(1.0)
}

/// `H_δ = δ ∧ (first grid time with |B| ≥ δ)`, reported as at most `T`.
pub fn hitting_time(delta: f64, values: &[f64], dim: usize, h: f64, horizon: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return domain("δ must be positive");
    }
    let cap = delta.min(horizon);
    for (k, x) in values.chunks(dim).enumerate() {
        let t = k as f64 * h;
        if t >= cap {
            break;
        }
        if euclid(x) >= delta {
            return Ok(t);
        }
    }
    Ok(cap)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledBound {
    pub estimate: f64,
    pub std_error: f64,
    pub strategies: usize,
    pub paths: usize,
    /// always true: random strategies only approach the sup from below
    pub lower_bound: bool,
}

/// Best Monte Carlo value over random open-loop control sequences.
pub fn sampled_lower_bound(
    model: &LatticeModel,
    payoff: &PayoffOnTree,
    strategies: usize,
    paths: usize,
    seed: u64,
) -> Result<SampledBound> {
    if strategies == 0 || paths < 2 {
        return config("need at least one strategy and two paths");
    }
    let jm = JointMoves::new(model);
    let d = model.dim();
    let n = model.steps();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = (f64::NEG_INFINITY, 0.0);
    let mut values = Vec::with_capacity((n + 1) * d);
    let mut moves = Vec::with_capacity(n);
    let mut inc = vec![0.0; d];
    for _ in 0..strategies {
        let plan: Vec<usize> = (0..n).map(|_| rng.random_range(0..jm.controls)).collect();
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..paths {
            values.clear();
            values.resize(d, 0.0);
            moves.clear();
            for (k, &c) in plan.iter().enumerate() {
                let id = jm.child(c, rng.random_range(0..jm.branches));
                jm.increment(id, &mut inc);
                for a in 0..d {
                    values.push(values[k * d + a] + inc[a]);
                }
                moves.push(id as u32);
            }
            let v = NodeView { k: n, t: model.time(n), h: model.step(), dim: d, values: &values, moves: &moves };
            let y = payoff.eval_terminal(&v);
            s += y;
            s2 += y * y;
        }
        let mean = s / paths as f64;
        let var = (s2 / paths as f64 - mean * mean).max(0.0) * paths as f64 / (paths - 1) as f64;
        if mean > best.0 {
            best = (mean, (var / paths as f64).sqrt());
        }
    }
    Ok(SampledBound { estimate: best.0, std_error: best.1, strategies, paths, lower_bound: true })
}

/// Lattice parameters and per-axis increments as JSON.
pub fn lattice_dump(model: &LatticeModel) -> serde_json::Value {
    let jm = JointMoves::new(model);
    let controls: Vec<_> = model
        .axis_controls()
        .into_iter()
        .enumerate()
        .map(|(c, ctl)| {
            serde_json::json!({
                "drift": ctl.drift as f64 * model.drift_unit(),
                "vol": ctl.vol as f64 * model.vol_unit(),
                "down": jm.axis.values[jm.axis.by_control[c][0]],
                "up": jm.axis.values[jm.axis.by_control[c][1]],
            })
        })
        .collect();
    serde_json::json!({
        "bound": model.bound(),
        "horizon": model.horizon(),
        "steps": model.steps(),
        "dim": model.dim(),
        "step": model.step(),
        "axis_controls": controls,
        "axis_moves": jm.axis.values,
        "scenarios_per_step": model.scenarios_per_step(),
        "max_reach": model.max_reach(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinear_expectation::lattice::{build_lattice, ControlGrids};

    fn m(l: f64, n: usize) -> LatticeModel {
        build_lattice(l, 1.0, n, 1, ControlGrids::default()).unwrap()
    }

    #[test]
    fn zero_bound_evaluates_zero_path() {
        let p = PayoffOnTree::terminal(|x| (x[0] + 0.7).exp());
        for mode in [Mode::Sup, Mode::Inf] {
            assert_eq!(sup_expectation(&m(0.0, 5), &p, mode).unwrap(), 0.7f64.exp());
        }
    }

    #[test]
    fn endpoint_is_lt() {
        for n in [1, 4, 12] {
            let v = sup_expectation(&m(1.0, n), &builtin_payoff("endpoint").unwrap(), Mode::Sup).unwrap();
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn duality_and_constants() {
        let model = m(1.0, 4);
        let f = builtin_payoff("running-max").unwrap();
        let neg = PayoffOnTree::combine(vec![(-1.0, f.clone())]);
        let a = sup_expectation(&model, &f, Mode::Inf).unwrap();
        let b = sup_expectation(&model, &neg, Mode::Sup).unwrap();
        assert_eq!(a, -b);
        let c = PayoffOnTree::path(|_| 0.37);
        assert_eq!(sup_expectation(&model, &c, Mode::Sup).unwrap(), 0.37);
    }

    #[test]
    fn hitting_examples() {
        let inside = [0.0, 0.1, -0.1, 0.2];
        assert_eq!(hitting_time(0.5, &inside, 1, 0.125, 1.0).unwrap(), 0.5);
        let hit = [0.0, 0.3, 0.1];
        assert_eq!(hitting_time(0.3, &hit, 1, 0.125, 1.0).unwrap(), 0.125);
        assert_eq!(hitting_time(5.0, &[0.0, 0.1], 1, 0.5, 1.0).unwrap(), 1.0);
        assert!(hitting_time(0.0, &[0.0], 1, 0.5, 1.0).is_err());
    }

    #[test]
    fn sampled_bound_is_below_sup() {
        let model = m(1.0, 4);
        let p = builtin_payoff("endpoint-squared").unwrap();
        let sup = sup_expectation(&model, &p, Mode::Sup).unwrap();
        let s = sampled_lower_bound(&model, &p, 50, 4000, 1).unwrap();
        assert!(s.lower_bound);
        assert!(s.estimate <= sup + 4.0 * s.std_error);
    }
}

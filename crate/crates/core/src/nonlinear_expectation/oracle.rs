//! Brute-force enumeration over adapted strategies and stopping rules.
//!
//! Under a fixed strategy the reachable lattice nodes are indexed by the
//! sign sequence of the branches, so a strategy (with optional stopping) is
//! one option per node of the `2^d`-ary sign tree. Every such policy is
//! evaluated forward, independently of the backward inductions.

use rayon::prelude::*;
use serde::Serialize;

use super::lattice::{JointMoves, LatticeModel};
use super::tree::{Mode, NodeRule, NodeView};
use crate::error::{config, Result};

const MAX_TABLE: usize = 5_000_000;
const MAX_POLICIES: f64 = 5e8;

/// Every history of the lattice with its rule, in breadth-first order.
pub(crate) struct HistoryTable {
    pub k: Vec<u8>,
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub rule: Vec<NodeRule>,
    pub first_child: Vec<usize>,
    pub parent: Vec<usize>,
    pub moves: JointMoves,
    pub dim: usize,
}

impl HistoryTable {
    pub fn build(model: &LatticeModel, rule: &(dyn Fn(&NodeView) -> NodeRule + Sync)) -> Result<Self> {
        model.check_exhaustive()?;
        let jm = JointMoves::new(model);
        let d = model.dim();
        let total: f64 = (0..=model.steps()).map(|k| (jm.count as f64).powi(k as i32)).sum();
        if total > MAX_TABLE as f64 {
            return config(format!("history table with {total} nodes is too large for enumeration"));
        }
        let mut tab = HistoryTable {
            k: Vec::new(),
            t: Vec::new(),
            x: Vec::new(),
            rule: Vec::new(),
            first_child: Vec::new(),
            parent: vec![0],
            moves: jm,
            dim: d,
        };
        // layer of (values, moves) histories
        let mut layer: Vec<(Vec<f64>, Vec<u32>)> = vec![(vec![0.0; d], Vec::new())];
        let mut inc = vec![0.0; d];
        for k in 0..=model.steps() {
            let next_start = tab.k.len() + layer.len();
            let mut next = Vec::new();
            for (n, (vals, mv)) in layer.iter().enumerate() {
                let view = NodeView { k, t: model.time(k), h: model.step(), dim: d, values: vals, moves: mv };
                tab.k.push(k as u8);
                tab.t.push(view.t);
                tab.x.extend_from_slice(view.current());
                let r = rule(&view);
                if k == model.steps() && r == NodeRule::Continue {
                    return config(format!("payoff rule continues at the terminal node {}", view.branch_string()));
                }
                tab.rule.push(r);
                tab.first_child.push(next_start + n * tab.moves.count);
                if k < model.steps() {
                    let me = tab.k.len() - 1;
                    tab.parent.extend(std::iter::repeat_n(me, tab.moves.count));
                    for id in 0..tab.moves.count {
                        tab.moves.increment(id, &mut inc);
                        let mut v = vals.clone();
                        for a in 0..d {
                            v.push(vals[k * d + a] + inc[a]);
                        }
                        let mut m = mv.clone();
                        m.push(id as u32);
                        next.push((v, m));
                    }
                }
            }
            layer = next;
        }
        Ok(tab)
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn point(&self, node: usize) -> &[f64] {
        &self.x[node * self.dim..(node + 1) * self.dim]
    }

    /// Node indices from the root to `node`.
    pub fn lineage(&self, node: usize) -> Vec<usize> {
        let mut out = vec![node];
        let mut n = node;
        while n != 0 {
            n = self.parent[n];
            out.push(n);
        }
        out.reverse();
        out
    }

    pub fn child(&self, node: usize, control: usize, sigma: usize) -> usize {
        self.first_child[node] + self.moves.child(control, sigma)
    }
}

fn sign_tree_size(branches: usize, steps: usize) -> usize {
    (0..steps).map(|k| branches.pow(k as u32)).sum()
}

fn sign_offset(branches: usize, k: usize) -> usize {
    sign_tree_size(branches, k)
}

struct Walker<'a> {
    tab: &'a HistoryTable,
    steps: usize,
    branches: usize,
    controls: usize,
}

impl Walker<'_> {
    /// Value of `policy` from sign node `(k, local)` at history `node`.
    fn value(&self, policy: &[u32], k: usize, local: usize, node: usize) -> f64 {
        match self.tab.rule[node] {
            NodeRule::Absorb(v) => return v,
            NodeRule::Obstacle(x) if k == self.steps => return x,
            _ => {}
        }
        let opt = policy[sign_offset(self.branches, k) + local] as usize;
        if opt == self.controls {
            if let NodeRule::Obstacle(x) = self.tab.rule[node] {
                return x;
            }
        }
        let c = if opt == self.controls { 0 } else { opt };
        let mut acc = 0.0;
        for s in 0..self.branches {
            acc += self.value(policy, k + 1, local * self.branches + s, self.tab.child(node, c, s));
        }
        acc / self.branches as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnumerationResult {
    pub value: f64,
    pub policies: u64,
    /// option per sign-tree node; `controls` means stop
    pub best_policy: Vec<u32>,
}

fn enumerate(model: &LatticeModel, mode: Mode, tab: &HistoryTable, allow_stop: bool) -> Result<EnumerationResult> {
    let branches = model.branches();
    let controls = model.joint_controls();
    let options = controls + usize::from(allow_stop);
    let m = sign_tree_size(branches, model.steps());
    let count = (options as f64).powi(m as i32);
    if count > MAX_POLICIES {
        return config(format!("{count} policies exceed the enumeration budget"));
    }
    let walker = Walker { tab, steps: model.steps(), branches, controls };
    let per_root = (options as u64).pow((m - 1) as u32);
    let best = (0..options)
        .into_par_iter()
        .map(|root| {
            let mut policy = vec![0u32; m];
            policy[0] = root as u32;
            let mut best = (mode.worst(), policy.clone());
            for _ in 0..per_root {
                let v = walker.value(&policy, 0, 0, 0);
                if mode.better(v, best.0) {
                    best = (v, policy.clone());
                }
                for digit in policy[1..].iter_mut() {
                    *digit += 1;
                    if (*digit as usize) < options {
                        break;
                    }
                    *digit = 0;
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((mode.worst(), Vec::new()), |acc, b| if mode.better(b.0, acc.0) || acc.1.is_empty() { b } else { acc });
    Ok(EnumerationResult { value: best.0, policies: per_root * options as u64, best_policy: best.1 })
}

/// Best `E^P[f]` over all adapted control-grid strategies.
pub fn enumerate_strategies(
    model: &LatticeModel,
    mode: Mode,
    payoff: &(dyn Fn(&NodeView) -> f64 + Sync),
) -> Result<EnumerationResult> {
    let n = model.steps();
    let rule = |v: &NodeView| if v.k == n { NodeRule::Absorb(payoff(v)) } else { NodeRule::Continue };
    let tab = HistoryTable::build(model, &rule)?;
    enumerate(model, mode, &tab, false)
}

/// Best `E^P[X_τ]` over strategies and adapted stopping rules, with the
/// absorption given by `rule`.
pub fn enumerate_stopping(
    model: &LatticeModel,
    mode: Mode,
    rule: &(dyn Fn(&NodeView) -> NodeRule + Sync),
) -> Result<EnumerationResult> {
    let tab = HistoryTable::build(model, rule)?;
    enumerate(model, mode, &tab, true)
}

/// JSON map from sign strings (`+`/`-` per axis and step) to the chosen option.
pub fn strategy_dump(model: &LatticeModel, policy: &[u32]) -> serde_json::Value {
    let branches = model.branches();
    let d = model.dim();
    let ctl = model.axis_controls();
    let controls = model.joint_controls();
    let mut map = serde_json::Map::new();
    for k in 0..model.steps() {
        for local in 0..branches.pow(k as u32) {
            let key = sign_key(model, k, local);
            let opt = policy[sign_offset(branches, k) + local] as usize;
            let val = if opt == controls {
                serde_json::json!("stop")
            } else {
                let mut rest = opt;
                let mut drift = Vec::new();
                let mut vol = Vec::new();
                for _ in 0..d {
                    let c = ctl[rest % ctl.len()];
                    rest /= ctl.len();
                    drift.push(c.drift as f64 * model.drift_unit());
                    vol.push(c.vol as f64 * model.vol_unit());
                }
                serde_json::json!({ "drift": drift, "vol": vol })
            };
            map.insert(key, val);
        }
    }
    serde_json::Value::Object(map)
}

/// Moments `E[H]`, `E[B_H]`, `E|B_H|²` of one policy.
pub(crate) fn policy_moments(model: &LatticeModel, tab: &HistoryTable, policy: &[u32]) -> (f64, Vec<f64>, f64) {
    let branches = model.branches();
    let d = model.dim();
    let mut acc = (0.0, vec![0.0; d], 0.0);
    fn walk(
        tab: &HistoryTable,
        policy: &[u32],
        branches: usize,
        k: usize,
        local: usize,
        node: usize,
        p: f64,
        acc: &mut (f64, Vec<f64>, f64),
    ) {
        if let NodeRule::Absorb(_) = tab.rule[node] {
            let d = tab.dim;
            let x = &tab.x[node * d..(node + 1) * d];
            acc.0 += p * tab.t[node];
            for (e, v) in acc.1.iter_mut().zip(x) {
                *e += p * v;
            }
            acc.2 += p * x.iter().map(|v| v * v).sum::<f64>();
            return;
        }
        let c = policy[sign_offset(branches, k) + local] as usize;
        for s in 0..branches {
            walk(tab, policy, branches, k + 1, local * branches + s, tab.child(node, c, s), p / branches as f64, acc);
        }
    }
    walk(tab, policy, branches, 0, 0, 0, 1.0, &mut acc);
    acc
}

pub(crate) fn sign_tree_len(model: &LatticeModel) -> usize {
    sign_tree_size(model.branches(), model.steps())
}

/// `+`/`-` per axis, steps separated by `/`; the root is `root`.
pub(crate) fn sign_key(model: &LatticeModel, k: usize, local: usize) -> String {
    if k == 0 {
        return "root".into();
    }
    let b = model.branches();
    let mut parts = Vec::new();
    let mut rest = local;
    for _ in 0..k {
        parts.push(rest % b);
        rest /= b;
    }
    parts
        .iter()
        .rev()
        .map(|s| (0..model.dim()).map(|a| if (s >> a) & 1 == 1 { '+' } else { '-' }).collect::<String>())
        .collect::<Vec<_>>()
        .join("/")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinear_expectation::lattice::{build_lattice, ControlGrids};
    use crate::nonlinear_expectation::tree::solve_tree;

    /// Deterministic pseudo-random adapted value from the history.
    fn hashed(v: &NodeView, salt: u64) -> f64 {
        let mut h = salt ^ 0x9e37_79b9_7f4a_7c15;
        for x in v.values {
            h ^= x.to_bits();
            h = h.wrapping_mul(0x1000_0000_01b3).rotate_left(17);
        }
        (h >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }

    #[test]
    fn dp_matches_strategy_enumeration() {
        for n in 1..=2 {
            let m = build_lattice(1.0, 1.0, n, 1, ControlGrids::default()).unwrap();
            let f = |v: &NodeView| hashed(v, 3) + v.current()[0].powi(2);
            for mode in [Mode::Sup, Mode::Inf] {
                let e = enumerate_strategies(&m, mode, &f).unwrap();
                let rule = |v: &NodeView| if v.k == n { NodeRule::Absorb(f(v)) } else { NodeRule::Continue };
                let dp = solve_tree(&m, mode, &rule, false).unwrap();
                assert!((e.value - dp.value).abs() < 1e-12, "{} {}", e.value, dp.value);
            }
        }
    }

    #[test]
    fn snell_matches_stopping_enumeration() {
        let m = build_lattice(1.0, 1.0, 2, 1, ControlGrids::default()).unwrap();
        let rule = |v: &NodeView| {
            let x = hashed(v, 11);
            if v.k == 2 { NodeRule::Absorb(x) } else { NodeRule::Obstacle(x) }
        };
        for mode in [Mode::Sup, Mode::Inf] {
            let e = enumerate_stopping(&m, mode, &rule).unwrap();
            let dp = solve_tree(&m, mode, &rule, false).unwrap();
            assert!((e.value - dp.value).abs() < 1e-12);
        }
    }

    #[test]
    fn dump_labels() {
        let m = build_lattice(1.0, 1.0, 2, 1, ControlGrids::default()).unwrap();
        let policy = vec![8u32, 0, 9];
        let j = strategy_dump(&m, &policy);
        assert_eq!(j["root"]["drift"][0], 1.0);
        assert_eq!(j["-"]["vol"][0], 0.0);
        assert_eq!(j["+"], "stop");
        assert_eq!(sign_key(&m, 2, 1), "-/+");
    }
}

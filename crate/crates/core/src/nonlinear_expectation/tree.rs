use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lattice::{JointMoves, LatticeModel};
use crate::error::{config, Result};
use crate::path_space::PwPath;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Sup,
    Inf,
}

impl Mode {
    /// Whether `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Mode::Sup => a > b,
            Mode::Inf => a < b,
        }
    }

    pub fn worst(self) -> f64 {
        match self {
            Mode::Sup => f64::NEG_INFINITY,
            Mode::Inf => f64::INFINITY,
        }
    }
}

/// A lattice history up to step `k`.
#[derive(Debug, Clone, Copy)]
pub struct NodeView<'a> {
    pub k: usize,
    pub t: f64,
    pub h: f64,
    pub dim: usize,
    /// node values `B_0, ..., B_k`, flattened
    pub values: &'a [f64],
    /// joint move ids of the `k` steps
    pub moves: &'a [u32],
}

impl NodeView<'_> {
    pub fn current(&self) -> &[f64] {
        self.node(self.k)
    }

    pub fn node(&self, j: usize) -> &[f64] {
        &self.values[j * self.dim..(j + 1) * self.dim]
    }

    pub fn time(&self, j: usize) -> f64 {
        if j == self.k {
            self.t
        } else {
            j as f64 * self.h
        }
    }

    /// Linear interpolation of the history, held constant after `t`.
    pub fn to_pw(&self) -> PwPath {
        let knots = (0..=self.k).map(|j| self.time(j)).collect();
        PwPath::linear(self.dim, knots, self.values[..(self.k + 1) * self.dim].to_vec())
    }

    pub fn branch_string(&self) -> String {
        branch_string(self.moves)
    }
}

pub(crate) fn branch_string(moves: &[u32]) -> String {
    if moves.is_empty() {
        return "root".into();
    }
    moves.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(".")
}

/// What happens at a node in a backward induction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeRule {
    /// The node is terminal with this value.
    Absorb(f64),
    /// Pure expectation step.
    Continue,
    /// Stopping is allowed with this reward.
    Obstacle(f64),
}

/// Earliest node, along the optimizing controls, at which stopping is optimal
/// before absorption.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contact {
    pub k: usize,
    pub t: f64,
    pub path: Vec<f64>,
    pub branch: String,
    pub obstacle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeRecord {
    pub branch: String,
    pub k: usize,
    pub t: f64,
    pub x: Vec<f64>,
    pub obstacle: Option<f64>,
    pub value: f64,
    pub control: Option<usize>,
    pub stopped: bool,
    pub absorbed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TreeSolution {
    pub value: f64,
    pub stopped_at_root: bool,
    pub root_control: Option<usize>,
    pub contact: Option<Contact>,
    pub nodes: u64,
    pub records: Vec<NodeRecord>,
}

struct Ctx<'a> {
    model: &'a LatticeModel,
    moves: JointMoves,
    mode: Mode,
    rule: &'a (dyn Fn(&NodeView) -> NodeRule + Sync),
    record: bool,
    par_depth: usize,
}

struct Sub {
    value: f64,
    stopped: bool,
    control: Option<usize>,
    contact: Option<Contact>,
    nodes: u64,
    records: Vec<NodeRecord>,
}

const PAR_DEPTH: usize = 2;

/// Backward induction on the non-recombining history tree.
///
/// Values average the branches of each control, then take the best control
/// in fixed grid order; at `Obstacle` nodes the reward competes with the
/// continuation value. Ties favour stopping.
pub fn solve_tree(
    model: &LatticeModel,
    mode: Mode,
    rule: &(dyn Fn(&NodeView) -> NodeRule + Sync),
    record: bool,
) -> Result<TreeSolution> {
    model.check_exhaustive()?;
    let ctx = Ctx { model, moves: JointMoves::new(model), mode, rule, record, par_depth: PAR_DEPTH };
    let d = model.dim();
    let mut values = vec![0.0; d];
    values.reserve(model.steps() * d);
    let mut moves = Vec::with_capacity(model.steps());
    let sub = visit(&ctx, 0, &mut values, &mut moves)?;
    Ok(TreeSolution {
        value: sub.value,
        stopped_at_root: sub.stopped,
        root_control: sub.control,
        contact: sub.contact,
        nodes: sub.nodes,
        records: sub.records,
    })
}

fn visit(ctx: &Ctx, k: usize, values: &mut Vec<f64>, moves: &mut Vec<u32>) -> Result<Sub> {
    let model = ctx.model;
    let d = model.dim();
    let view = NodeView { k, t: model.time(k), h: model.step(), dim: d, values, moves };
    let rule = (ctx.rule)(&view);
    let record_of = |value: f64, obstacle: Option<f64>, control, stopped, absorbed| NodeRecord {
        branch: view.branch_string(),
        k,
        t: view.t,
        x: view.current().to_vec(),
        obstacle,
        value,
        control,
        stopped,
        absorbed,
    };
    let obstacle = match rule {
        NodeRule::Absorb(v) => {
            let records = if ctx.record { vec![record_of(v, None, None, false, true)] } else { Vec::new() };
            return Ok(Sub { value: v, stopped: false, control: None, contact: None, nodes: 1, records });
        }
        NodeRule::Obstacle(x) if k == model.steps() => {
            let records = if ctx.record { vec![record_of(x, Some(x), None, true, true)] } else { Vec::new() };
            return Ok(Sub { value: x, stopped: false, control: None, contact: None, nodes: 1, records });
        }
        NodeRule::Continue if k == model.steps() => {
            return config(format!("payoff rule continues at the terminal node {}", view.branch_string()));
        }
        NodeRule::Obstacle(x) => Some(x),
        NodeRule::Continue => None,
    };

    let jm = &ctx.moves;
    let mut children: Vec<Sub> = if k < ctx.par_depth {
        let base_v = values.clone();
        let base_m = moves.clone();
        (0..jm.count)
            .into_par_iter()
            .map(|id| {
                let mut v = base_v.clone();
                let mut m = base_m.clone();
                push_move(jm, k, id, &mut v, &mut m);
                visit(ctx, k + 1, &mut v, &mut m)
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        let mut out = Vec::with_capacity(jm.count);
        for id in 0..jm.count {
            push_move(jm, k, id, values, moves);
            let r = visit(ctx, k + 1, values, moves);
            values.truncate((k + 1) * d);
            moves.truncate(k);
            out.push(r?);
        }
        out
    };

    let inv = 1.0 / jm.branches as f64;
    let (mut best, mut best_c) = (ctx.mode.worst(), 0);
    for c in 0..jm.controls {
        let mut acc = 0.0;
        for s in 0..jm.branches {
            acc += children[jm.child(c, s)].value;
        }
        let avg = acc * inv;
        if ctx.mode.better(avg, best) {
            best = avg;
            best_c = c;
        }
    }
    let stopped = match obstacle {
        Some(x) => !ctx.mode.better(best, x),
        None => false,
    };
    let value = if stopped { obstacle.unwrap_or(best) } else { best };
    let view = NodeView { k, t: model.time(k), h: model.step(), dim: d, values, moves };
    let contact = if stopped {
        Some(Contact {
            k,
            t: view.t,
            path: values.clone(),
            branch: view.branch_string(),
            obstacle: value,
        })
    } else {
        let mut found: Option<Contact> = None;
        for s in 0..jm.branches {
            if let Some(c) = &children[jm.child(best_c, s)].contact {
                if found.as_ref().is_none_or(|f| c.k < f.k) {
                    found = Some(c.clone());
                }
            }
        }
        found
    };
    let nodes = 1 + children.iter().map(|c| c.nodes).sum::<u64>();
    let mut records = Vec::new();
    if ctx.record {
        records.push(NodeRecord {
            branch: view.branch_string(),
            k,
            t: view.t,
            x: view.current().to_vec(),
            obstacle,
            value,
            control: if stopped { None } else { Some(best_c) },
            stopped,
            absorbed: false,
        });
        for c in children.iter_mut() {
            records.append(&mut c.records);
        }
    }
    Ok(Sub { value, stopped, control: (!stopped).then_some(best_c), contact, nodes, records })
}

fn push_move(jm: &JointMoves, k: usize, id: usize, values: &mut Vec<f64>, moves: &mut Vec<u32>) {
    let start = k * jm.dim;
    let m = jm.axis.moves.len();
    let mut rest = id;
    for a in 0..jm.dim {
        let x = values[start + a] + jm.axis.values[rest % m];
        rest /= m;
        values.push(x);
    }
    moves.push(id as u32);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinear_expectation::lattice::{build_lattice, ControlGrids};

    fn model(l: f64, n: usize) -> LatticeModel {
        build_lattice(l, 1.0, n, 1, ControlGrids::default()).unwrap()
    }

    #[test]
    fn terminal_endpoint_is_lt() {
        let m = model(1.0, 3);
        let rule = |v: &NodeView| if v.k == 3 { NodeRule::Absorb(v.current()[0]) } else { NodeRule::Continue };
        let s = solve_tree(&m, Mode::Sup, &rule, false).unwrap();
        assert!((s.value - 1.0).abs() < 1e-14);
        assert_eq!(s.nodes, 1 + 15 + 225 + 3375);
        let i = solve_tree(&m, Mode::Inf, &rule, false).unwrap();
        assert!((i.value + 1.0).abs() < 1e-14);
    }

    #[test]
    fn deterministic_stopping_examples() {
        let m = build_lattice(0.0, 0.5, 4, 1, ControlGrids::default()).unwrap();
        let x_t = |v: &NodeView| if v.k == 4 { NodeRule::Absorb(v.t) } else { NodeRule::Obstacle(v.t) };
        let s = solve_tree(&m, Mode::Sup, &x_t, false).unwrap();
        assert_eq!(s.value, 0.5);
        assert!(!s.stopped_at_root);
        assert!(s.contact.is_none());
        let down = |v: &NodeView| if v.k == 4 { NodeRule::Absorb(-v.t) } else { NodeRule::Obstacle(-v.t) };
        let s = solve_tree(&m, Mode::Sup, &down, false).unwrap();
        assert_eq!(s.value, 0.0);
        assert!(s.stopped_at_root);
        assert_eq!(s.contact.unwrap().k, 0);
    }

    #[test]
    fn records_cover_tree() {
        let m = model(1.0, 2);
        let rule = |v: &NodeView| if v.k == 2 { NodeRule::Absorb(v.current()[0].abs()) } else { NodeRule::Continue };
        let s = solve_tree(&m, Mode::Sup, &rule, true).unwrap();
        assert_eq!(s.records.len() as u64, s.nodes);
        assert_eq!(s.records[0].branch, "root");
        assert_eq!(s.records[0].value, s.value);
    }

    #[test]
    fn continue_at_terminal_is_an_error() {
        let m = model(1.0, 1);
        assert!(solve_tree(&m, Mode::Sup, &|_: &NodeView| NodeRule::Continue, false).is_err());
    }
}

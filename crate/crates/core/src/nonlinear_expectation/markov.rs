use rayon::prelude::*;
use serde::Serialize;

use super::lattice::LatticeModel;
use super::tree::{Mode, NodeRule};
use crate::error::{config, Result};

const ABSORBED: u16 = u16::MAX;

/// Recombining state layout for layer `k`: per axis, drift level `i` in
/// `[-kD, kD]` and volatility level `j` in `[-kV, kV]`.
#[derive(Debug, Clone, Copy)]
struct Layout {
    dmax: i64,
    vmax: i64,
    dim: usize,
}

impl Layout {
    fn axis_size(&self, k: usize) -> usize {
        let k = k as i64;
        ((2 * k * self.dmax + 1) * (2 * k * self.vmax + 1)) as usize
    }

    fn size(&self, k: usize) -> usize {
        self.axis_size(k).pow(self.dim as u32)
    }

    fn axis_index(&self, k: usize, i: i64, j: i64) -> usize {
        let k = k as i64;
        ((i + k * self.dmax) * (2 * k * self.vmax + 1) + (j + k * self.vmax)) as usize
    }

    fn decode(&self, k: usize, mut idx: usize, out: &mut [(i64, i64)]) {
        let a = self.axis_size(k);
        let kk = k as i64;
        let w = (2 * kk * self.vmax + 1) as usize;
        for o in out.iter_mut() {
            let r = idx % a;
            idx /= a;
            *o = ((r / w) as i64 - kk * self.dmax, (r % w) as i64 - kk * self.vmax);
        }
    }

    fn encode(&self, k: usize, st: &[(i64, i64)]) -> usize {
        let a = self.axis_size(k);
        let mut idx = 0;
        for &(i, j) in st.iter().rev() {
            idx = idx * a + self.axis_index(k, i, j);
        }
        idx
    }
}

/// Backward induction on the recombining lattice for rules that depend on
/// `(k, B_k)` only. Keeps the optimal policy for forward evaluation.
#[derive(Debug, Clone)]
pub struct MarkovSolution {
    pub value: f64,
    layout_dmax: i64,
    layout_vmax: i64,
    dim: usize,
    /// `policy[k][state]`: joint control, or `u16::MAX` when stopped/absorbed
    policy: Vec<Vec<u16>>,
}

/// Law of `(H, B_H)` under a policy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExitMass {
    pub k: usize,
    pub t: f64,
    pub x: Vec<f64>,
    pub p: f64,
}

pub fn solve_markov(
    model: &LatticeModel,
    mode: Mode,
    rule: &(dyn Fn(usize, f64, &[f64]) -> NodeRule + Sync),
) -> Result<MarkovSolution> {
    let (dmax, vmax) = model.max_levels();
    let d = model.dim();
    let lay = Layout { dmax, vmax, dim: d };
    let n = model.steps();
    if lay.size(n) > 50_000_000 {
        return config(format!("recombining lattice with {} terminal states is too large", lay.size(n)));
    }
    let controls = model.axis_controls();
    let nc = controls.len();
    let joint = model.joint_controls();
    if joint >= ABSORBED as usize {
        return config("too many joint controls");
    }
    let branches = model.branches();
    let mut next: Vec<f64> = Vec::new();
    let mut policy: Vec<Vec<u16>> = vec![Vec::new(); n + 1];
    for k in (0..=n).rev() {
        let t = model.time(k);
        let size = lay.size(k);
        let prev = &next;
        let layer: Vec<(f64, u16)> = (0..size)
            .into_par_iter()
            .map_init(
                || (vec![(0i64, 0i64); d], vec![0.0; d], vec![(0i64, 0i64); d]),
                |(st, x, child), idx| -> Result<(f64, u16)> {
                    lay.decode(k, idx, st);
                    for a in 0..d {
                        x[a] = model.level_value(st[a].0, st[a].1);
                    }
                    let obstacle = match rule(k, t, x) {
                        NodeRule::Absorb(v) => return Ok((v, ABSORBED)),
                        NodeRule::Obstacle(v) if k == n => return Ok((v, ABSORBED)),
                        NodeRule::Continue if k == n => {
                            return config(format!("payoff rule continues at the terminal layer, x = {x:?}"))
                        }
                        NodeRule::Obstacle(v) => Some(v),
                        NodeRule::Continue => None,
                    };
                    let (mut best, mut best_c) = (mode.worst(), 0usize);
                    for c in 0..joint {
                        let mut acc = 0.0;
                        for s in 0..branches {
                            let mut rest = c;
                            for a in 0..d {
                                let ctl = controls[rest % nc];
                                rest /= nc;
                                let sign = if (s >> a) & 1 == 1 { 1 } else { -1 };
                                child[a] = (st[a].0 + ctl.drift, st[a].1 + sign * ctl.vol);
                            }
                            acc += prev[lay.encode(k + 1, child)];
                        }
                        let avg = acc / branches as f64;
                        if mode.better(avg, best) {
                            best = avg;
                            best_c = c;
                        }
                    }
                    Ok(match obstacle {
                        Some(v) if !mode.better(best, v) => (v, ABSORBED),
                        _ => (best, best_c as u16),
                    })
                },
            )
            .collect::<Result<Vec<_>>>()?;
        next = layer.iter().map(|p| p.0).collect();
        policy[k] = layer.into_iter().map(|p| p.1).collect();
    }
    Ok(MarkovSolution { value: next[0], layout_dmax: dmax, layout_vmax: vmax, dim: d, policy })
}

impl MarkovSolution {
    fn layout(&self) -> Layout {
        Layout { dmax: self.layout_dmax, vmax: self.layout_vmax, dim: self.dim }
    }

    /// Joint control at the root, or `None` when the root stops.
    pub fn root_control(&self) -> Option<usize> {
        let c = self.policy[0][0];
        (c != ABSORBED).then_some(c as usize)
    }

    /// Forward propagation of the optimal policy: the law of the stopping
    /// node `(k, B_k)`.
    pub fn exit_distribution(&self, model: &LatticeModel) -> Vec<ExitMass> {
        let lay = self.layout();
        let d = self.dim;
        let controls = model.axis_controls();
        let nc = controls.len();
        let branches = model.branches();
        let mut mass = vec![1.0];
        let mut out = Vec::new();
        let mut st = vec![(0i64, 0i64); d];
        let mut child = vec![(0i64, 0i64); d];
        for k in 0..=model.steps() {
            let mut next = if k < model.steps() { vec![0.0; lay.size(k + 1)] } else { Vec::new() };
            for (idx, &p) in mass.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                lay.decode(k, idx, &mut st);
                let c = self.policy[k][idx];
                if c == ABSORBED {
                    let x = st.iter().map(|&(i, j)| model.level_value(i, j)).collect();
                    out.push(ExitMass { k, t: model.time(k), x, p });
                    continue;
                }
                for s in 0..branches {
                    let mut rest = c as usize;
                    for a in 0..d {
                        let ctl = controls[rest % nc];
                        rest /= nc;
                        let sign = if (s >> a) & 1 == 1 { 1 } else { -1 };
                        child[a] = (st[a].0 + ctl.drift, st[a].1 + sign * ctl.vol);
                    }
                    next[lay.encode(k + 1, &child)] += p / branches as f64;
                }
            }
            mass = next;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinear_expectation::lattice::{build_lattice, ControlGrids};
    use crate::nonlinear_expectation::tree::{solve_tree, NodeView};

    #[test]
    fn agrees_with_tree_on_markov_payoffs() {
        for d in [1, 2] {
            let n = if d == 1 { 4 } else { 2 };
            let m = build_lattice(1.0, 1.0, n, d, ControlGrids::default()).unwrap();
            let g = |x: &[f64]| (x[0] - 0.2).abs() + x.iter().map(|v| v * v).sum::<f64>().sin();
            let mk = |k: usize, _t: f64, x: &[f64]| if k == n { NodeRule::Absorb(g(x)) } else { NodeRule::Continue };
            let tr = |v: &NodeView| if v.k == n { NodeRule::Absorb(g(v.current())) } else { NodeRule::Continue };
            for mode in [Mode::Sup, Mode::Inf] {
                let a = solve_markov(&m, mode, &mk).unwrap().value;
                let b = solve_tree(&m, mode, &tr, false).unwrap().value;
                assert!((a - b).abs() < 1e-12, "{a} {b}");
            }
        }
    }

    #[test]
    fn exit_distribution_is_a_probability() {
        let m = build_lattice(1.0, 1.0, 8, 1, ControlGrids::default()).unwrap();
        let rule = |k: usize, _t: f64, x: &[f64]| {
            if k == 8 || x[0].abs() >= 0.5 {
                NodeRule::Absorb(x[0] * x[0])
            } else {
                NodeRule::Continue
            }
        };
        let sol = solve_markov(&m, Mode::Sup, &rule).unwrap();
        let exits = sol.exit_distribution(&m);
        let total: f64 = exits.iter().map(|e| e.p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let mean: f64 = exits.iter().map(|e| e.p * e.x[0] * e.x[0]).sum();
        assert!((mean - sol.value).abs() < 1e-12);
    }

    #[test]
    fn large_n_runs() {
        let m = build_lattice(1.0, 1.0, 64, 1, ControlGrids::default()).unwrap();
        let rule = |k: usize, _t: f64, x: &[f64]| if k == 64 { NodeRule::Absorb(x[0]) } else { NodeRule::Continue };
        let v = solve_markov(&m, Mode::Sup, &rule).unwrap().value;
        assert!((v - 1.0).abs() < 1e-12);
    }
}

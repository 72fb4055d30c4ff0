//! Optimal stopping before `H_δ` on the history table of the lattice.

use serde::Serialize;

use super::paraboloid::Paraboloid;
use crate::error::Result;
use crate::functional::{shift_pw, Functional, SharedFunctional};
use crate::nonlinear_expectation::{hitting_index, HistoryTable, LatticeModel, Mode, NodeRule, NodeView, PayoffOnTree};
use crate::path_space::PwPath;
use crate::regularization::Direction;

/// Histories of a lattice with a value per node and the `H_δ` absorption
/// marks. Nodes below an absorbed node are unreachable and carry 0.
pub(crate) struct StoppingTable {
    tab: HistoryTable,
    pub values: Vec<f64>,
    pub absorbed: Vec<bool>,
    controls: usize,
    branches: usize,
    steps: usize,
}

/// Backward-induction output per node.
pub(crate) struct Induction {
    pub v: Vec<f64>,
    pub stop: Vec<bool>,
    pub control: Vec<u32>,
}

impl StoppingTable {
    pub fn build(model: &LatticeModel, delta: f64, value: &(dyn Fn(&NodeView) -> f64 + Sync)) -> Result<Self> {
        let n = model.steps();
        let rule = |v: &NodeView| {
            let hit_before = (0..v.k).any(|j| hitting_index(delta, v.time(j), v.node(j)));
            if hit_before {
                NodeRule::Absorb(0.0)
            } else if v.k == n || hitting_index(delta, v.t, v.current()) {
                NodeRule::Absorb(value(v))
            } else {
                NodeRule::Obstacle(value(v))
            }
        };
        let tab = HistoryTable::build(model, &rule)?;
        let mut values = Vec::with_capacity(tab.len());
        let mut absorbed = Vec::with_capacity(tab.len());
        for r in &tab.rule {
            match *r {
                NodeRule::Absorb(x) => {
                    values.push(x);
                    absorbed.push(true);
                }
                NodeRule::Obstacle(x) => {
                    values.push(x);
                    absorbed.push(false);
                }
                NodeRule::Continue => unreachable!("stopping tables never continue"),
            }
        }
        Ok(Self {
            tab,
            values,
            absorbed,
            controls: model.joint_controls(),
            branches: model.branches(),
            steps: n,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.tab.t[i]
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.tab.point(i)
    }

    pub fn step_of(&self, i: usize) -> usize {
        self.tab.k[i] as usize
    }

    pub fn lineage(&self, i: usize) -> Vec<usize> {
        self.tab.lineage(i)
    }

    /// `V = X` on absorbed nodes, otherwise the better of `X` (when
    /// `allow_stop`) and the optimal one-step expectation. Ties stop.
    pub fn induct(&self, mode: Mode, obstacle: &[f64], allow_stop: bool) -> Induction {
        let len = self.len();
        let mut v = vec![0.0; len];
        let mut stop = vec![false; len];
        let mut control = vec![0u32; len];
        let w = 1.0 / self.branches as f64;
        for i in (0..len).rev() {
            if self.absorbed[i] || self.step_of(i) == self.steps {
                v[i] = obstacle[i];
                stop[i] = true;
                continue;
            }
            let mut best = mode.worst();
            let mut arg = 0;
            for c in 0..self.controls {
                let mut acc = 0.0;
                for s in 0..self.branches {
                    acc += v[self.tab.child(i, c, s)];
                }
                let e = acc * w;
                if mode.better(e, best) {
                    best = e;
                    arg = c;
                }
            }
            control[i] = arg as u32;
            if allow_stop && !mode.better(best, obstacle[i]) {
                v[i] = obstacle[i];
                stop[i] = true;
            } else {
                v[i] = best;
            }
        }
        Induction { v, stop, control }
    }

    /// Stopping nodes reached under the optimal controls with their
    /// probabilities, in breadth-first order.
    pub fn stops_under(&self, ind: &Induction) -> Vec<(usize, f64)> {
        let mut prob = vec![0.0; self.len()];
        prob[0] = 1.0;
        let mut out = Vec::new();
        let w = 1.0 / self.branches as f64;
        for i in 0..self.len() {
            if prob[i] == 0.0 {
                continue;
            }
            if ind.stop[i] {
                out.push((i, prob[i]));
                continue;
            }
            let c = ind.control[i] as usize;
            for s in 0..self.branches {
                prob[self.tab.child(i, c, s)] += prob[i] * w;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeNode {
    pub k: usize,
    pub t: f64,
    pub x: Vec<f64>,
    pub probability: f64,
    pub obstacle: f64,
    pub envelope: f64,
    pub absorbed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnellEnvelope {
    /// `V_0`
    pub value: f64,
    /// `X_0`
    pub x0: f64,
    pub stopped_at_root: bool,
    /// earliest and mean value of `τ*` under the optimal law
    pub tau_min: f64,
    pub tau_mean: f64,
    /// first node (breadth-first) where `τ*` stops before `H_δ`
    pub contact: Option<EnvelopeNode>,
    /// where `τ*` stops under the optimal law
    pub stops: Vec<EnvelopeNode>,
    pub nodes: usize,
}

fn envelope_from(table: &StoppingTable, obstacle: &[f64], ind: &Induction) -> SnellEnvelope {
    let stops: Vec<EnvelopeNode> = table
        .stops_under(ind)
        .into_iter()
        .map(|(i, p)| EnvelopeNode {
            k: table.step_of(i),
            t: table.time(i),
            x: table.point(i).to_vec(),
            probability: p,
            obstacle: obstacle[i],
            envelope: ind.v[i],
            absorbed: table.absorbed[i] || table.step_of(i) == table.steps,
        })
        .collect();
    let tau_min = stops.iter().map(|s| s.t).fold(f64::INFINITY, f64::min);
    let tau_mean = stops.iter().map(|s| s.t * s.probability).sum();
    SnellEnvelope {
        value: ind.v[0],
        x0: obstacle[0],
        stopped_at_root: ind.stop[0],
        tau_min,
        tau_mean,
        contact: stops.iter().find(|s| !s.absorbed).cloned(),
        stops,
        nodes: table.len(),
    }
}

/// `V_0 = sup_τ Ē[X_τ]` (or `inf` in [`Mode::Inf`]) over stopping times
/// `τ ≤ H_δ`, with `τ* = first time X = V̂`.
pub fn snell_envelope(model: &LatticeModel, x: &PayoffOnTree, delta: f64, mode: Mode) -> Result<SnellEnvelope> {
    if !(delta > 0.0) {
        return crate::error::domain("δ must be positive");
    }
    let value = |v: &NodeView| x.eval_terminal(v);
    let table = StoppingTable::build(model, delta, &value)?;
    let obstacle = table.values.clone();
    let ind = table.induct(mode, &obstacle, true);
    Ok(envelope_from(&table, &obstacle, &ind))
}

/// The shifted functional `u^θ` tabulated on the lattice, reusable for many
/// test paraboloids.
pub struct JetOracle {
    table: StoppingTable,
    /// `u(θ)`
    pub u0: f64,
    pub delta: f64,
}

impl JetOracle {
    pub fn new(model: &LatticeModel, u: &SharedFunctional, t: f64, path: &PwPath, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return crate::error::domain("δ must be positive");
        }
        let shifted = shift_pw(u.clone(), t, path);
        let value = |v: &NodeView| shifted.eval(v.t, &v.to_pw());
        let table = StoppingTable::build(model, delta, &value)?;
        let u0 = table.values[0];
        Ok(Self { table, u0, delta })
    }

    pub fn obstacle(&self, phi: &Paraboloid) -> Vec<f64> {
        (0..self.table.len())
            .map(|i| self.table.values[i] - phi.eval(self.table.time(i), self.table.point(i)))
            .collect()
    }

    /// `V_0` of `u^θ − φ`: sup-envelope for subjets, inf-envelope for superjets.
    pub fn envelope(&self, phi: &Paraboloid, direction: Direction) -> f64 {
        let mode = mode_of(direction);
        self.table.induct(mode, &self.obstacle(phi), true).v[0]
    }

    pub fn test(&self, phi: &Paraboloid, direction: Direction, tol: f64) -> JetTest {
        let value = self.envelope(phi, direction);
        let excess = match direction {
            Direction::Sub => value - self.u0,
            Direction::Super => self.u0 - value,
        };
        JetTest { member: excess <= tol, value, u0: self.u0, excess, tol }
    }

    pub(crate) fn table(&self) -> &StoppingTable {
        &self.table
    }
}

fn mode_of(direction: Direction) -> Mode {
    match direction {
        Direction::Sub => Mode::Sup,
        Direction::Super => Mode::Inf,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JetTest {
    pub member: bool,
    /// envelope value `V_0`
    pub value: f64,
    pub u0: f64,
    /// by how much the envelope exceeds `u(θ)` on the wrong side
    pub excess: f64,
    pub tol: f64,
}

/// Whether `φ` is in the sub- (or super-) jet of `u` at `(t, ω)`:
/// `u(θ) = max_{τ ≤ H_δ} Ē[(u^θ − φ)(τ, B)]` up to `tol`.
pub fn jet_test_pl(
    model: &LatticeModel,
    u: &SharedFunctional,
    t: f64,
    path: &PwPath,
    candidate: &Paraboloid,
    delta: f64,
    direction: Direction,
    tol: f64,
) -> Result<JetTest> {
    Ok(JetOracle::new(model, u, t, path, delta)?.test(candidate, direction, tol))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContactPoint {
    /// time after `θ`
    pub s_star: f64,
    pub t_star: f64,
    /// lattice history up to the contact, `B_0, ..., B_{s*}` flattened
    pub history: Vec<f64>,
    /// `B_{s*}`
    pub b_star: Vec<f64>,
    /// `(α, β + γ B_{s*}, γ)`
    pub jet: Paraboloid,
    /// `u(θ) − Ē[(u^θ − φ)(H_δ, B)]`
    pub gap: f64,
    pub envelope: f64,
    /// `s* < H_δ` along the history
    pub before_localization: bool,
}

/// First point where the optimal stopping of `u^θ − φ` before `H_δ` stops,
/// provided `u(θ)` strictly beats stopping at `H_δ`.
pub fn contact_point_at(
    model: &LatticeModel,
    u: &SharedFunctional,
    t: f64,
    path: &PwPath,
    phi: &Paraboloid,
    delta: f64,
) -> Result<Option<ContactPoint>> {
    let oracle = JetOracle::new(model, u, t, path, delta)?;
    let obstacle = oracle.obstacle(phi);
    let table = oracle.table();
    let at_h = table.induct(Mode::Sup, &obstacle, false).v[0];
    let gap = oracle.u0 - at_h;
    if !(gap > 0.0) {
        return Ok(None);
    }
    let ind = table.induct(Mode::Sup, &obstacle, true);
    let env = envelope_from(table, &obstacle, &ind);
    let Some(c) = env.contact else {
        return Ok(None);
    };
    let node = table
        .stops_under(&ind)
        .into_iter()
        .map(|(i, _)| i)
        .find(|&i| !table.absorbed[i] && table.step_of(i) < table.steps)
        .expect("contact node is among the stops");
    let lineage = table.lineage(node);
    let history: Vec<f64> = lineage.iter().flat_map(|&i| table.point(i).to_vec()).collect();
    let before = c.t < delta && lineage.iter().all(|&i| !hitting_index(delta, table.time(i), table.point(i)));
    Ok(Some(ContactPoint {
        s_star: c.t,
        t_star: t + c.t,
        jet: phi.recentred(&c.x),
        b_star: c.x,
        history,
        gap,
        envelope: env.value,
        before_localization: before,
    }))
}

/// [`contact_point_at`] from the origin.
pub fn contact_point(
    model: &LatticeModel,
    u: &SharedFunctional,
    phi: &Paraboloid,
    delta: f64,
) -> Result<Option<ContactPoint>> {
    contact_point_at(model, u, 0.0, &PwPath::zero(model.dim()), phi, delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::FnFunctional;
    use crate::nonlinear_expectation::{build_lattice, enumerate_stopping, ControlGrids};
    use std::sync::Arc;

    fn lat(l: f64, horizon: f64, n: usize) -> LatticeModel {
        build_lattice(l, horizon, n, 1, ControlGrids::default()).unwrap()
    }

    fn f(name: &str, g: impl Fn(f64, &PwPath) -> f64 + Send + Sync + 'static) -> SharedFunctional {
        Arc::new(FnFunctional::new(name, g))
    }

    #[test]
    fn nonincreasing_obstacle_stops_at_once() {
        let m = lat(1.0, 0.5, 3);
        let env = snell_envelope(&m, &PayoffOnTree::path(|v| -v.t), 0.5, Mode::Sup).unwrap();
        assert_eq!(env.value, 0.0);
        assert!(env.stopped_at_root);
        assert_eq!(env.tau_min, 0.0);
    }

    #[test]
    fn deterministic_time_waits_for_h() {
        let m = lat(0.0, 0.5, 4);
        let env = snell_envelope(&m, &PayoffOnTree::path(|v| v.t), 0.5, Mode::Sup).unwrap();
        assert!((env.value - 0.5).abs() < 1e-15);
        assert!((env.tau_min - 0.5).abs() < 1e-15);
        assert!(env.contact.is_none());
    }

    #[test]
    fn matches_stopping_enumeration() {
        for (n, salt) in [(2usize, 1u64), (2, 9), (3, 4)] {
            let m = lat(1.0, 1.0, n);
            let x = move |v: &NodeView| {
                let h = v.values.iter().fold(salt, |h, x| h.wrapping_mul(31).wrapping_add((x * 1e6).round() as i64 as u64));
                ((h.wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 11) as f64 / (1u64 << 53) as f64) - 0.5 + v.t
            };
            for mode in [Mode::Sup, Mode::Inf] {
                let env = snell_envelope(&m, &PayoffOnTree::path(x), 0.6, mode).unwrap();
                let rule = |v: &NodeView| {
                    let hit = (0..=v.k).any(|j| hitting_index(0.6, v.time(j), v.node(j)));
                    if v.k == n || hit {
                        NodeRule::Absorb(x(v))
                    } else {
                        NodeRule::Obstacle(x(v))
                    }
                };
                let e = enumerate_stopping(&m, mode, &rule).unwrap();
                assert!((env.value - e.value).abs() < 1e-12, "{n} {mode:?}: {} vs {}", env.value, e.value);
            }
        }
    }

    #[test]
    fn contact_examples() {
        let m = lat(0.0, 0.5, 4);
        let minus_t = f("minus-t", |t, _| -t);
        let c = contact_point(&m, &minus_t, &Paraboloid::zero(1), 0.5).unwrap().unwrap();
        assert_eq!(c.s_star, 0.0);
        assert_eq!(c.jet, Paraboloid::zero(1));
        assert!(c.before_localization);
        let sq = f("minus-t2", |t, _| -t * t);
        assert!(contact_point(&m, &sq, &Paraboloid::scalar(-1.0, 0.0, 0.0), 0.5).unwrap().is_none());
        let phi = Paraboloid::scalar(0.3, 0.2, 1.0);
        let same = f("phi", move |t, p| 0.3 * t + 0.2 * p.eval(t)[0] + 0.5 * p.eval(t)[0].powi(2));
        assert!(contact_point(&lat(1.0, 0.5, 3), &same, &phi, 0.5).unwrap().is_none());
    }

    #[test]
    fn jet_examples() {
        let m = lat(0.0, 0.5, 4);
        let time = f("time", |t, _| t);
        let z = PwPath::zero(1);
        let sub = |c: Paraboloid| jet_test_pl(&m, &time, 0.0, &z, &c, 0.5, Direction::Sub, 1e-12).unwrap().member;
        assert!(sub(Paraboloid::scalar(1.0, 0.0, 0.0)));
        assert!(!sub(Paraboloid::scalar(0.0, 0.0, 0.0)));
        let phi = Paraboloid::scalar(0.3, -0.4, 1.5);
        let u = f("phi", move |t, p| 0.3 * t - 0.4 * p.eval(t)[0] + 0.75 * p.eval(t)[0].powi(2));
        let m1 = lat(1.0, 0.5, 3);
        for dir in [Direction::Sub, Direction::Super] {
            assert!(jet_test_pl(&m1, &u, 0.0, &z, &phi, 0.5, dir, 1e-12).unwrap().member);
        }
    }

    #[test]
    fn alpha_increase_keeps_subjet() {
        let m = lat(1.0, 0.25, 3);
        let u = crate::functional::catalog("soft-endpoint", 1.0, 1).unwrap();
        let z = PwPath::zero(1);
        let oracle = JetOracle::new(&m, &u, 0.0, &z, 0.25).unwrap();
        let mut found = 0;
        for a in [-1.0, -0.5, 0.0, 0.5, 1.0, 2.0] {
            let c = Paraboloid::scalar(a, 0.5, 0.0);
            if oracle.test(&c, Direction::Sub, 1e-12).member {
                found += 1;
                let up = Paraboloid::scalar(a + 0.3, 0.5, 0.0);
                assert!(oracle.test(&up, Direction::Sub, 1e-12).member);
            }
        }
        assert!(found > 0);
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};

/// Number of points of the per-axis control grids. Drifts are the uniform
/// grid on `[-L, L]` with `drift_points` points (odd), volatilities the uniform
/// grid on `[0, L]` with `vol_points` points (a single point means `{L}`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlGrids {
    pub drift_points: usize,
    pub vol_points: usize,
}

impl Default for ControlGrids {
    fn default() -> Self {
        Self { drift_points: 3, vol_points: 3 }
    }
}

pub const DEFAULT_DEPTH_CAP: usize = 6;

/// Binary-branch lattice: one step moves each axis by `α h ± β √h`.
///
/// Drift and volatility values are stored as integer multiples of a unit so
/// that the recombining engine can index states exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeModel {
    bound: f64,
    horizon: f64,
    steps: usize,
    dim: usize,
    grids: ControlGrids,
    depth_cap: usize,
    drift_unit: f64,
    vol_unit: f64,
    drift_ints: Vec<i64>,
    vol_ints: Vec<i64>,
}

pub fn build_lattice(bound: f64, horizon: f64, steps: usize, dim: usize, grids: ControlGrids) -> Result<LatticeModel> {
    if steps == 0 {
        return config("lattice needs at least one step");
    }
    if !(bound >= 0.0) || !bound.is_finite() {
        return domain("L must be a finite nonnegative number");
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return domain("horizon must be positive");
    }
    if dim == 0 {
        return config("dimension must be at least 1");
    }
    if grids.drift_points == 0 || grids.drift_points % 2 == 0 {
        return config(format!("drift_points must be odd, got {}", grids.drift_points));
    }
    if grids.vol_points == 0 {
        return config("vol_points must be at least 1");
    }
    let (drift_unit, drift_ints, vol_unit, vol_ints) = if bound == 0.0 {
        (0.0, vec![0], 0.0, vec![0])
    } else {
        let half = (grids.drift_points / 2) as i64;
        let du = if half == 0 { bound } else { bound / half as f64 };
        let (dv, vi) = if grids.vol_points == 1 {
            (bound, vec![1])
        } else {
            (bound / (grids.vol_points - 1) as f64, (0..grids.vol_points as i64).collect())
        };
        (du, (-half..=half).collect(), dv, vi)
    };
    Ok(LatticeModel {
        bound,
        horizon,
        steps,
        dim,
        grids,
        depth_cap: DEFAULT_DEPTH_CAP,
        drift_unit,
        vol_unit,
        drift_ints,
        vol_ints,
    })
}

/// Per-axis controls `(drift level, vol level)` in drift-major order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxisControl {
    pub drift: i64,
    pub vol: i64,
}

impl LatticeModel {
    pub fn with_depth_cap(mut self, cap: usize) -> Self {
        self.depth_cap = cap;
        self
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grids(&self) -> ControlGrids {
        self.grids
    }

    pub fn depth_cap(&self) -> usize {
        self.depth_cap
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn sqrt_step(&self) -> f64 {
        self.step().sqrt()
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.horizon
        } else {
            k as f64 * self.step()
        }
    }

    pub fn drift_unit(&self) -> f64 {
        self.drift_unit
    }

    pub fn vol_unit(&self) -> f64 {
        self.vol_unit
    }

    pub fn drifts(&self) -> Vec<f64> {
        self.drift_ints.iter().map(|&i| i as f64 * self.drift_unit).collect()
    }

    pub fn vols(&self) -> Vec<f64> {
        self.vol_ints.iter().map(|&j| j as f64 * self.vol_unit).collect()
    }

    pub fn axis_controls(&self) -> Vec<AxisControl> {
        let mut out = Vec::with_capacity(self.drift_ints.len() * self.vol_ints.len());
        for &drift in &self.drift_ints {
            for &vol in &self.vol_ints {
                out.push(AxisControl { drift, vol });
            }
        }
        out
    }

    pub fn joint_controls(&self) -> usize {
        self.axis_controls().len().pow(self.dim as u32)
    }

    pub fn branches(&self) -> usize {
        1 << self.dim
    }

    /// Control-grid size times branch count.
    pub fn scenarios_per_step(&self) -> usize {
        self.joint_controls() * self.branches()
    }

    /// Largest drift and volatility levels.
    pub fn max_levels(&self) -> (i64, i64) {
        (
            self.drift_ints.iter().map(|i| i.abs()).max().unwrap_or(0),
            self.vol_ints.iter().copied().max().unwrap_or(0),
        )
    }

    /// Per-axis value of the integer state `(i, j)` after any number of steps.
    pub fn level_value(&self, i: i64, j: i64) -> f64 {
        i as f64 * self.drift_unit * self.step() + j as f64 * self.vol_unit * self.sqrt_step()
    }

    /// Drift part `α h` and martingale part `±β √h` of one step.
    pub fn increment_parts(&self, c: AxisControl, up: bool) -> (f64, f64) {
        let sign = if up { 1.0 } else { -1.0 };
        (
            c.drift as f64 * self.drift_unit * self.step(),
            sign * c.vol as f64 * self.vol_unit * self.sqrt_step(),
        )
    }

    pub fn increment(&self, c: AxisControl, up: bool) -> f64 {
        let (a, m) = self.increment_parts(c, up);
        a + m
    }

    /// Largest `|B_T|` per axis any strategy can reach.
    pub fn max_reach(&self) -> f64 {
        let (d, v) = self.max_levels();
        self.steps as f64 * self.level_value(d, v)
    }

    /// Configuration error when exhaustive engines cannot handle `steps`.
    pub fn check_exhaustive(&self) -> Result<()> {
        if self.steps > self.depth_cap {
            return config(format!(
                "{} steps exceed the exhaustive depth cap {}; use a terminal payoff or raise `depth_cap`",
                self.steps, self.depth_cap
            ));
        }
        Ok(())
    }
}

/// Distinct per-axis moves `(Δi, Δj)` and, for each axis control and sign,
/// the id of the move it produces.
#[derive(Debug, Clone)]
pub(crate) struct AxisMoves {
    pub moves: Vec<(i64, i64)>,
    pub values: Vec<f64>,
    /// `by_control[c] = [down, up]`
    pub by_control: Vec<[usize; 2]>,
}

impl AxisMoves {
    pub fn new(model: &LatticeModel) -> Self {
        let mut moves: Vec<(i64, i64)> = Vec::new();
        let mut by_control = Vec::new();
        for c in model.axis_controls() {
            let mut ids = [0; 2];
            for (s, sign) in [-1i64, 1].into_iter().enumerate() {
                let mv = (c.drift, sign * c.vol);
                ids[s] = match moves.iter().position(|m| *m == mv) {
                    Some(p) => p,
                    None => {
                        moves.push(mv);
                        moves.len() - 1
                    }
                };
            }
            by_control.push(ids);
        }
        let values = moves.iter().map(|&(i, j)| model.level_value(i, j)).collect();
        Self { moves, values, by_control }
    }
}

/// Joint moves across axes: ids are mixed-radix over per-axis move ids.
#[derive(Debug, Clone)]
pub(crate) struct JointMoves {
    pub axis: AxisMoves,
    pub dim: usize,
    pub count: usize,
    pub controls: usize,
    pub branches: usize,
    /// `table[c * branches + σ]` is the joint move id.
    pub table: Vec<usize>,
}

impl JointMoves {
    pub fn new(model: &LatticeModel) -> Self {
        let axis = AxisMoves::new(model);
        let dim = model.dim();
        let per_axis_controls = axis.by_control.len();
        let per_axis_moves = axis.moves.len();
        let controls = per_axis_controls.pow(dim as u32);
        let branches = 1 << dim;
        let count = per_axis_moves.pow(dim as u32);
        let mut table = Vec::with_capacity(controls * branches);
        for c in 0..controls {
            for sigma in 0..branches {
                let (mut id, mut rest, mut radix) = (0, c, 1);
                for a in 0..dim {
                    let ca = rest % per_axis_controls;
                    rest /= per_axis_controls;
                    let up = (sigma >> a) & 1;
                    id += axis.by_control[ca][up] * radix;
                    radix *= per_axis_moves;
                }
                table.push(id);
            }
        }
        Self { axis, dim, count, controls, branches, table }
    }

    /// Writes the joint increment of move `id` into `out`.
    pub fn increment(&self, id: usize, out: &mut [f64]) {
        let m = self.axis.moves.len();
        let mut rest = id;
        for v in out.iter_mut().take(self.dim) {
            *v = self.axis.values[rest % m];
            rest /= m;
        }
    }

    pub fn child(&self, control: usize, sigma: usize) -> usize {
        self.table[control * self.branches + sigma]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counting_and_increments() {
        let m = build_lattice(1.0, 1.0, 1, 1, ControlGrids::default()).unwrap();
        assert_eq!(m.scenarios_per_step(), 18);
        assert_eq!(m.drifts(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(m.vols(), vec![0.0, 0.5, 1.0]);
        let m4 = build_lattice(1.0, 1.0, 4, 1, ControlGrids::default()).unwrap();
        let c = AxisControl { drift: 1, vol: 2 };
        assert_eq!(m4.increment(c, true), 0.75);
        assert_eq!(m4.increment(c, false), -0.25);
        assert_eq!(JointMoves::new(&m4).count, 15);
    }

    #[test]
    fn zero_bound_is_deterministic() {
        let m = build_lattice(0.0, 1.0, 5, 2, ControlGrids::default()).unwrap();
        assert_eq!(m.joint_controls(), 1);
        let jm = JointMoves::new(&m);
        assert_eq!(jm.count, 1);
        assert_eq!(m.max_reach(), 0.0);
    }

    #[test]
    fn increment_invariants() {
        let m = build_lattice(1.3, 0.7, 9, 1, ControlGrids { drift_points: 5, vol_points: 4 }).unwrap();
        let (h, rh) = (m.step(), m.sqrt_step());
        for c in m.axis_controls() {
            let (a, up) = m.increment_parts(c, true);
            let (a2, down) = m.increment_parts(c, false);
            assert_eq!(a, a2);
            assert!(a.abs() <= m.bound() * h * (1.0 + 1e-15));
            assert!(up.abs() <= m.bound() * rh * (1.0 + 1e-15));
            assert_eq!(up + down, 0.0);
            let beta = c.vol as f64 * m.vol_unit();
            assert!((0.5 * (up * up + down * down) - beta * beta * h).abs() < 1e-15);
        }
    }

    #[test]
    fn joint_table_matches_axes() {
        let m = build_lattice(1.0, 1.0, 2, 2, ControlGrids::default()).unwrap();
        let jm = JointMoves::new(&m);
        assert_eq!(jm.controls, 81);
        assert_eq!(jm.count, 225);
        let ctl = m.axis_controls();
        let mut inc = [0.0; 2];
        for c in 0..jm.controls {
            for s in 0..4 {
                jm.increment(jm.child(c, s), &mut inc);
                for a in 0..2 {
                    let ca = (c / 9usize.pow(a as u32)) % 9;
                    assert_eq!(inc[a], m.increment(ctl[ca], (s >> a) & 1 == 1));
                }
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(build_lattice(1.0, 1.0, 0, 1, ControlGrids::default()).is_err());
        assert!(build_lattice(-1.0, 1.0, 2, 1, ControlGrids::default()).is_err());
        assert!(build_lattice(1.0, 1.0, 2, 1, ControlGrids { drift_points: 2, vol_points: 3 }).is_err());
        let m = build_lattice(1.0, 1.0, 7, 1, ControlGrids::default()).unwrap();
        assert!(m.check_exhaustive().is_err());
        assert!(m.with_depth_cap(7).check_exhaustive().is_ok());
    }
}

use serde::{Deserialize, Serialize};

use super::pw::PwPath;
use crate::error::{config, domain, Error, Result};

/// Relative distance (in grid steps) under which a time counts as a grid node.
const ON_GRID_TOL: f64 = 1e-9;

/// Uniform time grid `t_k = k T / N` on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    horizon: f64,
    steps: usize,
}

impl Grid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return domain(format!("horizon must be positive, got {horizon}"));
        }
        if steps == 0 {
            return domain("grid needs at least one step");
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.horizon
        } else {
            k as f64 * self.step()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }

    /// Index of the grid node equal to `t`; times off the grid are rejected.
    pub fn snap(&self, t: f64) -> Result<usize> {
        let k = self.nearest(t)?;
        if (t - self.time(k)).abs() > ON_GRID_TOL * self.step() {
            return Err(Error::Precision(format!(
                "time {t} is not a grid node (nearest {})",
                self.time(k)
            )));
        }
        Ok(k)
    }

    /// Nearest node; fails only when that moves `t` by more than `h/2`.
    pub fn nearest(&self, t: f64) -> Result<usize> {
        let h = self.step();
        let k = (t / h).round();
        if !t.is_finite() || k < 0.0 || k > self.steps as f64 || (t - k * h).abs() > 0.5 * h * (1.0 + 1e-12) {
            return Err(Error::Precision(format!("time {t} lies outside [0, {}]", self.horizon)));
        }
        Ok(k as usize)
    }

    pub fn is_power_of_two(&self) -> bool {
        self.steps.is_power_of_two()
    }
}

/// Path sampled on a uniform grid, started at the origin and held constant
/// after its stop index.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePath {
    grid: Grid,
    dim: usize,
    values: Vec<f64>,
    stop: usize,
}

impl DiscretePath {
    /// `values` holds `N + 1` points of `R^dim`, row-major.
    pub fn new(grid: Grid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return config("dimension must be at least 1");
        }
        if values.len() != (grid.steps + 1) * dim {
            return config(format!(
                "expected {} values for {} nodes in dimension {dim}, got {}",
                (grid.steps + 1) * dim,
                grid.steps + 1,
                values.len()
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return domain("path values must be finite");
        }
        if values[..dim].iter().any(|&v| v != 0.0) {
            return domain("paths must start at the origin");
        }
        let stop = grid.steps;
        Ok(Self { grid, dim, values, stop })
    }

    pub fn from_fn(grid: Grid, dim: usize, mut f: impl FnMut(f64) -> Vec<f64>) -> Result<Self> {
        let mut values = Vec::with_capacity((grid.steps + 1) * dim);
        for k in 0..=grid.steps {
            let v = f(grid.time(k));
            if v.len() != dim {
                return config("sample has the wrong dimension");
            }
            values.extend(v);
        }
        Self::new(grid, dim, values)
    }

    pub fn zero(grid: Grid, dim: usize) -> Self {
        Self { grid, dim, values: vec![0.0; (grid.steps + 1) * dim], stop: grid.steps }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn horizon(&self) -> f64 {
        self.grid.horizon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn stop_index(&self) -> usize {
        self.stop
    }

    pub fn stop_time(&self) -> f64 {
        self.grid.time(self.stop)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    /// Path stopped at node `k` (no-op if already stopped earlier).
    pub fn stopped_at(&self, k: usize) -> Self {
        let k = k.min(self.stop);
        let mut values = self.values.clone();
        let d = self.dim;
        let frozen = self.node(k).to_vec();
        for j in k + 1..=self.grid.steps {
            values[j * d..(j + 1) * d].copy_from_slice(&frozen);
        }
        Self { grid: self.grid, dim: d, values, stop: k }
    }

    pub fn stopped(&self, t: f64) -> Result<Self> {
        Ok(self.stopped_at(self.grid.snap(t)?))
    }

    /// Piecewise-linear interpolant, held constant after the stop node.
    pub fn to_pw(&self) -> PwPath {
        let knots: Vec<f64> = (0..=self.stop).map(|k| self.grid.time(k)).collect();
        PwPath::linear(self.dim, knots, self.values[..(self.stop + 1) * self.dim].to_vec())
    }
}

/// Concatenation `ω ⊗_t ω'`: `ω` before `t`, then `ω_t + ω'_{s-t}`.
pub fn concat(omega: &DiscretePath, t: f64, other: &DiscretePath) -> Result<DiscretePath> {
    let g = omega.grid;
    if omega.dim != other.dim {
        return config("concatenated paths differ in dimension");
    }
    if (g.step() - other.grid.step()).abs() > ON_GRID_TOL * g.step() {
        return config("concatenated paths use different grid steps");
    }
    let k = g.snap(t)?;
    if other.grid.steps + k < g.steps {
        return config("continuation does not cover the remaining horizon");
    }
    let d = omega.dim;
    let base = omega.node(k).to_vec();
    let mut values = omega.values.clone();
    for j in k..=g.steps {
        let src = other.node(j - k);
        for c in 0..d {
            values[j * d + c] = base[c] + src[c];
        }
    }
    let stop = (k + other.stop).min(g.steps);
    Ok(DiscretePath { grid: g, dim: d, values, stop })
}

/// Concatenation on piecewise paths: `ω` stopped at `t`, continued by `ω_t + ω'(· - t)`.
pub fn concat_pw(omega: &PwPath, t: f64, other: &PwPath) -> PwPath {
    let d = omega.dim();
    let head = omega.stopped(t);
    let base = omega.eval(t);
    let mut knots: Vec<f64> = head.knots().iter().copied().filter(|&k| k < t).collect();
    let mut right = Vec::with_capacity((knots.len() + other.knots().len()) * d);
    let mut left = Vec::with_capacity(right.capacity());
    for &k in &knots {
        right.extend(head.eval(k));
        left.extend(head.eval_left(k));
    }
    let tail_left = head.eval_left(t);
    for (idx, &k) in other.knots().iter().enumerate() {
        let r = other.eval(k);
        let l = if idx == 0 { tail_left.clone() } else { other.eval_left(k).iter().zip(&base).map(|(a, b)| a + b).collect() };
        knots.push(t + k);
        right.extend(r.iter().zip(&base).map(|(a, b)| a + b));
        left.extend(l);
    }
    PwPath::from_parts(d, knots, right, left)
}

/// Odd metric order `p >= 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricOrder(u32);

impl MetricOrder {
    pub fn new(p: u32) -> Result<Self> {
        if p < 3 || p % 2 == 0 {
            return domain(format!("metric order must be odd and at least 3, got {p}"));
        }
        Ok(Self(p))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }
}

impl Default for MetricOrder {
    fn default() -> Self {
        Self(3)
    }
}

/// A point `θ = (t, ω)` with `ω` stopped at `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointInTheta {
    t: f64,
    path: DiscretePath,
}

impl PointInTheta {
    pub fn new(t: f64, path: DiscretePath) -> Result<Self> {
        let k = path.grid.snap(t)?;
        let t = path.grid.time(k);
        Ok(Self { t, path: path.stopped_at(k) })
    }

    /// The origin `(0, 0)`.
    pub fn origin(grid: Grid, dim: usize) -> Self {
        Self { t: 0.0, path: DiscretePath::zero(grid, dim).stopped_at(0) }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn path(&self) -> &DiscretePath {
        &self.path
    }

    pub fn stopped_pw(&self) -> PwPath {
        self.path.to_pw()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(1.0, 64).unwrap()
    }

    #[test]
    fn snapping() {
        let g = grid();
        assert_eq!(g.snap(0.5).unwrap(), 32);
        assert!(matches!(g.snap(0.5 + 0.3 / 64.0), Err(Error::Precision(_))));
        assert_eq!(g.nearest(0.5 + 0.3 / 64.0).unwrap(), 32);
        assert!(g.nearest(1.2).is_err());
    }

    #[test]
    fn path_must_start_at_origin() {
        let g = grid();
        assert!(DiscretePath::from_fn(g, 1, |s| vec![s + 1.0]).is_err());
    }

    #[test]
    fn concat_examples() {
        let g = grid();
        let w = DiscretePath::from_fn(g, 1, |s| vec![s]).unwrap();
        let z = DiscretePath::zero(g, 1);
        assert_eq!(concat(&w, 0.5, &z).unwrap().values(), w.stopped(0.5).unwrap().values());
        assert_eq!(concat(&z, 0.0, &w).unwrap().values(), w.values());
        let w2 = DiscretePath::from_fn(g, 1, |s| vec![2.0 * s]).unwrap();
        let c = concat(&w, 0.5, &w2).unwrap();
        for k in 0..=64 {
            let s = g.time(k);
            let want = if s < 0.5 { s } else { 0.5 + 2.0 * (s - 0.5) };
            assert!((c.node(k)[0] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn concat_rejects_other_step() {
        let w = DiscretePath::zero(grid(), 1);
        let other = DiscretePath::zero(Grid::new(1.0, 32).unwrap(), 1);
        assert!(matches!(concat(&w, 0.5, &other), Err(Error::Configuration(_))));
    }

    #[test]
    fn pw_concat_matches_grid_concat() {
        let g = grid();
        let w = DiscretePath::from_fn(g, 1, |s| vec![(3.0 * s).sin()]).unwrap();
        let w2 = DiscretePath::from_fn(g, 1, |s| vec![s * s - s]).unwrap();
        let a = concat(&w, 0.25, &w2).unwrap().to_pw();
        let b = concat_pw(&w.to_pw(), 0.25, &w2.to_pw());
        for j in 0..=200 {
            let r = j as f64 / 200.0;
            assert!((a.eval(r)[0] - b.eval(r)[0]).abs() < 1e-12, "r={r}");
        }
    }

    #[test]
    fn metric_order_rules() {
        assert!(MetricOrder::new(3).is_ok());
        assert!(MetricOrder::new(4).is_err());
        assert!(MetricOrder::new(1).is_err());
        assert_eq!(MetricOrder::default().get(), 3);
    }

    #[test]
    fn point_is_stopped() {
        let w = DiscretePath::from_fn(grid(), 1, |s| vec![s]).unwrap();
        let p = PointInTheta::new(0.25, w).unwrap();
        assert_eq!(p.path().node(64), &[0.25]);
        assert_eq!(p.path().stop_index(), 16);
    }
}

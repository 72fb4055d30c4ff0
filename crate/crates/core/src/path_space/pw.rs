//! Càdlàg piecewise-affine paths on arbitrary knots.
//!
//! Every path the toolkit manipulates (grid interpolants, step skeletons,
//! time-changed paths and their sums) is represented as a [`PwPath`]: on each
//! knot interval `[k_j, k_{j+1})` the path is affine, starting at the right
//! value `right[j]` and ending at the left limit `left[j+1]`. Past the last
//! knot the path is held constant, which is exactly the stopped-path
//! convention.

use super::norm::segment_pow_integral;

#[derive(Debug, Clone, PartialEq)]
pub struct PwPath {
    dim: usize,
    knots: Vec<f64>,
    right: Vec<f64>,
    left: Vec<f64>,
}

const KNOT_MERGE_TOL: f64 = 1e-15;

/// Knots closer than a relative `KNOT_MERGE_TOL` are treated as one.
fn same_knot(a: f64, b: f64) -> bool {
    (a - b).abs() <= KNOT_MERGE_TOL * a.abs().max(b.abs())
}

impl PwPath {
    /// Continuous piecewise-linear path through `(knots[j], values[j])`.
    pub fn linear(dim: usize, knots: Vec<f64>, values: Vec<f64>) -> Self {
        assert!(dim >= 1);
        assert_eq!(knots.len() * dim, values.len());
        assert!(!knots.is_empty());
        debug_assert!(knots.windows(2).all(|w| w[0] < w[1]));
        Self { dim, left: values.clone(), right: values, knots }
    }

    /// Right-continuous step path equal to `values[j]` on `[knots[j], knots[j+1])`.
    pub fn step(dim: usize, knots: Vec<f64>, values: Vec<f64>) -> Self {
        assert!(dim >= 1);
        assert_eq!(knots.len() * dim, values.len());
        assert!(!knots.is_empty());
        let mut left = values.clone();
        for j in 1..knots.len() {
            left[j * dim..(j + 1) * dim].copy_from_slice(&values[(j - 1) * dim..j * dim]);
        }
        Self { dim, knots, right: values, left }
    }

    /// Raw constructor from knots, right values and left limits.
    pub fn from_parts(dim: usize, knots: Vec<f64>, right: Vec<f64>, left: Vec<f64>) -> Self {
        assert_eq!(knots.len() * dim, right.len());
        assert_eq!(right.len(), left.len());
        assert!(!knots.is_empty());
        Self { dim, knots, right, left }
    }

    /// The constant path `x` starting at time 0.
    pub fn constant(x: &[f64]) -> Self {
        Self::linear(x.len(), vec![0.0], x.to_vec())
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(&vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn start(&self) -> f64 {
        self.knots[0]
    }

    pub fn end(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    fn right_at(&self, j: usize) -> &[f64] {
        &self.right[j * self.dim..(j + 1) * self.dim]
    }

    fn left_at(&self, j: usize) -> &[f64] {
        &self.left[j * self.dim..(j + 1) * self.dim]
    }

    /// Index of the knot interval containing `r`: largest `j` with `knots[j] <= r`.
    fn locate(&self, r: f64) -> usize {
        match self.knots.partition_point(|&k| k <= r) {
            0 => 0,
            n => n - 1,
        }
    }

    /// Right-continuous value at `r`.
    pub fn eval_into(&self, r: f64, out: &mut [f64]) {
        let j = self.locate(r);
        if r <= self.knots[0] || j + 1 == self.knots.len() {
            out.copy_from_slice(self.right_at(j));
            return;
        }
        let (a, b) = (self.knots[j], self.knots[j + 1]);
        let w = (r - a) / (b - a);
        let (v0, v1) = (self.right_at(j), self.left_at(j + 1));
        for k in 0..self.dim {
            out[k] = v0[k] + w * (v1[k] - v0[k]);
        }
    }

    pub fn eval(&self, r: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(r, &mut out);
        out
    }

    /// Left limit at `r` (equals the value for `r` at or before the first knot).
    pub fn eval_left_into(&self, r: f64, out: &mut [f64]) {
        if r <= self.knots[0] {
            out.copy_from_slice(self.right_at(0));
            return;
        }
        // largest j with knots[j] < r
        let j = self.knots.partition_point(|&k| k < r) - 1;
        if j + 1 == self.knots.len() {
            out.copy_from_slice(self.right_at(j));
            return;
        }
        let (a, b) = (self.knots[j], self.knots[j + 1]);
        let w = (r - a) / (b - a);
        let (v0, v1) = (self.right_at(j), self.left_at(j + 1));
        for k in 0..self.dim {
            out[k] = v0[k] + w * (v1[k] - v0[k]);
        }
    }

    pub fn eval_left(&self, r: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_left_into(r, &mut out);
        out
    }

    /// The path stopped at `t`: knots after `t` are dropped and the value at `t`
    /// (right value) is held afterwards.
    pub fn stopped(&self, t: f64) -> Self {
        if t >= self.end() {
            return self.clone();
        }
        if t <= self.start() {
            return Self::linear(self.dim, vec![self.start()], self.right_at(0).to_vec());
        }
        let cut = self.knots.partition_point(|&k| k < t);
        let mut knots = self.knots[..cut].to_vec();
        let mut right = self.right[..cut * self.dim].to_vec();
        let mut left = self.left[..cut * self.dim].to_vec();
        let l = self.eval_left(t);
        let r = self.eval(t);
        knots.push(t);
        right.extend_from_slice(&r);
        left.extend_from_slice(&l);
        Self { dim: self.dim, knots, right, left }
    }

    /// Pointwise combination `a * self + b * other` on the merged knot set.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        assert_eq!(self.dim, other.dim);
        let knots = merge_knots(&self.knots, &other.knots);
        let d = self.dim;
        let mut right = Vec::with_capacity(knots.len() * d);
        let mut left = Vec::with_capacity(knots.len() * d);
        let (mut x, mut y) = (vec![0.0; d], vec![0.0; d]);
        for &k in &knots {
            self.eval_into(k, &mut x);
            other.eval_into(k, &mut y);
            right.extend(x.iter().zip(&y).map(|(p, q)| a * p + b * q));
            self.eval_left_into(k, &mut x);
            other.eval_left_into(k, &mut y);
            left.extend(x.iter().zip(&y).map(|(p, q)| a * p + b * q));
        }
        Self { dim: d, knots, right, left }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(1.0, other, -1.0)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(1.0, other, 1.0)
    }

    /// `r ↦ self(m(r))` for a continuous nondecreasing piecewise-linear map `m`
    /// given by its knots `(input, output)`; `m` is held constant after its last knot.
    pub fn compose(&self, map: &[(f64, f64)]) -> Self {
        assert!(!map.is_empty());
        let d = self.dim;
        // (r, m(r)) pairs with m(r) exact at preimages of our knots
        let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(map.len() + self.knots.len());
        for w in map.windows(2) {
            let ((r0, m0), (r1, m1)) = (w[0], w[1]);
            pairs.push((r0, m0));
            if m1 > m0 {
                for &k in &self.knots {
                    if k > m0 && k < m1 {
                        let r = r0 + (k - m0) / (m1 - m0) * (r1 - r0);
                        if r > r0 && r < r1 {
                            pairs.push((r, k));
                        }
                    }
                }
            }
        }
        pairs.push(*map.last().unwrap());
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        pairs.dedup_by(|a, b| same_knot(a.0, b.0));
        let mut knots = Vec::with_capacity(pairs.len());
        let mut right = Vec::with_capacity(pairs.len() * d);
        let mut left = Vec::with_capacity(pairs.len() * d);
        let mut buf = vec![0.0; d];
        for (idx, &(r, m)) in pairs.iter().enumerate() {
            knots.push(r);
            self.eval_into(m, &mut buf);
            right.extend_from_slice(&buf);
            let flat_left = idx == 0 || pairs[idx - 1].1 >= m;
            if !flat_left {
                self.eval_left_into(m, &mut buf);
            }
            left.extend_from_slice(&buf);
        }
        Self { dim: d, knots, right, left }
    }

    /// `|path(end_time)|^q + ∫_0^{end_time} |path|^q`, exact for `dim == 1`.
    pub fn norm_pow(&self, q: f64, end_time: f64) -> f64 {
        let mut buf = vec![0.0; self.dim];
        self.eval_into(end_time, &mut buf);
        euclid(&buf).powf(q) + self.integral_pow(q, end_time)
    }

    /// `∫_{start}^{end_time} |path|^q dr`.
    pub fn integral_pow(&self, q: f64, end_time: f64) -> f64 {
        let mut total = 0.0;
        let n = self.knots.len();
        for j in 0..n {
            let a = self.knots[j];
            if a >= end_time {
                break;
            }
            let b = if j + 1 < n { self.knots[j + 1].min(end_time) } else { end_time };
            if b <= a {
                continue;
            }
            let v0 = self.right_at(j);
            let v1: Vec<f64> = if j + 1 < n {
                let b_full = self.knots[j + 1];
                let w = (b - a) / (b_full - a);
                let l = self.left_at(j + 1);
                v0.iter().zip(l).map(|(x, y)| x + w * (y - x)).collect()
            } else {
                v0.to_vec()
            };
            total += (b - a) * segment_pow_integral(v0, &v1, q);
        }
        total
    }

    /// Componentwise `∫_{start}^{end_time} path dr`, exact.
    pub fn integral(&self, end_time: f64) -> Vec<f64> {
        let d = self.dim;
        let mut total = vec![0.0; d];
        let n = self.knots.len();
        for j in 0..n {
            let a = self.knots[j];
            if a >= end_time {
                break;
            }
            let b = if j + 1 < n { self.knots[j + 1].min(end_time) } else { end_time };
            if b <= a {
                continue;
            }
            let v0 = self.right_at(j);
            if j + 1 < n {
                let w = (b - a) / (self.knots[j + 1] - a);
                let l = self.left_at(j + 1);
                for c in 0..d {
                    let v1 = v0[c] + w * (l[c] - v0[c]);
                    total[c] += 0.5 * (b - a) * (v0[c] + v1);
                }
            } else {
                for c in 0..d {
                    total[c] += (b - a) * v0[c];
                }
            }
        }
        total
    }

    /// Supremum of `|path|` over `[start, end_time]`.
    pub fn sup_norm(&self, end_time: f64) -> f64 {
        let mut best = euclid(self.right_at(0));
        for (j, &k) in self.knots.iter().enumerate() {
            if k > end_time {
                best = best.max(euclid(&self.eval_left(end_time)));
                break;
            }
            best = best.max(euclid(self.right_at(j))).max(euclid(self.left_at(j)));
        }
        best
    }

    /// Samples the right-continuous path at uniformly spaced times.
    pub fn sample(&self, horizon: f64, steps: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity((steps + 1) * self.dim);
        let mut buf = vec![0.0; self.dim];
        for j in 0..=steps {
            self.eval_into(horizon * j as f64 / steps as f64, &mut buf);
            out.extend_from_slice(&buf);
        }
        out
    }
}

pub(crate) fn euclid(v: &[f64]) -> f64 {
    if v.len() == 1 {
        v[0].abs()
    } else {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

fn merge_knots(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x <= y => {
                i += 1;
                x
            }
            (Some(_), Some(&y)) => {
                j += 1;
                y
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        if out.last().is_none_or(|&l: &f64| !same_knot(l, next)) {
            out.push(next);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_has_jumps_and_left_limits() {
        let p = PwPath::step(1, vec![0.0, 0.5], vec![1.0, 3.0]);
        assert_eq!(p.eval(0.25), vec![1.0]);
        assert_eq!(p.eval(0.5), vec![3.0]);
        assert_eq!(p.eval_left(0.5), vec![1.0]);
        assert_eq!(p.eval(0.9), vec![3.0]);
    }

    #[test]
    fn stopped_holds_value() {
        let p = PwPath::linear(1, vec![0.0, 1.0], vec![0.0, 1.0]);
        let s = p.stopped(0.5);
        assert_eq!(s.eval(0.75), vec![0.5]);
        assert_eq!(s.eval(0.25), vec![0.25]);
    }

    #[test]
    fn linear_integral_is_exact() {
        let p = PwPath::linear(1, vec![0.0, 1.0], vec![0.0, 1.0]);
        assert!((p.integral_pow(3.0, 1.0) - 0.25).abs() < 1e-15);
        // sign change inside the segment
        let p = PwPath::linear(1, vec![0.0, 1.0], vec![-1.0, 1.0]);
        assert!((p.integral_pow(2.0, 1.0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn compose_with_identity_is_identity() {
        let p = PwPath::step(1, vec![0.0, 0.25, 0.5], vec![1.0, 0.0, 3.0]);
        let q = p.compose(&[(0.0, 0.0), (1.0, 1.0)]);
        for r in [0.0, 0.1, 0.25, 0.3, 0.5, 0.7, 1.0] {
            assert_eq!(p.eval(r), q.eval(r));
            assert_eq!(p.eval_left(r), q.eval_left(r));
        }
    }

    #[test]
    fn compose_with_flat_map_freezes() {
        let p = PwPath::linear(1, vec![0.0, 1.0], vec![0.0, 1.0]);
        let q = p.compose(&[(0.0, 0.0), (0.5, 0.25), (1.0, 0.25)]);
        assert!((q.eval(0.25)[0] - 0.125).abs() < 1e-15);
        assert!((q.eval(0.8)[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn combine_merges_jumps() {
        let a = PwPath::step(1, vec![0.0, 0.5], vec![0.0, 1.0]);
        let b = PwPath::linear(1, vec![0.0, 1.0], vec![0.0, 1.0]);
        let c = a.sub(&b);
        assert_eq!(c.eval_left(0.5), vec![-0.5]);
        assert_eq!(c.eval(0.5), vec![0.5]);
    }
}

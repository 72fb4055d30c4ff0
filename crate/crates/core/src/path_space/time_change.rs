use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Increasing piecewise-linear map `ℓ` sending `[0, t]` onto `[0, s]` and
/// `r ↦ r - t + s` beyond `t`. For `s = 0` the map vanishes on `[0, t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeChange {
    t: f64,
    s: f64,
    /// Knots `(input, output)` on `[0, t]`, endpoints included.
    knots: Vec<(f64, f64)>,
}

impl TimeChange {
    /// Builds `ℓ` from its interior knots; the endpoints `(0,0)` and `(t,s)` are added.
    pub fn new(t: f64, s: f64, interior: &[(f64, f64)]) -> Result<Self> {
        if !(t >= 0.0) || !(s >= 0.0) || !t.is_finite() || !s.is_finite() {
            return domain(format!("anchor ({t}, {s}) must be nonnegative"));
        }
        if s == 0.0 {
            if interior.iter().any(|&(_, y)| y != 0.0) {
                return domain("a map onto {0} must vanish on [0, t]");
            }
            return Ok(Self::collapse(t));
        }
        if t == 0.0 {
            return domain("t = 0 cannot map onto a nondegenerate [0, s]");
        }
        let mut knots = Vec::with_capacity(interior.len() + 2);
        knots.push((0.0, 0.0));
        knots.extend_from_slice(interior);
        knots.push((t, s));
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0 && w[1].1 > w[0].1) {
                return domain(format!(
                    "knots ({}, {}) -> ({}, {}) are not strictly increasing",
                    w[0].0, w[0].1, w[1].0, w[1].1
                ));
            }
        }
        Ok(Self { t, s, knots })
    }

    /// The identity on `[0, t]`.
    pub fn identity(t: f64) -> Self {
        if t == 0.0 {
            return Self::collapse(0.0);
        }
        Self { t, s: t, knots: vec![(0.0, 0.0), (t, t)] }
    }

    /// The linear map `r ↦ r s / t` on `[0, t]`.
    pub fn linear(t: f64, s: f64) -> Result<Self> {
        Self::new(t, s, &[])
    }

    /// The unique element of the set with target `s = 0`.
    pub fn collapse(t: f64) -> Self {
        Self { t, s: 0.0, knots: vec![(0.0, 0.0), (t, 0.0)] }
    }

    pub fn anchor(&self) -> f64 {
        self.t
    }

    pub fn target(&self) -> f64 {
        self.s
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn interior(&self) -> &[(f64, f64)] {
        &self.knots[1..self.knots.len() - 1]
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r >= self.t {
            return r - self.t + self.s;
        }
        if r <= 0.0 {
            return 0.0;
        }
        let j = self.knots.partition_point(|k| k.0 <= r) - 1;
        let ((x0, y0), (x1, y1)) = (self.knots[j], self.knots[j + 1]);
        y0 + (r - x0) / (x1 - x0) * (y1 - y0)
    }

    /// Inverse on `[0, s]` (and on the affine tail); `None` when `s = 0` and `y = 0`.
    pub fn inverse(&self, y: f64) -> Option<f64> {
        if y >= self.s {
            if self.s == 0.0 && y == 0.0 && self.t > 0.0 {
                return None;
            }
            return Some(y - self.s + self.t);
        }
        if y <= 0.0 {
            return Some(0.0);
        }
        let j = self.knots.partition_point(|k| k.1 <= y) - 1;
        let ((x0, y0), (x1, y1)) = (self.knots[j], self.knots[j + 1]);
        Some(x0 + (y - y0) / (y1 - y0) * (x1 - x0))
    }

    /// `‖ℓ - I‖_∞`, attained at a knot since `ℓ - I` is piecewise linear and
    /// constant beyond `t`.
    pub fn sup_deviation(&self) -> f64 {
        self.knots.iter().map(|&(x, y)| (y - x).abs()).fold(0.0, f64::max)
    }

    /// Knots of `r ↦ ℓ(t ∧ r)` on `[0, horizon]`, as used for composition.
    pub fn stopped_map(&self) -> Vec<(f64, f64)> {
        self.knots.clone()
    }

    /// Knots of `r ↦ ℓ(r)` on `[0, horizon]`.
    pub fn full_map(&self, horizon: f64) -> Vec<(f64, f64)> {
        let mut m = self.knots.clone();
        if horizon > self.t {
            m.push((horizon, horizon - self.t + self.s));
        }
        m
    }

    /// Knots of `r ↦ s ∧ ℓ(r)`.
    pub fn capped_map(&self, horizon: f64) -> Vec<(f64, f64)> {
        let mut m = self.knots.clone();
        if horizon > self.t {
            m.push((horizon, self.s));
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_zero_deviation() {
        assert_eq!(TimeChange::identity(0.7).sup_deviation(), 0.0);
    }

    #[test]
    fn linear_deviation() {
        let l = TimeChange::linear(0.6, 0.5).unwrap();
        assert!((l.sup_deviation() - 0.1).abs() < 1e-15);
        assert!((l.eval(0.3) - 0.25).abs() < 1e-15);
        assert!((l.eval(0.9) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn collapse_deviation() {
        let l = TimeChange::new(0.4, 0.0, &[]).unwrap();
        assert_eq!(l.sup_deviation(), 0.4);
        assert_eq!(l.eval(0.2), 0.0);
        assert!((l.eval(0.9) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_monotone() {
        assert!(TimeChange::new(0.6, 0.5, &[(0.3, 0.3), (0.2, 0.4)]).is_err());
        assert!(TimeChange::new(0.6, 0.5, &[(0.3, 0.6)]).is_err());
    }

    #[test]
    fn inverse_round_trip() {
        let l = TimeChange::new(0.6, 0.5, &[(0.1, 0.15), (0.3, 0.2), (0.5, 0.45)]).unwrap();
        for j in 0..=100 {
            let y = 0.5 * j as f64 / 100.0;
            assert!((l.eval(l.inverse(y).unwrap()) - y).abs() < 1e-12);
        }
    }
}

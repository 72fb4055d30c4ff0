use serde::Serialize;

use crate::error::{domain, Result};
use crate::path_space::{euclid, StepSkeleton};

/// `m_n = ⌊n^{1+a} + 1⌋` and `s_i = (i - 1) T / m_n` for `i = 1..m_n + 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionScheme {
    pub n: f64,
    pub a: f64,
    pub m: usize,
    pub horizon: f64,
    pub times: Vec<f64>,
}

pub fn partition(n: f64, a: f64, horizon: f64, p: f64) -> Result<PartitionScheme> {
    let cap = 1.0 / (5.0 * p);
    if !(a > 0.0 && a < cap) {
        return domain(format!("partition exponent a = {a} must lie in (0, {cap})"));
    }
    if !(n >= 1.0) {
        return domain("n must be at least 1");
    }
    let m = (n.powf(1.0 + a) + 1.0).floor() as usize;
    let times = (0..=m).map(|i| if i == m { horizon } else { i as f64 * horizon / m as f64 }).collect();
    Ok(PartitionScheme { n, a, m, horizon, times })
}

impl PartitionScheme {
    /// `s_i` with 1-based `i`.
    pub fn s(&self, i: usize) -> f64 {
        self.times[i - 1]
    }

    /// Skeleton `λ_i` with jump times `s_1..s_i` and the given first `i - 1` jumps.
    pub fn skeleton(&self, i: usize, dim: usize, jumps: &[f64]) -> Result<StepSkeleton> {
        if i == 0 || i > self.m {
            return domain(format!("partition index {i} outside 1..={}", self.m));
        }
        if jumps.len() != (i - 1) * dim {
            return domain("need i - 1 jump sizes");
        }
        Ok(StepSkeleton::from_times(dim, self.times[..i].to_vec(), jumps.to_vec()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Sub,
    Super,
}

/// `e^{2L_0 s} f(s,x) ∓ κ n^{-1-a}/(s - s_i) ∓ |x|²/(2n)`.
pub struct KappaTransform<F> {
    pub f: F,
    pub kappa: f64,
    pub n: f64,
    pub a: f64,
    pub s_i: f64,
    pub l0: f64,
    pub side: Side,
}

pub fn kappa_transform<F: Fn(f64, &[f64]) -> f64>(
    f: F,
    kappa: f64,
    n: f64,
    a: f64,
    s_i: f64,
    l0: f64,
    side: Side,
) -> Result<KappaTransform<F>> {
    if !(kappa > 0.0) {
        return domain("κ must be positive");
    }
    Ok(KappaTransform { f, kappa, n, a, s_i, l0, side })
}

impl<F: Fn(f64, &[f64]) -> f64> KappaTransform<F> {
    pub fn eval(&self, s: f64, x: &[f64]) -> Result<f64> {
        if s <= self.s_i {
            return domain(format!("the transform is singular at s = s_i = {}", self.s_i));
        }
        let sign = match self.side {
            Side::Sub => -1.0,
            Side::Super => 1.0,
        };
        let r = euclid(x);
        let pen = self.kappa * self.n.powf(-1.0 - self.a) / (s - self.s_i) + r * r / (2.0 * self.n);
        Ok((2.0 * self.l0 * s).exp() * (self.f)(s, x) + sign * pen)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_examples() {
        let p = partition(4.0, 0.05, 1.0, 3.0).unwrap();
        assert_eq!(p.m, 5);
        let want = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
        for (a, b) in p.times.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(partition(1.0, 0.05, 1.0, 3.0).unwrap().m, 2);
        assert!(partition(4.0, 1.0 / 15.0, 1.0, 3.0).is_err());
        assert!(partition(4.0, 0.0, 1.0, 3.0).is_err());
        assert!(partition(4.0, 0.1, 1.0, 3.0).is_err());
    }

    #[test]
    fn kappa_examples() {
        let k = kappa_transform(|_, _| 0.0, 1.0, 2.0, 0.05, 0.0, 0.0, Side::Sub).unwrap();
        let v = k.eval(0.5, &[0.0]).unwrap();
        assert!((v + 2f64.powf(-1.05) / 0.5).abs() < 1e-15);
        assert!((v + 0.96594).abs() < 1e-5);
        assert!(k.eval(0.0, &[0.0]).is_err());
        let f = |s: f64, x: &[f64]| s * x[0] + 1.0;
        let sub = kappa_transform(f, 0.3, 5.0, 0.05, 0.1, 0.7, Side::Sub).unwrap();
        let sup = kappa_transform(f, 0.3, 5.0, 0.05, 0.1, 0.7, Side::Super).unwrap();
        let (s, x) = (0.4, [1.3]);
        let mean = 0.5 * (sub.eval(s, &x).unwrap() + sup.eval(s, &x).unwrap());
        assert!((mean - (1.4f64 * 0.4).exp() * f(s, &x)).abs() < 1e-12);
    }
}

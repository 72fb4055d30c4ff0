use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// `φ(s, x) = α s + β·x + ½ xᵀγx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paraboloid {
    pub alpha: f64,
    pub beta: Vec<f64>,
    /// row-major `d × d`
    pub gamma: Vec<f64>,
}

const SYM_TOL: f64 = 1e-12;

impl Paraboloid {
    pub fn new(alpha: f64, beta: Vec<f64>, gamma: Vec<f64>) -> Result<Self> {
        let d = beta.len();
        if d == 0 || gamma.len() != d * d {
            return domain(format!("γ must be {d}×{d} for β of length {d}"));
        }
        if !alpha.is_finite() || beta.iter().chain(&gamma).any(|v| !v.is_finite()) {
            return domain("paraboloid coefficients must be finite");
        }
        for i in 0..d {
            for j in 0..i {
                if (gamma[i * d + j] - gamma[j * d + i]).abs() > SYM_TOL {
                    return domain(format!("γ is not symmetric at ({i}, {j})"));
                }
            }
        }
        Ok(Self { alpha, beta, gamma })
    }

    /// One-dimensional shorthand.
    pub fn scalar(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta: vec![beta], gamma: vec![gamma] }
    }

    pub fn zero(dim: usize) -> Self {
        Self { alpha: 0.0, beta: vec![0.0; dim], gamma: vec![0.0; dim * dim] }
    }

    pub fn dim(&self) -> usize {
        self.beta.len()
    }

    pub fn eval(&self, s: f64, x: &[f64]) -> f64 {
        let d = self.dim();
        let mut q = 0.0;
        for i in 0..d {
            let row: f64 = (0..d).map(|j| self.gamma[i * d + j] * x[j]).sum();
            q += x[i] * row;
        }
        self.alpha * s + self.beta.iter().zip(x).map(|(b, v)| b * v).sum::<f64>() + 0.5 * q
    }

    /// `(α, β + γx, γ)`: the jet re-centred at the point `x`.
    pub fn recentred(&self, x: &[f64]) -> Self {
        let d = self.dim();
        let beta = (0..d).map(|i| self.beta[i] + (0..d).map(|j| self.gamma[i * d + j] * x[j]).sum::<f64>()).collect();
        Self { alpha: self.alpha, beta, gamma: self.gamma.clone() }
    }

    pub fn trace(&self) -> f64 {
        let d = self.dim();
        (0..d).map(|i| self.gamma[i * d + i]).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_and_validates() {
        let p = Paraboloid::new(1.0, vec![2.0, 0.0], vec![2.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(p.eval(0.5, &[1.0, 1.0]), 0.5 + 2.0 + 0.5 * (2.0 + 2.0));
        assert!(Paraboloid::new(0.0, vec![0.0, 0.0], vec![0.0, 1.0, 0.5, 0.0]).is_err());
        assert!(Paraboloid::new(0.0, vec![0.0], vec![]).is_err());
        assert_eq!(p.recentred(&[1.0, -1.0]).beta, vec![3.0, 1.0]);
    }
}

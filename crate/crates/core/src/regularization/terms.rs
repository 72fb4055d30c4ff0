use serde::Serialize;

use crate::functional::Modulus;
use crate::path_space::euclid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorTerms {
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `C n^{-a/(p+1)} + β`
    pub r: f64,
}

/// Inputs of [`error_terms`].
#[derive(Debug, Clone, Copy)]
pub struct ErrorInputs {
    pub n: f64,
    pub c: f64,
    pub s: f64,
    pub s_i: f64,
    /// number of jump times `i`
    pub i: usize,
    /// `|(x_{i-1}, x)|_p`
    pub x_norm: f64,
    pub rho_g: Modulus,
    pub rho_u: Modulus,
    pub l0: f64,
    pub a: f64,
    pub p: f64,
}

pub fn error_terms(inp: &ErrorInputs) -> ErrorTerms {
    let ErrorInputs { n, c, s, s_i, i, x_norm, rho_g, rho_u, l0, a, p } = *inp;
    let ds = n * (s - s_i).abs();
    let alpha = c * (ds + ds.powf(1.0 / (p + 1.0)) + n.powf(-0.5));
    let arg = c * (n.powf(-1.0 / (p + 1.0)) + i as f64 * x_norm * n.powf(-(3.0 * p + 3.0) / (2.0 * p)));
    let beta = rho_g.apply(arg) + l0 * rho_u.apply(arg);
    ErrorTerms { c, alpha, beta, r: c * n.powf(-a / (p + 1.0)) + beta }
}

/// Constant `C` bounding `d_p` of a 1-optimal point from the origin, from the
/// prune box and the Hölder step between orders `p` and `p + 1`.
pub fn origin_constant(c0: f64, p: f64, horizon: f64) -> f64 {
    let time_part = c0.powf((3.0 * p + 3.0) / 2.0);
    let path_part =
        ((1.0 + horizon).powi(2) * c0).powf(1.0 / (p + 1.0)) * (1.0 + horizon).powf(1.0 / (p * (p + 1.0)));
    time_part.max(path_part)
}

/// `δ_n = C (n^{-(3p+3)/2} + n^{-1/(p+1)})`.
pub fn delta_n(c: f64, n: f64, p: f64) -> f64 {
    c * (n.powf(-(3.0 * p + 3.0) / 2.0) + n.powf(-1.0 / (p + 1.0)))
}

/// `δ'_n = C (n^{-(3p+3)/2} + n^{-1/(p+1)} + n^{-1/(10p)})`.
pub fn delta_prime_n(c: f64, n: f64, p: f64) -> f64 {
    delta_n(c, n, p) + c * n.powf(-1.0 / (10.0 * p))
}

/// Distance bound for a 1-optimal point at `(T, η^λ(x))` with the actual
/// `i` and `|x|_p` in place of their worst case over the admissible ranges.
pub fn terminal_distance_bound(c0: f64, n: f64, p: f64, horizon: f64, i: usize, x_norm: f64) -> f64 {
    let c = origin_constant(c0, p, horizon);
    delta_n(c, n, p) + i as f64 * x_norm * (c0 / n).powf((3.0 * p + 3.0) / (2.0 * p))
}

/// Ranges `i ≤ n^{1+1/(5p)}` and `|x|_p ≤ n^{1/2+6/(5p)}`.
pub fn terminal_ranges(n: f64, p: f64) -> (usize, f64) {
    (n.powf(1.0 + 1.0 / (5.0 * p)).floor() as usize, n.powf(0.5 + 6.0 / (5.0 * p)))
}

/// Checks `|a+b|^{p+1} ≤ |a|^{p+1} + (p+1)(a·b)|a|^{p-1} + C|b|²(|b|^{p-1} + |a|^{p-1})`.
pub fn power_bound_check(a: &[f64], b: &[f64], p: f64, c: f64) -> bool {
    power_bound_slack(a, b, p, c) >= 0.0
}

/// Right side minus left side, with a relative rounding allowance.
pub fn power_bound_slack(a: &[f64], b: &[f64], p: f64, c: f64) -> f64 {
    let sum: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
    let (na, nb, ns) = (euclid(a), euclid(b), euclid(&sum));
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let lhs = ns.powf(p + 1.0);
    let rhs = na.powf(p + 1.0)
        + (p + 1.0) * dot * na.powf(p - 1.0)
        + c * nb * nb * (nb.powf(p - 1.0) + na.powf(p - 1.0));
    rhs - lhs + 1e-12 * lhs.max(1.0)
}

/// `(p + 1) 2^p`.
pub fn step_v_constant(p: f64) -> f64 {
    (p + 1.0) * 2f64.powf(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn inputs(n: f64) -> ErrorInputs {
        ErrorInputs {
            n,
            c: 1.0,
            s: 0.3,
            s_i: 0.3,
            i: 1,
            x_norm: 0.0,
            rho_g: Modulus::identity(),
            rho_u: Modulus::identity(),
            l0: 1.0,
            a: 0.05,
            p: 3.0,
        }
    }

    #[test]
    fn alpha_and_beta_examples() {
        let e = error_terms(&inputs(16.0));
        assert!((e.alpha - 0.25).abs() < 1e-15);
        assert!((e.beta - 1.0).abs() < 1e-15);
        assert!(e.r > e.beta);
    }

    #[test]
    fn terms_vanish() {
        let e = error_terms(&inputs(1e12));
        assert!(e.alpha < 1e-5 && e.beta < 1e-2 && e.r < 0.71);
        let e2 = error_terms(&inputs(1e24));
        assert!(e2.r < e.r);
    }

    #[test]
    fn step_v_examples() {
        assert!(power_bound_check(&[0.7], &[0.0], 3.0, 0.0));
        assert!(power_bound_check(&[1.0], &[1.0], 3.0, 32.0));
        // 16 <= 1 + 4 + 64
        assert!((power_bound_slack(&[1.0], &[1.0], 3.0, 32.0) - 53.0).abs() < 1e-9);
    }

    #[test]
    fn step_v_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &p in &[3.0, 5.0] {
            for d in [1, 3] {
                let c = step_v_constant(p);
                for _ in 0..20_000 {
                    let a: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
                    let b: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
                    assert!(power_bound_check(&a, &b, p, c), "{a:?} {b:?}");
                }
            }
        }
    }

    #[test]
    fn delta_sequences_decrease() {
        let mut prev = f64::INFINITY;
        for n in [4.0, 8.0, 16.0, 32.0] {
            let d = delta_prime_n(2.0, n, 3.0);
            assert!(d < prev && d > delta_n(2.0, n, 3.0));
            prev = d;
        }
    }
}

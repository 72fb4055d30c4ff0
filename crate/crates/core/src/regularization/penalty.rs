use serde::Serialize;

use crate::error::{domain, Result};
use crate::path_space::{PwPath, TimeChange};

const ANCHOR_TOL: f64 = 1e-12;

fn check_anchor(s: f64, t: f64, ell: &TimeChange) -> Result<()> {
    if (ell.anchor() - t).abs() > ANCHOR_TOL || (ell.target() - s).abs() > ANCHOR_TOL {
        return domain(format!(
            "time-change maps [0, {}] onto [0, {}], expected [0, {t}] onto [0, {s}]",
            ell.anchor(),
            ell.target()
        ));
    }
    Ok(())
}

/// `‖ℓ - I‖_∞^{2/(3p+3)} + ‖η_{ℓ(t∧·)} - ω_{t∧·}‖_{p+1}^{p+1}`.
pub fn penalty(s: f64, eta: &PwPath, t: f64, omega: &PwPath, ell: &TimeChange, p: f64, horizon: f64) -> Result<f64> {
    check_anchor(s, t, ell)?;
    let dev = ell.sup_deviation();
    let moved = eta.compose(&ell.stopped_map());
    let diff = moved.sub(&omega.stopped(t));
    Ok(dev.powf(2.0 / (3.0 * p + 3.0)) + diff.norm_pow(p + 1.0, horizon))
}

/// Same quantity written with `η_{s∧ℓ(·)}`; agrees with [`penalty`] pointwise.
pub fn penalty_capped(
    s: f64,
    eta: &PwPath,
    t: f64,
    omega: &PwPath,
    ell: &TimeChange,
    p: f64,
    horizon: f64,
) -> Result<f64> {
    check_anchor(s, t, ell)?;
    let dev = ell.sup_deviation();
    let moved = eta.compose(&ell.capped_map(horizon));
    let diff = moved.sub(&omega.stopped(t));
    Ok(dev.powf(2.0 / (3.0 * p + 3.0)) + diff.norm_pow(p + 1.0, horizon))
}

/// Search box containing every 1-optimal point for a functional bounded by `b_inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PruneBox {
    pub c0: f64,
    /// bound on `‖ℓ - I‖_∞`
    pub ell: f64,
    /// bound on `|η_s - ω_t|`
    pub terminal: f64,
    /// bound on `∫_0^t |η_{ℓ(r)} - ω_r|^{p+1} dr`
    pub integral: f64,
}

pub fn prune_bounds(n: f64, b_inf: f64, p: f64) -> PruneBox {
    let c0 = 1.0 + 2.0 * b_inf;
    let r = c0 / n;
    PruneBox { c0, ell: r.powf((3.0 * p + 3.0) / 2.0), terminal: r.powf(1.0 / (p + 1.0)), integral: r }
}

impl PruneBox {
    /// Whether `(t, ω, ℓ)` satisfies all three inequalities, with relative slack `tol`.
    pub fn contains(&self, s: f64, eta: &PwPath, t: f64, omega: &PwPath, ell: &TimeChange, p: f64, tol: f64) -> bool {
        let slack = 1.0 + tol;
        let dev = ell.sup_deviation();
        let term: f64 = eta
            .eval(s)
            .iter()
            .zip(omega.eval(t))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let moved = eta.compose(&ell.stopped_map());
        let integral = moved.sub(omega).integral_pow(p + 1.0, t);
        dev <= self.ell * slack && term <= self.terminal * slack && integral <= self.integral * slack
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadrature(f: impl Fn(f64) -> f64, n: usize) -> f64 {
        (0..n).map(|j| f((j as f64 + 0.5) / n as f64)).sum::<f64>() / n as f64
    }

    #[test]
    fn zero_when_matched() {
        let w = PwPath::linear(1, vec![0.0, 1.0], vec![0.0, 1.0]);
        let v = penalty(0.6, &w.stopped(0.6), 0.6, &w, &TimeChange::identity(0.6), 3.0, 1.0).unwrap();
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn zero_eta_against_ramp() {
        let w = PwPath::linear(1, vec![0.0, 1.0], vec![0.0, 1.0]);
        let v = penalty(1.0, &PwPath::zero(1), 1.0, &w, &TimeChange::identity(1.0), 3.0, 1.0).unwrap();
        let oracle = 1.0 + quadrature(|r| r.powi(4), 100_000);
        assert!((v - oracle).abs() < 1e-9);
        assert!((v - 1.2).abs() < 1e-12);
    }

    #[test]
    fn deviation_term_dominates() {
        let w = PwPath::linear(1, vec![0.0, 1.0], vec![0.0, 1.0]);
        let ell = TimeChange::new(1.0, 1.0, &[(0.5, 0.4)]).unwrap();
        let v = penalty(1.0, &w, 1.0, &w, &ell, 3.0, 1.0).unwrap();
        let first = 0.1f64.powf(1.0 / 6.0);
        assert!((first - 0.68129).abs() < 1e-5);
        // mismatch η_{ℓ(r)} - r: ℓ(r) = 0.8 r on [0, .5], 0.4 + 1.2 (r - .5) after
        let mismatch = quadrature(
            |r| {
                let l = if r <= 0.5 { 0.8 * r } else { 0.4 + 1.2 * (r - 0.5) };
                (l - r).powi(4)
            },
            200_000,
        );
        assert!((v - first - mismatch).abs() < 1e-9);
        assert!(v >= first);
    }

    #[test]
    fn capped_form_agrees() {
        let eta = PwPath::step(1, vec![0.0, 0.25, 0.5], vec![1.0, -0.5, 2.0]);
        let w = PwPath::linear(1, vec![0.0, 0.3, 0.6], vec![0.0, 0.7, -0.2]);
        let ell = TimeChange::new(0.6, 0.55, &[(0.2, 0.22), (0.4, 0.36)]).unwrap();
        let a = penalty(0.55, &eta, 0.6, &w, &ell, 3.0, 1.0).unwrap();
        let b = penalty_capped(0.55, &eta, 0.6, &w, &ell, 3.0, 1.0).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn wrong_anchor_is_rejected() {
        let w = PwPath::zero(1);
        assert!(penalty(0.5, &w, 0.6, &w, &TimeChange::identity(0.5), 3.0, 1.0).is_err());
    }

    #[test]
    fn prune_examples() {
        let b = prune_bounds(100.0, 1.0, 3.0);
        assert!((b.ell - 7.29e-10).abs() < 1e-20);
        assert!((b.terminal - 0.41618).abs() < 1e-5);
        let far = prune_bounds(1e9, 1.0, 3.0);
        assert!(far.ell < b.ell && far.terminal < b.terminal && far.integral < b.integral);
    }
}

//! Paraboloids tangent from above to `f(s, x)` on 5 × 9 stencils.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::paraboloid::Paraboloid;
use crate::error::{domain, Result};

const HALF_T: i32 = 2;
const HALF_X: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stencil {
    /// time spacing; the stencil spans `s ± 2 ds`
    pub ds: f64,
    /// space spacing; the stencil spans `x ± 4 dx`
    pub dx: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StencilReport {
    pub s: f64,
    pub x: f64,
    pub accepted: bool,
    /// tangency point
    pub s_star: f64,
    pub x_star: f64,
    pub jet: Option<Paraboloid>,
    /// spread of `f − ψ` over the stencil
    pub misfit: f64,
    pub residual: f64,
    /// error allowance supplied by the caller at the tangency point
    pub allowance: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// `residual − allowance − tolerance` when positive
    pub overshoot: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalReport {
    pub stencils: Vec<StencilReport>,
    pub accepted: usize,
    pub skipped: usize,
    pub passed: usize,
    /// passed / accepted
    pub pass_fraction: f64,
    pub max_overshoot: f64,
}

/// Powers `(a, b)` of the monomials `ds^a dx^b` in the fitted surface.
const POWERS: [(i32, i32); K] = {
    let mut out = [(0, 0); K];
    let mut k = 0;
    while k < K {
        out[k] = ((k / 5) as i32, (k % 5) as i32);
        k += 1;
    }
    out
};
const K: usize = 15;

/// Solves the normal equations by Gaussian elimination with pivoting.
fn solve(mut a: [[f64; K + 1]; K]) -> Option<[f64; K]> {
    for col in 0..K {
        let piv = (col..K).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        for r in 0..K {
            if r != col {
                let m = a[r][col] / a[col][col];
                for c in col..=K {
                    a[r][c] -= m * a[col][c];
                }
            }
        }
    }
    let mut out = [0.0; K];
    for (i, o) in out.iter_mut().enumerate() {
        *o = a[i][K] / a[i][i];
    }
    Some(out)
}

/// Monomials in units of the stencil spacing, which keeps the normal
/// equations well conditioned.
fn basis(u: f64, v: f64) -> [f64; K] {
    POWERS.map(|(a, b)| u.powi(a) * v.powi(b))
}

/// `∂^i_u ∂^j_v` of the fitted surface at `(u, v)`.
fn derivative(coef: &[f64; K], i: i32, j: i32, u: f64, v: f64) -> f64 {
    let falling = |n: i32, k: i32| (0..k).map(|m| (n - m) as f64).product::<f64>();
    POWERS
        .iter()
        .zip(coef)
        .filter(|((a, b), _)| *a >= i && *b >= j)
        .map(|(&(a, b), c)| c * falling(a, i) * falling(b, j) * u.powi(a - i) * v.powi(b - j))
        .sum()
}

fn one(
    f: &(dyn Fn(f64, f64) -> Result<f64> + Sync),
    g_x: &(dyn Fn(f64, f64, f64, f64, f64) -> f64 + Sync),
    l0: f64,
    (s0, x0): (f64, f64),
    st: Stencil,
    allowance: &(dyn Fn(f64, f64) -> f64 + Sync),
) -> Result<StencilReport> {
    let mut samples = Vec::with_capacity(45);
    for j in -HALF_T..=HALF_T {
        for i in -HALF_X..=HALF_X {
            let (ds, dx) = (j as f64 * st.ds, i as f64 * st.dx);
            samples.push((j, i, ds, dx, f(s0 + ds, x0 + dx)?));
        }
    }
    let mut ne = [[0.0; K + 1]; K];
    for &(j, i, _, _, v) in &samples {
        let b = basis(j as f64, i as f64);
        for r in 0..K {
            for c in 0..K {
                ne[r][c] += b[r] * b[c];
            }
            ne[r][K] += b[r] * v;
        }
    }
    let coef = solve(ne).ok_or_else(|| crate::Error::Precision("singular stencil fit".into()))?;
    let psi = |j: i32, i: i32| basis(j as f64, i as f64).iter().zip(&coef).map(|(b, c)| b * c).sum::<f64>();
    let scale = samples.iter().fold(0.0f64, |m, s| m.max(s.4.abs()));
    let mut best = (f64::NEG_INFINITY, 0, 0);
    let mut lo = f64::INFINITY;
    for &(j, i, _, _, v) in &samples {
        let r = v - psi(j, i);
        lo = lo.min(r);
        if r > best.0 {
            best = (r, j, i);
        }
    }
    let misfit = best.0 - lo;
    let floor = 1e-12 * (1.0 + scale);
    let (j, i) = if misfit <= floor { (0, 0) } else { (best.1, best.2) };
    let interior = j.abs() < HALF_T && i.abs() < HALF_X;
    let (s_star, x_star) = (s0 + j as f64 * st.ds, x0 + i as f64 * st.dx);
    let eps = misfit + floor;
    let tolerance = eps / st.ds + l0 * (eps / st.dx + 2.0 * eps / (st.dx * st.dx));
    if !interior {
        return Ok(StencilReport {
            s: s0,
            x: x0,
            accepted: false,
            s_star,
            x_star,
            jet: None,
            misfit,
            residual: f64::NAN,
            allowance: f64::NAN,
            tolerance,
            passed: false,
            overshoot: 0.0,
        });
    }
    let (u, v) = (j as f64, i as f64);
    let jet = Paraboloid::scalar(
        derivative(&coef, 1, 0, u, v) / st.ds,
        derivative(&coef, 0, 1, u, v) / st.dx,
        derivative(&coef, 0, 2, u, v) / (st.dx * st.dx),
    );
    let y = samples.iter().find(|s| s.0 == j && s.1 == i).map(|s| s.4).unwrap_or(f64::NAN);
    let residual = -jet.alpha - g_x(s_star, x_star, y, jet.beta[0], jet.gamma[0]);
    let allow = allowance(s_star, x_star);
    let over = residual - allow - tolerance;
    Ok(StencilReport {
        s: s0,
        x: x0,
        accepted: true,
        s_star,
        x_star,
        jet: Some(jet),
        misfit,
        residual,
        allowance: allow,
        tolerance,
        passed: over <= 0.0,
        overshoot: over.max(0.0),
    })
}

/// Fits a polynomial `ψ` of degree 2 in `s` and 4 in `x` by least squares on
/// a 5 × 9
/// stencil around each point, lifts it to touch `f` from above at the
/// largest gap, and checks `−α − G_x(s, x, f, β, γ) ≤ allowance + tolerance` for the
/// jet `(∂_s ψ, ∂_x ψ, ∂²_x ψ)`
/// at that contact when it is interior. One space dimension.
pub fn classical_jet_residual(
    f: &(dyn Fn(f64, f64) -> Result<f64> + Sync),
    g_x: &(dyn Fn(f64, f64, f64, f64, f64) -> f64 + Sync),
    l0: f64,
    points: &[(f64, f64)],
    stencil: Stencil,
    allowance: &(dyn Fn(f64, f64) -> f64 + Sync),
) -> Result<ClassicalReport> {
    if !(stencil.ds > 0.0 && stencil.dx > 0.0) {
        return domain("stencil spacings must be positive");
    }
    let stencils: Vec<StencilReport> =
        points.par_iter().map(|&p| one(f, g_x, l0, p, stencil, allowance)).collect::<Result<_>>()?;
    let accepted = stencils.iter().filter(|s| s.accepted).count();
    let passed = stencils.iter().filter(|s| s.passed).count();
    Ok(ClassicalReport {
        accepted,
        skipped: stencils.len() - accepted,
        passed,
        pass_fraction: if accepted > 0 { passed as f64 / accepted as f64 } else { 0.0 },
        max_overshoot: stencils.iter().map(|s| s.overshoot).fold(0.0, f64::max),
        stencils,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const ST: Stencil = Stencil { ds: 0.02, dx: 0.05 };

    fn pts() -> Vec<(f64, f64)> {
        vec![(0.3, 0.0), (0.5, 0.4), (0.7, -0.8)]
    }

    #[test]
    fn linear_has_zero_residual() {
        let r = classical_jet_residual(&|_, x| Ok(x), &|_, _, _, _, _| 0.0, 0.0, &pts(), ST, &|_, _| 0.0).unwrap();
        assert_eq!(r.accepted, 3);
        assert_eq!(r.passed, 3);
        for s in &r.stencils {
            assert!(s.residual.abs() < 1e-9);
        }
    }

    #[test]
    fn heat_has_zero_residual() {
        let g = |_: f64, _: f64, _: f64, _: f64, gm: f64| 0.5 * gm;
        let r = classical_jet_residual(&|s, x| Ok(x * x - s), &g, 0.5, &pts(), ST, &|_, _| 0.0).unwrap();
        assert_eq!(r.passed, 3);
        for s in &r.stencils {
            let j = s.jet.as_ref().unwrap();
            assert!((j.alpha + 1.0).abs() < 1e-8 && (j.gamma[0] - 2.0).abs() < 1e-6);
            assert!(s.residual.abs() < 1e-6);
        }
    }

    #[test]
    fn curvature_in_time_keeps_contact_interior() {
        let r = classical_jet_residual(&|s, x| Ok(x + 3.0 * s * s), &|_, _, _, _, _| 0.0, 0.0, &pts(), ST, &|_, _| 0.0)
            .unwrap();
        assert_eq!(r.accepted, 3);
        for (st, (s0, _)) in r.stencils.iter().zip(pts()) {
            assert!((st.jet.as_ref().unwrap().alpha - 6.0 * s0).abs() < 1e-8);
        }
    }

    #[test]
    fn wrong_equation_fails() {
        // x² − s is not a subsolution of −∂_t u − γ/4 = 0: residual 1 − 1/2
        let g = |_: f64, _: f64, _: f64, _: f64, gm: f64| 0.25 * gm;
        let r = classical_jet_residual(&|s, x| Ok(x * x - s), &g, 0.25, &pts(), ST, &|_, _| 0.0).unwrap();
        assert_eq!(r.passed, 0);
        assert!((r.max_overshoot - 0.5).abs() < 1e-5);
    }

    #[test]
    fn kink_from_below_is_skipped_or_tangent() {
        // |x| has no paraboloid touching from above at 0 within the stencil
        let r = classical_jet_residual(&|_, x| Ok(x.abs()), &|_, _, _, _, _| 0.0, 0.0, &[(0.5, 0.0)], ST, &|_, _| 0.0)
            .unwrap();
        let s = &r.stencils[0];
        assert!(!s.accepted || s.x_star != 0.0);
    }
}

//! Randomised checks of ellipticity, continuity in `θ`, Lipschitz bounds,
//! and the monotonicity chain of the `Ḡ` transform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::nonlinearity::{transform_discount, transform_gbar, Nonlinearity};
use crate::error::Result;
use crate::path_space::{euclid, pw_distance, random_point, Grid, PwPath};

const SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditSpec {
    pub samples: usize,
    pub seed: u64,
    pub horizon: f64,
    pub grid_steps: usize,
    /// random-walk volatility of sampled paths
    pub scale: f64,
    /// metric order of `d_p`
    pub p: f64,
    /// `y`, `z` and `γ` entries are drawn from `[-range, range]`
    pub range: f64,
}

impl Default for AuditSpec {
    fn default() -> Self {
        Self { samples: 1000, seed: 5, horizon: 1.0, grid_steps: 16, scale: 1.0, p: 3.0, range: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditCheck {
    pub name: &'static str,
    pub checked: usize,
    pub violations: usize,
    /// largest `lhs − rhs` seen
    pub worst_excess: f64,
    pub witness: Option<serde_json::Value>,
}

impl AuditCheck {
    fn new(name: &'static str) -> Self {
        Self { name, checked: 0, violations: 0, worst_excess: f64::NEG_INFINITY, witness: None }
    }

    fn record(&mut self, lhs: f64, rhs: f64, witness: impl FnOnce() -> serde_json::Value) {
        self.checked += 1;
        let ex = lhs - rhs;
        self.worst_excess = self.worst_excess.max(ex);
        if ex > 0.0 {
            self.violations += 1;
            if self.witness.is_none() {
                self.witness = Some(witness());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub nonlinearity: String,
    pub checks: Vec<AuditCheck>,
    pub passed: bool,
}

struct Draw {
    t: f64,
    path: PwPath,
    y: f64,
    z: Vec<f64>,
    gamma: Vec<f64>,
}

struct Sampler {
    rng: ChaCha8Rng,
    grid: Grid,
    dim: usize,
    spec: AuditSpec,
}

impl Sampler {
    fn new(spec: &AuditSpec, dim: usize) -> Result<Self> {
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(spec.seed),
            grid: Grid::new(spec.horizon, spec.grid_steps)?,
            dim,
            spec: spec.clone(),
        })
    }

    fn uniform(&mut self) -> f64 {
        self.rng.random_range(-self.spec.range..=self.spec.range)
    }

    fn sym(&mut self) -> Vec<f64> {
        let d = self.dim;
        let mut g = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                let v = self.uniform();
                g[i * d + j] = v;
                g[j * d + i] = v;
            }
        }
        g
    }

    /// `A Aᵀ` with `A` uniform on `[-1, 1]`.
    fn psd(&mut self) -> Vec<f64> {
        let d = self.dim;
        let a: Vec<f64> = (0..d * d).map(|_| self.rng.random_range(-1.0..=1.0)).collect();
        let mut p = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                p[i * d + j] = (0..d).map(|k| a[i * d + k] * a[j * d + k]).sum();
            }
        }
        p
    }

    fn draw(&mut self) -> Result<Draw> {
        let th = random_point(self.grid, self.dim, self.spec.scale, self.spec.horizon, &mut self.rng)?;
        let y = self.uniform();
        let z = (0..self.dim).map(|_| self.uniform()).collect();
        let gamma = self.sym();
        Ok(Draw { t: th.t(), path: th.stopped_pw(), y, z, gamma })
    }
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    euclid(&d)
}

fn g_at(g: &Nonlinearity, d: &Draw) -> f64 {
    g.eval(d.t, &d.path, d.y, &d.z, &d.gamma)
}

/// Ellipticity (i), `θ`-modulus (ii), Lipschitz bound (iii), and the
/// one-sided bound (iii′) when the nonlinearity is flagged monotone.
pub fn assumption_audit(g: &Nonlinearity, spec: &AuditSpec) -> Result<AuditReport> {
    let mut s = Sampler::new(spec, g.dim)?;
    let mut ell = AuditCheck::new("(i) ellipticity");
    let mut cont = AuditCheck::new("(ii) modulus in theta");
    let mut lip = AuditCheck::new("(iii) Lipschitz in (y, z, gamma)");
    let mut one_sided = AuditCheck::new("(iii') one-sided Lipschitz");
    for _ in 0..spec.samples {
        let a = s.draw()?;
        let ga = g_at(g, &a);

        let p = s.psd();
        let up: Vec<f64> = a.gamma.iter().zip(&p).map(|(x, y)| x + y).collect();
        let gu = g.eval(a.t, &a.path, a.y, &a.z, &up);
        ell.record(ga, gu + SLACK, || json!({"t": a.t, "y": a.y, "z": a.z, "gamma": a.gamma, "gamma_prime": up}));

        let b = s.draw()?;
        let dp = pw_distance(a.t, &a.path, b.t, &b.path, spec.p, spec.horizon);
        let gb = g.eval(b.t, &b.path, a.y, &a.z, &a.gamma);
        cont.record((ga - gb).abs(), g.rho.apply(dp) + SLACK, || {
            json!({"t": a.t, "t_prime": b.t, "d_p": dp, "difference": (ga - gb).abs()})
        });

        let gb = g.eval(a.t, &a.path, b.y, &b.z, &b.gamma);
        let dz = diff_norm(&a.z, &b.z);
        let dg = diff_norm(&a.gamma, &b.gamma);
        let dy = a.y - b.y;
        let wit = || json!({"y": a.y, "y_prime": b.y, "z": a.z, "z_prime": b.z, "gamma": a.gamma, "gamma_prime": b.gamma});
        lip.record((ga - gb).abs(), g.l0 * (dy.abs() + dz + dg) + SLACK, wit);
        if g.monotone {
            one_sided.record(ga - gb, g.l0 * (dy.max(0.0) + dz + dg) + SLACK, wit);
        }
    }
    let mut checks = vec![ell, cont, lip];
    if g.monotone {
        checks.push(one_sided);
    }
    Ok(AuditReport { nonlinearity: g.name.clone(), passed: checks.iter().all(|c| c.passed()), checks })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    pub nonlinearity: String,
    pub l0: f64,
    pub samples: usize,
    /// samples where (iii′) holds for the pair, so the chain must hold
    pub applicable: usize,
    pub violations: usize,
    pub witness: Option<serde_json::Value>,
    pub passed: bool,
}

/// `L₀(y − y′) ≤ (Ḡ(y′) − Ḡ(y))⁺ ≤ |Ḡ(y′) − Ḡ(y)|` for `y ≥ y′` on random
/// samples where `G(y) − G(y′) ≤ L₀ (y − y′)`.
pub fn gbar_chain_check(g: &Nonlinearity, spec: &AuditSpec) -> Result<ChainReport> {
    let l0 = g.l0;
    let bar = transform_gbar(g, l0)?;
    let mut s = Sampler::new(spec, g.dim)?;
    let mut rep = ChainReport {
        nonlinearity: g.name.clone(),
        l0,
        samples: spec.samples,
        applicable: 0,
        violations: 0,
        witness: None,
        passed: true,
    };
    for _ in 0..spec.samples {
        let d = s.draw()?;
        let other = s.uniform();
        let (y, yp) = if d.y >= other { (d.y, other) } else { (other, d.y) };
        let g_y = g.eval(d.t, &d.path, y, &d.z, &d.gamma);
        let g_yp = g.eval(d.t, &d.path, yp, &d.z, &d.gamma);
        if g_y - g_yp > l0 * (y - yp) + SLACK * (1.0 + g_y.abs()) {
            continue;
        }
        rep.applicable += 1;
        let b_y = bar.eval(d.t, &d.path, y, &d.z, &d.gamma);
        let b_yp = bar.eval(d.t, &d.path, yp, &d.z, &d.gamma);
        let diff = b_yp - b_y;
        let tol = SLACK * (1.0 + b_y.abs() + b_yp.abs());
        let lhs = l0 * (y - yp);
        let mid = diff.max(0.0);
        if lhs > mid + tol || mid > diff.abs() + tol {
            rep.violations += 1;
            if rep.witness.is_none() {
                rep.witness = Some(json!({"t": d.t, "y": y, "y_prime": yp, "z": d.z, "gamma": d.gamma,
                    "lhs": lhs, "positive_part": mid, "abs": diff.abs()}));
            }
        }
    }
    rep.passed = rep.violations == 0;
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundTrip {
    pub samples: usize,
    pub max_error: f64,
}

/// Applies the discount with `L` then `−L` and compares with `G`.
pub fn discount_round_trip(g: &Nonlinearity, l: f64, spec: &AuditSpec) -> Result<RoundTrip> {
    let back = transform_discount(&transform_discount(g, l), -l);
    let mut s = Sampler::new(spec, g.dim)?;
    let mut max_error = 0.0f64;
    for _ in 0..spec.samples {
        let d = s.draw()?;
        let a = g_at(g, &d);
        let b = g_at(&back, &d);
        max_error = max_error.max((a - b).abs() / (1.0 + a.abs()));
    }
    Ok(RoundTrip { samples: spec.samples, max_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::Modulus;
    use crate::stopping_viscosity::nonlinearity;

    fn spec(n: usize) -> AuditSpec {
        AuditSpec { samples: n, ..Default::default() }
    }

    #[test]
    fn catalog_audits() {
        for name in ["zero", "half-laplacian", "hjb-sup-vol", "lipschitz-sin"] {
            let r = assumption_audit(&nonlinearity(name, 1, 1.0).unwrap(), &spec(500)).unwrap();
            assert!(r.passed, "{name}: {:?}", r.checks);
        }
        let r = assumption_audit(&nonlinearity("half-laplacian", 2, 1.0).unwrap(), &spec(300)).unwrap();
        assert!(r.passed);
    }

    #[test]
    fn anti_laplacian_is_not_elliptic() {
        let r = assumption_audit(&nonlinearity("anti-laplacian", 1, 1.0).unwrap(), &spec(200)).unwrap();
        assert!(!r.passed);
        assert!(r.checks[0].violations > 0 && r.checks[0].witness.is_some());
        assert!(r.checks[1..].iter().all(|c| c.passed()));
    }

    #[test]
    fn chain_holds_for_maximal_increase() {
        let g = Nonlinearity::new("l0-y", 1, 0.7, Modulus::zero(), true, |_, _, y, _, _| 0.7 * y);
        let r = gbar_chain_check(&g, &spec(2000)).unwrap();
        assert!(r.passed && r.applicable == 2000);
        for name in ["zero", "half-laplacian", "hjb-sup-vol", "lipschitz-sin"] {
            assert!(gbar_chain_check(&nonlinearity(name, 1, 1.0).unwrap(), &spec(500)).unwrap().passed);
        }
    }

    #[test]
    fn samples_outside_one_sided_bound_are_skipped() {
        // 2 L0 y violates (iii′); those samples are skipped, not failed
        let g = Nonlinearity::new("2l0-y", 1, 0.5, Modulus::zero(), true, |_, _, y, _, _| y);
        let r = gbar_chain_check(&g, &spec(200)).unwrap();
        assert!(r.applicable < 200);
        assert!(r.passed);
    }

    #[test]
    fn round_trip_is_exact() {
        let g = nonlinearity("hjb-sup-vol", 1, 1.0).unwrap();
        assert!(discount_round_trip(&g, 1.0, &spec(500)).unwrap().max_error < 1e-12);
    }
}

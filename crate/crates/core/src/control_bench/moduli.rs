//! Measured continuity moduli of the control value in `d_p`, against the
//! Gronwall-type space bound and the Hölder-1/2 time bound.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engines::{policy_value, split_rng, value, Policy, Resolution, ValueEstimate};
use super::problem::{ControlProblem, Engine};
use crate::error::{config, domain, Error, Result};
use crate::functional::{FnFunctional, Modulus};
use crate::path_space::{pw_distance, random_walk_path, Grid, PwPath};

/// Calibration run for the Burkholder-type constant `C` in
/// `E‖∫φ dW‖_p^{2p} ≤ C E∫|φ|^{2p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BurkholderSpec {
    pub p: f64,
    pub horizon: f64,
    pub variates: usize,
    pub paths: usize,
    pub steps: usize,
    pub quantile: f64,
    pub seed: u64,
}

impl Default for BurkholderSpec {
    fn default() -> Self {
        Self { p: 3.0, horizon: 1.0, variates: 64, paths: 4000, steps: 64, quantile: 0.99, seed: 17 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub c: f64,
    pub quantile: f64,
    /// per-variate ratio estimates, in variate order
    pub ratios: Vec<f64>,
}

/// Integrand `φ(s, W_s) = a + b tanh(c W_s) + e 1{s < u}`; variate 0 is `φ ≡ 1`.
fn variate(k: usize, rng: &mut impl Rng) -> [f64; 5] {
    if k == 0 {
        return [1.0, 0.0, 0.0, 0.0, 0.0];
    }
    [
        rng.random_range(-1.0..1.0),
        rng.random_range(-2.0..2.0),
        rng.random_range(0.0..4.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(0.0..1.0),
    ]
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn calibrate_burkholder(spec: &BurkholderSpec) -> Result<Calibration> {
    if spec.variates == 0 || spec.paths == 0 || spec.steps == 0 || !(spec.horizon > 0.0) {
        return config("calibration needs variates, paths, steps and a positive horizon");
    }
    let p = spec.p;
    let h = spec.horizon / spec.steps as f64;
    let sq = h.sqrt();
    let mut prng = split_rng(spec.seed, 10, 0);
    let params: Vec<[f64; 5]> = (0..spec.variates).map(|k| variate(k, &mut prng)).collect();
    let ratios: Vec<f64> = params
        .par_iter()
        .enumerate()
        .map(|(k, &[a, b, c, e, u])| {
            let mut rng = split_rng(spec.seed, 11, k as u64);
            let (mut num, mut den) = (0.0, 0.0);
            for _ in 0..spec.paths {
                let (mut w, mut i, mut int_i, mut int_phi) = (0.0, 0.0, 0.0, 0.0);
                for j in 0..spec.steps {
                    let s = j as f64 * h;
                    let phi = a + b * (c * w).tanh() + if s < u * spec.horizon { e } else { 0.0 };
                    let dw: f64 = sq * rng.sample::<f64, _>(StandardNormal);
                    w += dw;
                    i += phi * dw;
                    int_i += h * i.abs().powf(p);
                    int_phi += h * phi.abs().powf(2.0 * p);
                }
                num += (i.abs().powf(p) + int_i).powi(2);
                den += int_phi;
            }
            if den > 0.0 { num / den } else { 0.0 }
        })
        .collect();
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(Calibration { c: quantile(&sorted, spec.quantile), quantile: spec.quantile, ratios })
}

/// `C̃ = (2C_lip)^{2p} C (T+1) exp((2C_lip)^{2p} C (T+1) T)`.
pub fn c_tilde(c_lip: f64, c: f64, p: f64, horizon: f64) -> f64 {
    let k = (2.0 * c_lip).powf(2.0 * p) * c * (horizon + 1.0);
    if k == 0.0 {
        0.0
    } else {
        k * (k * horizon).exp()
    }
}

/// Estimate of `Ĉ` in `sup E|X_{r∧Δ} − X_0|^p ≤ Ĉ Δ^{p/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CHatSpec {
    pub dts: Vec<f64>,
    pub max_starts: usize,
    pub paths: usize,
    pub steps: usize,
}

impl Default for CHatSpec {
    fn default() -> Self {
        Self { dts: (2..=7).map(|k| 2f64.powi(-k)).collect(), max_starts: 4, paths: 20_000, steps: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CHat {
    pub c_hat: f64,
    /// `(Δ, policy label, mean, stderr)` of the largest normalised moment
    pub worst: (f64, String, f64, f64),
}

/// Constant controls plus the feedback rule maximising `|σ|` pointwise.
fn moment_policies(problem: &ControlProblem) -> Vec<(String, Policy)> {
    let mut out: Vec<(String, Policy)> =
        problem.controls.iter().map(|&a| (format!("a={a}"), Policy::Constant(a))).collect();
    if problem.sigma.is_markov() {
        let pr = problem.clone();
        out.push((
            "max-vol".into(),
            Policy::Feedback(Arc::new(move |s, x| {
                let mut best = (f64::NEG_INFINITY, 0.0);
                for &a in &pr.controls {
                    let v = pr.sigma_at(s, x, None, a).abs();
                    if v > best.0 {
                        best = (v, a);
                    }
                }
                best.1
            })),
        ));
    }
    out
}

pub fn measure_c_hat(
    problem: &ControlProblem,
    starts: &[(f64, PwPath)],
    p: f64,
    spec: &CHatSpec,
    seed: u64,
) -> Result<CHat> {
    if spec.dts.is_empty() || starts.is_empty() {
        return config("Ĉ needs at least one increment and one start");
    }
    let mut best = CHat { c_hat: 0.0, worst: (0.0, String::new(), 0.0, 0.0) };
    for (si, (t, omega)) in starts.iter().take(spec.max_starts.max(1)).enumerate() {
        let x0 = omega.eval(*t)[0];
        for (di, &dt) in spec.dts.iter().enumerate() {
            let mut pr = problem.clone().with_horizon(t + dt)?;
            pr.g_terminal = Some(Arc::new(move |x: f64| (x - x0).abs().powf(p)));
            pr.g = Arc::new(FnFunctional::new("increment-moment", move |s, w: &PwPath| (w.eval(s)[0] - x0).abs().powf(p)));
            for (pi, (label, pol)) in moment_policies(problem).into_iter().enumerate() {
                let sd = seed ^ ((si as u64) << 40 | (di as u64) << 20 | pi as u64);
                let (m, se) = policy_value(&pr, &pol, *t, omega, spec.steps, spec.paths, sd)?;
                let c = (m + 3.0 * se) / dt.powf(p / 2.0);
                if c > best.c_hat {
                    best = CHat { c_hat: c, worst: (dt, label, m, se) };
                }
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModulusKind {
    Space,
    Time,
    Joint,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusRow {
    pub pair_id: usize,
    pub dp_dist: f64,
    pub dt: f64,
    pub measured: f64,
    pub bound: f64,
    pub stderr: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusReport {
    pub kind: ModulusKind,
    pub problem: String,
    pub engine: Engine,
    pub rows: Vec<ModulusRow>,
    /// calibrated Burkholder-type constant
    pub c_burkholder: f64,
    pub c_tilde: f64,
    pub c_hat: Option<f64>,
    pub holder_exponent: Option<f64>,
    pub failures: usize,
    pub passed: bool,
}

impl ModulusReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("pair_id,dp_dist,dt,measured,bound,stderr,pass\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}",
                r.pair_id, r.dp_dist, r.dt, r.measured, r.bound, r.stderr, r.pass
            );
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|source| Error::Io { path: path.to_path_buf(), source })
    }
}

/// Settings shared by the modulus experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModulusSpec {
    pub p: f64,
    pub engine: Engine,
    pub resolution: Resolution,
    pub seed: u64,
    /// standard errors added as slack to the measured side
    pub se_slack: f64,
    pub calibration: BurkholderSpec,
    pub c_hat: CHatSpec,
}

impl Default for ModulusSpec {
    fn default() -> Self {
        Self {
            p: 3.0,
            engine: Engine::Lattice,
            resolution: Resolution::default(),
            seed: 29,
            se_slack: 3.0,
            calibration: BurkholderSpec::default(),
            c_hat: CHatSpec::default(),
        }
    }
}

/// Right sides of the space and time bounds for one problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusBounds {
    pub rho: Modulus,
    pub p: f64,
    pub horizon: f64,
    pub c: f64,
    pub c_tilde: f64,
    pub c_hat: f64,
}

impl ModulusBounds {
    pub fn new(problem: &ControlProblem, c: f64, c_hat: f64, p: f64) -> Result<Self> {
        let Some(rho) = problem.rho else {
            return config(format!("problem `{}` declares no modulus for its reward", problem.name));
        };
        let c_tilde = c_tilde(problem.c_lip, c, p, problem.horizon);
        Ok(Self { rho, p, horizon: problem.horizon, c, c_tilde, c_hat })
    }

    fn factor(&self) -> f64 {
        1.0 + self.c_tilde.powf(1.0 / (2.0 * self.p))
    }

    /// `ρ((1 + C̃^{1/(2p)}) d)`
    pub fn space(&self, d: f64) -> f64 {
        if d == 0.0 {
            return 0.0;
        }
        self.rho.apply(self.factor() * d)
    }

    /// `ρ((1 + C̃^{1/(2p)}) ((T+1)Ĉ)^{1/p} Δ^{1/2})`
    pub fn time(&self, dt: f64) -> f64 {
        if dt == 0.0 {
            return 0.0;
        }
        self.rho.apply(self.factor() * ((self.horizon + 1.0) * self.c_hat).powf(1.0 / self.p) * dt.sqrt())
    }
}

fn eval(problem: &ControlProblem, t: f64, omega: &PwPath, spec: &ModulusSpec, seed: u64) -> Result<ValueEstimate> {
    value(problem, t, omega, spec.engine, &spec.resolution, seed)
}

fn row(pair_id: usize, dp_dist: f64, dt: f64, a: &ValueEstimate, b: &ValueEstimate, bound: f64, slack: f64) -> ModulusRow {
    let measured = (a.value - b.value).abs();
    let stderr = a.std_error.hypot(b.std_error);
    // rounding allowance for pairs whose values agree in exact arithmetic
    let tol = 1e-12 * (1.0 + a.value.abs().max(b.value.abs()));
    ModulusRow { pair_id, dp_dist, dt, measured, bound, stderr, pass: measured - slack * stderr <= bound + tol }
}

fn report(
    kind: ModulusKind,
    problem: &ControlProblem,
    spec: &ModulusSpec,
    bounds: &ModulusBounds,
    c_hat: Option<f64>,
    rows: Vec<ModulusRow>,
) -> ModulusReport {
    let failures = rows.iter().filter(|r| !r.pass).count();
    let holder_exponent = if kind == ModulusKind::Time {
        holder_fit(&rows.iter().map(|r| (r.dt, r.measured)).collect::<Vec<_>>())
    } else {
        None
    };
    ModulusReport {
        kind,
        problem: problem.name.clone(),
        engine: spec.engine,
        rows,
        c_burkholder: bounds.c,
        c_tilde: bounds.c_tilde,
        c_hat,
        holder_exponent,
        failures,
        passed: failures == 0,
    }
}

/// Pair `(t, ω)`, `(t, ω′)`.
#[derive(Debug, Clone)]
pub struct SpacePair {
    pub t: f64,
    pub omega: PwPath,
    pub omega2: PwPath,
}

/// Pair `(t, ω)`, `(t′, ω)` with `t ≤ t′`.
#[derive(Debug, Clone)]
pub struct TimePair {
    pub t: f64,
    pub t2: f64,
    pub omega: PwPath,
}

/// Pair `(t, ω)`, `(t′, ω′)` with `t ≤ t′`.
#[derive(Debug, Clone)]
pub struct JointPair {
    pub t: f64,
    pub omega: PwPath,
    pub t2: f64,
    pub omega2: PwPath,
}

/// Bounds from a fresh calibration; `Ĉ` measured at `starts` when given.
pub fn bounds_for(
    problem: &ControlProblem,
    spec: &ModulusSpec,
    starts: Option<&[(f64, PwPath)]>,
) -> Result<(ModulusBounds, Option<f64>)> {
    let mut cal = spec.calibration;
    cal.p = spec.p;
    cal.horizon = problem.horizon;
    let c = calibrate_burkholder(&cal)?.c;
    let c_hat = match starts {
        Some(s) => Some(measure_c_hat(problem, s, spec.p, &spec.c_hat, spec.seed ^ 0xC0FFEE)?.c_hat),
        None => None,
    };
    Ok((ModulusBounds::new(problem, c, c_hat.unwrap_or(0.0), spec.p)?, c_hat))
}

pub fn modulus_space(problem: &ControlProblem, pairs: &[SpacePair], spec: &ModulusSpec) -> Result<ModulusReport> {
    let (bounds, _) = bounds_for(problem, spec, None)?;
    modulus_space_with(problem, pairs, spec, &bounds)
}

pub fn modulus_space_with(
    problem: &ControlProblem,
    pairs: &[SpacePair],
    spec: &ModulusSpec,
    bounds: &ModulusBounds,
) -> Result<ModulusReport> {
    let mut rows = Vec::with_capacity(pairs.len());
    for (k, pr) in pairs.iter().enumerate() {
        check_time(problem, pr.t)?;
        let seed = spec.seed.wrapping_add(k as u64);
        let a = eval(problem, pr.t, &pr.omega, spec, seed)?;
        let b = eval(problem, pr.t, &pr.omega2, spec, seed)?;
        let d = pw_distance(pr.t, &pr.omega, pr.t, &pr.omega2, spec.p, problem.horizon);
        rows.push(row(k, d, 0.0, &a, &b, bounds.space(d), spec.se_slack));
    }
    Ok(report(ModulusKind::Space, problem, spec, bounds, None, rows))
}

pub fn modulus_time(problem: &ControlProblem, pairs: &[TimePair], spec: &ModulusSpec) -> Result<ModulusReport> {
    let starts: Vec<(f64, PwPath)> = pairs.iter().map(|p| (p.t, p.omega.clone())).collect();
    let (bounds, c_hat) = bounds_for(problem, spec, Some(&starts))?;
    modulus_time_with(problem, pairs, spec, &bounds, c_hat)
}

pub fn modulus_time_with(
    problem: &ControlProblem,
    pairs: &[TimePair],
    spec: &ModulusSpec,
    bounds: &ModulusBounds,
    c_hat: Option<f64>,
) -> Result<ModulusReport> {
    let mut rows = Vec::with_capacity(pairs.len());
    for (k, pr) in pairs.iter().enumerate() {
        check_time(problem, pr.t)?;
        check_time(problem, pr.t2)?;
        if pr.t2 < pr.t {
            return domain(format!("time pair {k} has t′ = {} before t = {}", pr.t2, pr.t));
        }
        let seed = spec.seed.wrapping_add(k as u64);
        let a = eval(problem, pr.t, &pr.omega, spec, seed)?;
        let b = eval(problem, pr.t2, &pr.omega, spec, seed)?;
        let d = pw_distance(pr.t, &pr.omega, pr.t2, &pr.omega, spec.p, problem.horizon);
        let dt = pr.t2 - pr.t;
        rows.push(row(k, d, dt, &a, &b, bounds.time(dt), spec.se_slack));
    }
    Ok(report(ModulusKind::Time, problem, spec, bounds, c_hat, rows))
}

/// Mixed pairs against the sum of the space bound at `t′` and the time bound.
pub fn modulus_joint_with(
    problem: &ControlProblem,
    pairs: &[JointPair],
    spec: &ModulusSpec,
    bounds: &ModulusBounds,
    c_hat: Option<f64>,
) -> Result<ModulusReport> {
    let mut rows = Vec::with_capacity(pairs.len());
    for (k, pr) in pairs.iter().enumerate() {
        check_time(problem, pr.t)?;
        check_time(problem, pr.t2)?;
        if pr.t2 < pr.t {
            return domain(format!("joint pair {k} has t′ = {} before t = {}", pr.t2, pr.t));
        }
        let seed = spec.seed.wrapping_add(k as u64);
        let a = eval(problem, pr.t, &pr.omega, spec, seed)?;
        let b = eval(problem, pr.t2, &pr.omega2, spec, seed)?;
        let d = pw_distance(pr.t, &pr.omega, pr.t2, &pr.omega2, spec.p, problem.horizon);
        let ds = pw_distance(pr.t2, &pr.omega, pr.t2, &pr.omega2, spec.p, problem.horizon);
        let dt = pr.t2 - pr.t;
        rows.push(row(k, d, dt, &a, &b, bounds.space(ds) + bounds.time(dt), spec.se_slack));
    }
    Ok(report(ModulusKind::Joint, problem, spec, bounds, c_hat, rows))
}

fn check_time(problem: &ControlProblem, t: f64) -> Result<()> {
    if !(0.0..=problem.horizon).contains(&t) {
        return domain(format!("time {t} outside [0, {}]", problem.horizon));
    }
    Ok(())
}

/// Least-squares slope of `ln |Δu|` against `ln Δt` over rows with both positive.
pub fn holder_fit(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|(dt, du)| *dt > 0.0 && *du > 0.0).map(|(dt, du)| (dt.ln(), du.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

/// Pairs `(T − 2^{-k}, ω)`, `(T, ω)` with `ω = 0`.
pub fn holder_pairs(horizon: f64, ks: std::ops::RangeInclusive<i32>) -> Vec<TimePair> {
    ks.map(|k| TimePair { t: horizon - 2f64.powi(-k), t2: horizon, omega: PwPath::zero(1) }).collect()
}

/// Random pairs; time in `[0, 0.9T]`, second path a perturbation of
/// log-uniform size in `[1e-3, 1]`.
pub fn random_space_pairs(horizon: f64, count: usize, seed: u64) -> Result<Vec<SpacePair>> {
    let grid = Grid::new(horizon, 64)?;
    let mut rng = split_rng(seed, 20, 0);
    (0..count)
        .map(|_| {
            let t = rng.random_range(0.0..0.9 * horizon);
            let omega = random_walk_path(grid, 1, 1.0, &mut rng)?.to_pw();
            let bump = random_walk_path(grid, 1, 1.0, &mut rng)?.to_pw();
            let eps = 10f64.powf(rng.random_range(-3.0..0.0));
            let omega2 = omega.combine(1.0, &bump, eps);
            Ok(SpacePair { t, omega, omega2 })
        })
        .collect()
}

/// Random pairs with `t′ − t` log-uniform in `[2^{-8}, T/2]`.
pub fn random_time_pairs(horizon: f64, count: usize, seed: u64) -> Result<Vec<TimePair>> {
    let grid = Grid::new(horizon, 64)?;
    let mut rng = split_rng(seed, 21, 0);
    (0..count)
        .map(|_| {
            let dt = 2f64.powf(rng.random_range(-8.0..-1.0)) * horizon;
            let t = rng.random_range(0.0..horizon - dt);
            let omega = random_walk_path(grid, 1, 1.0, &mut rng)?.to_pw();
            Ok(TimePair { t, t2: t + dt, omega })
        })
        .collect()
}

pub fn random_joint_pairs(horizon: f64, count: usize, seed: u64) -> Result<Vec<JointPair>> {
    let space = random_space_pairs(horizon, count, seed ^ 1)?;
    let time = random_time_pairs(horizon, count, seed ^ 2)?;
    Ok(space
        .into_iter()
        .zip(time)
        .map(|(s, t)| JointPair { t: t.t, omega: s.omega, t2: t.t2, omega2: s.omega2 })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control_bench::problem::problem;

    fn quick() -> ModulusSpec {
        ModulusSpec {
            resolution: Resolution { steps: 64, ..Default::default() },
            calibration: BurkholderSpec { variates: 8, paths: 500, steps: 32, ..Default::default() },
            c_hat: CHatSpec { paths: 4000, max_starts: 2, ..Default::default() },
            ..Default::default()
        }
    }

    #[test]
    fn calibration_is_deterministic_and_brownian_ratio_is_sane() {
        let s = BurkholderSpec { variates: 4, paths: 2000, ..Default::default() };
        let a = calibrate_burkholder(&s).unwrap();
        assert_eq!(a, calibrate_burkholder(&s).unwrap());
        // φ ≡ 1: E(|W_1|³ + ∫|W|³)² is of order 20
        assert!(a.ratios[0] > 5.0 && a.ratios[0] < 60.0, "{}", a.ratios[0]);
        assert!(a.c >= a.ratios.iter().cloned().fold(0.0, f64::min));
    }

    #[test]
    fn c_tilde_degenerates_without_lipschitz_dependence() {
        assert_eq!(c_tilde(0.0, 30.0, 3.0, 1.0), 0.0);
        let k: f64 = 30.0 * 2.0;
        assert!((c_tilde(0.5, 30.0, 3.0, 1.0) - k * k.exp()).abs() < 1e-9 * k * k.exp());
    }

    #[test]
    fn endpoint_problem_space_modulus_is_exact() {
        let p = problem("bm-linear", 1.0).unwrap();
        let mut pairs = random_space_pairs(1.0, 10, 3).unwrap();
        pairs.push(SpacePair { t: 0.4, omega: pairs[0].omega.clone(), omega2: pairs[0].omega.clone() });
        let r = modulus_space(&p, &pairs, &quick()).unwrap();
        assert!(r.passed);
        for (row, pr) in r.rows.iter().zip(&pairs) {
            let exact = (pr.omega.eval(pr.t)[0] - pr.omega2.eval(pr.t)[0]).abs();
            assert!((row.measured - exact).abs() < 1e-9);
            assert!(row.measured <= row.dp_dist + 1e-12);
        }
        let last = r.rows.last().unwrap();
        assert_eq!((last.measured, last.bound), (0.0, 0.0));
        assert!(r.to_csv().starts_with("pair_id,dp_dist,dt,measured,bound,stderr,pass\n"));
    }

    #[test]
    fn stopped_path_time_pairs_are_flat() {
        let p = problem("bm-linear", 1.0).unwrap();
        let om = PwPath::linear(1, vec![0.0, 0.3], vec![0.0, 0.6]).stopped(0.3);
        let pairs = vec![
            TimePair { t: 0.3, t2: 0.3, omega: om.clone() },
            TimePair { t: 0.3, t2: 0.7, omega: om },
        ];
        let r = modulus_time(&p, &pairs, &quick()).unwrap();
        assert!(r.rows.iter().all(|x| x.measured < 1e-9 && x.pass));
        assert_eq!(r.rows[0].bound, 0.0);
    }

    #[test]
    fn holder_exponent_of_abs_endpoint() {
        let p = problem("bm-abs", 1.0).unwrap();
        let r = modulus_time(&p, &holder_pairs(1.0, 2..=7), &quick()).unwrap();
        let e = r.holder_exponent.unwrap();
        assert!((0.4..=0.6).contains(&e), "{e}");
        assert!(r.passed);
        assert_eq!(holder_fit(&[(0.25, 0.5), (1.0, 1.0)]), Some(0.5));
        assert_eq!(holder_fit(&[(0.25, 0.0)]), None);
    }

    #[test]
    fn tanh_vol_bounds_hold() {
        let p = problem("tanh-vol", 1.0).unwrap();
        let spec = quick();
        let r = modulus_space(&p, &random_space_pairs(1.0, 5, 1).unwrap(), &spec).unwrap();
        assert!(r.passed && r.c_tilde > 0.0);
        let r = modulus_time(&p, &random_time_pairs(1.0, 5, 1).unwrap(), &spec).unwrap();
        assert!(r.passed && r.c_hat.unwrap() > 0.0);
    }

    #[test]
    fn missing_modulus_is_a_configuration_error() {
        let p = problem("vol-control", 1.0).unwrap();
        assert!(modulus_space(&p, &random_space_pairs(1.0, 1, 1).unwrap(), &quick()).is_err());
    }
}

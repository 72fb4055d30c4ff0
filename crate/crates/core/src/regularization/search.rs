use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::penalty::{prune_bounds, PruneBox};
use crate::error::{domain, Result};
use crate::functional::Functional;
use crate::path_space::io::{pw_to_csv, time_change_to_csv};
use crate::path_space::{PwPath, TimeChange};

/// Smallest optimizer time tried when the target time is 0.
const MIN_LOG_TIME: f64 = -165.0; // ln(1e-72)

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `sup {u - nΦ}`
    Sub,
    /// `inf {v + nΦ}`
    Super,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Sub => 1.0,
            Direction::Super => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// total objective evaluations over all restarts
    pub budget: usize,
    pub restarts: usize,
    /// segments of the piecewise-linear correction
    pub segments: usize,
    /// interior knots of the time-change
    pub knots: usize,
    pub seed: u64,
    /// gap under which a result counts as certified
    pub target_gap: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { budget: 40_000, restarts: 5, segments: 8, knots: 3, seed: 7, target_gap: 1e-3 }
    }
}

/// Problem data shared by all evaluations.
#[derive(Debug, Clone, Copy)]
pub struct RegParams {
    pub p: f64,
    pub horizon: f64,
    /// overrides the functional's declared bound
    pub bound: Option<f64>,
}

impl RegParams {
    pub fn new(p: f64, horizon: f64) -> Self {
        Self { p, horizon, bound: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularizationResult {
    pub value: f64,
    pub direction: Direction,
    pub n: f64,
    pub s: f64,
    pub t_hat: f64,
    #[serde(skip)]
    pub omega_hat: PwPath,
    #[serde(skip)]
    pub ell_hat: TimeChange,
    /// `u(θ̂)`
    pub functional_value: f64,
    /// `Φ` at the optimizer
    pub penalty: f64,
    pub gap: f64,
    pub certified: bool,
    pub evaluations: usize,
    pub restarts: usize,
    pub restart_values: Vec<f64>,
    /// bound used for the search box and whether it was estimated
    pub bound: f64,
    pub bound_estimated: bool,
    pub prune: PruneBox,
}

impl RegularizationResult {
    /// JSON with the optimizer path and time-change inlined as CSV text.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("result serializes");
        v["omega_hat_csv"] = serde_json::Value::String(pw_to_csv(&self.omega_hat, self.horizon_hint()));
        v["ell_hat_csv"] = serde_json::Value::String(time_change_to_csv(&self.ell_hat));
        v
    }

    fn horizon_hint(&self) -> f64 {
        self.omega_hat.end().max(self.t_hat)
    }
}

struct Problem<'a> {
    u: &'a dyn Functional,
    n: f64,
    s: f64,
    eta: &'a PwPath,
    params: RegParams,
    sign: f64,
    prune: PruneBox,
    knots: usize,
    /// correction nodes as fractions of `t̂`
    fractions: Vec<f64>,
    dim: usize,
    t_lo: f64,
    t_hi: f64,
}

struct Candidate {
    t: f64,
    ell: TimeChange,
    correction: PwPath,
    corr_end: Vec<f64>,
}

impl<'a> Problem<'a> {
    fn n_params(&self) -> usize {
        1 + self.n_knot_params() + self.fractions.len() * self.dim
    }

    fn n_knot_params(&self) -> usize {
        if self.s > 0.0 {
            self.knots
        } else {
            0
        }
    }

    fn time_of(&self, x0: f64) -> f64 {
        if self.s > 0.0 {
            x0
        } else {
            x0.exp()
        }
    }

    fn decode(&self, x: &[f64]) -> Option<Candidate> {
        let t = self.time_of(x[0]);
        if !(t >= self.t_lo * (1.0 - 1e-12) && t <= self.t_hi) || t <= 0.0 {
            return None;
        }
        let ell = if self.s > 0.0 {
            let k = self.knots;
            let mut inner = Vec::with_capacity(k);
            for j in 0..k {
                let frac = (j + 1) as f64 / (k + 1) as f64;
                inner.push((t * frac, self.s * frac + x[1 + j]));
            }
            TimeChange::new(t, self.s, &inner).ok()?
        } else {
            TimeChange::collapse(t)
        };
        if ell.sup_deviation() > self.prune.ell {
            return None;
        }
        let off = 1 + self.n_knot_params();
        let knots: Vec<f64> = self.fractions.iter().map(|f| f * t).collect();
        let values = x[off..].to_vec();
        let corr_end = values[values.len() - self.dim..].to_vec();
        let correction = PwPath::linear(self.dim, knots, values);
        Some(Candidate { t, ell, correction, corr_end })
    }

    /// `(objective, u(θ), Φ)`; `None` outside the search box.
    fn evaluate(&self, x: &[f64]) -> Option<(f64, f64, f64)> {
        let c = self.decode(x)?;
        let q = self.params.p + 1.0;
        let end = c.corr_end.iter().map(|v| v * v).sum::<f64>().sqrt();
        if end > self.prune.terminal {
            return None;
        }
        let integral = c.correction.integral_pow(q, c.t);
        if integral > self.prune.integral {
            return None;
        }
        let phi = c.ell.sup_deviation().powf(2.0 / (3.0 * self.params.p + 3.0))
            + (self.params.horizon + 1.0 - c.t) * end.powf(q)
            + integral;
        let omega = self.omega_of(&c);
        let uv = self.u.eval(c.t, &omega);
        if !uv.is_finite() {
            return None;
        }
        Some((self.sign * uv - self.n * phi, uv, phi))
    }

    fn omega_of(&self, c: &Candidate) -> PwPath {
        self.eta.compose(&c.ell.stopped_map()).add(&c.correction).stopped(c.t)
    }

    fn initial_steps(&self) -> (Vec<f64>, Vec<f64>) {
        let np = self.n_params();
        let mut step = vec![0.0; np];
        let mut min_step = vec![0.0; np];
        if self.s > 0.0 {
            let w = (self.t_hi - self.t_lo).max(0.0);
            step[0] = 0.25 * w;
            min_step[0] = 1e-7 * w.max(1e-300);
        } else {
            step[0] = 8.0;
            min_step[0] = 1e-4;
        }
        for j in 0..self.n_knot_params() {
            step[1 + j] = 0.25 * self.prune.ell;
            min_step[1 + j] = 1e-7 * self.prune.ell;
        }
        let r = self.prune.terminal;
        for j in 1 + self.n_knot_params()..np {
            step[j] = 0.5 * r;
            min_step[j] = 1e-8 * r;
        }
        (step, min_step)
    }

    fn base_point(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n_params()];
        x[0] = if self.s > 0.0 { self.s.clamp(self.t_lo, self.t_hi) } else { self.best_ladder_start() };
        x
    }

    fn best_ladder_start(&self) -> f64 {
        let hi = self.t_hi.ln();
        let mut best = (f64::NEG_INFINITY, hi);
        let mut z = hi;
        let mut probe = vec![0.0; self.n_params()];
        while z >= MIN_LOG_TIME {
            probe[0] = z;
            if let Some((obj, _, _)) = self.evaluate(&probe) {
                if obj > best.0 {
                    best = (obj, z);
                }
            }
            z -= 6.0;
        }
        best.1
    }

    fn random_point(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut x = self.base_point();
        if self.s > 0.0 {
            x[0] = rng.random_range(self.t_lo..=self.t_hi);
        } else {
            x[0] = rng.random_range(MIN_LOG_TIME.max(self.t_hi.ln() - 60.0)..=self.t_hi.ln());
        }
        for j in 0..self.n_knot_params() {
            x[1 + j] = rng.random_range(-0.5..=0.5) * self.prune.ell;
        }
        let r = 0.5 * self.prune.terminal;
        for v in x.iter_mut().skip(1 + self.n_knot_params()) {
            *v = rng.random_range(-r..=r);
        }
        x
    }

    /// Compass search with step halving from `x`.
    fn climb(&self, mut x: Vec<f64>, budget: usize) -> (f64, Vec<f64>, usize) {
        let (mut step, min_step) = self.initial_steps();
        let mut evals = 1;
        let mut best = match self.evaluate(&x) {
            Some((o, _, _)) => o,
            None => {
                // infeasible random start: fall back to the base point
                x = self.base_point();
                self.evaluate(&x).map(|e| e.0).unwrap_or(f64::NEG_INFINITY)
            }
        };
        while evals < budget {
            let mut improved = false;
            for j in 0..x.len() {
                if step[j] <= min_step[j] {
                    continue;
                }
                for dir in [1.0, -1.0] {
                    let mut y = x.clone();
                    y[j] += dir * step[j];
                    evals += 1;
                    if let Some((o, _, _)) = self.evaluate(&y) {
                        if o > best {
                            best = o;
                            x = y;
                            improved = true;
                            // keep moving while it pays
                            loop {
                                let mut z = x.clone();
                                z[j] += dir * step[j];
                                evals += 1;
                                match self.evaluate(&z) {
                                    Some((o2, _, _)) if o2 > best => {
                                        best = o2;
                                        x = z;
                                    }
                                    _ => break,
                                }
                                if evals >= budget {
                                    break;
                                }
                            }
                            break;
                        }
                    }
                }
                if evals >= budget {
                    break;
                }
            }
            if !improved {
                let mut active = false;
                for (s, m) in step.iter_mut().zip(&min_step) {
                    if *s > *m {
                        *s *= 0.5;
                        active = true;
                    }
                }
                if !active {
                    break;
                }
            }
        }
        (best, x, evals)
    }
}

fn correction_fractions(segments: usize) -> Vec<f64> {
    let segments = segments.max(2);
    let uniform = segments / 2;
    let mut f: Vec<f64> = (0..=uniform).map(|j| j as f64 / uniform as f64).collect();
    for j in 1..=(segments - uniform) {
        f.push(1.0 - 0.25f64.powi(j as i32) / uniform as f64);
    }
    f.sort_by(|a, b| a.partial_cmp(b).unwrap());
    f
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).unwrap_or(Ordering::Equal) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Approximates `sup_{θ,ℓ} {u(θ) - nΦ(s, η, θ, ℓ)}` (sub) or
/// `inf_{θ,ℓ} {u(θ) + nΦ}` (super) by multi-start compass search inside the
/// box returned by [`prune_bounds`].
///
/// The optimizer path is parametrised as `η∘ℓ` plus a piecewise-linear
/// correction, so the path term of `Φ` is the norm of the correction alone.
pub fn regularize(
    u: &dyn Functional,
    n: f64,
    s: f64,
    eta: &PwPath,
    direction: Direction,
    cfg: &SearchConfig,
    params: RegParams,
) -> Result<RegularizationResult> {
    if !(n >= 1.0) {
        return domain(format!("penalty weight n = {n} must be at least 1"));
    }
    if !(0.0..=params.horizon).contains(&s) {
        return domain(format!("time {s} outside [0, {}]", params.horizon));
    }
    let (bound, bound_estimated) = match params.bound.or_else(|| u.bound()) {
        Some(b) => (b, false),
        None => (u.eval(s, &eta.stopped(s)).abs() + 1.0, true),
    };
    let prune = prune_bounds(n, bound, params.p);
    let (t_lo, t_hi) = if s > 0.0 {
        ((s - prune.ell).max(s * 1e-3), (s + prune.ell).min(params.horizon))
    } else {
        ((MIN_LOG_TIME).exp(), prune.ell.min(params.horizon))
    };
    let prob = Problem {
        u,
        n,
        s,
        eta,
        params,
        sign: direction.sign(),
        prune,
        knots: cfg.knots,
        fractions: correction_fractions(cfg.segments),
        dim: eta.dim(),
        t_lo,
        t_hi,
    };
    let restarts = cfg.restarts.max(1);
    let per = (cfg.budget / restarts).max(50);
    let runs: Vec<(f64, Vec<f64>, usize)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                prob.base_point()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                prob.random_point(&mut rng)
            };
            prob.climb(start, per)
        })
        .collect();
    let evaluations: usize = runs.iter().map(|r| r.2).sum();
    let mut order: Vec<usize> = (0..runs.len()).filter(|&i| runs[i].0.is_finite()).collect();
    if order.is_empty() {
        return domain("no feasible point found in the search box");
    }
    order.sort_by(|&i, &j| runs[j].0.partial_cmp(&runs[i].0).unwrap().then_with(|| lex_cmp(&runs[i].1, &runs[j].1)));
    let best = order[0];
    let (obj, x, _) = &runs[best];
    let finals: Vec<f64> = runs.iter().map(|r| direction.sign() * r.0).collect();
    let worst = order.iter().map(|&i| runs[i].0).fold(f64::INFINITY, f64::min);
    let gap = (obj - worst) + 1e-9 * (1.0 + obj.abs());
    let cand = prob.decode(x).expect("best point is feasible");
    let (_, uv, phi) = prob.evaluate(x).expect("best point is feasible");
    let omega_hat = prob.omega_of(&cand);
    Ok(RegularizationResult {
        value: direction.sign() * obj,
        direction,
        n,
        s,
        t_hat: cand.t,
        omega_hat,
        ell_hat: cand.ell,
        functional_value: uv,
        penalty: phi,
        gap,
        certified: gap <= cfg.target_gap,
        evaluations,
        restarts,
        restart_values: finals,
        bound,
        bound_estimated,
        prune,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::catalog;
    use crate::regularization::penalty::penalty;

    fn params() -> RegParams {
        RegParams::new(3.0, 1.0)
    }

    #[test]
    fn constant_is_fixed() {
        let u = catalog("constant", 1.0, 1).unwrap();
        let eta = PwPath::linear(1, vec![0.0, 1.0], vec![0.0, 0.7]);
        for dir in [Direction::Sub, Direction::Super] {
            let r = regularize(u.as_ref(), 10.0, 0.5, &eta, dir, &SearchConfig::default(), params()).unwrap();
            assert!((r.value - 0.3).abs() < 1e-12, "{dir:?} {}", r.value);
        }
    }

    #[test]
    fn time_functional_analytic() {
        let u = catalog("time", 1.0, 1).unwrap();
        let r = regularize(u.as_ref(), 10.0, 0.5, &PwPath::zero(1), Direction::Sub, &SearchConfig::default(), params())
            .unwrap();
        // oracle: exhaustive scan of t - 10|t - 0.5|^{1/6} over the feasible window
        let box_ = prune_bounds(10.0, 1.0, 3.0);
        let mut scan = f64::NEG_INFINITY;
        for j in 0..=200_000 {
            let t = 0.5 - box_.ell + 2.0 * box_.ell * j as f64 / 200_000.0;
            scan = scan.max(t - 10.0 * (t - 0.5).abs().powf(1.0 / 6.0));
        }
        assert!((scan - 0.5).abs() < 1e-12);
        assert!((r.value - 0.5).abs() < 1e-12);
        assert!((r.t_hat - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reported_penalty_matches_direct_formula() {
        let u = catalog("soft-endpoint", 1.0, 1).unwrap();
        let eta = PwPath::step(1, vec![0.0, 0.25, 0.5], vec![0.2, -0.4, 0.3]);
        let r = regularize(u.as_ref(), 8.0, 0.6, &eta, Direction::Sub, &SearchConfig::default(), params()).unwrap();
        let direct = penalty(0.6, &eta, r.t_hat, &r.omega_hat, &r.ell_hat, 3.0, 1.0).unwrap();
        assert!((direct - r.penalty).abs() < 1e-10, "{direct} vs {}", r.penalty);
        assert!(r.value >= r.functional_value - 8.0 * direct - 1e-10);
        assert!(r.prune.contains(0.6, &eta, r.t_hat, &r.omega_hat, &r.ell_hat, 3.0, 1e-9));
    }

    #[test]
    fn endpoint_deviation_matches_one_dimensional_oracle() {
        // sup_c 0.5 tanh(c) - n (T + 1) c^4 at the origin (t̂ → 0)
        let u = catalog("soft-endpoint", 1.0, 1).unwrap();
        let n = 16.0;
        let r = regularize(u.as_ref(), n, 0.0, &PwPath::zero(1), Direction::Sub, &SearchConfig::default(), params())
            .unwrap();
        let mut oracle = f64::NEG_INFINITY;
        for j in 0..=400_000 {
            let c = j as f64 / 400_000.0;
            oracle = oracle.max(0.5 * c.tanh() - n * 2.0 * c.powi(4));
        }
        assert!(r.value <= oracle + 1e-9);
        assert!(oracle - r.value < 1e-4, "{} vs {oracle}", r.value);
    }

    #[test]
    fn super_direction_mirrors_sub() {
        let u = catalog("soft-endpoint", 1.0, 1).unwrap();
        let neg = crate::functional::FnFunctional::new("neg", |t, p: &PwPath| -0.5 * p.eval(t)[0].tanh()).with_bound(0.5);
        let eta = PwPath::linear(1, vec![0.0, 1.0], vec![0.0, 0.4]);
        let cfg = SearchConfig::default();
        let a = regularize(u.as_ref(), 8.0, 0.5, &eta, Direction::Sub, &cfg, params()).unwrap();
        let b = regularize(&neg, 8.0, 0.5, &eta, Direction::Super, &cfg, params()).unwrap();
        assert!((a.value + b.value).abs() < 1e-12);
    }

    #[test]
    fn deterministic_given_seed() {
        let u = catalog("soft-integral", 1.0, 1).unwrap();
        let eta = PwPath::linear(1, vec![0.0, 1.0], vec![0.0, 0.4]);
        let cfg = SearchConfig::default();
        let a = regularize(u.as_ref(), 8.0, 0.5, &eta, Direction::Sub, &cfg, params()).unwrap();
        let b = regularize(u.as_ref(), 8.0, 0.5, &eta, Direction::Sub, &cfg, params()).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.restart_values, b.restart_values);
    }

    #[test]
    fn fractions_are_increasing() {
        let f = correction_fractions(8);
        assert_eq!(f.len(), 9);
        assert!(f.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(f[0], 0.0);
        assert_eq!(*f.last().unwrap(), 1.0);
    }
}

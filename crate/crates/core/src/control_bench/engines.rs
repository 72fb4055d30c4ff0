//! Euler simulation, the Gauss–Hermite lattice engine and the Monte Carlo
//! open-loop engine.

use std::num::NonZeroUsize;
use std::sync::Arc;

use gauss_quad::GaussHermite;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::problem::{ControlProblem, Engine};
use crate::error::{config, domain, Result};
use crate::path_space::{concat_pw, DiscretePath, Grid, PwPath};

/// Control rule.
#[derive(Clone)]
pub enum Policy {
    Constant(f64),
    /// piecewise constant over equal segments of the remaining horizon
    OpenLoop(Vec<f64>),
    /// `a = f(t, X_t)` with `t` the absolute time
    Feedback(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl Policy {
    fn at(&self, k: usize, steps: usize, t: f64, x: f64) -> f64 {
        match self {
            Policy::Constant(a) => *a,
            Policy::OpenLoop(plan) => plan[(k * plan.len() / steps).min(plan.len() - 1)],
            Policy::Feedback(f) => f(t, x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Resolution {
    /// time steps over the remaining horizon
    pub steps: usize,
    /// lattice spacing as a fraction of `‖σ‖_∞ √h`
    pub space_ratio: f64,
    /// lattice half-width in units of `‖σ‖_∞ √(T − t)`
    pub width: f64,
    pub quadrature_nodes: usize,
    /// Monte Carlo paths for the final estimate
    pub paths: usize,
    /// common paths used to rank open-loop plans
    pub selection_paths: usize,
    pub plan_segments: usize,
    pub max_plans: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Self {
            steps: 128,
            space_ratio: 0.25,
            width: 6.0,
            quadrature_nodes: 16,
            paths: 100_000,
            selection_paths: 4000,
            plan_segments: 4,
            max_plans: 1024,
        }
    }
}

const BATCH: usize = 4096;
const MAX_LATTICE_NODES: usize = 200_001;

/// Generator for batch `batch` of stage `stage`: the root seed mixed with the
/// stage, and the batch as the ChaCha stream id. Identical for any scheduling.
pub fn split_rng(root: u64, stage: u64, batch: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(root ^ stage.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    r.set_stream(batch);
    r
}

struct Sim<'a> {
    problem: &'a ControlProblem,
    t: f64,
    omega: &'a PwPath,
    x0: f64,
    steps: usize,
    h: f64,
}

impl<'a> Sim<'a> {
    fn new(problem: &'a ControlProblem, t: f64, omega: &'a PwPath, steps: usize) -> Result<Self> {
        let rem = problem.horizon - t;
        if !(rem > 0.0) || t < 0.0 {
            return domain(format!("time {t} leaves no horizon in [0, {}]", problem.horizon));
        }
        if steps == 0 {
            return config("need at least one time step");
        }
        if omega.dim() != 1 {
            return domain("control problems are one-dimensional");
        }
        Ok(Self { problem, t, omega, x0: omega.eval(t)[0], steps, h: rem / steps as f64 })
    }

    /// Concatenated history `ω ⊗_t X` for the increments so far.
    fn history(&self, xs: &[f64]) -> PwPath {
        let times: Vec<f64> = (0..xs.len()).map(|k| k as f64 * self.h).collect();
        let inc: Vec<f64> = xs.iter().map(|x| x - self.x0).collect();
        concat_pw(self.omega, self.t, &PwPath::linear(1, times, inc))
    }

    fn run(&self, policy: &Policy, rng: &mut ChaCha8Rng, xs: &mut Vec<f64>) {
        xs.clear();
        xs.push(self.x0);
        let sq = self.h.sqrt();
        let markov = self.problem.sigma.is_markov();
        for k in 0..self.steps {
            let s = self.t + k as f64 * self.h;
            let x = xs[k];
            let a = policy.at(k, self.steps, s, x);
            let sig = if markov {
                self.problem.sigma_at(s, x, None, a)
            } else {
                let hist = self.history(xs);
                self.problem.sigma_at(s, x, Some(&hist), a)
            };
            let z: f64 = rng.sample(StandardNormal);
            xs.push(x + sig * sq * z);
        }
    }

    fn reward(&self, xs: &[f64]) -> f64 {
        match &self.problem.g_terminal {
            Some(g) => g(xs[xs.len() - 1]),
            None => self.problem.g.eval(self.problem.horizon, &self.history(xs)),
        }
    }

    /// Mean and standard error of the reward over `paths` paths of stage `stage`.
    fn estimate(&self, policy: &Policy, paths: usize, root: u64, stage: u64) -> (f64, f64) {
        let batches = paths.div_ceil(BATCH);
        let sums: Vec<(f64, f64, usize)> = (0..batches)
            .into_par_iter()
            .map(|b| {
                let n = BATCH.min(paths - b * BATCH);
                let mut rng = split_rng(root, stage, b as u64);
                let mut xs = Vec::with_capacity(self.steps + 1);
                let (mut s, mut s2) = (0.0, 0.0);
                for _ in 0..n {
                    self.run(policy, &mut rng, &mut xs);
                    let y = self.reward(&xs);
                    s += y;
                    s2 += y * y;
                }
                (s, s2, n)
            })
            .collect();
        let (s, s2, n) = sums.into_iter().fold((0.0, 0.0, 0usize), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
        let mean = s / n as f64;
        let var = if n > 1 { ((s2 - n as f64 * mean * mean) / (n - 1) as f64).max(0.0) } else { 0.0 };
        (mean, (var / n as f64).sqrt())
    }
}

/// Euler values of `X` on a uniform grid of `[0, T − t]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl Trajectory {
    /// Increments `X − X_0` as a path from the origin.
    pub fn increments(&self) -> Result<DiscretePath> {
        let x0 = self.values[0];
        DiscretePath::new(self.grid, 1, self.values.iter().map(|x| x - x0).collect())
    }
}

/// One Euler path of `X^{α,θ}` on `[0, T − t]`, started at `ω_t`.
pub fn simulate(
    problem: &ControlProblem,
    policy: &Policy,
    t: f64,
    omega: &PwPath,
    steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    let sim = Sim::new(problem, t, omega, steps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(steps + 1);
    sim.run(policy, &mut rng, &mut xs);
    Ok(Trajectory { grid: Grid::new(problem.horizon - t, steps)?, values: xs })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueEstimate {
    pub engine: Engine,
    pub value: f64,
    /// 0 for the lattice
    pub std_error: f64,
    /// the Monte Carlo value only bounds the supremum from below
    pub lower_bound: bool,
    pub steps: usize,
    /// lattice nodes or Monte Carlo paths
    pub size: usize,
    /// best open-loop plan (Monte Carlo)
    pub plan: Vec<f64>,
}

/// `sup_a E[g(X_T)]` by backward induction on a uniform space lattice with
/// Gauss–Hermite expectations and Catmull–Rom interpolation.
pub fn lattice_value(problem: &ControlProblem, t: f64, x0: f64, res: &Resolution) -> Result<ValueEstimate> {
    let Some(g) = problem.g_terminal.clone() else {
        return config(format!("problem `{}` has a path-dependent reward; use the monte-carlo engine", problem.name));
    };
    if !problem.sigma.is_markov() {
        return config(format!("problem `{}` has a path-dependent σ; use the monte-carlo engine", problem.name));
    }
    let rem = problem.horizon - t;
    if rem <= 0.0 {
        return Ok(ValueEstimate {
            engine: Engine::Lattice,
            value: g(x0),
            std_error: 0.0,
            lower_bound: false,
            steps: 0,
            size: 1,
            plan: Vec::new(),
        });
    }
    if res.steps == 0 || !(res.space_ratio > 0.0) || res.quadrature_nodes == 0 {
        return config("lattice resolution needs steps, spacing and quadrature nodes");
    }
    let n = res.steps;
    let h = rem / n as f64;
    let sq = h.sqrt();
    let smax = problem.sigma_bound.max(1e-12);
    let dx = smax * sq * res.space_ratio;
    let half = res.width * smax * rem.sqrt() + 8.0 * smax * sq;
    let m_half = (half / dx).ceil() as usize;
    let m = 2 * m_half + 1;
    if m > MAX_LATTICE_NODES {
        return config(format!("lattice with {m} space nodes exceeds the budget"));
    }
    let x_min = x0 - m_half as f64 * dx;
    let xs: Vec<f64> = (0..m).map(|j| x_min + j as f64 * dx).collect();
    let gh = GaussHermite::new(NonZeroUsize::new(res.quadrature_nodes).unwrap());
    let quad: Vec<(f64, f64)> = gh
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (std::f64::consts::SQRT_2 * x, w / std::f64::consts::PI.sqrt()))
        .collect();
    let mut v: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    for k in (0..n).rev() {
        let s = t + k as f64 * h;
        let prev = &v;
        v = xs
            .par_iter()
            .map(|&x| {
                let mut best = f64::NEG_INFINITY;
                for &a in &problem.controls {
                    let sig = problem.sigma_at(s, x, None, a);
                    let e: f64 = quad.iter().map(|&(z, w)| w * catmull_rom(prev, x_min, dx, x + sig * sq * z)).sum();
                    best = best.max(e);
                }
                best
            })
            .collect();
    }
    Ok(ValueEstimate {
        engine: Engine::Lattice,
        value: v[m_half],
        std_error: 0.0,
        lower_bound: false,
        steps: n,
        size: m,
        plan: Vec::new(),
    })
}

/// Catmull–Rom interpolation on a uniform grid, held constant outside.
fn catmull_rom(v: &[f64], x_min: f64, dx: f64, y: f64) -> f64 {
    let m = v.len();
    let u = ((y - x_min) / dx).clamp(0.0, (m - 1) as f64);
    let i = (u.floor() as usize).min(m - 2);
    let f = u - i as f64;
    let p0 = v[i.saturating_sub(1)];
    let p1 = v[i];
    let p2 = v[i + 1];
    let p3 = v[(i + 2).min(m - 1)];
    let f2 = f * f;
    let f3 = f2 * f;
    0.5 * (2.0 * p1 + (p2 - p0) * f + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * f2 + (3.0 * p1 - p0 - 3.0 * p2 + p3) * f3)
}

fn plans(controls: &[f64], segments: usize, max_plans: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let c = controls.len();
    let total = (c as f64).powi(segments as i32);
    if total <= max_plans as f64 {
        let mut out = Vec::with_capacity(total as usize);
        let mut digits = vec![0usize; segments];
        loop {
            out.push(digits.iter().map(|&d| controls[d]).collect());
            let mut carry = true;
            for d in digits.iter_mut() {
                *d += 1;
                if *d < c {
                    carry = false;
                    break;
                }
                *d = 0;
            }
            if carry {
                return out;
            }
        }
    }
    let mut out: Vec<Vec<f64>> = controls.iter().map(|&a| vec![a; segments]).collect();
    while out.len() < max_plans {
        out.push((0..segments).map(|_| controls[rng.random_range(0..c)]).collect());
    }
    out
}

/// Best open-loop piecewise-constant plan, ranked on common paths and then
/// re-estimated on fresh paths; a lower bound of the supremum.
pub fn monte_carlo_value(
    problem: &ControlProblem,
    t: f64,
    omega: &PwPath,
    res: &Resolution,
    seed: u64,
) -> Result<ValueEstimate> {
    if problem.horizon - t <= 0.0 {
        return Ok(ValueEstimate {
            engine: Engine::MonteCarlo,
            value: problem.g.eval(problem.horizon, &omega.stopped(t)),
            std_error: 0.0,
            lower_bound: true,
            steps: 0,
            size: 0,
            plan: Vec::new(),
        });
    }
    if res.paths < 2 || res.plan_segments == 0 {
        return config("Monte Carlo resolution needs at least two paths and one plan segment");
    }
    let sim = Sim::new(problem, t, omega, res.steps)?;
    let segments = res.plan_segments.min(res.steps);
    let mut rng = split_rng(seed, 0, 0);
    let candidates = plans(&problem.controls, segments, res.max_plans.max(problem.controls.len()), &mut rng);
    let best = if candidates.len() == 1 {
        candidates[0].clone()
    } else {
        let scores: Vec<f64> = candidates
            .par_iter()
            .map(|p| sim.estimate(&Policy::OpenLoop(p.clone()), res.selection_paths.max(2), seed, 1).0)
            .collect();
        let i = (0..scores.len()).fold(0, |b, i| if scores[i] > scores[b] { i } else { b });
        candidates[i].clone()
    };
    let (value, std_error) = sim.estimate(&Policy::OpenLoop(best.clone()), res.paths, seed, 2);
    Ok(ValueEstimate {
        engine: Engine::MonteCarlo,
        value,
        std_error,
        lower_bound: true,
        steps: res.steps,
        size: res.paths,
        plan: best,
    })
}

/// Mean and standard error of `g` under a fixed policy.
pub fn policy_value(
    problem: &ControlProblem,
    policy: &Policy,
    t: f64,
    omega: &PwPath,
    steps: usize,
    paths: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let sim = Sim::new(problem, t, omega, steps)?;
    Ok(sim.estimate(policy, paths.max(2), seed, 3))
}

/// `u(θ)` with the chosen engine.
pub fn value(
    problem: &ControlProblem,
    t: f64,
    omega: &PwPath,
    engine: Engine,
    res: &Resolution,
    seed: u64,
) -> Result<ValueEstimate> {
    match engine {
        Engine::Lattice => lattice_value(problem, t, omega.eval(t)[0], res),
        Engine::MonteCarlo => monte_carlo_value(problem, t, omega, res, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control_bench::problem::{problem, Sigma};

    fn small() -> Resolution {
        Resolution { steps: 32, paths: 20_000, selection_paths: 1000, ..Default::default() }
    }

    #[test]
    fn zero_sigma_is_constant() {
        let mut p = problem("bm-linear", 1.0).unwrap();
        p.sigma = Sigma::markov(|_, _, _| 0.0);
        let om = PwPath::linear(1, vec![0.0, 0.5], vec![0.0, 0.7]);
        let path = simulate(&p, &Policy::Constant(0.0), 0.5, &om, 8, 1).unwrap();
        assert!(path.values.iter().all(|&x| x == 0.7));
        assert!(path.increments().unwrap().values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn brownian_variance() {
        let p = problem("bm-linear", 1.0).unwrap();
        let z = PwPath::zero(1);
        let n = 100_000;
        let (mut s, mut s2, mut s4) = (0.0, 0.0, 0.0);
        for seed in 0..n {
            let x = *simulate(&p, &Policy::Constant(1.0), 0.0, &z, 4, seed).unwrap().values.last().unwrap();
            s += x;
            s2 += x * x;
            s4 += x.powi(4);
        }
        let nf = n as f64;
        let var = s2 / nf - (s / nf).powi(2);
        let se = ((s4 / nf - (s2 / nf).powi(2)) / nf).sqrt();
        assert!((var - 1.0).abs() < 3.0 * se, "{var} ± {se}");
    }

    #[test]
    fn values_of_simple_problems() {
        let z = PwPath::zero(1);
        let mc = monte_carlo_value(&problem("bm-linear", 1.0).unwrap(), 0.0, &z, &small(), 3).unwrap();
        assert!(mc.value.abs() < 3.0 * mc.std_error);
        let vc = problem("vol-control", 1.0).unwrap();
        let lat = lattice_value(&vc, 0.0, 0.0, &Resolution::default()).unwrap();
        assert!((lat.value - 2.25).abs() < 1e-6, "{}", lat.value);
        let mc = monte_carlo_value(&vc, 0.0, &z, &small(), 4).unwrap();
        assert_eq!(mc.plan, vec![1.0; 4]);
        assert!((mc.value - 2.25).abs() < 4.0 * mc.std_error + 0.02);
        let mut constant = problem("bm-linear", 1.0).unwrap();
        constant.g_terminal = Some(Arc::new(|_| 0.4));
        assert_eq!(lattice_value(&constant, 0.0, 0.0, &small()).unwrap().value, 0.4);
    }

    #[test]
    fn lattice_rejects_path_dependence() {
        let p = crate::control_bench::problem::path_problem("soft-endpoint", 1.0).unwrap();
        assert!(lattice_value(&p, 0.0, 0.0, &small()).is_err());
        let z = PwPath::zero(1);
        let r = Resolution { steps: 8, paths: 500, selection_paths: 100, plan_segments: 2, ..Default::default() };
        assert!(monte_carlo_value(&p, 0.0, &z, &r, 1).unwrap().lower_bound);
    }

    #[test]
    fn nested_grids_are_monotone_and_mc_is_below() {
        let res = Resolution { steps: 64, ..Default::default() };
        let mut last = f64::NEG_INFINITY;
        for n in [5, 9, 17] {
            let p = problem("tanh-vol", 1.0).unwrap().with_controls(n).unwrap();
            let v = lattice_value(&p, 0.0, 0.3, &res).unwrap().value;
            assert!(v >= last - 1e-12);
            last = v;
        }
        let p = problem("tanh-vol", 1.0).unwrap();
        let lat = lattice_value(&p, 0.0, 0.3, &res).unwrap().value;
        let om = PwPath::linear(1, vec![0.0, 1e-9], vec![0.3, 0.3]);
        let om = PwPath::constant(&[0.3]).combine(1.0, &om, 0.0);
        let mc = monte_carlo_value(&p, 0.0, &om, &small(), 9).unwrap();
        assert!(mc.value <= lat + 3.0 * mc.std_error + 0.01, "{} vs {lat}", mc.value);
    }

    #[test]
    fn seeds_split_deterministically() {
        let p = problem("bm-abs", 1.0).unwrap();
        let z = PwPath::zero(1);
        let a = policy_value(&p, &Policy::Constant(0.0), 0.0, &z, 8, 10_000, 5).unwrap();
        let b = policy_value(&p, &Policy::Constant(0.0), 0.0, &z, 8, 10_000, 5).unwrap();
        assert_eq!(a, b);
    }
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::envelope::JetOracle;
use super::nonlinearity::Nonlinearity;
use super::paraboloid::Paraboloid;
use crate::error::{config, domain, Result};
use crate::functional::SharedFunctional;
use crate::nonlinear_expectation::{build_lattice, ControlGrids};
use crate::path_space::{random_point, Grid, PwPath};
use crate::regularization::Direction;

/// Offsets added to the finite-difference jet estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JetGrid {
    pub alpha: Vec<f64>,
    /// added to every component of `β`
    pub beta: Vec<f64>,
    /// multiples of the identity added to `γ`
    pub gamma: Vec<f64>,
}

impl Default for JetGrid {
    fn default() -> Self {
        Self {
            alpha: vec![0.0, -0.25, 0.25, -0.5, 0.5, -1.0, 1.0],
            beta: vec![0.0, -0.25, 0.25],
            gamma: vec![0.0, -0.5, 0.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ViscConfig {
    /// `L` of the lattice
    pub bound: f64,
    pub steps: usize,
    pub grids: ControlGrids,
    pub deltas: Vec<f64>,
    /// vertical bump for the space derivatives
    pub space_step: f64,
    pub time_step: f64,
    pub jets: JetGrid,
}

impl Default for ViscConfig {
    fn default() -> Self {
        Self {
            bound: 1.5,
            steps: 4,
            grids: ControlGrids::default(),
            deltas: vec![0.5, 0.25, 0.125],
            space_step: 0.05,
            time_step: 0.05,
            jets: JetGrid::default(),
        }
    }
}

/// Where to sample `θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSpec {
    pub points: usize,
    pub seed: u64,
    pub horizon: f64,
    pub grid_steps: usize,
    /// latest sampled time
    pub t_max: f64,
    /// random-walk volatility of the sampled paths
    pub scale: f64,
    pub include_origin: bool,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self { points: 6, seed: 11, horizon: 1.0, grid_steps: 16, t_max: 0.5, scale: 1.0, include_origin: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePoint {
    pub t: f64,
    pub path: PwPath,
}

pub fn sample_points(spec: &SampleSpec, dim: usize) -> Result<Vec<SamplePoint>> {
    let grid = Grid::new(spec.horizon, spec.grid_steps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.points);
    if spec.include_origin && spec.points > 0 {
        out.push(SamplePoint { t: 0.0, path: PwPath::zero(dim) });
    }
    while out.len() < spec.points {
        let th = random_point(grid, dim, spec.scale, spec.t_max, &mut rng)?;
        out.push(SamplePoint { t: th.t(), path: th.stopped_pw() });
    }
    Ok(out)
}

fn bumped(path: &PwPath, t: f64, v: &[f64]) -> PwPath {
    let d = v.len();
    let jump = if t > 0.0 {
        let mut vals = vec![0.0; d];
        vals.extend_from_slice(v);
        PwPath::step(d, vec![0.0, t], vals)
    } else {
        PwPath::constant(v)
    };
    path.stopped(t).add(&jump)
}

/// Central finite differences for `(∂_t u, ∂_ω u, ∂²_ωω u)` with a forward
/// time difference on the frozen path.
pub fn fd_jet(u: &SharedFunctional, t: f64, path: &PwPath, e: f64, tau: f64) -> Paraboloid {
    let d = path.dim();
    let base = path.stopped(t);
    let u0 = u.eval(t, &base);
    let at = |v: &[f64]| u.eval(t, &bumped(path, t, v));
    let unit = |i: usize, c: f64| {
        let mut v = vec![0.0; d];
        v[i] = c;
        v
    };
    let alpha = (u.eval(t + tau, &base) - u0) / tau;
    let mut beta = vec![0.0; d];
    let mut gamma = vec![0.0; d * d];
    for i in 0..d {
        let up = at(&unit(i, e));
        let dn = at(&unit(i, -e));
        beta[i] = (up - dn) / (2.0 * e);
        gamma[i * d + i] = (up - 2.0 * u0 + dn) / (e * e);
        for j in 0..i {
            let mut v = vec![0.0; d];
            let mut c = 0.0;
            for (si, sj, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                v.iter_mut().for_each(|x| *x = 0.0);
                v[i] = si * e;
                v[j] = sj * e;
                c += w * at(&v);
            }
            gamma[i * d + j] = c / (4.0 * e * e);
            gamma[j * d + i] = gamma[i * d + j];
        }
    }
    Paraboloid { alpha, beta, gamma }
}

/// Candidates on the offset grid around `centre`, the centre first and then
/// by increasing total offset.
pub fn candidates(centre: &Paraboloid, grid: &JetGrid) -> Vec<Paraboloid> {
    let d = centre.dim();
    let mut out: Vec<(f64, Paraboloid)> = Vec::new();
    for &oa in &grid.alpha {
        for &ob in &grid.beta {
            for &og in &grid.gamma {
                let mut gamma = centre.gamma.clone();
                for i in 0..d {
                    gamma[i * d + i] += og;
                }
                let p = Paraboloid {
                    alpha: centre.alpha + oa,
                    beta: centre.beta.iter().map(|b| b + ob).collect(),
                    gamma,
                };
                out.push((oa.abs() + ob.abs() + og.abs(), p));
            }
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out.into_iter().map(|(_, p)| p).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoundJet {
    pub jet: Paraboloid,
    pub delta: f64,
    /// `−α − G(θ, u(θ), β, γ)`
    pub residual: f64,
    pub margin: f64,
    /// membership tolerance `2 |V_N − V_{N/2}|` plus rounding
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointReport {
    pub index: usize,
    pub t: f64,
    pub x: Vec<f64>,
    pub u: f64,
    pub estimate: Paraboloid,
    pub candidates: usize,
    pub jets: Vec<FoundJet>,
    /// first failing jet in candidate order
    pub witness: Option<FoundJet>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViscosityReport {
    pub functional: String,
    pub nonlinearity: String,
    pub direction: Direction,
    pub points: Vec<PointReport>,
    pub candidates_tried: usize,
    pub jets_found: usize,
    pub witness: Option<FoundJet>,
    pub passed: bool,
    pub verdict: String,
}

fn check_point(
    u: &SharedFunctional,
    g: &Nonlinearity,
    direction: Direction,
    cfg: &ViscConfig,
    index: usize,
    pt: &SamplePoint,
) -> Result<PointReport> {
    let d = pt.path.dim();
    let estimate = fd_jet(u, pt.t, &pt.path, cfg.space_step, cfg.time_step);
    let cands = candidates(&estimate, &cfg.jets);
    let coarse_steps = (cfg.steps / 2).max(1);
    let mut oracles = Vec::with_capacity(cfg.deltas.len());
    for &delta in &cfg.deltas {
        let fine = build_lattice(cfg.bound, delta, cfg.steps, d, cfg.grids)?;
        let coarse = build_lattice(cfg.bound, delta, coarse_steps, d, cfg.grids)?;
        oracles.push((
            delta,
            JetOracle::new(&fine, u, pt.t, &pt.path, delta)?,
            JetOracle::new(&coarse, u, pt.t, &pt.path, delta)?,
        ));
    }
    let u0 = oracles.first().map(|o| o.1.u0).unwrap_or_else(|| u.eval(pt.t, &pt.path.stopped(pt.t)));
    let x = pt.path.eval(pt.t);
    let mut jets = Vec::new();
    let mut witness = None;
    for c in &cands {
        for (delta, fine, coarse) in &oracles {
            let vf = fine.envelope(c, direction);
            let vc = coarse.envelope(c, direction);
            let tol = 2.0 * (vf - vc).abs() + 1e-12 * (1.0 + u0.abs());
            if !fine.test(c, direction, tol).member {
                continue;
            }
            let residual = -c.alpha - g.eval(pt.t, &pt.path, u0, &c.beta, &c.gamma);
            let margin = tol / delta * (1.0 + g.l0);
            let passed = match direction {
                Direction::Sub => residual <= margin,
                Direction::Super => residual >= -margin,
            };
            let found = FoundJet { jet: c.clone(), delta: *delta, residual, margin, tolerance: tol, passed };
            if !passed && witness.is_none() {
                witness = Some(found.clone());
            }
            jets.push(found);
            break;
        }
    }
    Ok(PointReport {
        index,
        t: pt.t,
        x,
        u: u0,
        estimate,
        candidates: cands.len(),
        passed: witness.is_none(),
        jets,
        witness,
    })
}

/// Samples jets of `u` at the given points and checks the sub- or
/// supersolution inequality on every jet that passes the membership test.
/// Can refute, never certify.
pub fn visc_check(
    u: &SharedFunctional,
    g: &Nonlinearity,
    direction: Direction,
    points: &[SamplePoint],
    cfg: &ViscConfig,
) -> Result<ViscosityReport> {
    if cfg.deltas.is_empty() || cfg.deltas.iter().any(|d| !(*d > 0.0)) {
        return config("the δ grid must be nonempty and positive");
    }
    if !(cfg.space_step > 0.0 && cfg.time_step > 0.0) {
        return domain("finite-difference steps must be positive");
    }
    if let Some(p) = points.iter().find(|p| p.path.dim() != g.dim) {
        return domain(format!("point of dimension {} for a {}-dimensional nonlinearity", p.path.dim(), g.dim));
    }
    let reports: Vec<PointReport> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| check_point(u, g, direction, cfg, i, p))
        .collect::<Result<_>>()?;
    let candidates_tried: usize = reports.iter().map(|r| r.candidates).sum();
    let jets_found: usize = reports.iter().map(|r| r.jets.len()).sum();
    let witness = reports.iter().find_map(|r| r.witness.clone());
    let passed = witness.is_none();
    let side = match direction {
        Direction::Sub => "subsolution",
        Direction::Super => "supersolution",
    };
    let verdict = if passed {
        format!("no violation of the {side} inequality found among {jets_found} jets ({candidates_tried} candidates)")
    } else {
        format!("{side} inequality violated")
    };
    Ok(ViscosityReport {
        functional: u.name(),
        nonlinearity: g.name.clone(),
        direction,
        points: reports,
        candidates_tried,
        jets_found,
        witness,
        passed,
        verdict,
    })
}

/// Classical solutions `(functional, nonlinearity)`.
pub const SOLUTIONS: &[(&str, &str)] = &[("linear", "zero"), ("heat", "half-laplacian"), ("quadratic-drift", "hjb-sup-vol")];

/// A strict non-solution: the direction that fails and its witness jet
/// `(α, β, γ)` in one dimension.
pub struct NonSolution {
    pub functional: &'static str,
    pub nonlinearity: &'static str,
    pub direction: Direction,
    pub witness: (f64, f64, f64),
}

pub const NON_SOLUTIONS: &[NonSolution] = &[NonSolution {
    functional: "drifting-minus-t",
    nonlinearity: "zero",
    direction: Direction::Sub,
    witness: (-1.0, 0.0, 0.0),
}];

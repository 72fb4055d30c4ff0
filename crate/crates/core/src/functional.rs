//! Functionals `Θ → R` evaluated on stopped piecewise paths, and a small
//! catalog of test functionals.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::path_space::{concat_pw, euclid, PointInTheta, PwPath};

/// Modulus of continuity `ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Modulus {
    /// `ρ(x) = k x`
    Linear { k: f64 },
    /// `ρ(x) = k x^γ`
    Power { k: f64, gamma: f64 },
}

impl Modulus {
    pub fn apply(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match *self {
            Modulus::Linear { k } => k * x,
            Modulus::Power { k, gamma } => k * x.powf(gamma),
        }
    }

    pub fn identity() -> Self {
        Modulus::Linear { k: 1.0 }
    }

    pub fn zero() -> Self {
        Modulus::Linear { k: 0.0 }
    }
}

/// A map `(t, ω) ↦ R`. Implementations must only read `path` on `[0, t]`
/// and treat it as constant afterwards; `path` may be any càdlàg piecewise
/// path, which is how values on step paths are defined.
pub trait Functional: Send + Sync {
    fn eval(&self, t: f64, path: &PwPath) -> f64;

    /// `‖u‖_∞` when known.
    fn bound(&self) -> Option<f64> {
        None
    }

    /// Modulus of continuity with respect to `d_p`, when known.
    fn modulus(&self) -> Option<Modulus> {
        None
    }

    fn name(&self) -> String;

    fn eval_point(&self, theta: &PointInTheta) -> f64 {
        self.eval(theta.t(), &theta.stopped_pw())
    }
}

impl fmt::Debug for dyn Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Functional({})", self.name())
    }
}

pub type SharedFunctional = Arc<dyn Functional>;

/// Closure-backed functional.
pub struct FnFunctional<F> {
    name: String,
    f: F,
    bound: Option<f64>,
    modulus: Option<Modulus>,
}

impl<F: Fn(f64, &PwPath) -> f64 + Send + Sync> FnFunctional<F> {
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self { name: name.into(), f, bound: None, modulus: None }
    }

    pub fn with_bound(mut self, b: f64) -> Self {
        self.bound = Some(b);
        self
    }

    pub fn with_modulus(mut self, m: Modulus) -> Self {
        self.modulus = Some(m);
        self
    }
}

impl<F: Fn(f64, &PwPath) -> f64 + Send + Sync> Functional for FnFunctional<F> {
    fn eval(&self, t: f64, path: &PwPath) -> f64 {
        (self.f)(t, path)
    }
    fn bound(&self) -> Option<f64> {
        self.bound
    }
    fn modulus(&self) -> Option<Modulus> {
        self.modulus
    }
    fn name(&self) -> String {
        self.name.clone()
    }
}

/// `u + c`.
pub struct Offset {
    inner: SharedFunctional,
    c: f64,
}

impl Offset {
    pub fn new(inner: SharedFunctional, c: f64) -> Self {
        Self { inner, c }
    }
}

impl Functional for Offset {
    fn eval(&self, t: f64, path: &PwPath) -> f64 {
        self.inner.eval(t, path) + self.c
    }
    fn bound(&self) -> Option<f64> {
        self.inner.bound().map(|b| b + self.c.abs())
    }
    fn modulus(&self) -> Option<Modulus> {
        self.inner.modulus()
    }
    fn name(&self) -> String {
        format!("{}+{}", self.inner.name(), self.c)
    }
}

/// Shifted functional `ω' ↦ f(t + s, ω ⊗_t ω')`.
pub struct Shifted {
    inner: SharedFunctional,
    t: f64,
    path: PwPath,
}

impl Functional for Shifted {
    fn eval(&self, s: f64, other: &PwPath) -> f64 {
        let joined = concat_pw(&self.path, self.t, &other.stopped(s));
        self.inner.eval(self.t + s, &joined)
    }
    fn bound(&self) -> Option<f64> {
        self.inner.bound()
    }
    fn modulus(&self) -> Option<Modulus> {
        self.inner.modulus()
    }
    fn name(&self) -> String {
        format!("{}^θ", self.inner.name())
    }
}

/// The shift of `f` by `θ`.
pub fn shift(f: SharedFunctional, theta: &PointInTheta) -> Shifted {
    Shifted { inner: f, t: theta.t(), path: theta.stopped_pw() }
}

/// Shift by an arbitrary stopped piecewise path.
pub fn shift_pw(f: SharedFunctional, t: f64, path: &PwPath) -> Shifted {
    Shifted { inner: f, t, path: path.stopped(t) }
}

fn first(path: &PwPath, t: f64) -> f64 {
    path.eval(t)[0]
}

/// `∫_0^T ω_{t∧s} ds` (first component).
pub fn stopped_integral(path: &PwPath, t: f64, horizon: f64) -> f64 {
    let head = path.integral(t)[0];
    let lead = if path.start() > 0.0 { path.start() * path.eval(0.0)[0] } else { 0.0 };
    head + lead + (horizon - t).max(0.0) * first(path, t)
}

/// Built-in functionals addressed by name.
pub fn catalog(name: &str, horizon: f64, dim: usize) -> Result<SharedFunctional> {
    let lip_int = horizon.max(1.0);
    let f: SharedFunctional = match name {
        "zero" => Arc::new(FnFunctional::new("zero", |_, _| 0.0).with_bound(0.0).with_modulus(Modulus::zero())),
        "constant" => Arc::new(FnFunctional::new("constant", |_, _| 0.3).with_bound(0.3).with_modulus(Modulus::zero())),
        "time" => Arc::new(
            FnFunctional::new("time", |t, _| t).with_bound(horizon).with_modulus(Modulus::identity()),
        ),
        "soft-endpoint" => Arc::new(
            FnFunctional::new("soft-endpoint", |t, p| 0.5 * first(p, t).tanh())
                .with_bound(0.5)
                .with_modulus(Modulus::Linear { k: 0.5 }),
        ),
        "soft-integral" => Arc::new(
            FnFunctional::new("soft-integral", move |t, p| 0.5 * stopped_integral(p, t, horizon).sin())
                .with_bound(0.5)
                .with_modulus(Modulus::Linear { k: 0.5 * lip_int }),
        ),
        "linear" => Arc::new(FnFunctional::new("linear", |t, p| first(p, t)).with_modulus(Modulus::identity())),
        "heat" => {
            let d = dim as f64;
            Arc::new(FnFunctional::new("heat", move |t, p| {
                let x = euclid(&p.eval(t));
                x * x - d * t
            }))
        }
        "quadratic-drift" => Arc::new(FnFunctional::new("quadratic-drift", |t, p| {
            let x = first(p, t);
            x * x - 2.25 * t
        })),
        "drifting-minus-t" => Arc::new(
            FnFunctional::new("drifting-minus-t", |t, _| -t).with_bound(horizon).with_modulus(Modulus::identity()),
        ),
        other => return config(format!("unknown functional '{other}'")),
    };
    Ok(f)
}

pub const CATALOG: &[&str] = &[
    "zero",
    "constant",
    "time",
    "soft-endpoint",
    "soft-integral",
    "linear",
    "heat",
    "quadratic-drift",
    "drifting-minus-t",
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path_space::{DiscretePath, Grid};

    fn ramp() -> (Grid, DiscretePath) {
        let g = Grid::new(1.0, 64).unwrap();
        (g, DiscretePath::from_fn(g, 1, |s| vec![s]).unwrap())
    }

    #[test]
    fn shift_by_origin_is_identity() {
        let (g, w) = ramp();
        let f = catalog("soft-integral", 1.0, 1).unwrap();
        let sh = shift(f.clone(), &PointInTheta::origin(g, 1));
        let p = w.to_pw();
        for t in [0.0, 0.3, 1.0] {
            assert!((sh.eval(t, &p) - f.eval(t, &p)).abs() < 1e-14);
        }
    }

    #[test]
    fn shifted_endpoint() {
        let (_, w) = ramp();
        let f = catalog("linear", 1.0, 1).unwrap();
        let theta = PointInTheta::new(0.5, w.clone()).unwrap();
        let sh = shift(f, &theta);
        let other = PwPath::linear(1, vec![0.0, 1.0], vec![0.0, 2.0]);
        assert!((sh.eval(0.5, &other) - (0.5 + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn shifted_integral_matches_split_formula() {
        let (_, w) = ramp();
        let integral = Arc::new(FnFunctional::new("int", |t, p: &PwPath| stopped_integral(p, t, 1.0)));
        let theta = PointInTheta::new(0.5, w).unwrap();
        let sh = shift(integral, &theta);
        let other = PwPath::linear(1, vec![0.0, 0.5], vec![0.0, 1.0]);
        // oracle: 0.125 + ∫_{0.5}^1 (0.5 + ω'_{s-0.5}) ds by midpoint rule
        let n = 100_000;
        let tail: f64 = (0..n)
            .map(|j| {
                let s = 0.5 + (j as f64 + 0.5) * 0.5 / n as f64;
                0.5 + other.eval(s - 0.5)[0]
            })
            .sum::<f64>()
            * 0.5
            / n as f64;
        assert!((sh.eval(0.5, &other) - (0.125 + tail)).abs() < 1e-9);
    }

    #[test]
    fn catalog_bounds_hold_on_samples() {
        let (g, _) = ramp();
        for name in ["time", "soft-endpoint", "soft-integral", "constant"] {
            let f = catalog(name, 1.0, 1).unwrap();
            let b = f.bound().unwrap();
            for a in [-3.0, -0.5, 0.0, 2.0, 10.0] {
                let w = DiscretePath::from_fn(g, 1, |s| vec![a * s * (1.0 + s)]).unwrap();
                for k in [0, 10, 64] {
                    let th = PointInTheta::new(g.time(k), w.clone()).unwrap();
                    assert!(f.eval_point(&th).abs() <= b + 1e-15);
                }
            }
        }
        assert!(catalog("nope", 1.0, 1).is_err());
    }
}

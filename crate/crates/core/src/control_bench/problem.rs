use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::functional::{catalog, FnFunctional, Modulus, SharedFunctional};
use crate::path_space::PwPath;

type MarkovFn = dyn Fn(f64, f64, f64) -> f64 + Send + Sync;
type PathFn = dyn Fn(f64, &PwPath, f64) -> f64 + Send + Sync;
type PointFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Diffusion coefficient `σ(θ, a)`.
#[derive(Clone)]
pub enum Sigma {
    /// depends on `(t, X_t, a)` only
    Markov(Arc<MarkovFn>),
    /// depends on the whole stopped history
    Path(Arc<PathFn>),
}

impl Sigma {
    pub fn markov(f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Markov(Arc::new(f))
    }

    pub fn path(f: impl Fn(f64, &PwPath, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Path(Arc::new(f))
    }

    pub fn is_markov(&self) -> bool {
        matches!(self, Self::Markov(_))
    }
}

/// One-dimensional driftless controlled diffusion `dX = σ(θ, a) dW` with
/// reward `g(X_{T∧·})`.
#[derive(Clone)]
pub struct ControlProblem {
    pub name: String,
    pub sigma: Sigma,
    /// `‖σ‖_∞`
    pub sigma_bound: f64,
    /// `d_p`-Lipschitz constant of `σ` in `θ`
    pub c_lip: f64,
    /// the control grid inside `[-1, 1]`
    pub controls: Vec<f64>,
    pub g: SharedFunctional,
    /// `g` as a function of `ω_T` when it only depends on the endpoint
    pub g_terminal: Option<Arc<PointFn>>,
    /// concave modulus of `g`
    pub rho: Option<Modulus>,
    pub horizon: f64,
}

impl fmt::Debug for ControlProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlProblem")
            .field("name", &self.name)
            .field("markov", &self.sigma.is_markov())
            .field("sigma_bound", &self.sigma_bound)
            .field("c_lip", &self.c_lip)
            .field("controls", &self.controls)
            .field("rho", &self.rho)
            .field("horizon", &self.horizon)
            .finish()
    }
}

/// `n` uniform points on `[-1, 1]` (`n = 1` gives `{0}`).
pub fn control_grid(n: usize) -> Result<Vec<f64>> {
    match n {
        0 => config("the control grid needs at least one point"),
        1 => Ok(vec![0.0]),
        _ => Ok((0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect()),
    }
}

impl ControlProblem {
    /// `σ` at the concatenated history `path` (stopped at `t`) with `x = path(t)`.
    pub fn sigma_at(&self, t: f64, x: f64, path: Option<&PwPath>, a: f64) -> f64 {
        match &self.sigma {
            Sigma::Markov(f) => f(t, x, a),
            Sigma::Path(f) => f(t, path.expect("path-dependent σ needs the history"), a),
        }
    }

    pub fn with_controls(mut self, n: usize) -> Result<Self> {
        self.controls = control_grid(n)?;
        Ok(self)
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) {
            return domain("horizon must be positive");
        }
        self.horizon = horizon;
        Ok(self)
    }
}

pub const PROBLEMS: &[&str] = &["bm-linear", "bm-abs", "bm-integral", "tanh-vol", "vol-control"];

fn endpoint(name: &str, f: impl Fn(f64) -> f64 + Send + Sync + Clone + 'static) -> (SharedFunctional, Arc<PointFn>) {
    let g = f.clone();
    (Arc::new(FnFunctional::new(name, move |t, p: &PwPath| g(p.eval(t)[0]))), Arc::new(f))
}

/// Built-in problems on `[0, T]` with a 5-point control grid.
pub fn problem(name: &str, horizon: f64) -> Result<ControlProblem> {
    if !(horizon > 0.0) {
        return domain("horizon must be positive");
    }
    let controls = control_grid(5)?;
    let unit = Sigma::markov(|_, _, _| 1.0);
    let id = Some(Modulus::identity());
    let p = match name {
        "bm-linear" => {
            let (g, gt) = endpoint("endpoint", |x| x);
            ControlProblem { name: name.into(), sigma: unit, sigma_bound: 1.0, c_lip: 0.0, controls, g, g_terminal: Some(gt), rho: id, horizon }
        }
        "bm-abs" => {
            let (g, gt) = endpoint("abs-endpoint", f64::abs);
            ControlProblem { name: name.into(), sigma: unit, sigma_bound: 1.0, c_lip: 0.0, controls, g, g_terminal: Some(gt), rho: id, horizon }
        }
        "bm-integral" => ControlProblem {
            name: name.into(),
            sigma: unit,
            sigma_bound: 1.0,
            c_lip: 0.0,
            controls,
            g: Arc::new(FnFunctional::new("integral", move |t, p: &PwPath| {
                crate::functional::stopped_integral(p, t, horizon)
            })),
            g_terminal: None,
            rho: Some(Modulus::Linear { k: horizon.max(1.0) }),
            horizon,
        },
        // σ = 1 + tanh(ω_t) a / 2 and g = min(|ω_T|, 2)
        "tanh-vol" => {
            let (g, gt) = endpoint("capped-abs-endpoint", |x: f64| x.abs().min(2.0));
            ControlProblem {
                name: name.into(),
                sigma: Sigma::markov(|_, x, a| 1.0 + 0.5 * x.tanh() * a),
                sigma_bound: 1.5,
                c_lip: 0.5,
                controls,
                g,
                g_terminal: Some(gt),
                rho: id,
                horizon,
            }
        }
        // σ = 1 + a/2 and g = ω_T²; value σ_max² T
        "vol-control" => {
            let (g, gt) = endpoint("endpoint-squared", |x| x * x);
            ControlProblem {
                name: name.into(),
                sigma: Sigma::markov(|_, _, a| 1.0 + 0.5 * a),
                sigma_bound: 1.5,
                c_lip: 0.0,
                controls,
                g,
                g_terminal: Some(gt),
                rho: None,
                horizon,
            }
        }
        other => return config(format!("unknown control problem `{other}`; known: {}", PROBLEMS.join(", "))),
    };
    Ok(p)
}

/// A problem with a path-dependent `σ = 1 + tanh(∫_0^t ω) a / 2` and a
/// cataloged reward; only the Monte Carlo engine applies.
pub fn path_problem(reward: &str, horizon: f64) -> Result<ControlProblem> {
    let g = catalog(reward, horizon, 1)?;
    let rho = g.modulus();
    Ok(ControlProblem {
        name: format!("path-vol/{reward}"),
        sigma: Sigma::path(|t, p, a| 1.0 + 0.5 * p.integral(t)[0].tanh() * a),
        sigma_bound: 1.5,
        c_lip: 0.5,
        controls: control_grid(5)?,
        g,
        g_terminal: None,
        rho,
        horizon,
    })
}

/// Engine selection for [`super::value`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Lattice,
    MonteCarlo,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_and_catalog() {
        assert_eq!(control_grid(5).unwrap(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(control_grid(0).is_err());
        for name in PROBLEMS {
            let p = problem(name, 1.0).unwrap();
            for &a in &p.controls {
                for x in [-3.0, 0.0, 2.0] {
                    assert!(p.sigma_at(0.3, x, None, a).abs() <= p.sigma_bound + 1e-15);
                }
            }
        }
        assert!(problem("nope", 1.0).is_err());
        assert!(!path_problem("soft-endpoint", 1.0).unwrap().sigma.is_markov());
    }
}

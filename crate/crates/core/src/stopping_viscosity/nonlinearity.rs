use std::fmt;
use std::sync::Arc;

use crate::error::{config, domain, Result};
use crate::functional::{FnFunctional, Modulus, SharedFunctional};
use crate::path_space::PwPath;

type GFn = dyn Fn(f64, &PwPath, f64, &[f64], &[f64]) -> f64 + Send + Sync;

/// `G(θ, y, z, γ)` with its declared constants. `γ` is row-major `d × d`.
#[derive(Clone)]
pub struct Nonlinearity {
    pub name: String,
    pub dim: usize,
    /// Lipschitz constant in `(y, z, γ)`, Frobenius norm on `γ`
    pub l0: f64,
    /// modulus in `θ` with respect to `d_p`
    pub rho: Modulus,
    /// non-decreasing in `y`
    pub monotone: bool,
    f: Arc<GFn>,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("l0", &self.l0)
            .field("rho", &self.rho)
            .field("monotone", &self.monotone)
            .finish()
    }
}

impl Nonlinearity {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        l0: f64,
        rho: Modulus,
        monotone: bool,
        f: impl Fn(f64, &PwPath, f64, &[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), dim, l0, rho, monotone, f: Arc::new(f) }
    }

    pub fn eval(&self, t: f64, path: &PwPath, y: f64, z: &[f64], gamma: &[f64]) -> f64 {
        (self.f)(t, path, y, z, gamma)
    }
}

pub const NONLINEARITIES: &[&str] = &["zero", "half-laplacian", "hjb-sup-vol", "lipschitz-sin", "anti-laplacian"];

fn trace(g: &[f64], d: usize) -> f64 {
    (0..d).map(|i| g[i * d + i]).sum()
}

/// Built-in nonlinearities addressed by name.
pub fn nonlinearity(name: &str, dim: usize, horizon: f64) -> Result<Nonlinearity> {
    if dim == 0 {
        return domain("dimension must be positive");
    }
    let sd = (dim as f64).sqrt();
    Ok(match name {
        "zero" => Nonlinearity::new("zero", dim, 0.0, Modulus::zero(), true, |_, _, _, _, _| 0.0),
        "half-laplacian" => Nonlinearity::new("half-laplacian", dim, 0.5 * sd, Modulus::zero(), true, move |_, _, _, _, g| {
            0.5 * trace(g, dim)
        }),
        // sup over σ ∈ [1/2, 3/2] of σ² tr(γ) / 2
        "hjb-sup-vol" => Nonlinearity::new("hjb-sup-vol", dim, 1.125 * sd, Modulus::zero(), true, move |_, _, _, _, g| {
            let tr = trace(g, dim);
            if tr > 0.0 {
                1.125 * tr
            } else {
                0.125 * tr
            }
        }),
        "lipschitz-sin" => Nonlinearity::new("lipschitz-sin", dim, 0.0, Modulus::identity(), true, move |t, p, _, _, _| {
            p.stopped(t).norm_pow(3.0, horizon).cbrt().sin()
        }),
        "anti-laplacian" => Nonlinearity::new("anti-laplacian", dim, sd, Modulus::zero(), true, move |_, _, _, _, g| {
            -trace(g, dim)
        }),
        other => return config(format!("unknown nonlinearity `{other}`; known: {}", NONLINEARITIES.join(", "))),
    })
}

fn scaled(v: &[f64], c: f64) -> Vec<f64> {
    v.iter().map(|x| x * c).collect()
}

/// `G̃(θ, y, z, γ) = e^{-Lt} G(θ, e^{Lt}y, e^{Lt}z, e^{Lt}γ) + L y`, the
/// nonlinearity solved by `e^{-Lt}u` when `u` solves `G`. A negative `L`
/// undoes a previous transform.
pub fn transform_discount(g: &Nonlinearity, l: f64) -> Nonlinearity {
    let inner = g.clone();
    let f = move |t: f64, p: &PwPath, y: f64, z: &[f64], gm: &[f64]| {
        let e = (l * t).exp();
        inner.eval(t, p, e * y, &scaled(z, e), &scaled(gm, e)) / e + l * y
    };
    Nonlinearity {
        name: format!("{}~discount({l})", g.name),
        dim: g.dim,
        l0: g.l0 + l.abs(),
        rho: g.rho,
        monotone: l >= g.l0,
        f: Arc::new(f),
    }
}

/// `ũ(t, ω) = e^{-Lt} u(t, ω)`.
pub fn discount_functional(u: SharedFunctional, l: f64) -> SharedFunctional {
    let name = format!("{}~discount({l})", u.name());
    let bound = u.bound().filter(|_| l >= 0.0);
    let mut f = FnFunctional::new(name, move |t, p: &PwPath| (-l * t).exp() * u.eval(t, p));
    if let Some(b) = bound {
        f = f.with_bound(b);
    }
    Arc::new(f)
}

/// `Ḡ(θ, y, z, γ) = -2L₀ y + e^{2L₀t} G(θ, e^{-2L₀t}y, e^{-2L₀t}z, e^{-2L₀t}γ)`.
pub fn transform_gbar(g: &Nonlinearity, l0: f64) -> Result<Nonlinearity> {
    if !(l0 >= 0.0) {
        return domain(format!("L0 = {l0} must be nonnegative"));
    }
    let inner = g.clone();
    let f = move |t: f64, p: &PwPath, y: f64, z: &[f64], gm: &[f64]| {
        let e = (-2.0 * l0 * t).exp();
        -2.0 * l0 * y + inner.eval(t, p, e * y, &scaled(z, e), &scaled(gm, e)) / e
    };
    Ok(Nonlinearity {
        name: format!("{}~bar({l0})", g.name),
        dim: g.dim,
        l0: g.l0 + 2.0 * l0,
        rho: g.rho,
        monotone: false,
        f: Arc::new(f),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p0() -> PwPath {
        PwPath::zero(1)
    }

    #[test]
    fn catalog_values() {
        let h = nonlinearity("half-laplacian", 1, 1.0).unwrap();
        assert_eq!(h.eval(0.0, &p0(), 0.0, &[0.0], &[2.0]), 1.0);
        let s = nonlinearity("hjb-sup-vol", 1, 1.0).unwrap();
        assert_eq!(s.eval(0.0, &p0(), 0.0, &[0.0], &[2.0]), 2.25);
        assert_eq!(s.eval(0.0, &p0(), 0.0, &[0.0], &[-2.0]), -0.25);
        assert!(nonlinearity("nope", 1, 1.0).is_err());
    }

    #[test]
    fn discount_zero_is_identity_and_round_trips() {
        let g = nonlinearity("hjb-sup-vol", 1, 1.0).unwrap();
        let same = transform_discount(&g, 0.0);
        let back = transform_discount(&transform_discount(&g, 1.3), -1.3);
        for (t, y, z, gm) in [(0.2, 0.5, 1.0, 3.0), (0.9, -2.0, 0.1, -1.0)] {
            let a = g.eval(t, &p0(), y, &[z], &[gm]);
            assert_eq!(same.eval(t, &p0(), y, &[z], &[gm]), a);
            assert!((back.eval(t, &p0(), y, &[z], &[gm]) - a).abs() < 1e-12);
        }
    }

    #[test]
    fn discount_of_zero_is_linear_in_y() {
        let g = transform_discount(&nonlinearity("zero", 1, 1.0).unwrap(), 1.0);
        assert!(g.monotone);
        let d = g.eval(0.3, &p0(), 1.0 + 1e-6, &[0.0], &[0.0]) - g.eval(0.3, &p0(), 1.0, &[0.0], &[0.0]);
        assert!((d / 1e-6 - 1.0).abs() < 1e-6);
        let u = discount_functional(crate::functional::catalog("constant", 1.0, 1).unwrap(), 1.0);
        assert!((u.eval(1.0, &p0()) - 0.3 * (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn gbar_example() {
        let g = transform_gbar(&nonlinearity("zero", 1, 1.0).unwrap(), 1.0).unwrap();
        let diff = g.eval(0.0, &p0(), 0.0, &[0.0], &[0.0]) - g.eval(0.0, &p0(), 1.0, &[0.0], &[0.0]);
        assert_eq!(diff, 2.0);
    }
}

use super::grid::{MetricOrder, PointInTheta};
use super::pw::{euclid, PwPath};
use super::DiscretePath;
use crate::error::{domain, Error, Result};

/// `∫_0^1 |v0 + (v1 - v0) u|^q du`.
///
/// Closed form in one dimension; in higher dimensions the integrand is smooth
/// away from the minimiser of `|v(u)|`, so the interval is split there and each
/// half is integrated by 16-point Gauss-Legendre.
pub(crate) fn segment_pow_integral(v0: &[f64], v1: &[f64], q: f64) -> f64 {
    if v0.len() == 1 {
        return scalar_segment(v0[0], v1[0], q);
    }
    let diff: Vec<f64> = v0.iter().zip(v1).map(|(a, b)| b - a).collect();
    let dd: f64 = diff.iter().map(|x| x * x).sum();
    if dd == 0.0 {
        return euclid(v0).powf(q);
    }
    let u_star = (-v0.iter().zip(&diff).map(|(a, b)| a * b).sum::<f64>() / dd).clamp(0.0, 1.0);
    let f = |u: f64| -> f64 {
        v0.iter()
            .zip(&diff)
            .map(|(a, b)| (a + b * u) * (a + b * u))
            .sum::<f64>()
            .sqrt()
            .powf(q)
    };
    gauss_legendre(&f, 0.0, u_star) + gauss_legendre(&f, u_star, 1.0)
}

fn scalar_segment(a: f64, b: f64, q: f64) -> f64 {
    let (fa, fb) = (a.abs(), b.abs());
    if a * b < 0.0 {
        return (fa.powf(q + 1.0) + fb.powf(q + 1.0)) / ((q + 1.0) * (fa + fb));
    }
    let spread = (fb - fa).abs();
    let scale = fa.max(fb);
    if spread <= 1e-6 * scale || scale == 0.0 {
        // nearly constant: Simpson is exact to rounding here
        let m = 0.5 * (fa + fb);
        return (fa.powf(q) + 4.0 * m.powf(q) + fb.powf(q)) / 6.0;
    }
    (fb.powf(q + 1.0) - fa.powf(q + 1.0)) / ((q + 1.0) * (fb - fa))
}

const GL_NODES: [f64; 8] = [
    0.0950125098376374,
    0.2816035507792589,
    0.4580167776572274,
    0.6178762444026438,
    0.7554044083550030,
    0.8656312023878318,
    0.9445750230732326,
    0.9894009349916499,
];
const GL_WEIGHTS: [f64; 8] = [
    0.1894506104550685,
    0.1826034150449236,
    0.1691565193950025,
    0.1495959888165767,
    0.1246289712555339,
    0.0951585116824928,
    0.0622535239386479,
    0.0271524594117541,
];

fn gauss_legendre(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let mut s = 0.0;
    for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
        s += w * (f(c - h * x) + f(c + h * x));
    }
    s * h
}

/// Order of a path norm: the odd metric order or an arbitrary real `q >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormOrder {
    Metric(MetricOrder),
    Real(f64),
}

impl NormOrder {
    pub fn value(self) -> f64 {
        match self {
            NormOrder::Metric(p) => p.get() as f64,
            NormOrder::Real(q) => q,
        }
    }
}

impl From<MetricOrder> for NormOrder {
    fn from(p: MetricOrder) -> Self {
        NormOrder::Metric(p)
    }
}

impl From<f64> for NormOrder {
    fn from(q: f64) -> Self {
        NormOrder::Real(q)
    }
}

/// `(|ω'_T|^q + ∫_0^T |ω'_s|^q ds)^{1/q}` with `ω'` the path stopped at `t_stop`.
pub fn path_norm(path: &DiscretePath, order: impl Into<NormOrder>, t_stop: Option<f64>) -> Result<f64> {
    let q = order.into().value();
    if !(q >= 1.0) {
        return domain(format!("norm order {q} is below 1"));
    }
    let mut pw = path.to_pw();
    if let Some(t) = t_stop {
        let k = path.grid().snap(t)?;
        pw = pw.stopped(path.grid().time(k));
    }
    Ok(pw.norm_pow(q, path.horizon()).powf(1.0 / q))
}

/// `q`-th power of the norm for an arbitrary piecewise path over `[0, horizon]`.
pub fn pw_norm_pow(path: &PwPath, q: f64, horizon: f64) -> f64 {
    path.norm_pow(q, horizon)
}

/// Stopped-path closed form `(T + 1 - t)|ω_t|^q + ∫_0^t |ω_s|^q ds`.
pub fn stopped_norm_pow_closed_form(path: &PwPath, t: f64, q: f64, horizon: f64) -> f64 {
    let x = euclid(&path.eval(t));
    (horizon + 1.0 - t) * x.powf(q) + path.integral_pow(q, t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistanceMode {
    Order(NormOrder),
    Infinity,
}

/// Pseudo-distance `|t - t'| + ‖ω_{t∧·} - ω'_{t'∧·}‖` between two points.
pub fn distance(a: &PointInTheta, b: &PointInTheta, mode: DistanceMode) -> Result<f64> {
    if a.path().grid() != b.path().grid() {
        return Err(Error::Configuration("points live on different grids".into()));
    }
    let horizon = a.path().horizon();
    let diff = a.stopped_pw().sub(&b.stopped_pw());
    let dt = (a.t() - b.t()).abs();
    Ok(dt + diff_norm(&diff, mode, horizon)?)
}

pub(crate) fn diff_norm(diff: &PwPath, mode: DistanceMode, horizon: f64) -> Result<f64> {
    match mode {
        DistanceMode::Infinity => Ok(diff.sup_norm(horizon)),
        DistanceMode::Order(o) => {
            let q = o.value();
            if !(q >= 1.0) {
                return domain(format!("norm order {q} is below 1"));
            }
            Ok(diff.norm_pow(q, horizon).powf(1.0 / q))
        }
    }
}

/// `d_p` between two arbitrary piecewise paths stopped at their own times.
pub fn pw_distance(t: f64, a: &PwPath, t2: f64, b: &PwPath, p: f64, horizon: f64) -> f64 {
    let diff = a.stopped(t).sub(&b.stopped(t2));
    (t - t2).abs() + diff.norm_pow(p, horizon).powf(1.0 / p)
}

/// `(Σ_j |x_j|^p)^{1/p}` over points of `R^d` given as a flat slice.
pub fn tuple_norm(points: &[f64], dim: usize, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return domain(format!("tuple norm order {p} is below 1"));
    }
    if dim == 0 || points.len() % dim != 0 {
        return Err(Error::Configuration("tuple length is not a multiple of the dimension".into()));
    }
    Ok(points.chunks(dim).map(|x| euclid(x).powf(p)).sum::<f64>().powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path_space::Grid;

    /// Midpoint rule on a very fine grid, independent of the closed forms.
    fn quadrature(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        (0..n).map(|j| f(a + (j as f64 + 0.5) * h)).sum::<f64>() * h
    }

    fn ramp(n: usize) -> DiscretePath {
        let g = Grid::new(1.0, n).unwrap();
        DiscretePath::from_fn(g, 1, |s| vec![s]).unwrap()
    }

    #[test]
    fn zero_path_has_zero_norm() {
        let g = Grid::new(1.0, 64).unwrap();
        let p = DiscretePath::zero(g, 1);
        assert_eq!(path_norm(&p, 3.0, None).unwrap(), 0.0);
    }

    #[test]
    fn linear_path_norm_matches_quadrature() {
        let p = ramp(64);
        let v = path_norm(&p, MetricOrder::new(3).unwrap(), None).unwrap();
        let oracle = (1.0 + quadrature(|s| s.powi(3), 0.0, 1.0, 200_000)).powf(1.0 / 3.0);
        assert!((v - oracle).abs() < 1e-9);
        assert!((v - 1.25f64.powf(1.0 / 3.0)).abs() < 1e-12);
        assert!((v - 1.07722).abs() < 1e-5);
    }

    #[test]
    fn stopped_linear_path_norm() {
        let p = ramp(64);
        let v = path_norm(&p, 3.0, Some(0.5)).unwrap();
        let oracle = (0.125 + quadrature(|s| s.min(0.5).powi(3), 0.0, 1.0, 200_000)).powf(1.0 / 3.0);
        assert!((v - oracle).abs() < 1e-9);
        assert!((v - 0.203125f64.powf(1.0 / 3.0)).abs() < 1e-12);
        // 0.203125^(1/3) = 0.58777..., which rounds to 0.588
        assert!((v - 0.58800).abs() < 5e-4);
    }

    #[test]
    fn norm_rejects_small_order_and_off_grid_stop() {
        let p = ramp(64);
        assert!(matches!(path_norm(&p, 0.5, None), Err(Error::Domain(_))));
        assert!(matches!(path_norm(&p, 3.0, Some(0.5 + 0.6 / 64.0)), Err(Error::Precision(_))));
    }

    #[test]
    fn distance_examples() {
        let g = Grid::new(1.0, 64).unwrap();
        let w = ramp(64);
        let a = PointInTheta::new(0.5, w.clone()).unwrap();
        let b = PointInTheta::new(1.0, DiscretePath::zero(g, 1)).unwrap();
        let d = distance(&a, &b, DistanceMode::Order(3.0.into())).unwrap();
        assert!((d - (0.5 + 0.203125f64.powf(1.0 / 3.0))).abs() < 1e-12);
        assert_eq!(distance(&a, &a, DistanceMode::Infinity).unwrap(), 0.0);
        let g10 = Grid::new(1.0, 10).unwrap();
        let z1 = PointInTheta::new(0.2, DiscretePath::zero(g10, 1)).unwrap();
        let z2 = PointInTheta::new(0.7, DiscretePath::zero(g10, 1)).unwrap();
        for mode in [DistanceMode::Infinity, DistanceMode::Order(3.0.into())] {
            assert!((distance(&z1, &z2, mode).unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn distance_rejects_mismatched_grids() {
        let a = PointInTheta::new(0.5, ramp(64)).unwrap();
        let b = PointInTheta::new(0.5, ramp(32)).unwrap();
        assert!(matches!(distance(&a, &b, DistanceMode::Infinity), Err(Error::Configuration(_))));
    }

    #[test]
    fn tuple_norm_examples() {
        assert_eq!(tuple_norm(&[0.0, 0.0], 1, 3.0).unwrap(), 0.0);
        assert!((tuple_norm(&[3.0, 4.0], 1, 1.0).unwrap() - 7.0).abs() < 1e-15);
        assert!((tuple_norm(&[3.0, 4.0], 1, 3.0).unwrap() - 91f64.powf(1.0 / 3.0)).abs() < 1e-12);
        assert!((tuple_norm(&[3.0, 4.0], 1, 3.0).unwrap() - 4.49794).abs() < 1e-5);
    }

    #[test]
    fn multi_dim_segment_matches_quadrature() {
        let v0 = [1.0, -2.0];
        let v1 = [-0.5, 1.5];
        for q in [1.0, 3.0, 4.0, 7.5] {
            let got = segment_pow_integral(&v0, &v1, q);
            let oracle = quadrature(
                |u| {
                    let x = v0[0] + (v1[0] - v0[0]) * u;
                    let y = v0[1] + (v1[1] - v0[1]) * u;
                    (x * x + y * y).sqrt().powf(q)
                },
                0.0,
                1.0,
                400_000,
            );
            assert!((got - oracle).abs() < 1e-8 * oracle.max(1.0), "q={q}: {got} vs {oracle}");
        }
    }

    #[test]
    fn scalar_segment_matches_quadrature_with_sign_change() {
        for (a, b) in [(0.3, -1.2), (2.0, 2.0 + 1e-9), (-1.0, -3.0), (0.0, 1.0)] {
            let got = scalar_segment(a, b, 4.0);
            let oracle = quadrature(|u| (a + (b - a) * u).abs().powi(4), 0.0, 1.0, 200_000);
            assert!((got - oracle).abs() < 1e-9, "{a} {b}");
        }
    }
}

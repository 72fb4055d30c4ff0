use std::fmt::Write as _;

use rand::Rng;
use serde_json::json;

use crate::cli::config::ExperimentConfig;
use crate::cli::report::{num, SuiteReport};
use crate::control_bench::split_rng;
use crate::error::Result;
use crate::path_space::{
    concat, distance, path_norm, random_point, random_walk_path, stopped_norm_pow_closed_form, DiscretePath,
    DistanceMode, Grid, MetricOrder, NormOrder, PointInTheta, TimeChange,
};
use crate::regularization::{penalty, penalty_capped};

fn order(p: u32) -> Result<DistanceMode> {
    Ok(DistanceMode::Order(NormOrder::Metric(MetricOrder::new(p)?)))
}

fn sorted_uniform(rng: &mut impl Rng, k: usize, hi: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..hi)).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

pub fn run(cfg: &ExperimentConfig) -> Result<SuiteReport> {
    let m = &cfg.metric;
    let mut rep = SuiteReport::new("metric-axioms", 1);
    let grid = Grid::new(cfg.horizon, m.steps)?;
    let mode_p = order(cfg.p)?;
    let p = cfg.p as f64;
    let mut rng = split_rng(cfg.seed, 100, 0);

    let points: Vec<[PointInTheta; 3]> = (0..m.samples)
        .map(|_| {
            Ok([
                random_point(grid, cfg.dim, m.scale, cfg.horizon, &mut rng)?,
                random_point(grid, cfg.dim, m.scale, cfg.horizon, &mut rng)?,
                random_point(grid, cfg.dim, m.scale, cfg.horizon, &mut rng)?,
            ])
        })
        .collect::<Result<_>>()?;

    let mut asym = 0usize;
    let mut worst_tri = f64::NEG_INFINITY;
    let mut worst_dom = f64::NEG_INFINITY;
    let dom_c = (1.0 + cfg.horizon).powf(1.0 / p);
    let mut csv = String::from("triple,d_ab,d_bc,d_ac,triangle_slack,domination_ratio\n");
    for (i, [a, b, c]) in points.iter().enumerate() {
        let ab = distance(a, b, mode_p)?;
        let ba = distance(b, a, mode_p)?;
        let bc = distance(b, c, mode_p)?;
        let ac = distance(a, c, mode_p)?;
        if ab.to_bits() != ba.to_bits() {
            asym += 1;
        }
        let excess = ac - ab - bc;
        worst_tri = worst_tri.max(excess);
        let mut ratio = 0.0f64;
        for (x, y, dp) in [(a, b, ab), (b, c, bc), (a, c, ac)] {
            let dinf = distance(x, y, DistanceMode::Infinity)?;
            worst_dom = worst_dom.max(dp - dom_c * dinf - 1e-12 * (1.0 + dp));
            if dinf > 0.0 {
                ratio = ratio.max(dp / dinf);
            }
        }
        let _ = writeln!(csv, "{i},{ab:.17e},{bc:.17e},{ac:.17e},{:.17e},{ratio:.17e}", ab + bc - ac);
    }
    rep.hard("symmetry", asym == 0, format!("{asym} asymmetric pairs of {}", m.samples), json!({ "asymmetric": asym }));
    rep.hard(
        "triangle",
        worst_tri <= 1e-10,
        format!("largest d(a,c) − d(a,b) − d(b,c) = {worst_tri:.3e} (slack 1e-10)"),
        json!({ "worst_excess": num(worst_tri) }),
    );
    rep.hard(
        "domination",
        worst_dom <= 0.0,
        format!("d_p ≤ (1+T)^(1/p) d_∞ on {} pairs; worst excess {worst_dom:.3e}", 3 * m.samples),
        json!({ "constant": dom_c, "worst_excess": num(worst_dom) }),
    );
    rep.table("triples", csv);

    // |d_p − d_∞| along increasing p
    let mut worst_rise = f64::NEG_INFINITY;
    let mut lim_csv = String::from("pair,order,d_p,d_inf,abs_diff\n");
    for (i, [a, b, _]) in points.iter().take(m.limit_pairs).enumerate() {
        let dinf = distance(a, b, DistanceMode::Infinity)?;
        let mut prev = f64::INFINITY;
        for &q in &m.orders {
            let dq = distance(a, b, order(q)?)?;
            let diff = (dq - dinf).abs();
            worst_rise = worst_rise.max(diff - prev);
            prev = diff;
            let _ = writeln!(lim_csv, "{i},{q},{dq:.17e},{dinf:.17e},{diff:.17e}");
        }
    }
    rep.hard(
        "limit-in-p",
        worst_rise <= 1e-6,
        format!("|d_p − d_∞| nonincreasing over p ∈ {:?}; largest rise {worst_rise:.3e} (tolerance 1e-6)", m.orders),
        json!({ "worst_rise": num(worst_rise) }),
    );
    rep.table("limit", lim_csv);

    // stopped closed form
    let mut worst_cf = 0.0f64;
    let mut rng_cf = split_rng(cfg.seed, 101, 0);
    for [a, ..] in points.iter().take(m.limit_pairs) {
        let full = random_walk_path(grid, cfg.dim, m.scale, &mut rng_cf)?;
        let t = a.t();
        let direct = path_norm(&full, p, Some(t))?.powf(p);
        let closed = stopped_norm_pow_closed_form(&full.to_pw(), t, p, cfg.horizon);
        worst_cf = worst_cf.max((direct - closed).abs() / (1.0 + closed.abs()));
    }
    rep.hard(
        "stopped-closed-form",
        worst_cf <= 1e-12,
        format!("stopped norm against the closed form, worst relative error {worst_cf:.3e}"),
        json!({ "worst_error": worst_cf }),
    );

    // η_{s∧ℓ(·)} against η_{ℓ(t∧·)}
    let mut worst_id = 0.0f64;
    for _ in 0..m.samples {
        let t = rng.random_range(0.05..cfg.horizon);
        let s = rng.random_range(0.05..cfg.horizon);
        let xs = sorted_uniform(&mut rng, 3, t);
        let ys = sorted_uniform(&mut rng, xs.len(), s);
        let knots: Vec<(f64, f64)> =
            xs.into_iter().zip(ys).filter(|&(x, y)| x > 0.0 && x < t && y > 0.0 && y < s).collect();
        let ell = TimeChange::new(t, s, &knots)?;
        let eta = random_walk_path(grid, cfg.dim, m.scale, &mut rng)?.to_pw();
        let omega = random_walk_path(grid, cfg.dim, m.scale, &mut rng)?.to_pw();
        let a = penalty(s, &eta, t, &omega, &ell, p, cfg.horizon)?;
        let b = penalty_capped(s, &eta, t, &omega, &ell, p, cfg.horizon)?;
        worst_id = worst_id.max((a - b).abs());
    }
    rep.hard(
        "time-change-identity",
        worst_id <= 1e-10,
        format!("‖η_(s∧ℓ) − ω‖ against ‖η_(ℓ(t∧·)) − ω‖ on {} draws, worst gap {worst_id:.3e}", m.samples),
        json!({ "worst_gap": worst_id }),
    );

    // flat continuation
    let mut concat_bad = 0usize;
    let zero = DiscretePath::zero(grid, cfg.dim);
    for [a, ..] in points.iter().take(m.limit_pairs) {
        let full = a.path();
        let k = grid.snap(a.t())?;
        let joined = concat(full, a.t(), &zero)?;
        if joined.values() != full.stopped_at(k).values() {
            concat_bad += 1;
        }
    }
    rep.hard("concat-zero", concat_bad == 0, format!("{concat_bad} mismatches"), json!({ "mismatches": concat_bad }));
    Ok(rep)
}

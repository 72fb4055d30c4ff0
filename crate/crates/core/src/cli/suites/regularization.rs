use std::fmt::Write as _;

use rayon::prelude::*;
use serde_json::json;

use crate::cli::config::ExperimentConfig;
use crate::cli::report::{num, SuiteReport};
use crate::control_bench::split_rng;
use crate::error::Result;
use crate::functional::catalog;
use crate::path_space::{random_walk_path, Grid, PwPath};
use crate::regularization::{delta_n, origin_constant, regularize, Direction, RegParams, RegularizationResult};

struct Point {
    label: &'static str,
    s: f64,
    eta: PwPath,
}

fn points(cfg: &ExperimentConfig) -> Result<Vec<Point>> {
    let d = cfg.dim;
    let t = cfg.horizon;
    let mut rng = split_rng(cfg.seed, 200, 0);
    let walk = random_walk_path(Grid::new(t, 16)?, d, 1.0, &mut rng)?.to_pw();
    Ok(vec![
        Point { label: "origin", s: 0.0, eta: PwPath::zero(d) },
        Point { label: "ramp", s: 0.5 * t, eta: PwPath::linear(d, vec![0.0, t], [vec![0.0; d], vec![1.0; d]].concat()) },
        Point { label: "walk", s: 0.75 * t, eta: walk },
    ])
}

pub fn run(cfg: &ExperimentConfig) -> Result<SuiteReport> {
    let r = &cfg.regularization;
    let p = cfg.p as f64;
    let t = cfg.horizon;
    let params = RegParams::new(p, t);
    let pts = points(cfg)?;
    let mut rep = SuiteReport::new("regularization", 2);
    let mut csv = String::from("functional,point,direction,n,value,u,gap,certified,delta_n,rho_delta_n,deviation\n");

    for name in &r.functionals {
        let u = catalog(name, t, cfg.dim)?;
        let b_inf = u.bound();
        let mut jobs = Vec::new();
        for (pi, _) in pts.iter().enumerate() {
            for dir in [Direction::Sub, Direction::Super] {
                for &n in &r.schedule {
                    jobs.push((pi, dir, n));
                }
            }
        }
        let results: Vec<RegularizationResult> = jobs
            .par_iter()
            .map(|&(pi, dir, n)| regularize(u.as_ref(), n, pts[pi].s, &pts[pi].eta, dir, &r.search, params))
            .collect::<Result<_>>()?;

        let mut mono_bad = Vec::new();
        let mut bound_bad = Vec::new();
        let mut prune_bad = 0usize;
        let mut certified = 0usize;
        let mut conv_rows = Vec::new();
        for (pi, pt) in pts.iter().enumerate() {
            let u0 = u.eval(pt.s, &pt.eta.stopped(pt.s));
            for dir in [Direction::Sub, Direction::Super] {
                let seq: Vec<&RegularizationResult> = jobs
                    .iter()
                    .zip(&results)
                    .filter(|((i, d, _), _)| *i == pi && *d == dir)
                    .map(|(_, res)| res)
                    .collect();
                let sign = dir.sign();
                for w in seq.windows(2) {
                    // sub: nonincreasing in n; super: nondecreasing
                    let rise = sign * (w[1].value - w[0].value);
                    if rise > 2.0 * (w[0].gap + w[1].gap) {
                        mono_bad.push(json!({ "point": pt.label, "direction": dir, "n": [w[0].n, w[1].n], "rise": rise }));
                    }
                }
                for res in &seq {
                    // u ≤ u^n ≤ ‖u‖∞ on the sub side, mirrored on the super side
                    let sandwich = sign * (u0 - res.value) <= 2.0 * res.gap + 1e-12;
                    let capped = b_inf.is_none_or(|b| res.value.abs() <= b + 2.0 * res.gap + 1e-12);
                    if !(sandwich && capped) {
                        bound_bad.push(json!({ "point": pt.label, "direction": dir, "n": res.n,
                                               "value": res.value, "u": u0, "gap": res.gap }));
                    }
                    if res.certified {
                        certified += 1;
                        let inside = res.prune.contains(pt.s, &pt.eta, res.t_hat, &res.omega_hat, &res.ell_hat, p, 1e-9);
                        if !inside {
                            prune_bad += 1;
                        }
                    }
                    let (dn, rho) = match (b_inf, u.modulus()) {
                        (Some(b), Some(m)) => {
                            let dn = delta_n(origin_constant(1.0 + 2.0 * b, p, t), res.n, p);
                            (dn, m.apply(dn))
                        }
                        _ => (f64::NAN, f64::NAN),
                    };
                    let dev = (res.value - u0).abs();
                    let _ = writeln!(
                        csv,
                        "{name},{},{dir:?},{},{:.17e},{u0:.17e},{:.3e},{},{dn:.6e},{rho:.6e},{dev:.6e}",
                        pt.label, res.n, res.value, res.gap, res.certified
                    );
                    if pt.label == "origin" {
                        conv_rows.push((dir, res.n, dev, rho, res.gap));
                    }
                }
            }
        }
        rep.hard(
            &format!("monotone/{name}"),
            mono_bad.is_empty(),
            format!("{} monotonicity breaks beyond twice the certified gaps", mono_bad.len()),
            json!({ "breaks": mono_bad }),
        );
        rep.hard(
            &format!("bound/{name}"),
            bound_bad.is_empty(),
            format!("{} runs outside u ≤ u^n ≤ ‖u‖∞ (twice the gap allowed)", bound_bad.len()),
            json!({ "violations": bound_bad }),
        );
        rep.hard(
            &format!("prune-box/{name}"),
            prune_bad == 0,
            format!("{prune_bad} of {certified} certified optimizers outside the search box"),
            json!({ "certified": certified, "outside": prune_bad }),
        );
        if u.modulus().is_some() && b_inf.is_some() {
            let worst = conv_rows
                .iter()
                .map(|&(_, _, dev, rho, gap)| dev - rho - gap)
                .fold(f64::NEG_INFINITY, f64::max);
            rep.hard(
                &format!("convergence/{name}"),
                worst <= 0.0,
                format!("|u^n(0) − u(0)| − ρ(δ_n) − gap at most {worst:.3e}"),
                json!({ "worst_excess": num(worst) }),
            );
            let shrinking = [Direction::Sub, Direction::Super].iter().all(|dir| {
                let devs: Vec<(f64, f64)> =
                    conv_rows.iter().filter(|row| row.0 == *dir).map(|row| (row.2, row.4)).collect();
                devs.windows(2).all(|w| w[1].0 <= w[0].0 + 2.0 * (w[0].1 + w[1].1))
            });
            rep.soft(
                &format!("deviation-sequence/{name}"),
                shrinking,
                "deviation at the origin nonincreasing in n up to twice the gaps",
                json!(null),
            );
            let n_max = r.schedule.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let fin = conv_rows
                .iter()
                .filter(|row| row.1 == n_max)
                .map(|row| row.2)
                .fold(0.0f64, f64::max);
            rep.hard(
                &format!("final-deviation/{name}"),
                fin <= r.final_deviation,
                format!("|u^n(0) − u(0)| = {fin:.4} at n = {n_max} (limit {})", r.final_deviation),
                json!({ "deviation": fin, "n": n_max }),
            );
        }
    }
    rep.table("values", csv);
    Ok(rep)
}

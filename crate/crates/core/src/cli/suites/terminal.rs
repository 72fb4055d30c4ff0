use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde_json::json;

use crate::cli::config::ExperimentConfig;
use crate::cli::report::{num, SuiteReport};
use crate::control_bench::split_rng;
use crate::error::Result;
use crate::functional::catalog;
use crate::regularization::{
    delta_prime_n, origin_constant, partition, terminal_ranges, Direction, FiniteDim, RegParams,
};

struct Case {
    i: usize,
    jumps: Vec<f64>,
    x: Vec<f64>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<SuiteReport> {
    let tc = &cfg.terminal;
    let search = cfg.regularization.search;
    let p = cfg.p as f64;
    let t = cfg.horizon;
    let d = cfg.dim;
    let params = RegParams::new(p, t);
    let mut rep = SuiteReport::new("terminal-regularity", 3);
    let mut dev_csv = String::from("functional,n,i,x_norm,deviation,bound,gap\n");
    let mut reg_csv = String::from("functional,n,i,s,s2,difference,bound,gap\n");
    let mut semi_csv = String::from("functional,n,i,k,at_s_i,neighbour,gap\n");

    for (fi, name) in tc.functionals.iter().enumerate() {
        let u = catalog(name, t, d)?;
        let b = u.bound().unwrap_or(1.0);
        let rho = u.modulus();
        let mut dev_bad = 0usize;
        let mut dev_worst = f64::NEG_INFINITY;
        let mut reg_bad = 0usize;
        let mut reg_worst = f64::NEG_INFINITY;
        let mut semi_bad = 0usize;
        let mut semi_worst = f64::NEG_INFINITY;
        let mut lip = Vec::new();
        for (ni, &n) in tc.schedule.iter().enumerate() {
            let part = partition(n, cfg.regularization.a, t, p)?;
            let (i_max, x_max) = terminal_ranges(n, p);
            let i_top = i_max.min(part.m).max(1);
            let mut rng = split_rng(cfg.seed, 300 + fi as u64, ni as u64);
            let cases: Vec<Case> = (0..tc.samples)
                .map(|_| {
                    let i = rng.random_range(1..=i_top);
                    let mut all: Vec<f64> = (0..i * d).map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal)).collect();
                    let norm = all.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p);
                    if norm > x_max {
                        all.iter_mut().for_each(|v| *v *= x_max / norm);
                    }
                    let x = all.split_off((i - 1) * d);
                    Case { i, jumps: all, x }
                })
                .collect();
            let c = origin_constant(1.0 + 2.0 * b, p, t);
            let dprime = delta_prime_n(c, n, p);
            let allowance = rho.map_or(f64::INFINITY, |m| m.apply(dprime));
            let rows = cases
                .par_iter()
                .enumerate()
                .map(|(ci, case)| -> Result<_> {
                    let skel = part.skeleton(case.i, d, &case.jumps)?;
                    let s_i = part.s(case.i);
                    let fd = FiniteDim::new(u.clone(), n, skel.clone(), Direction::Sub, search, params);
                    let eta = crate::path_space::step_path(&skel, &case.x);
                    let x_norm = skel.tuple_norm(&case.x, p)?;
                    let at_t = fd.eval_full(t, &case.x)?;
                    let dev = at_t.value - u.eval(t, &eta);

                    let mut r2 = split_rng(cfg.seed, 310 + fi as u64, (ni * 1000 + ci) as u64);
                    let mut pairs = Vec::new();
                    for _ in 0..tc.time_pairs.div_ceil(tc.samples.max(1)) {
                        let s1 = r2.random_range(s_i..t);
                        let s2 = r2.random_range(s_i..t);
                        let a = fd.eval_full(s1, &case.x)?;
                        let b2 = fd.eval_full(s2, &case.x)?;
                        pairs.push((s1, s2, (a.value - b2.value).abs(), n * (s1 - s2).abs().powf(2.0 / (3.0 * p + 3.0)), a.gap + b2.gap));
                    }

                    let base = fd.eval_full(s_i, &case.x)?;
                    let mut semi = Vec::new();
                    for k in 8..=12 {
                        let h = 2f64.powi(-k);
                        let xs: Vec<f64> = case.x.iter().map(|v| v + h).collect();
                        let nb = fd.eval_full(s_i + h, &xs)?;
                        semi.push((k, nb.value, base.gap + nb.gap));
                    }

                    let hx = 0.1;
                    let xs: Vec<f64> = case.x.iter().map(|v| v + hx).collect();
                    let moved = fd.eval_full(t, &xs)?;
                    let ratio = (moved.value - at_t.value).abs() / (hx * (d as f64).sqrt());
                    Ok((case.i, x_norm, dev, at_t.gap, pairs, base.value, semi, ratio))
                })
                .collect::<Result<Vec<_>>>()?;
            for (i, x_norm, dev, gap, pairs, base, semi, ratio) in rows {
                let ex = (-dev - gap).max(dev - allowance - gap);
                dev_worst = dev_worst.max(ex);
                if ex > 0.0 {
                    dev_bad += 1;
                }
                let _ = writeln!(dev_csv, "{name},{n},{i},{x_norm:.6e},{dev:.6e},{allowance:.6e},{gap:.3e}");
                for (s1, s2, diff, bound, g) in pairs {
                    let ex = diff - bound - g;
                    reg_worst = reg_worst.max(ex);
                    if ex > 0.0 {
                        reg_bad += 1;
                    }
                    let _ = writeln!(reg_csv, "{name},{n},{i},{s1:.6},{s2:.6},{diff:.6e},{bound:.6e},{g:.3e}");
                }
                let min_nb = semi.iter().map(|s| s.1 + s.2).fold(f64::INFINITY, f64::min);
                let ex = base - min_nb - tc.semicontinuity_tolerance;
                semi_worst = semi_worst.max(ex);
                if ex > 0.0 {
                    semi_bad += 1;
                }
                for (k, v, g) in semi {
                    let _ = writeln!(semi_csv, "{name},{n},{i},{k},{base:.9e},{v:.9e},{g:.3e}");
                }
                lip.push(json!({ "n": n, "i": i, "ratio": ratio }));
            }
        }
        rep.hard(
            &format!("terminal-deviation/{name}"),
            dev_bad == 0,
            format!("{dev_bad} samples outside [0, ρ(δ′_n)] up to the gap; worst excess {dev_worst:.3e}"),
            json!({ "violations": dev_bad, "worst_excess": num(dev_worst) }),
        );
        rep.hard(
            &format!("time-regularity/{name}"),
            reg_bad == 0,
            format!("{reg_bad} pairs above n|Δs|^(2/(3p+3)) + gap; worst excess {reg_worst:.3e}"),
            json!({ "violations": reg_bad, "worst_excess": num(reg_worst) }),
        );
        rep.hard(
            &format!("semicontinuity/{name}"),
            semi_bad == 0,
            format!(
                "{semi_bad} points where the value at s_i exceeds nearby values by more than gap + {}; worst {semi_worst:.3e}",
                tc.semicontinuity_tolerance
            ),
            json!({ "violations": semi_bad, "worst_excess": num(semi_worst) }),
        );
        rep.soft(&format!("lipschitz-in-x/{name}"), true, "difference quotients at T with |Δx| = 0.1", json!(lip));
    }
    rep.table("deviation", dev_csv);
    rep.table("time-regularity", reg_csv);
    rep.table("semicontinuity", semi_csv);
    Ok(rep)
}

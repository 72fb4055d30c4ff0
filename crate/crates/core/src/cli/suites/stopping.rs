use std::fmt::Write as _;
use std::sync::Arc;

use serde_json::json;

use crate::cli::config::ExperimentConfig;
use crate::cli::report::SuiteReport;
use crate::error::Result;
use crate::functional::{catalog, FnFunctional, SharedFunctional};
use crate::nonlinear_expectation::{
    build_lattice, enumerate_stopping, hitting_index, Mode, NodeRule, NodeView, PayoffOnTree,
};
use crate::path_space::PwPath;
use crate::regularization::Direction;
use crate::stopping_viscosity::{
    contact_point, nonlinearity, sample_points, snell_envelope, visc_check, Paraboloid, NON_SOLUTIONS, SOLUTIONS,
};

/// Pseudo-random adapted reward: a hash of the rounded history.
fn hashed(salt: u64) -> impl Fn(&NodeView) -> f64 + Send + Sync + Copy {
    move |v: &NodeView| {
        let h = v.values.iter().fold(salt, |h, x| h.wrapping_mul(31).wrapping_add((x * 1e6).round() as i64 as u64));
        ((h.wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 11) as f64 / (1u64 << 53) as f64) - 0.5 + v.t
    }
}

fn shared(name: &str, f: impl Fn(f64, &PwPath) -> f64 + Send + Sync + 'static) -> SharedFunctional {
    Arc::new(FnFunctional::new(name, f))
}

pub fn run(cfg: &ExperimentConfig) -> Result<SuiteReport> {
    let s = &cfg.stopping;
    let mut rep = SuiteReport::new("stopping-jets", 5);

    let delta = 0.6 * cfg.horizon;
    let mut snell_csv = String::from("steps,salt,mode,snell,enumeration,policies\n");
    for n in 1..=s.exhaustive_depth {
        let model = build_lattice(s.bound, cfg.horizon, n, cfg.dim, Default::default())?;
        for j in 0..s.random_payoffs as u64 {
            let salt = cfg.seed.wrapping_mul(1000) + j;
            let x = hashed(salt);
            for mode in [Mode::Sup, Mode::Inf] {
                let env = snell_envelope(&model, &PayoffOnTree::path(x), delta, mode)?;
                let rule = |v: &NodeView| {
                    let hit = (0..=v.k).any(|i| hitting_index(delta, v.time(i), v.node(i)));
                    if v.k == n || hit {
                        NodeRule::Absorb(x(v))
                    } else {
                        NodeRule::Obstacle(x(v))
                    }
                };
                let en = enumerate_stopping(&model, mode, &rule)?;
                let gap = (env.value - en.value).abs();
                rep.hard(
                    &format!("snell-vs-enumeration/N={n}/salt={salt}/{mode:?}"),
                    gap <= 1e-12,
                    format!("V_0 = {:.15} against {} stopping policies {:.15}", env.value, en.policies, en.value),
                    json!({ "gap": gap }),
                );
                let _ = writeln!(snell_csv, "{n},{salt},{mode:?},{:.17e},{:.17e},{}", env.value, en.value, en.policies);
            }
        }
    }
    rep.table("snell", snell_csv);

    let mut contact_csv = String::from("instance,kind,delta,alpha,beta,gamma,found,t_star,before_localization\n");
    let minus_t = catalog("drifting-minus-t", cfg.horizon, 1)?;
    let mut strict = Vec::new();
    for &d in &[0.5, 0.25] {
        for &a in &[-0.5, 0.0, 0.5, 1.0] {
            for &g in &[0.0, 0.5, 1.0] {
                strict.push((minus_t.clone(), d, Paraboloid::scalar(a, 0.0, g)));
            }
        }
    }
    strict.truncate(20);
    let mut no_gap: Vec<(SharedFunctional, f64, Paraboloid)> = Vec::new();
    for &d in &[0.5, 0.25] {
        no_gap.push((catalog("linear", cfg.horizon, 1)?, d, Paraboloid::scalar(0.0, 1.0, 0.0)));
        no_gap.push((catalog("heat", cfg.horizon, 1)?, d, Paraboloid::scalar(-1.0, 0.0, 2.0)));
        no_gap.push((catalog("time", cfg.horizon, 1)?, d, Paraboloid::scalar(1.0, 0.0, 0.0)));
        no_gap.push((shared("minus-t-squared", |t, _| -t * t), d, Paraboloid::scalar(-1.0, 0.0, 0.0)));
        no_gap.push((catalog("time", cfg.horizon, 1)?, d, Paraboloid::zero(1)));
    }
    let mut strict_ok = 0;
    let mut none_ok = 0;
    for (kind, list) in [("strict-gap", &strict), ("no-gap", &no_gap)] {
        for (i, (u, d, phi)) in list.iter().enumerate() {
            let model = build_lattice(s.bound, *d, s.contact_steps, 1, Default::default())?;
            let c = contact_point(&model, u, phi, *d)?;
            let ok = match (&c, kind) {
                (Some(c), "strict-gap") => c.before_localization && c.t_star < *d,
                (None, "no-gap") => true,
                _ => false,
            };
            if ok && kind == "strict-gap" {
                strict_ok += 1;
            } else if ok {
                none_ok += 1;
            }
            let _ = writeln!(
                contact_csv,
                "{i},{kind},{d},{},{},{},{},{},{}",
                phi.alpha,
                phi.beta[0],
                phi.gamma[0],
                c.is_some(),
                c.as_ref().map_or(f64::NAN, |c| c.t_star),
                c.as_ref().is_some_and(|c| c.before_localization)
            );
        }
    }
    rep.hard(
        "contact/strict-gap",
        strict_ok == strict.len(),
        format!("{strict_ok} of {} strict-gap instances return a contact before H_δ", strict.len()),
        json!({ "found": strict_ok, "instances": strict.len() }),
    );
    rep.hard(
        "contact/no-gap",
        none_ok == no_gap.len(),
        format!("{none_ok} of {} no-gap instances return none", no_gap.len()),
        json!({ "none": none_ok, "instances": no_gap.len() }),
    );
    rep.table("contacts", contact_csv);

    let points = sample_points(&crate::stopping_viscosity::SampleSpec { horizon: cfg.horizon, ..s.samples.clone() }, 1)?;
    for (f, g) in SOLUTIONS {
        let u = catalog(f, cfg.horizon, 1)?;
        let g = nonlinearity(g, 1, cfg.horizon)?;
        for dir in [Direction::Sub, Direction::Super] {
            let r = visc_check(&u, &g, dir, &points, &s.visc)?;
            rep.hard(
                &format!("visc/{f}/{dir:?}"),
                r.passed,
                r.verdict.clone(),
                json!({ "jets": r.jets_found, "candidates": r.candidates_tried, "witness": r.witness }),
            );
        }
    }
    for ns in NON_SOLUTIONS {
        let u = catalog(ns.functional, cfg.horizon, 1)?;
        let g = nonlinearity(ns.nonlinearity, 1, cfg.horizon)?;
        let r = visc_check(&u, &g, ns.direction, &points, &s.visc)?;
        let (a, b, c) = ns.witness;
        let matches = r.witness.as_ref().is_some_and(|w| {
            (w.jet.alpha - a).abs() < 1e-6 && (w.jet.beta[0] - b).abs() < 1e-6 && (w.jet.gamma[0] - c).abs() < 1e-6
        });
        rep.hard(
            &format!("visc-refutes/{}/{:?}", ns.functional, ns.direction),
            !r.passed && matches,
            format!("{}; cataloged witness ({a}, {b}, {c}) reproduced: {matches}", r.verdict),
            json!({ "witness": r.witness }),
        );
    }
    Ok(rep)
}

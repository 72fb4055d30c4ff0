use std::fmt::Write as _;

use serde_json::json;

use crate::cli::config::ExperimentConfig;
use crate::cli::report::{num, SuiteReport};
use crate::error::Result;
use crate::nonlinear_expectation::{
    build_lattice, builtin_payoff, enumerate_strategies, moment_check_exhaustive, solve_tree, sup_expectation, Mode,
    NodeRule, NodeView, StoppingFamily,
};

/// Deterministic adapted payoff mixing every node of the history.
fn scrambled(v: &NodeView) -> f64 {
    (0..=v.k).map(|j| ((j + 1) as f64 * 1.7 * v.node(j)[0] + 0.3 * j as f64).sin()).sum::<f64>() + v.current()[0].powi(2)
}

/// Extrapolates `V(N) ≈ V∞ + c/N` from the two finest depths.
fn richardson(pts: &[(usize, f64)]) -> f64 {
    let [.., (n1, v1), (n2, v2)] = pts else { return pts.last().map_or(f64::NAN, |p| p.1) };
    let (a, b) = (*n1 as f64, *n2 as f64);
    (b * v2 - a * v1) / (b - a)
}

pub fn run(cfg: &ExperimentConfig) -> Result<SuiteReport> {
    let e = &cfg.expectation;
    let t = cfg.horizon;
    let l = e.bound;
    let mut rep = SuiteReport::new("nonlinear-expectation", 4);

    let mut dp_csv = String::from("steps,payoff,mode,dp,tree,enumeration,policies\n");
    for n in 1..=e.exhaustive_depth {
        let model = build_lattice(l, t, n, cfg.dim, e.grids)?.with_depth_cap(e.depth_cap);
        let payoffs: [(&str, &(dyn Fn(&NodeView) -> f64 + Sync)); 2] =
            [("endpoint-squared", &|v: &NodeView| v.current().iter().map(|x| x * x).sum()), ("scrambled", &scrambled)];
        for (name, f) in payoffs {
            for mode in [Mode::Sup, Mode::Inf] {
                let dp = if name == "endpoint-squared" {
                    sup_expectation(&model, &builtin_payoff(name)?, mode)?
                } else {
                    f64::NAN
                };
                let rule = |v: &NodeView| if v.k == n { NodeRule::Absorb(f(v)) } else { NodeRule::Continue };
                let tree = solve_tree(&model, mode, &rule, false)?.value;
                let en = enumerate_strategies(&model, mode, f)?;
                let mut gap = (tree - en.value).abs();
                if dp.is_finite() {
                    gap = gap.max((dp - en.value).abs());
                }
                let tol = 1e-12 * (1.0 + en.value.abs());
                rep.hard(
                    &format!("dp-vs-enumeration/N={n}/{name}/{mode:?}"),
                    gap <= tol,
                    format!("backward induction {tree:.15} against {} strategies {:.15}", en.policies, en.value),
                    json!({ "gap": gap, "policies": en.policies }),
                );
                let _ = writeln!(dp_csv, "{n},{name},{mode:?},{dp:.17e},{tree:.17e},{:.17e},{}", en.value, en.policies);
            }
        }
    }
    rep.table("dp", dp_csv);

    let mut conv = String::from("payoff,steps,value\n");
    let targets = [("endpoint", l * t), ("endpoint-squared", l * l * t * t + l * l * t)];
    for (name, target) in targets {
        let payoff = builtin_payoff(name)?;
        let mut pts = Vec::new();
        for &n in &e.depths {
            let model = build_lattice(l, t, n, cfg.dim, e.grids)?;
            let v = sup_expectation(&model, &payoff, Mode::Sup)?;
            let _ = writeln!(conv, "{name},{n},{v:.17e}");
            pts.push((n, v));
        }
        let ext = richardson(&pts);
        let err = (ext - target).abs() / target.abs();
        rep.hard(
            &format!("limit/{name}"),
            err < e.moment_tolerance,
            format!("extrapolated {ext:.6} against {target:.6}, relative error {:.3}%", 100.0 * err),
            json!({ "values": pts, "extrapolated": num(ext), "target": target, "relative_error": num(err) }),
        );
    }
    rep.table("convergence", conv);

    let model = build_lattice(l, t, e.exhaustive_depth, cfg.dim, e.grids)?.with_depth_cap(e.depth_cap);
    let families = [
        StoppingFamily::Deterministic { time: t },
        StoppingFamily::Deterministic { time: 0.5 * t },
        StoppingFamily::Hitting { delta: e.hitting_delta },
    ];
    for fam in families {
        let r = moment_check_exhaustive(&model, fam)?;
        let label = match fam {
            StoppingFamily::Deterministic { time } => format!("deterministic-{time}"),
            StoppingFamily::Hitting { delta } => format!("hitting-{delta}"),
        };
        rep.hard(
            &format!("moment-bounds/{label}"),
            r.passed,
            format!(
                "{} strategies; worst ratios {:.4} (drift) and {:.4} (second moment); {} violations",
                r.strategies,
                r.max_drift_ratio,
                r.max_second_ratio,
                r.violations.len()
            ),
            json!({ "strategies": r.strategies, "max_drift_ratio": r.max_drift_ratio,
                    "max_second_ratio": r.max_second_ratio, "violations": r.violations }),
        );
    }
    Ok(rep)
}

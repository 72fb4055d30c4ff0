use std::fmt::Write as _;
use std::sync::Arc;

use serde_json::json;

use crate::cli::config::ExperimentConfig;
use crate::cli::report::{num, SuiteReport};
use crate::error::Result;
use crate::functional::{catalog, Offset, SharedFunctional};
use crate::stopping_viscosity::{comparison_experiment, nonlinearity, ComparisonSpec, SampleSpec, SOLUTIONS};

pub fn run(cfg: &ExperimentConfig) -> Result<SuiteReport> {
    let cc = &cfg.comparison;
    let mut rep = SuiteReport::new("comparison", 9);
    let spec = ComparisonSpec {
        samples: SampleSpec {
            points: cc.samples,
            seed: cfg.seed.wrapping_add(900),
            horizon: cfg.horizon,
            t_max: cfg.horizon,
            ..Default::default()
        },
        tolerance: cc.tolerance,
        schedule: cc.schedule.clone(),
        p: cfg.p as f64,
        a: cfg.regularization.a,
        search: cc.search,
        ..Default::default()
    };
    let mut csv = String::from("functional,offset,n,u_reg,v_reg,difference,target,gap,rho_n,bound,within_bound\n");
    for (f, g) in SOLUTIONS {
        let u = catalog(f, cfg.horizon, 1)?;
        let g = nonlinearity(g, 1, cfg.horizon)?;
        for &c in &cc.offsets {
            let v: SharedFunctional = Arc::new(Offset::new(u.clone(), c));
            let r = comparison_experiment(&u, &v, &g, &spec)?;
            rep.hard(
                &format!("pointwise/{f}/c={c}"),
                r.pointwise.passed && r.pointwise.min_margin >= c - cc.tolerance,
                format!("min (v − u) = {:.12} on {} points", r.pointwise.min_margin, r.pointwise.samples),
                json!({ "min_margin": r.pointwise.min_margin, "violations": r.pointwise.violations }),
            );
            let mut worst = f64::NEG_INFINITY;
            for d in &r.diagnostics {
                let excess = d.difference - (-c + 2.0 * d.gap);
                worst = worst.max(excess);
                let _ = writeln!(
                    csv,
                    "{f},{c},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.3e},{:.6e},{:.6e},{}",
                    d.n, d.u_reg, d.v_reg, d.difference, -c + 2.0 * d.gap, d.gap, d.rho_n, d.bound, d.within_bound
                );
            }
            rep.hard(
                &format!("regularized-origin/{f}/c={c}"),
                worst <= 0.0,
                format!("(u^n − v_n)(0) exceeds −c + 2·gap by up to {worst:.4e}"),
                json!({ "worst_excess": num(worst), "diagnostics": r.diagnostics }),
            );
            rep.soft(
                &format!("error-bound/{f}/c={c}"),
                r.diagnostics.iter().all(|d| d.within_bound) && r.bound_decreasing,
                format!("difference within the error bound at every n; bound decreasing: {}", r.bound_decreasing),
                json!({ "c": r.c, "modulus_k": r.modulus_k, "warnings": r.warnings }),
            );
        }
    }
    rep.table("origin", csv);
    Ok(rep)
}

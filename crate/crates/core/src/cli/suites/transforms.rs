use serde_json::json;

use crate::cli::config::ExperimentConfig;
use crate::cli::report::SuiteReport;
use crate::error::Result;
use crate::stopping_viscosity::{
    assumption_audit, discount_round_trip, gbar_chain_check, nonlinearity, AuditSpec, NONLINEARITIES,
};

pub fn run(cfg: &ExperimentConfig) -> Result<SuiteReport> {
    let t = &cfg.transforms;
    let mut rep = SuiteReport::new("transforms", 8);
    let spec = AuditSpec {
        samples: t.samples,
        seed: cfg.seed,
        horizon: cfg.horizon,
        p: cfg.p as f64,
        ..Default::default()
    };
    let mut csv = String::from("nonlinearity,audit_passed,applicable,violations,discount,round_trip_error\n");
    for name in NONLINEARITIES {
        let g = nonlinearity(name, cfg.dim, cfg.horizon)?;
        let audit = assumption_audit(&g, &AuditSpec { samples: t.samples.min(1000), ..spec.clone() })?;
        if audit.passed {
            let chain = gbar_chain_check(&g, &spec)?;
            rep.hard(
                &format!("gbar-chain/{name}"),
                chain.passed,
                format!("{} violations on {} applicable of {} samples", chain.violations, chain.applicable, chain.samples),
                json!({ "applicable": chain.applicable, "violations": chain.violations, "witness": chain.witness }),
            );
            csv.push_str(&format!("{name},true,{},{},,\n", chain.applicable, chain.violations));
        } else {
            rep.soft(
                &format!("gbar-chain/{name}"),
                true,
                "skipped: nonlinearity fails the structural audit",
                json!({ "audit_passed": false }),
            );
            csv.push_str(&format!("{name},false,0,0,,\n"));
        }
        for &l in &t.discounts {
            let rt = discount_round_trip(&g, l, &spec)?;
            rep.hard(
                &format!("discount-round-trip/{name}/L={l}"),
                rt.max_error <= t.round_trip_tolerance,
                format!("max relative error {:.3e} over {} samples", rt.max_error, rt.samples),
                json!({ "max_error": rt.max_error }),
            );
            csv.push_str(&format!("{name},,,,{l},{:.17e}\n", rt.max_error));
        }
    }
    rep.table("transforms", csv);
    Ok(rep)
}

use rand::Rng;
use serde_json::json;

use crate::cli::config::ExperimentConfig;
use crate::cli::report::SuiteReport;
use crate::control_bench::split_rng;
use crate::error::Result;
use crate::regularization::{power_bound_slack, step_v_constant};

pub fn run(cfg: &ExperimentConfig) -> Result<SuiteReport> {
    let s = &cfg.step;
    let mut rep = SuiteReport::new("step-inequality", 7);
    let mut csv = String::from("dim,p,constant,samples,violations,min_slack\n");
    for &d in &s.dims {
        for &q in &s.orders {
            let p = q as f64;
            let c = step_v_constant(p);
            let mut rng = split_rng(cfg.seed, 700 + q as u64, d as u64);
            let mut violations = 0usize;
            let mut min_slack = f64::INFINITY;
            for _ in 0..s.samples {
                let a: Vec<f64> = (0..d).map(|_| rng.random_range(-s.range..s.range)).collect();
                let b: Vec<f64> = (0..d).map(|_| rng.random_range(-s.range..s.range)).collect();
                let slack = power_bound_slack(&a, &b, p, c);
                min_slack = min_slack.min(slack);
                if slack < 0.0 {
                    violations += 1;
                }
            }
            csv.push_str(&format!("{d},{q},{c},{},{violations},{min_slack:.17e}\n", s.samples));
            rep.hard(
                &format!("d{d}-p{q}"),
                violations == 0,
                format!("{violations} violations in {} draws with C = {c}", s.samples),
                json!({ "violations": violations, "min_slack": min_slack, "constant": c }),
            );
        }
    }
    rep.table("draws", csv);
    Ok(rep)
}

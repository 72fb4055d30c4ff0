use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::report::SuiteReport;
use super::suites::{SuiteInfo, SUITES};
use crate::error::{config, Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub suite: String,
    pub seed: u64,
    pub suites: Vec<SuiteReport>,
    pub runtime_seconds: f64,
    pub passed: bool,
}

pub fn find_suite(name: &str) -> Result<&'static SuiteInfo> {
    SUITES.iter().find(|s| s.name == name).ok_or_else(|| {
        let known: Vec<&str> = SUITES.iter().map(|s| s.name).collect();
        Error::Configuration(format!("unknown suite `{name}`; known: {}", known.join(", ")))
    })
}

/// Runs one suite and stamps its runtime and budget.
pub fn run_suite(info: &SuiteInfo, cfg: &ExperimentConfig) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut rep = (info.run)(cfg)?;
    rep.runtime_seconds = start.elapsed().as_secs_f64();
    rep.budget_seconds = info.budget_seconds;
    rep.over_budget = rep.runtime_seconds > info.budget_seconds;
    Ok(rep)
}

/// Runs the configured suite (or all of them) sequentially, inside a pool of
/// `jobs` threads when given.
pub fn run(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<RunSummary> {
    let selected: Vec<&SuiteInfo> = if cfg.suite == "all" { SUITES.iter().collect() } else { vec![find_suite(&cfg.suite)?] };
    let body = || -> Result<RunSummary> {
        let start = Instant::now();
        let mut suites = Vec::new();
        for info in selected {
            suites.push(run_suite(info, cfg)?);
        }
        let passed = suites.iter().all(|s| s.passed);
        Ok(RunSummary {
            suite: cfg.suite.clone(),
            seed: cfg.seed,
            suites,
            runtime_seconds: start.elapsed().as_secs_f64(),
            passed,
        })
    };
    match jobs {
        Some(0) => config("--jobs must be at least 1"),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::Configuration(format!("thread pool: {e}")))?
            .install(body),
        None => body(),
    }
}

/// Writes `summary.json` and `<suite>-<table>.csv` files.
pub fn write_outputs(summary: &RunSummary, out: &Path) -> Result<()> {
    let io = |source| Error::Io { path: out.to_path_buf(), source };
    std::fs::create_dir_all(out).map_err(io)?;
    for s in &summary.suites {
        for t in &s.tables {
            let path = out.join(format!("{}-{}.csv", s.suite, t.name));
            std::fs::write(&path, &t.body).map_err(|source| Error::Io { path: path.clone(), source })?;
        }
    }
    let path = out.join("summary.json");
    let text = serde_json::to_string_pretty(summary).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|source| Error::Io { path, source })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(suite: &str) -> ExperimentConfig {
        let mut cfg = ExperimentConfig { suite: suite.into(), ..Default::default() };
        cfg.metric.samples = 100;
        cfg.metric.limit_pairs = 20;
        cfg.step.samples = 2000;
        cfg.transforms.samples = 200;
        cfg
    }

    fn tables(s: &RunSummary) -> Vec<(String, String)> {
        s.suites.iter().flat_map(|r| r.tables.iter().map(|t| (t.name.clone(), t.body.clone()))).collect()
    }

    #[test]
    fn tables_do_not_depend_on_threads() {
        for suite in ["metric-axioms", "step-inequality", "transforms"] {
            let a = run(&quick(suite), Some(1)).unwrap();
            let b = run(&quick(suite), Some(3)).unwrap();
            assert_eq!(tables(&a), tables(&b), "{suite}");
            assert!(!tables(&a).is_empty());
        }
    }

    #[test]
    fn outputs_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let s = run(&quick("step-inequality"), None).unwrap();
        write_outputs(&s, dir.path()).unwrap();
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        assert_eq!(json["suites"][0]["criterion"], 7);
        assert!(dir.path().join("step-inequality-draws.csv").exists());
    }

    #[test]
    fn rejects_unknown_suite_and_zero_jobs() {
        assert!(matches!(run(&quick("nope"), None), Err(Error::Configuration(_))));
        assert!(run(&quick("step-inequality"), Some(0)).is_err());
    }
}

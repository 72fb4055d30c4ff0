//! One test per acceptance criterion, each running its suite at the default
//! configuration. Output: `criterion N <suite>: PASS|FAIL` plus failed checks.

use ppde::cli::{run_suite, ExperimentConfig, SUITES};

fn criterion(n: usize) {
    let info = SUITES.iter().find(|s| s.criterion == n).expect("suite for criterion");
    let rep = run_suite(info, &ExperimentConfig::default()).expect("suite runs");
    let verdict = if rep.passed { "PASS" } else { "FAIL" };
    println!("criterion {n} {}: {verdict} ({:.1}s, budget {}s)", info.name, rep.runtime_seconds, info.budget_seconds);
    let failed: Vec<String> = rep.failures().iter().map(|c| format!("{}: {}", c.id, c.detail)).collect();
    for f in &failed {
        println!("    {f}");
    }
    assert!(rep.passed, "criterion {n} ({}) failed:\n{}", info.name, failed.join("\n"));
    assert!(!rep.over_budget, "criterion {n} ran {:.1}s over its {}s budget", rep.runtime_seconds, info.budget_seconds);
}

#[test]
fn criterion_01_metric_axioms() {
    criterion(1);
}

#[test]
fn criterion_02_regularization() {
    criterion(2);
}

#[test]
fn criterion_03_terminal_regularity() {
    criterion(3);
}

#[test]
fn criterion_04_nonlinear_expectation() {
    criterion(4);
}

#[test]
fn criterion_05_stopping_jets() {
    criterion(5);
}

#[test]
fn criterion_06_classical_residual() {
    criterion(6);
}

#[test]
fn criterion_07_step_inequality() {
    criterion(7);
}

#[test]
fn criterion_08_transforms() {
    criterion(8);
}

#[test]
fn criterion_09_comparison() {
    criterion(9);
}

#[test]
fn criterion_10_control_moduli() {
    criterion(10);
}

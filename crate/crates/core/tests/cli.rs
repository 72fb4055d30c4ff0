use std::process::Command;

fn ppde() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ppde"))
}

#[test]
fn lists_all_suites() {
    let out = ppde().arg("--list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), ppde::cli::SUITES.len());
    assert!(text.contains("step-inequality"));
}

#[test]
fn bad_config_exits_two_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "seed = 5\n\np = 4\n").unwrap();
    let out = ppde().arg("--validate").arg("-c").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains(":3: "), "{err}");

    std::fs::write(&path, "seed = \"x\"\n").unwrap();
    let out = ppde().arg("--validate").arg("-c").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains(":1: "));
}

#[test]
fn unknown_suite_exits_two() {
    let out = ppde().args(["--suite", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runs_a_suite_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = ppde()
        .args(["--suite", "step-inequality", "--jobs", "1", "--seed", "11", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().contains("PASS"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 11);
    assert_eq!(summary["passed"], true);
}

#[test]
fn print_config_round_trips() {
    let out = ppde().args(["--print-config", "--seed", "9"]).output().unwrap();
    assert!(out.status.success());
    let cfg = ppde::cli::parse(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(cfg.seed, 9);
}

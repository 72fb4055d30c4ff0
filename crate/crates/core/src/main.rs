use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use ppde::cli::{self, Diagnostic, ExperimentConfig, SUITES};
use ppde::Error;

/// Runs the numerical experiment suites and writes CSV tables plus a JSON summary.
#[derive(Debug, Parser)]
#[command(name = "ppde", version)]
struct Args {
    /// TOML experiment file; defaults are used for anything it leaves out
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// suite to run, or `all`
    #[arg(short, long)]
    suite: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// output directory
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// worker threads (default: all cores)
    #[arg(short, long)]
    jobs: Option<usize>,
    /// check the configuration and exit
    #[arg(long)]
    validate: bool,
    /// list suites and exit
    #[arg(long)]
    list: bool,
    /// print the effective configuration as TOML and exit
    #[arg(long)]
    print_config: bool,
}

fn report_diagnostics(file: &str, diags: &[Diagnostic]) {
    for d in diags {
        match d.line {
            Some(l) => eprintln!("{file}:{l}: {}: {}", d.key, d.message),
            None => eprintln!("{file}: {}: {}", d.key, d.message),
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.list {
        for s in SUITES {
            println!("{:<24} criterion {:>2}  budget {:>4}s  {}", s.name, s.criterion, s.budget_seconds, s.title);
        }
        return ExitCode::SUCCESS;
    }

    let file = args.config.as_ref().map_or("<defaults>".to_string(), |p| p.display().to_string());
    let (mut cfg, text) = match &args.config {
        Some(path) => match cli::load(path) {
            Ok((c, t)) => (c, Some(t)),
            Err(Error::Config { line, message }) => {
                report_diagnostics(&file, &[Diagnostic { line, key: "config".into(), message }]);
                return ExitCode::from(2);
            }
            Err(e) => {
                eprintln!("{file}: {e}");
                return ExitCode::from(2);
            }
        },
        None => (ExperimentConfig::default(), None),
    };
    if let Some(s) = args.suite {
        cfg.suite = s;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = args.out {
        cfg.out = o;
    }

    let diags = cli::validate(&cfg, text.as_deref());
    if !diags.is_empty() {
        report_diagnostics(&file, &diags);
        return ExitCode::from(2);
    }
    if args.validate {
        println!("{file}: ok");
        return ExitCode::SUCCESS;
    }
    if args.print_config {
        match toml::to_string_pretty(&cfg) {
            Ok(s) => {
                print!("{s}");
                return ExitCode::SUCCESS;
            }
            Err(e) => {
                eprintln!("cannot serialize configuration: {e}");
                return ExitCode::from(2);
            }
        }
    }

    let summary = match cli::run(&cfg, args.jobs) {
        Ok(s) => s,
        Err(e @ (Error::Configuration(_) | Error::Config { .. })) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    for s in &summary.suites {
        let verdict = if s.passed { "PASS" } else { "FAIL" };
        let budget = if s.over_budget { " (over budget)" } else { "" };
        println!("criterion {:>2} {:<24} {verdict}  {:.1}s{budget}", s.criterion, s.suite, s.runtime_seconds);
        for c in s.failures() {
            println!("    failed {}: {}", c.id, c.detail);
        }
    }
    if let Err(e) = cli::write_outputs(&summary, &cfg.out) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    println!("wrote {}", cfg.out.join("summary.json").display());
    if summary.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

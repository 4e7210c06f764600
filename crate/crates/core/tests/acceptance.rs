//! Runs every registered criterion with the default configuration and prints
//! one line per criterion. Artifacts go to ACCEPTANCE_OUT when it is set.

use std::process::ExitCode;

use kohn_heat::harness::{run_check, write_artifacts, ExperimentConfig, SuiteContext, SuiteReport, REGISTRY};

fn main() -> ExitCode {
    let cfg = ExperimentConfig::default();
    let ctx = SuiteContext::new(cfg.clone()).expect("default config is valid");
    println!("acceptance: {} criteria", REGISTRY.len());
    let mut outcomes = Vec::new();
    for spec in REGISTRY {
        let o = run_check(spec, &ctx);
        println!("{}", o.summary_line());
        if let Some(e) = &o.error {
            println!("    error: {e}");
        }
        outcomes.push(o);
    }
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id.clone()).collect();
    if let Ok(dir) = std::env::var("ACCEPTANCE_OUT") {
        let report = SuiteReport {
            schema: kohn_heat::harness::report::REPORT_SCHEMA.into(),
            config_hash: cfg.hash().expect("hashable config"),
            config: cfg,
            pass: failed.is_empty(),
            outcomes,
        };
        write_artifacts(&report, dir.as_ref()).expect("artifacts written");
        println!("artifacts written to {dir}");
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed {}", failed.join(", "));
        ExitCode::FAILURE
    }
}

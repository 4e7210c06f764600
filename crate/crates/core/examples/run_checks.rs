//! Runs the named checks (all when none are given) and prints each outcome with its detail.
//!
//!     cargo run --release --example run_checks -- duality transform-identity

use kohn_heat::harness::{run_suite, ExperimentConfig};

fn main() {
    let checks: Vec<String> = std::env::args().skip(1).collect();
    let cfg = ExperimentConfig { checks, ..Default::default() };
    let report = match run_suite(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    };
    for o in &report.outcomes {
        println!("{}\n    {}", o.summary_line(), o.detail);
    }
    std::process::exit(if report.pass { 0 } else { 1 });
}

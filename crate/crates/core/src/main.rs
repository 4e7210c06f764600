use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use kohn_heat::duhamel::{binet, coefficient_histogram, enumerate_paths, time_chain, ChainPattern, TimeChainSpec, MAX_ENUMERATION};
use kohn_heat::geometry::{geometry_csv, log_spaced, recenter, relative_inverse_constant, SubharmonicPolynomial, C64};
use kohn_heat::harness::svg::ScatterPlot;
use kohn_heat::harness::{run_suite, write_artifacts, ExperimentConfig, GoldenRecord, SuiteReport};
use kohn_heat::qse::sandwich_csv;
use kohn_heat::solver::{kernel_column, GridSpec, KernelVariant, SolverConfig, WeightedOperatorSet};
use kohn_heat::synthesis::{decay_report, synthesize, SynthesisConfig, TauGrid};
use kohn_heat::Error;

const SYNTH_SCHEMA: &str = "space-time-kernel/1";

#[derive(Parser)]
#[command(name = "kohn-heat", version, about = "Weighted heat kernels on polynomial model domains")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Λ and μ over log-spaced δ at a base point (CSV).
    Geometry {
        #[arg(long)]
        poly: Option<PathBuf>,
        #[arg(long, default_value = "0", value_parser = parse_c64, allow_hyphen_values = true)]
        z: C64,
        #[arg(long, default_value_t = 1e-3)]
        dmin: f64,
        #[arg(long, default_value_t = 1e3)]
        dmax: f64,
        #[arg(long, default_value_t = 61)]
        nd: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sandwich table (t, lower, integer-inf, upper) for e^{-a t^{1/β}}.
    Qse {
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 1e-2)]
        tmin: f64,
        #[arg(long, default_value_t = 1e2)]
        tmax: f64,
        #[arg(long, default_value_t = 200)]
        nt: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Heat kernel column H_τ(s, ·, w): JSON header plus CSV (s, x, y, re, im).
    Solve {
        #[arg(long)]
        poly: Option<PathBuf>,
        #[arg(long)]
        tau: f64,
        #[arg(long, default_value = "0", value_parser = parse_c64, allow_hyphen_values = true)]
        w: C64,
        /// Comma-separated heat times.
        #[arg(long, value_delimiter = ',', required = true)]
        s: Vec<f64>,
        #[arg(long, default_value_t = 6.0)]
        radius: f64,
        #[arg(long, default_value_t = 129)]
        n_side: usize,
        /// Kernel on functions (the tilde operator) instead of forms.
        #[arg(long)]
        functions: bool,
        /// Solver settings as JSON.
        #[arg(long)]
        solver: Option<PathBuf>,
        /// Output prefix; writes <out>.json and <out>.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Space-time kernel ℋ(s, z, w, t) on a uniform t grid.
    Synthesize {
        #[arg(long)]
        poly: Option<PathBuf>,
        #[arg(long, default_value = "0", value_parser = parse_c64, allow_hyphen_values = true)]
        z: C64,
        #[arg(long, default_value = "0", value_parser = parse_c64, allow_hyphen_values = true)]
        w: C64,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        tmin: f64,
        #[arg(long)]
        tmax: f64,
        #[arg(long, default_value_t = 15)]
        nt: usize,
        #[arg(long)]
        eps: Option<f64>,
        /// Synthesis settings as JSON.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output prefix; writes <out>.json and <out>.csv.
        #[arg(long)]
        out: PathBuf,
        /// Also write <out>.svg (ln|ℋ|V against d²/s).
        #[arg(long)]
        svg: bool,
    },
    /// Path-tree counts, coefficient histogram and a closed-form time chain (JSON).
    Duhamel {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "plain")]
        pattern: String,
        #[arg(long, default_value_t = 1.0)]
        s: f64,
    },
    /// Run the verification suite from a JSON config.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides output_dir from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a suite report, optionally against a golden record.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        golden: Option<PathBuf>,
    },
}

fn parse_c64(s: &str) -> Result<C64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|e| format!("{t}: {e}"));
    match parts.as_slice() {
        [re] => Ok(C64::new(num(re)?, 0.0)),
        [re, im] => Ok(C64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected re or re,im, got {s}")),
    }
}

/// Errors from bad input map to exit code 2, everything else to 1.
enum Failure {
    Config(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ConfigInvalid(_) | Error::InvalidPolynomial(_) | Error::Io(_) | Error::PatternMismatch { .. } => {
                Failure::Config(e.to_string())
            }
            other => Failure::Check(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn load_poly(path: &Option<PathBuf>) -> Result<SubharmonicPolynomial, Failure> {
    match path {
        None => Ok(SubharmonicPolynomial::heisenberg()),
        Some(p) => Ok(SubharmonicPolynomial::from_json_str(&read(p)?)?),
    }
}

fn load_json<T: serde::de::DeserializeOwned + Default>(path: &Option<PathBuf>) -> Result<T, Failure> {
    match path {
        None => Ok(T::default()),
        Some(p) => serde_json::from_str(&read(p)?).map_err(|e| Failure::Config(format!("{}: {e}", p.display()))),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn run(cli: Cli) -> Result<bool, Failure> {
    match cli.cmd {
        Cmd::Geometry { poly, z, dmin, dmax, nd, out } => {
            if !(dmin > 0.0 && dmax >= dmin && nd > 0) {
                return Err(Failure::Config("need 0 < dmin <= dmax and nd > 0".into()));
            }
            let p = load_poly(&poly)?;
            let tbl = recenter(&p, z);
            let deltas = log_spaced(dmin, dmax, nd);
            emit(&out, &geometry_csv(&tbl, &deltas)?)?;
            let c = relative_inverse_constant(&tbl, &deltas)?;
            eprintln!("relative inverse constant c = {c:.6e} ({} mixed terms)", tbl.term_count());
            Ok(true)
        }
        Cmd::Qse { a, beta, tmin, tmax, nt, out } => {
            if !(a > 0.0 && beta > 0.0 && tmin > 0.0 && tmax >= tmin && nt > 0) {
                return Err(Failure::Config("need a, beta, tmin > 0, tmax >= tmin, nt > 0".into()));
            }
            emit(&out, &sandwich_csv(a, beta, &log_spaced(tmin, tmax, nt)))?;
            Ok(true)
        }
        Cmd::Solve { poly, tau, w, s, radius, n_side, functions, solver, out } => {
            let p = load_poly(&poly)?;
            let cfg: SolverConfig = load_json(&solver)?;
            cfg.validate()?;
            if s.iter().any(|v| !(*v > 0.0)) {
                return Err(Failure::Config("heat times must be positive".into()));
            }
            let spec = GridSpec::new(w, radius, n_side)?;
            let variant = if functions { KernelVariant::Functions } else { KernelVariant::Forms };
            let ops = WeightedOperatorSet::new(&p, tau, spec, cfg.order)?;
            let slice = kernel_column(&ops, variant, w, &s, &cfg)?;
            let header = json!({ "slice": slice.header(), "solver": cfg, "polynomial": p.to_json_string() });
            write(&with_ext(&out, "json"), &serde_json::to_string_pretty(&header).expect("serializable"))?;
            write(&with_ext(&out, "csv"), &slice.to_csv())?;
            Ok(true)
        }
        Cmd::Synthesize { poly, z, w, s, tmin, tmax, nt, eps, config, out, svg } => {
            let p = load_poly(&poly)?;
            let mut cfg: SynthesisConfig = load_json(&config)?;
            if let Some(e) = eps {
                cfg.eps = e;
            }
            cfg.validate()?;
            if !(s > 0.0 && tmax >= tmin && nt > 0) {
                return Err(Failure::Config("need s > 0, tmax >= tmin, nt > 0".into()));
            }
            let t_list: Vec<f64> = if nt == 1 {
                vec![tmin]
            } else {
                (0..nt).map(|i| tmin + (tmax - tmin) * i as f64 / (nt - 1) as f64).collect()
            };
            let grid = TauGrid::for_request(&p, z, w, s, &t_list, &cfg)?;
            let kernel = synthesize(&p, z, w, s, &t_list, &grid, &cfg)?;
            let fit = decay_report(&p, std::slice::from_ref(&kernel));
            let (fit_json, samples) = match &fit {
                Ok((f, samples)) => (serde_json::to_value(f).expect("serializable"), samples.clone()),
                Err(e) => (json!({ "error": e.to_string() }), Vec::new()),
            };
            let report = json!({
                "schema": SYNTH_SCHEMA,
                "z": [z.re, z.im],
                "w": [w.re, w.im],
                "s": s,
                "twist": kernel.twist,
                "tau_grid": kernel.grid,
                "synthesis": cfg,
                "resolved": (0..t_list.len()).map(|i| kernel.resolved(i)).collect::<Vec<_>>(),
                "floors": kernel.floors,
                "decay_fit": fit_json,
            });
            write(&with_ext(&out, "json"), &serde_json::to_string_pretty(&report).expect("serializable"))?;
            write(&with_ext(&out, "csv"), &kernel.to_csv())?;
            if svg {
                let pts: Vec<(f64, f64)> = samples.iter().map(|d| (d.x, d.y)).collect();
                let line = fit.as_ref().ok().map(|(f, _)| (f.big_c.ln(), -f.small_c));
                let plot = ScatterPlot { title: "space-time kernel", x_label: "d^2/s", y_label: "ln(|H| V)", points: &pts, line };
                write(&with_ext(&out, "svg"), &plot.render())?;
            }
            Ok(true)
        }
        Cmd::Duhamel { n, pattern, s } => {
            let pat = ChainPattern::parse(&pattern).ok_or_else(|| Failure::Config(format!("unknown pattern {pattern}")))?;
            if n == 0 || !(s > 0.0) {
                return Err(Failure::Config("need n >= 1 and s > 0".into()));
            }
            let histogram = if n <= MAX_ENUMERATION {
                let paths = enumerate_paths(n)?;
                let h: serde_json::Map<String, serde_json::Value> = coefficient_histogram(&paths)
                    .into_iter()
                    .map(|(twos, (count, coeff))| (twos.to_string(), json!({ "paths": count, "coefficient": coeff.to_string() })))
                    .collect();
                serde_json::Value::Object(h)
            } else {
                serde_json::Value::Null
            };
            let chain = time_chain(TimeChainSpec { n, pattern: pat, s })?;
            let out = json!({
                "n": n,
                "pattern": pat.name(),
                "s": s,
                "count": binet(n).to_string(),
                "coefficients_by_twos": histogram,
                "chain_value": chain,
            });
            println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
            Ok(true)
        }
        Cmd::Verify { config, out } => {
            let mut cfg = match &config {
                Some(p) => ExperimentConfig::from_json_str(&read(p)?)?,
                None => ExperimentConfig::default(),
            };
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            let report = run_suite(&cfg)?;
            write_artifacts(&report, &cfg.output_dir)?;
            print!("{}", report.summary());
            Ok(report.pass)
        }
        Cmd::Report { input, golden } => {
            let report = SuiteReport::from_json_str(&read(&input)?)?;
            print!("{}", report.summary());
            let mut ok = report.pass;
            if let Some(g) = golden {
                let golden = GoldenRecord::from_json_str(&read(&g)?)?;
                let mismatches = golden.compare(&report)?;
                for m in &mismatches {
                    println!("golden mismatch {}: expected {:?}, found {:?}", m.check, m.expected, m.found);
                }
                println!("{} golden values, {} mismatches", golden.values.len(), mismatches.len());
                ok &= mismatches.is_empty();
            }
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Check(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

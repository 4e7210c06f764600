//! Registered checks. Each one produces a single pass/fail outcome.

use std::f64::consts::{E, PI};
use std::fmt::Write as _;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::ExperimentConfig;
use super::svg::ScatterPlot;
use crate::duhamel::{
    binet, chain_by_quadrature, enumerate_paths, gauss_convolution_check, level_coefficient, path_count_recursive,
    time_chain, time_chain_literal, ChainPattern, TimeChainSpec,
};
use crate::error::Result;
use crate::fit::{fit_decay, linear_regression, DecayFitReport};
use crate::geometry::{log_spaced, recenter, relative_inverse_constant, SubharmonicPolynomial, C64};
use crate::qse::{check_envelope_chain, envelope, nu_continuous_at, nu_integer};
use crate::solver::{
    kernel_column, twisted_tau_derivative_fields, GridSpec, KernelVariant, Schedule, SolverConfig,
    TwistedDerivativeStencil, WeightedOperatorSet,
};
use crate::synthesis::{decay_report, synthesize, transform_identity_check, GaussianProfile, TauGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    AtLeast,
}

impl Comparison {
    pub fn holds(self, value: f64, tolerance: f64) -> bool {
        match self {
            Comparison::AtMost => value <= tolerance,
            Comparison::AtLeast => value >= tolerance,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::AtMost => "<=",
            Comparison::AtLeast => ">=",
        }
    }
}

/// Where an expected value comes from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// Holds by construction or by a one-line identity.
    Trivial,
    /// Compared against an independent computation.
    Derived { oracle: String },
}

/// A named file produced by a check.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Artifact {
    pub name: String,
    #[serde(skip)]
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub id: String,
    pub criterion: Option<u8>,
    pub claim: String,
    pub metric: String,
    /// None when the check raised an error.
    pub value: Option<f64>,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
    pub seconds: f64,
    pub provenance: Provenance,
    pub detail: Value,
    pub fits: Vec<DecayFitReport>,
    pub tables: Vec<Artifact>,
    pub plots: Vec<Artifact>,
    pub error: Option<String>,
}

impl CheckOutcome {
    fn new(metric: &str, value: f64, tolerance: f64, comparison: Comparison) -> Self {
        CheckOutcome {
            id: String::new(),
            criterion: None,
            claim: String::new(),
            metric: metric.to_string(),
            value: Some(value),
            tolerance,
            comparison,
            pass: comparison.holds(value, tolerance),
            seconds: 0.0,
            provenance: Provenance::Trivial,
            detail: Value::Null,
            fits: Vec::new(),
            tables: Vec::new(),
            plots: Vec::new(),
            error: None,
        }
    }

    fn table(mut self, name: &str, content: String) -> Self {
        self.tables.push(Artifact { name: format!("{name}.csv"), content });
        self
    }

    fn plot(mut self, name: &str, content: String) -> Self {
        self.plots.push(Artifact { name: format!("{name}.svg"), content });
        self
    }

    /// One line: `[PASS] id: metric = value (<= tol)`.
    pub fn summary_line(&self) -> String {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        let crit = self.criterion.map(|c| format!("{c:>2} ")).unwrap_or_else(|| " - ".into());
        match (&self.value, &self.error) {
            (_, Some(e)) => format!("[{tag}] {crit}{}: error: {e}", self.id),
            (Some(v), None) => format!(
                "[{tag}] {crit}{}: {} = {:.4e} ({} {:.1e}, {:.2} s)",
                self.id,
                self.metric,
                v,
                self.comparison.symbol(),
                self.tolerance,
                self.seconds
            ),
            (None, None) => format!("[{tag}] {crit}{}: no value", self.id),
        }
    }
}

pub struct SuiteContext {
    pub cfg: ExperimentConfig,
    pub poly: SubharmonicPolynomial,
}

impl SuiteContext {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let poly = cfg.load_polynomial()?;
        Ok(SuiteContext { cfg, poly })
    }
}

pub struct CheckSpec {
    pub id: &'static str,
    pub criterion: Option<u8>,
    pub claim: &'static str,
    /// Independent computation the check compares against; empty when trivial.
    pub oracle: &'static str,
    pub run: fn(&SuiteContext) -> Result<CheckOutcome>,
}

pub const REGISTRY: &[CheckSpec] = &[
    CheckSpec {
        id: "tau0-column",
        criterion: Some(1),
        claim: "τ = 0 kernel column equals the Euclidean heat kernel",
        oracle: "free heat kernel (πs)^{-1} e^{-|z-w|²/s}",
        run: tau0_column,
    },
    CheckSpec {
        id: "sandwich",
        criterion: Some(2),
        claim: "QSE sandwich e^{-a t^{1/β}} ≤ ν ≤ e^{eβ/2} e^{-a t^{1/β}}",
        oracle: "closed-form exponential",
        run: sandwich,
    },
    CheckSpec {
        id: "path-count",
        criterion: Some(3),
        claim: "path tree size is Fibonacci and path coefficients are n!(-1)^{J2}",
        oracle: "integer recursion and level-by-level composition",
        run: path_count,
    },
    CheckSpec {
        id: "time-chains",
        criterion: Some(4),
        claim: "closed-form time-chain integrals",
        oracle: "nested adaptive quadrature",
        run: time_chains,
    },
    CheckSpec {
        id: "gauss-convolution",
        criterion: Some(5),
        claim: "completed-square identity for chained Gaussians",
        oracle: "direct evaluation of both sides",
        run: gauss_convolution,
    },
    CheckSpec {
        id: "relative-inverse",
        criterion: Some(6),
        claim: "μ and Λ are relative inverses",
        oracle: "",
        run: relative_inverse,
    },
    CheckSpec {
        id: "duality",
        criterion: Some(7),
        claim: "kernel symmetry and the ±τ duality with the function-side kernel",
        oracle: "independent solves from each source point",
        run: duality,
    },
    CheckSpec {
        id: "workhorse-fit",
        criterion: Some(8),
        claim: "Gaussian-plus-τ decay of the weighted heat kernel",
        oracle: "grid-doubled rerun",
        run: workhorse,
    },
    CheckSpec {
        id: "spacetime-decay",
        criterion: Some(9),
        claim: "Gaussian decay of the space-time kernel in d²/s",
        oracle: "anchored chord fit",
        run: spacetime_decay,
    },
    CheckSpec {
        id: "envelope-chain",
        criterion: Some(10),
        claim: "moment-envelope comparability chain",
        oracle: "",
        run: envelope_chain,
    },
    CheckSpec {
        id: "derivative-growth",
        criterion: Some(11),
        claim: "geometric growth in n of twisted τ-derivative bounds",
        oracle: "least-squares line through ln K(n)",
        run: derivative_growth,
    },
    CheckSpec {
        id: "transform-identity",
        criterion: Some(12),
        claim: "transform of -i(t+T)φ equals the twisted derivative of the transform",
        oracle: "eighth-order finite difference in τ",
        run: transform_identity,
    },
];

/// Runs one registered check, turning errors into failed outcomes.
pub fn run_check(spec: &CheckSpec, ctx: &SuiteContext) -> CheckOutcome {
    let start = Instant::now();
    let result = (spec.run)(ctx);
    let seconds = start.elapsed().as_secs_f64();
    let mut out = match result {
        Ok(o) => o,
        Err(e) => {
            let mut o = CheckOutcome::new("error", f64::NAN, 0.0, Comparison::AtMost);
            o.value = None;
            o.pass = false;
            o.error = Some(e.to_string());
            o
        }
    };
    out.id = spec.id.to_string();
    out.criterion = spec.criterion;
    out.claim = spec.claim.to_string();
    out.seconds = seconds;
    out.provenance = if spec.oracle.is_empty() {
        Provenance::Trivial
    } else {
        Provenance::Derived { oracle: spec.oracle.to_string() }
    };
    out
}

fn origin() -> C64 {
    C64::new(0.0, 0.0)
}

fn is_heisenberg(p: &SubharmonicPolynomial) -> bool {
    *p == SubharmonicPolynomial::heisenberg()
}

fn fit_line(fit: &DecayFitReport) -> Option<(f64, f64)> {
    Some((fit.big_c.ln(), -fit.small_c))
}

/// H(s, 0, 0, t) on the Heisenberg model.
pub fn heisenberg_spacetime_origin(s: f64, t: f64) -> f64 {
    -1.0 / (4.0 * s * s * (PI * t / (2.0 * s)).sinh().powi(2))
}

/// Sixth-order stencil with uniform steps h²/2 on R = 6, n = 257.
fn tau0_column(ctx: &SuiteContext) -> Result<CheckOutcome> {
    let tol = &ctx.cfg.tolerances;
    let start = Instant::now();
    let p = SubharmonicPolynomial::heisenberg();
    let spec = GridSpec::new(origin(), 6.0, 257)?;
    let solver = SolverConfig { order: 6, schedule: Schedule::Uniform { factor: 0.5 }, ..SolverConfig::default() };
    let ops = WeightedOperatorSet::new(&p, 0.0, spec, solver.order)?;
    let s = 0.5;
    let w = origin();
    let slice = kernel_column(&ops, KernelVariant::Forms, w, &[s], &solver)?;
    let seconds = start.elapsed().as_secs_f64();
    let mut worst: f64 = 0.0;
    let mut nodes = 0usize;
    let mut csv = String::from("x,numeric,exact,rel_error\n");
    for (k, z) in spec.nodes().enumerate() {
        let r2 = (z - w).norm_sqr();
        if r2 > 9.0 + 1e-12 {
            continue;
        }
        let exact = (-r2 / s).exp() / (PI * s);
        let v = slice.fields[0].values[k];
        let rel = (v - exact).norm() / exact;
        worst = worst.max(rel);
        nodes += 1;
        if z.im == 0.0 {
            writeln!(csv, "{},{:e},{:e},{:e}", z.re, v.re, exact, rel).unwrap();
        }
    }
    let mut out = CheckOutcome::new("max relative error", worst, tol.column_rel, Comparison::AtMost);
    out.pass &= seconds <= tol.column_seconds;
    out.detail = json!({ "nodes": nodes, "solve_seconds": seconds, "seconds_limit": tol.column_seconds });
    Ok(out.table("axis", csv))
}

fn sandwich(ctx: &SuiteContext) -> Result<CheckOutcome> {
    let start = Instant::now();
    let ts = log_spaced(1e-2, 1e2, ctx.cfg.sweep.sandwich_points);
    let mut worst: f64 = 0.0;
    let mut violations = 0usize;
    let (mut ratio_min, mut ratio_max_rel) = (f64::INFINITY, 0.0f64);
    let mut csv = String::from("beta,a,t,lower,continuous,integer_inf,upper\n");
    for beta in [1.0f64, 2.0, 3.0] {
        let cap = (E * beta / 2.0).exp();
        for a in [0.5, 1.0, 2.0] {
            for &t in &ts {
                let lower = (-a * t.powf(1.0 / beta)).exp();
                let cont = nu_continuous_at(t, a, beta);
                worst = worst.max((cont / lower - 1.0).abs());
                let int = nu_integer(t, a, beta);
                let ratio = int / lower;
                ratio_min = ratio_min.min(ratio);
                ratio_max_rel = ratio_max_rel.max(ratio / cap);
                if !(ratio >= 1.0 - 1e-12 && ratio <= cap + 1e-9) {
                    violations += 1;
                }
                writeln!(csv, "{beta},{a},{t:e},{lower:e},{cont:e},{int:e},{:e}", cap * lower).unwrap();
            }
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    let mut out = CheckOutcome::new("max relative error of ν_continuous", worst, ctx.cfg.tolerances.sandwich_rel, Comparison::AtMost);
    out.pass &= violations == 0 && seconds < 1.0;
    out.detail = json!({
        "sandwich_violations": violations,
        "min_integer_ratio": ratio_min,
        "max_integer_ratio_over_cap": ratio_max_rel,
        "seconds": seconds,
    });
    Ok(out.table("sandwich", csv))
}

fn path_count(_ctx: &SuiteContext) -> Result<CheckOutcome> {
    let mut mismatches = 0usize;
    let mut csv = String::from("n,enumerated,binet,recursion\n");
    for n in 1..=30 {
        let paths = enumerate_paths(n)?;
        let b = binet(n);
        let r = path_count_recursive(n);
        if num_bigint::BigUint::from(paths.len()) != b || b != r {
            mismatches += 1;
        }
        if n <= 6 {
            for path in &paths {
                if level_coefficient(&path.parts) != path.coefficient {
                    mismatches += 1;
                }
            }
        }
        writeln!(csv, "{n},{},{b},{r}", paths.len()).unwrap();
    }
    let mut out = CheckOutcome::new("mismatches", mismatches as f64, 0.0, Comparison::AtMost);
    out.detail = json!({ "n_max": 30, "coefficient_n_max": 6 });
    Ok(out.table("counts", csv))
}

fn time_chains(ctx: &SuiteContext) -> Result<CheckOutcome> {
    let start = Instant::now();
    let mut cases = Vec::new();
    for n in 2..=8 {
        cases.push((ChainPattern::Plain, n));
    }
    for n in 4..=8 {
        cases.push((ChainPattern::TauDecayI, n));
    }
    for n in 4..=6 {
        cases.push((ChainPattern::TauDecayIii, n));
    }
    let mut worst: f64 = 0.0;
    let mut literal_ratio = Vec::new();
    let mut csv = String::from("pattern,n,s,closed_form,quadrature,rel_error\n");
    for s in [0.5, 1.0] {
        for &(pattern, n) in &cases {
            let spec = TimeChainSpec { n, pattern, s };
            let closed = time_chain(spec)?;
            let quad = chain_by_quadrature(spec)?;
            let rel = (closed - quad).abs() / quad.abs();
            worst = worst.max(rel);
            writeln!(csv, "{},{n},{s},{closed:e},{quad:e},{rel:e}", pattern.name()).unwrap();
            if pattern == ChainPattern::TauDecayIii && s == 1.0 {
                literal_ratio.push(quad / time_chain_literal(spec)?);
            }
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    let tol = &ctx.cfg.tolerances;
    let mut out = CheckOutcome::new("max relative error", worst, tol.chain_rel, Comparison::AtMost);
    out.pass &= seconds <= tol.chain_seconds;
    out.detail = json!({
        "cases": cases.len() * 2,
        "seconds": seconds,
        "quadrature_over_literal_form_tau_decay_iii": literal_ratio,
    });
    Ok(out.table("chains", csv))
}

fn gauss_convolution(ctx: &SuiteContext) -> Result<CheckOutcome> {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(ctx.cfg.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..ctx.cfg.sweep.random_tuples {
        let c0 = rng.gen_range(0.05..2.0);
        let r_prev = rng.gen_range(0.01..2.0);
        let r_cur = r_prev * rng.gen_range(0.01..0.99);
        let mut xi = || C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let (a, b) = (xi(), xi());
        worst = worst.max(gauss_convolution_check(c0, r_prev, r_cur, a, b));
    }
    let seconds = start.elapsed().as_secs_f64();
    let mut out = CheckOutcome::new("max absolute defect", worst, ctx.cfg.tolerances.convolution_abs, Comparison::AtMost);
    out.pass &= seconds < 1.0;
    out.detail = json!({ "tuples": ctx.cfg.sweep.random_tuples, "seed": ctx.cfg.seed, "seconds": seconds });
    Ok(out)
}

/// The four sample polynomials of the relative-inverse check.
pub fn geometry_samples() -> Vec<(&'static str, SubharmonicPolynomial)> {
    let one = C64::new(1.0, 0.0);
    let half = C64::new(0.5, 0.0);
    vec![
        ("|z|^2", SubharmonicPolynomial::heisenberg()),
        ("|z|^4", SubharmonicPolynomial::radial(2)),
        ("|z|^2+|z|^6", SubharmonicPolynomial::new(&[((1, 1), one), ((3, 3), one)]).expect("valid")),
        (
            "|z|^4+Re(z^2)|z|^2",
            SubharmonicPolynomial::new(&[((2, 2), one), ((3, 1), half), ((1, 3), half)]).expect("valid"),
        ),
    ]
}

/// Golden-angle spiral of base points in the disc of radius 2.
pub fn spiral_points(n: usize) -> Vec<C64> {
    (0..n)
        .map(|i| C64::from_polar(2.0 * ((i as f64 + 0.5) / n as f64).sqrt(), i as f64 * PI * (3.0 - 5f64.sqrt())))
        .collect()
}

/// Passes when each recorded c is at most the number of mixed Taylor terms, the
/// bound that follows from Λ(μ(δ)) ∈ [δ, Nδ] and μ(Λ(δ)) ∈ [δ, N^{1/2}δ].
fn relative_inverse(ctx: &SuiteContext) -> Result<CheckOutcome> {
    let deltas = log_spaced(1e-3, 1e3, 61);
    let points = spiral_points(ctx.cfg.sweep.geometry_points);
    let mut worst: f64 = 0.0;
    let mut per = Vec::new();
    let mut csv = String::from("polynomial,c,terms\n");
    for (name, p) in geometry_samples() {
        let mut c: f64 = 1.0;
        let mut terms = 0usize;
        for &z in &points {
            let tbl = recenter(&p, z);
            terms = terms.max(tbl.term_count());
            c = c.max(relative_inverse_constant(&tbl, &deltas)?);
        }
        worst = worst.max(c / terms as f64);
        writeln!(csv, "{name},{c:e},{terms}").unwrap();
        per.push(json!({ "polynomial": name, "c": c, "terms": terms }));
    }
    let mut out = CheckOutcome::new("max c / term count", worst, 1.0 + 1e-9, Comparison::AtMost);
    out.pass &= worst.is_finite();
    out.detail = json!({ "polynomials": per, "deltas": deltas.len(), "points": points.len() });
    Ok(out.table("constants", csv))
}

/// Fixed grid R = 4, h = 1/16 with every sample point on a node.
fn duality(ctx: &SuiteContext) -> Result<CheckOutcome> {
    let p = &ctx.poly;
    let solver = ctx.cfg.synthesis.solver;
    let spec = GridSpec::new(origin(), 4.0, 129)?;
    let pts = [origin(), C64::new(0.5, 0.25), C64::new(0.0, -0.75)];
    let s = 0.5;
    let mut sym: f64 = 0.0;
    let mut dual: f64 = 0.0;
    let mut csv = String::from("tau,z_re,z_im,w_re,w_im,h_re,h_im,sym_defect,dual_defect\n");
    for tau in [0.5, 1.0] {
        let plus = WeightedOperatorSet::new(p, tau, spec, solver.order)?;
        let minus = WeightedOperatorSet::new(p, -tau, spec, solver.order)?;
        let mut forms = Vec::new();
        let mut forms_minus = Vec::new();
        let mut functions = Vec::new();
        for &w in &pts {
            forms.push(kernel_column(&plus, KernelVariant::Forms, w, &[s], &solver)?);
            forms_minus.push(kernel_column(&minus, KernelVariant::Forms, w, &[s], &solver)?);
            functions.push(kernel_column(&plus, KernelVariant::Functions, w, &[s], &solver)?);
        }
        let mut scale: f64 = 0.0;
        let mut rows = Vec::new();
        for (iz, &z) in pts.iter().enumerate() {
            for (iw, &w) in pts.iter().enumerate() {
                let h = forms[iw].value(0, z)?;
                let h_swap = forms[iz].value(0, w)?;
                let h_minus = forms_minus[iw].value(0, z)?;
                let tilde_swap = functions[iz].value(0, w)?;
                scale = scale.max(h.norm()).max(h_minus.norm());
                rows.push((z, w, h, (h - h_swap.conj()).norm(), (h_minus - tilde_swap).norm()));
            }
        }
        for (z, w, h, a, b) in rows {
            sym = sym.max(a / scale);
            dual = dual.max(b / scale);
            writeln!(csv, "{tau},{},{},{},{},{:e},{:e},{:e},{:e}", z.re, z.im, w.re, w.im, h.re, h.im, a / scale, b / scale)
                .unwrap();
        }
    }
    let worst = sym.max(dual);
    let mut out = CheckOutcome::new("max normalized defect", worst, ctx.cfg.tolerances.duality_rel, Comparison::AtMost);
    out.detail = json!({ "symmetry": sym, "duality": dual, "pairs": 9, "s": s });
    Ok(out.table("pairs", csv))
}

/// Samples (x, y) = (|z−w|²/s + sτ, ln(|H| s)) for w = 0 and |z| ≤ 3√s on an R = 6 grid.
pub fn workhorse_samples(
    p: &SubharmonicPolynomial,
    taus: &[f64],
    ss: &[f64],
    n_side: usize,
    solver: &SolverConfig,
) -> Result<(Vec<[f64; 5]>, usize)> {
    let spec = GridSpec::new(origin(), 6.0, n_side)?;
    let w = origin();
    let mut rows = Vec::new();
    let mut excluded = 0;
    for &tau in taus {
        let ops = WeightedOperatorSet::new(p, tau, spec, solver.order)?;
        let slice = kernel_column(&ops, KernelVariant::Forms, w, ss, solver)?;
        let peak = slice.fields.iter().map(|f| f.max_abs()).fold(0.0, f64::max);
        for (si, &s) in ss.iter().enumerate() {
            for k in 0..=12 {
                let r = k as f64 * 0.25 * s.sqrt();
                let v = slice.value(si, w + C64::new(r, 0.0))?.norm();
                if v < 1e-10 * peak {
                    excluded += 1;
                    continue;
                }
                rows.push([tau, s, r, r * r / s + s * tau, (v * s).ln()]);
            }
        }
    }
    Ok((rows, excluded))
}

fn workhorse(ctx: &SuiteContext) -> Result<CheckOutcome> {
    let sw = &ctx.cfg.sweep;
    let solver = ctx.cfg.synthesis.solver;
    let mut fits = Vec::new();
    let mut csv = String::from("n_side,tau,s,r,x,y\n");
    let mut coarse_points = Vec::new();
    for n_side in [129, 257] {
        let (rows, excluded) = workhorse_samples(&ctx.poly, &sw.workhorse_tau, &sw.workhorse_s, n_side, &solver)?;
        let xs: Vec<f64> = rows.iter().map(|r| r[3]).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r[4]).collect();
        fits.push(fit_decay("|H| s <= C exp(-c(|z-w|^2/s + s tau))", &xs, &ys, excluded)?);
        for r in &rows {
            writeln!(csv, "{n_side},{},{},{},{:e},{:e}", r[0], r[1], r[2], r[3], r[4]).unwrap();
        }
        if n_side == 129 {
            coarse_points = xs.into_iter().zip(ys).collect();
        }
    }
    let tol = &ctx.cfg.tolerances;
    let (coarse, fine) = (&fits[0], &fits[1]);
    let change = (fine.small_c - coarse.small_c).abs() / coarse.small_c.abs();
    let c_min = coarse.small_c.min(fine.small_c);
    let mut out = CheckOutcome::new("fitted c (min over grids)", c_min, tol.workhorse_min_c, Comparison::AtLeast);
    out.pass &= change < tol.workhorse_refinement
        && fits.iter().all(|f| (f.sup_ratio - 1.0).abs() <= 1e-9 && f.consistent());
    out.detail = json!({
        "c_coarse": coarse.small_c,
        "c_fine": fine.small_c,
        "relative_change": change,
        "change_limit": tol.workhorse_refinement,
    });
    let svg = ScatterPlot {
        title: "weighted heat kernel decay (n_side 129)",
        x_label: "|z-w|^2/s + s tau",
        y_label: "ln(|H| s)",
        points: &coarse_points,
        line: fit_line(coarse),
    }
    .render();
    out.fits = fits;
    Ok(out.table("samples", csv).plot("scatter", svg))
}

fn spacetime_decay(ctx: &SuiteContext) -> Result<CheckOutcome> {
    let start = Instant::now();
    let p = &ctx.poly;
    let sw = &ctx.cfg.sweep;
    let synth = &ctx.cfg.synthesis;
    let (z, w) = (origin(), origin());
    let mut kernels = Vec::new();
    let mut grids = Vec::new();
    for &s in &sw.decay_s {
        let grid = TauGrid::for_request(p, z, w, s, &sw.decay_t, synth)?;
        grids.push(json!({ "s": s, "n_tau": grid.n_tau, "tau_max": grid.tau_max }));
        kernels.push(synthesize(p, z, w, s, &sw.decay_t, &grid, synth)?);
    }
    let (fit, samples) = decay_report(p, &kernels)?;
    let seconds = start.elapsed().as_secs_f64();
    let exact = is_heisenberg(p);
    let mut worst_rel: f64 = 0.0;
    let mut csv = String::from("s,t,re,im,floor,resolved,exact\n");
    for k in &kernels {
        for (i, &t) in k.t_list.iter().enumerate() {
            let e = if exact { heisenberg_spacetime_origin(k.s, t) } else { f64::NAN };
            if exact && k.resolved(i) {
                worst_rel = worst_rel.max((k.values[i] - e).norm() / e.abs());
            }
            writeln!(csv, "{},{},{:e},{:e},{:e},{},{:e}", k.s, t, k.values[i].re, k.values[i].im, k.floors[i], k.resolved(i), e)
                .unwrap();
        }
    }
    let mut scatter = String::from("s,t,d,volume,x,y\n");
    for d in &samples {
        writeln!(scatter, "{},{},{:e},{:e},{:e},{:e}", d.s, d.t, d.d, d.volume, d.x, d.y).unwrap();
    }
    let tol = &ctx.cfg.tolerances;
    let mut out = CheckOutcome::new("fitted c", fit.small_c, tol.decay_min_c, Comparison::AtLeast);
    out.pass &= fit.sup_ratio.is_finite() && seconds <= tol.decay_seconds;
    out.detail = json!({
        "samples": fit.samples,
        "excluded_below_noise": fit.excluded,
        "big_c": fit.big_c,
        "sup_ratio": fit.sup_ratio,
        "tau_grids": grids,
        "seconds": seconds,
        "max_rel_error_vs_closed_form": if exact { Some(worst_rel) } else { None },
    });
    let pts: Vec<(f64, f64)> = samples.iter().map(|d| (d.x, d.y)).collect();
    let svg = ScatterPlot {
        title: "space-time kernel decay",
        x_label: "d^2/s",
        y_label: "ln(|H| V)",
        points: &pts,
        line: fit_line(&fit),
    }
    .render();
    out.fits.push(fit);
    Ok(out.table("kernel", csv).table("scatter", scatter).plot("scatter", svg))
}

/// The three sample polynomials of the envelope chain.
pub fn envelope_samples() -> Vec<(&'static str, SubharmonicPolynomial)> {
    let one = C64::new(1.0, 0.0);
    vec![
        ("|z|^2", SubharmonicPolynomial::heisenberg()),
        ("|z|^4", SubharmonicPolynomial::radial(2)),
        ("|z|^2+|z|^6", SubharmonicPolynomial::new(&[((1, 1), one), ((3, 3), one)]).expect("valid")),
    ]
}

/// κ = max (middle/lower)/n^{deg/2}. Passes when the upper term dominates the middle
/// one (κ ≤ 1) and lower/middle stays below the mixed-term count.
fn envelope_chain(ctx: &SuiteContext) -> Result<CheckOutcome> {
    let bases = [origin(), C64::new(0.7, -0.3), C64::new(1.5, 1.0)];
    let ss = log_spaced(0.01, 10.0, 7);
    let mut kappa_all: f64 = 0.0;
    let mut ok = true;
    let mut per = Vec::new();
    let mut csv = String::from("polynomial,z_re,z_im,n,s,upper_ratio,lower_ratio\n");
    for (name, p) in envelope_samples() {
        let mut kappa: f64 = 0.0;
        let mut lower_min = f64::INFINITY;
        let mut upper_max: f64 = 0.0;
        let mut terms = 0;
        for &z in &bases {
            let tbl = recenter(&p, z);
            terms = terms.max(tbl.term_count());
            for n in 1..=ctx.cfg.sweep.envelope_n_max {
                let degrade = (n as f64).powf(p.degree() as f64 / 2.0);
                for &s in &ss {
                    let e = check_envelope_chain(&tbl, n, s);
                    kappa = kappa.max(e.lower_ratio / degrade);
                    lower_min = lower_min.min(e.lower_ratio);
                    upper_max = upper_max.max(e.upper_ratio);
                    writeln!(csv, "{name},{},{},{n},{s:e},{:e},{:e}", z.re, z.im, e.upper_ratio, e.lower_ratio).unwrap();
                }
            }
        }
        ok &= lower_min * terms as f64 >= 1.0 - 1e-9 && upper_max.is_finite();
        kappa_all = kappa_all.max(kappa);
        per.push(json!({
            "polynomial": name,
            "kappa": kappa,
            "min_lower_ratio": lower_min,
            "max_upper_ratio": upper_max,
            "terms": terms,
        }));
    }
    let mut out = CheckOutcome::new("kappa", kappa_all, 1.0 + 1e-9, Comparison::AtMost);
    out.pass &= ok;
    out.detail = json!({ "polynomials": per, "n_max": ctx.cfg.sweep.envelope_n_max });
    Ok(out.table("ratios", csv))
}

/// K(n) = sup |(∂_τ − iT)^n H| s e^{c|z−w|²/2s} / E_n(z, s) and its 1/τ² variant with E_{n−2}.
pub struct GrowthSample {
    pub n: usize,
    pub k: f64,
    pub k_tau: Option<f64>,
}

pub fn derivative_growth_samples(
    p: &SubharmonicPolynomial,
    ns: &[usize],
    taus: &[f64],
    ss: &[f64],
    gauss_c: f64,
    solver: &SolverConfig,
) -> Result<Vec<GrowthSample>> {
    let w = origin();
    let spec = GridSpec::new(w, 5.0, 129)?;
    let r_max = 3.0 * ss.iter().cloned().fold(0.0, f64::max).sqrt();
    let near: Vec<(usize, C64)> = spec.nodes().enumerate().filter(|(_, z)| (z - w).norm() <= r_max).collect();
    let tables: Vec<_> = near.iter().map(|&(_, z)| recenter(p, z)).collect();
    let mut out = Vec::new();
    for &n in ns {
        let mut k: f64 = 0.0;
        let mut k_tau: f64 = 0.0;
        for &tau in taus {
            let stencil = TwistedDerivativeStencil::for_tau(n, tau, 2)?;
            let fields = twisted_tau_derivative_fields(p, w, ss, tau, stencil, spec, solver)?;
            for (si, &s) in ss.iter().enumerate() {
                for (&(idx, z), tbl) in near.iter().zip(&tables) {
                    let r2 = (z - w).norm_sqr();
                    if r2 > 9.0 * s {
                        continue;
                    }
                    let weighted = fields[si].values[idx].norm() * s * (gauss_c * r2 / (2.0 * s)).exp();
                    k = k.max(weighted / envelope(tbl, n, s).value());
                    if n >= 2 {
                        k_tau = k_tau.max(weighted * tau * tau / envelope(tbl, n - 2, s).value());
                    }
                }
            }
        }
        out.push(GrowthSample { n, k, k_tau: (n >= 2).then_some(k_tau) });
    }
    Ok(out)
}

fn derivative_growth(ctx: &SuiteContext) -> Result<CheckOutcome> {
    let sw = &ctx.cfg.sweep;
    let tol = &ctx.cfg.tolerances;
    let samples = derivative_growth_samples(
        &ctx.poly,
        &sw.derivative_n,
        &sw.derivative_tau,
        &sw.derivative_s,
        tol.growth_gaussian_c,
        &ctx.cfg.synthesis.solver,
    )?;
    let ns: Vec<f64> = samples.iter().map(|g| g.n as f64).collect();
    let logs: Vec<f64> = samples.iter().map(|g| g.k.ln()).collect();
    let (a, b, r2) = linear_regression(&ns, &logs);
    let per_step: Vec<f64> = samples.iter().map(|g| g.k.powf(1.0 / g.n as f64)).collect();
    let stable = per_step.windows(2).all(|p| {
        let r = p[1] / p[0];
        (1.0 / 3.0..=3.0).contains(&r)
    });
    let mut csv = String::from("n,k,ln_k,per_step_c,k_tau_variant\n");
    for (g, c) in samples.iter().zip(&per_step) {
        writeln!(csv, "{},{:e},{:e},{:e},{}", g.n, g.k, g.k.ln(), c, g.k_tau.map(|v| format!("{v:e}")).unwrap_or_default())
            .unwrap();
    }
    let mut out = CheckOutcome::new("R^2 of ln K(n) vs n", r2, tol.growth_min_r2, Comparison::AtLeast);
    out.pass &= r2.is_finite();
    out.detail = json!({
        "intercept": a,
        "slope": b,
        "per_step_c": per_step,
        "per_step_c_stable": stable,
        "k": logs.iter().map(|l| l.exp()).collect::<Vec<_>>(),
        "k_tau_variant": samples.iter().map(|g| g.k_tau).collect::<Vec<_>>(),
        "gaussian_c": tol.growth_gaussian_c,
    });
    let pts: Vec<(f64, f64)> = ns.iter().cloned().zip(logs.iter().cloned()).collect();
    let svg = ScatterPlot {
        title: "growth of twisted derivative bounds",
        x_label: "n",
        y_label: "ln K(n)",
        points: &pts,
        line: Some((a, b)),
    }
    .render();
    Ok(out.table("growth", csv).plot("growth", svg))
}

fn transform_identity(ctx: &SuiteContext) -> Result<CheckOutcome> {
    let pairs = [
        (origin(), origin()),
        (C64::new(0.5, 0.25), C64::new(0.0, -0.3)),
        (C64::new(1.0, 1.0), C64::new(-0.5, 0.0)),
    ];
    let profile = GaussianProfile { amplitude: 1.0, center: 0.5, width: 1.0 };
    let defects: Vec<f64> = pairs.iter().map(|&(z, w)| transform_identity_check(&ctx.poly, z, w, profile)).collect();
    let worst = defects.iter().cloned().fold(0.0, f64::max);
    let mut out = CheckOutcome::new("max normalized defect", worst, ctx.cfg.tolerances.transform_rel, Comparison::AtMost);
    out.detail = json!({ "defects": defects, "points": crate::synthesis::TRANSFORM_POINTS });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_ids_unique_and_criteria_complete() {
        let mut ids: Vec<_> = REGISTRY.iter().map(|c| c.id).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), REGISTRY.len());
        let mut crit: Vec<u8> = REGISTRY.iter().filter_map(|c| c.criterion).collect();
        crit.sort();
        assert_eq!(crit, (1..=12).collect::<Vec<u8>>());
        assert!(REGISTRY.iter().all(|c| !c.claim.is_empty()));
    }

    #[test]
    fn comparison_directions() {
        assert!(Comparison::AtMost.holds(1.0, 1.0) && !Comparison::AtMost.holds(1.1, 1.0));
        assert!(Comparison::AtLeast.holds(0.9, 0.5) && !Comparison::AtLeast.holds(0.4, 0.5));
    }

    #[test]
    fn failed_check_is_recorded() {
        fn broken(_: &SuiteContext) -> Result<CheckOutcome> {
            Err(crate::Error::InsufficientSamples(0))
        }
        let spec = CheckSpec { id: "broken", criterion: None, claim: "x", oracle: "", run: broken };
        let ctx = SuiteContext::new(ExperimentConfig::default()).unwrap();
        let o = run_check(&spec, &ctx);
        assert!(!o.pass && o.error.is_some() && o.value.is_none());
    }
}

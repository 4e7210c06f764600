//! Space-time kernels ℋ(s, z, w, t) assembled from per-τ solves.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_decay, DecayFitReport};
use crate::geometry::{lambda_size, mu_size, recenter, twist, SubharmonicPolynomial, C64};
use crate::solver::{kernel_column, GridField, GridSpec, KernelVariant, OperatorKind, SolverConfig, WeightedOperatorSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisConfig {
    pub solver: SolverConfig,
    /// Grid points per kernel width σ(τ).
    pub points_per_sigma: usize,
    /// Grid half-width in units of σ(τ).
    pub radius_sigmas: f64,
    /// Target relative accuracy of the τ integral.
    pub eps: f64,
    /// Decay constant assumed in the τ-truncation and aliasing rules.
    pub c_tau: f64,
    /// Relative noise of a single kernel value.
    pub noise_rel: f64,
    /// Below this |t + T| the plain trapezoid rule is used.
    pub omega_floor: f64,
    pub max_tau_points: usize,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            solver: SolverConfig::default(),
            points_per_sigma: 5,
            radius_sigmas: 6.0,
            eps: 1e-6,
            c_tau: 1.0,
            noise_rel: 1e-9,
            omega_floor: 1e-3,
            max_tau_points: 4001,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        let ok = self.points_per_sigma >= 2
            && self.radius_sigmas >= 3.0
            && self.eps > 0.0
            && self.eps < 1.0
            && self.c_tau > 0.0
            && self.noise_rel >= 0.0
            && self.omega_floor > 0.0
            && self.max_tau_points >= 3;
        if ok {
            Ok(())
        } else {
            Err(Error::ConfigInvalid("synthesis parameters out of range".into()))
        }
    }
}

/// Symmetric trapezoid grid τ_k = k Δτ, |k| ≤ (n_tau − 1)/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauGrid {
    pub tau_max: f64,
    pub n_tau: usize,
    pub dtau: f64,
}

impl TauGrid {
    pub fn new(tau_max: f64, n_tau: usize) -> Result<Self> {
        if !(tau_max > 0.0) || n_tau < 3 || n_tau % 2 == 0 {
            return Err(Error::ConfigInvalid(format!("tau grid {tau_max} / {n_tau}")));
        }
        Ok(TauGrid { tau_max, n_tau, dtau: 2.0 * tau_max / (n_tau - 1) as f64 })
    }

    pub fn taus(&self) -> Vec<f64> {
        let half = (self.n_tau / 2) as i64;
        (-half..=half).map(|k| k as f64 * self.dtau).collect()
    }

    /// τ_max from the decay exp(−c(s/μ(z,1/τ)² + s/μ(w,1/τ)²)) < ε·1e-3, and Δτ
    /// resolving max|t + T| plus the band where the kernel in t is above ε.
    pub fn for_request(
        p: &SubharmonicPolynomial,
        z: C64,
        w: C64,
        s: f64,
        t_list: &[f64],
        cfg: &SynthesisConfig,
    ) -> Result<Self> {
        let (tz, tw) = (recenter(p, z), recenter(p, w));
        let decay = |tau: f64| -> Result<f64> {
            let mz = mu_size(&tz, 1.0 / tau)?;
            let mw = mu_size(&tw, 1.0 / tau)?;
            Ok(cfg.c_tau * (s / (mz * mz) + s / (mw * mw)))
        };
        let target = -(cfg.eps * 1e-3).ln();
        let tau_max = search_increasing(|t| decay(t), target)?;
        let t_alias = search_increasing(
            |t| {
                let m = mu_size(&tz, t)?;
                Ok(cfg.c_tau * m * m / s)
            },
            -cfg.eps.ln(),
        )?;
        let shift = twist(p, z, w);
        let t_span = t_list.iter().map(|t| (t + shift).abs()).fold(0.0, f64::max);
        let dtau = 2.0 * PI / (t_span + t_alias);
        let half = (tau_max / dtau).ceil() as usize;
        let n_tau = 2 * half + 1;
        if n_tau > cfg.max_tau_points {
            return Err(Error::ConfigInvalid(format!("tau grid needs {n_tau} points (cap {})", cfg.max_tau_points)));
        }
        TauGrid::new(half as f64 * dtau, n_tau)
    }
}

/// Smallest x > 0 with f(x) ≥ target for increasing f.
fn search_increasing(f: impl Fn(f64) -> Result<f64>, target: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut guard = 0;
    while f(hi)? < target {
        lo = hi;
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::ConfigInvalid("decay rule never reaches the target".into()));
        }
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Grid centered at the source with spacing σ(τ)/k and half-width a multiple of σ(τ).
///
/// σ² = s/(1 + s m) with m = (m_τ^D + m_0^D)^{1/D}, m_τ = μ(source, 1/|τ|)^{−2},
/// D = deg p and m_0 = 1/(2s). Near τ = 0 the top-degree terms give m_τ^D ∝ τ², so σ
/// is smooth across τ = 0 and the discretization error has no kink there.
pub fn scaled_grid(
    p: &SubharmonicPolynomial,
    source: C64,
    target: C64,
    s: f64,
    tau: f64,
    cfg: &SynthesisConfig,
) -> Result<GridSpec> {
    let deg = p.degree() as i32;
    let m0 = 0.5 / s;
    let m_tau = if tau == 0.0 {
        0.0
    } else {
        let mu = mu_size(&recenter(p, source), 1.0 / tau.abs())?;
        1.0 / (mu * mu)
    };
    let m = ((m_tau / m0).powi(deg) + 1.0).powf(1.0 / deg as f64) * m0;
    let sigma = (s / (1.0 + s * m)).sqrt();
    let h = sigma / cfg.points_per_sigma as f64;
    let reach = (target - source).re.abs().max((target - source).im.abs());
    let half = ((cfg.radius_sigmas * sigma + reach) / h).ceil() as usize;
    GridSpec::new(source, half as f64 * h, 2 * half + 1)
}

/// H_τ(s, z, w). For τ ≥ 0 the □_τ kernel with source w is read at z; for τ < 0
/// the □̃_{|τ|} kernel with source z is read at w.
pub fn kernel_value(p: &SubharmonicPolynomial, z: C64, w: C64, s: f64, tau: f64, cfg: &SynthesisConfig) -> Result<C64> {
    if tau >= 0.0 {
        let spec = scaled_grid(p, w, z, s, tau, cfg)?;
        let ops = WeightedOperatorSet::new(p, tau, spec, cfg.solver.order)?;
        kernel_column(&ops, KernelVariant::Forms, w, &[s], &cfg.solver)?.value(0, z)
    } else {
        let spec = scaled_grid(p, z, w, s, tau, cfg)?;
        let ops = WeightedOperatorSet::new(p, -tau, spec, cfg.solver.order)?;
        kernel_column(&ops, KernelVariant::Functions, z, &[s], &cfg.solver)?.value(0, w)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeKernel {
    pub z: C64,
    pub w: C64,
    pub s: f64,
    pub twist: f64,
    pub t_list: Vec<f64>,
    pub values: Vec<C64>,
    /// Per-t noise floor of the quadrature.
    pub floors: Vec<f64>,
    pub grid: TauGrid,
    pub tau_samples: Vec<C64>,
    pub solver: SolverConfig,
}

impl SpaceTimeKernel {
    pub fn resolved(&self, i: usize) -> bool {
        self.values[i].norm() > 10.0 * self.floors[i]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,re,im\n");
        for (t, v) in self.t_list.iter().zip(&self.values) {
            writeln!(out, "{},{:e},{:e}", t, v.re, v.im).unwrap();
        }
        out
    }
}

/// (1/2π) ∫ e^{itτ} H_τ dτ from samples on a symmetric τ grid.
///
/// With G = e^{−iτT}H and ω = t + T the sum is taken as
/// (Δτ/2π) Σ e^{iωτ_k} δ²G_k / (2cos ωΔτ − 2), the trapezoid rule for G continued
/// linearly past the grid. This converges when H only grows linearly in |τ|.
/// Returns (values, noise floors).
pub fn synthesize_from_samples(
    taus: &[f64],
    samples: &[C64],
    shift: f64,
    t_list: &[f64],
    eps: f64,
    noise_rel: f64,
    omega_floor: f64,
) -> Result<(Vec<C64>, Vec<f64>)> {
    let m = taus.len();
    let dtau = taus[1] - taus[0];
    let g: Vec<C64> = taus.iter().zip(samples).map(|(&t, &h)| h * C64::from_polar(1.0, -t * shift)).collect();
    let d2: Vec<C64> = (1..m - 1).map(|k| g[k + 1] - g[k] * 2.0 + g[k - 1]).collect();
    check_tail(&d2, eps)?;
    let gsum: f64 = g.iter().map(|v| v.norm()).sum();
    let mut values = Vec::with_capacity(t_list.len());
    let mut floors = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let omega = t + shift;
        if omega.abs() < omega_floor {
            let v: C64 = taus.iter().zip(&g).map(|(&tk, gk)| C64::from_polar(1.0, omega * tk) * gk).sum();
            values.push(v * (dtau / (2.0 * PI)));
            floors.push(noise_rel * gsum * dtau / (2.0 * PI));
        } else {
            let sigma = 2.0 * (omega * dtau).cos() - 2.0;
            let v: C64 = (1..m - 1).map(|k| C64::from_polar(1.0, omega * taus[k]) * d2[k - 1]).sum();
            values.push(v * (dtau / (2.0 * PI * sigma)));
            floors.push(noise_rel * 4.0 * gsum * dtau / (2.0 * PI * sigma.abs()));
        }
    }
    Ok((values, floors))
}

/// Fails when either end of δ²G is above ε·peak while still decaying toward the end.
/// A flat end is the discretization floor of the solves (the relative error of
/// the □̃ kernel grows linearly in |τ|), not a truncated tail.
fn check_tail(d2: &[C64], eps: f64) -> Result<()> {
    let peak = d2.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(());
    }
    let width = (d2.len() / 20).max(3).min(d2.len() / 2);
    let mean = |r: &[C64]| r.iter().map(|v| v.norm()).sum::<f64>() / r.len() as f64;
    let m = d2.len();
    for (outer, inner) in [(&d2[..width], &d2[width..2 * width]), (&d2[m - width..], &d2[m - 2 * width..m - width])] {
        let (a, b) = (mean(outer), mean(inner));
        if a > eps * peak && b > 2.0 * a {
            return Err(Error::TruncationResidual { tail: a / peak, eps });
        }
    }
    Ok(())
}

/// ℋ(s, z, w, t) for every t in t_list.
pub fn synthesize(
    p: &SubharmonicPolynomial,
    z: C64,
    w: C64,
    s: f64,
    t_list: &[f64],
    grid: &TauGrid,
    cfg: &SynthesisConfig,
) -> Result<SpaceTimeKernel> {
    cfg.validate()?;
    if t_list.is_empty() {
        return Err(Error::ConfigInvalid("empty t list".into()));
    }
    let taus = grid.taus();
    let samples: Vec<C64> = taus
        .par_iter()
        .map(|&tau| kernel_value(p, z, w, s, tau, cfg))
        .collect::<Result<Vec<_>>>()?;
    let shift = twist(p, z, w);
    let (values, floors) =
        synthesize_from_samples(&taus, &samples, shift, t_list, cfg.eps, cfg.noise_rel, cfg.omega_floor)?;
    Ok(SpaceTimeKernel {
        z,
        w,
        s,
        twist: shift,
        t_list: t_list.to_vec(),
        values,
        floors,
        grid: *grid,
        tau_samples: samples,
        solver: cfg.solver,
    })
}

/// One (x, y) = (d²/s, ln(|ℋ| V)) sample of the decay scatter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecaySample {
    pub s: f64,
    pub t: f64,
    pub d: f64,
    pub volume: f64,
    pub x: f64,
    pub y: f64,
}

/// Samples in the regime s ≤ d², d = |z−w| + μ(z, |t + T(w,z)|), with ℋ above its noise floor.
pub fn decay_samples(p: &SubharmonicPolynomial, kernels: &[SpaceTimeKernel]) -> Result<(Vec<DecaySample>, usize)> {
    let mut out = Vec::new();
    let mut excluded = 0;
    for k in kernels {
        let tbl = recenter(p, k.z);
        for (i, &t) in k.t_list.iter().enumerate() {
            let d = (k.z - k.w).norm() + mu_size(&tbl, (t + k.twist).abs())?;
            if k.s > d * d {
                continue;
            }
            if !k.resolved(i) {
                excluded += 1;
                continue;
            }
            let volume = d * d * lambda_size(&tbl, d);
            out.push(DecaySample {
                s: k.s,
                t,
                d,
                volume,
                x: d * d / k.s,
                y: (k.values[i].norm() * volume).ln(),
            });
        }
    }
    Ok((out, excluded))
}

/// Fit of |ℋ| ≤ C e^{−c d²/s}/V over the resolved samples.
pub fn decay_report(p: &SubharmonicPolynomial, kernels: &[SpaceTimeKernel]) -> Result<(DecayFitReport, Vec<DecaySample>)> {
    let (samples, excluded) = decay_samples(p, kernels)?;
    let xs: Vec<f64> = samples.iter().map(|s| s.x).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.y).collect();
    Ok((fit_decay("space-time gaussian decay", &xs, &ys, excluded)?, samples))
}

/// Gaussian test profile φ(t) = a·exp(−(t − t0)²/(2 width²)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianProfile {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

impl GaussianProfile {
    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude * (-(t - self.center).powi(2) / (2.0 * self.width * self.width)).exp()
    }
}

pub const TRANSFORM_POINTS: usize = 4096;

/// sup_τ |F[−i(t+T)φ](τ) − (∂_τ − iT)F[φ](τ)| / sup|F[φ]|, with F[φ](τ) = ∫ e^{−itτ}φ(t) dt.
///
/// Both transforms are trapezoid sums on a 4096-point t grid; the τ-derivative
/// is an eighth-order central difference of the sampled transform.
pub fn transform_identity_check(p: &SubharmonicPolynomial, z: C64, w: C64, profile: GaussianProfile) -> f64 {
    let shift = twist(p, z, w);
    let half = profile.center.abs() + 14.0 * profile.width;
    let ht = 2.0 * half / TRANSFORM_POINTS as f64;
    let ts: Vec<f64> = (0..TRANSFORM_POINTS).map(|j| -half + j as f64 * ht).collect();
    let phi: Vec<f64> = ts.iter().map(|&t| profile.eval(t)).collect();
    let transform = |tau: f64, weight: &dyn Fn(f64) -> C64| -> C64 {
        ts.iter().zip(&phi).map(|(&t, &f)| C64::from_polar(1.0, -t * tau) * weight(t) * f).sum::<C64>() * ht
    };
    let plain = |tau: f64| transform(tau, &|_| C64::new(1.0, 0.0));
    let dt = 0.02;
    let fd8 = [(1, 4.0 / 5.0), (2, -1.0 / 5.0), (3, 4.0 / 105.0), (4, -1.0 / 280.0)];
    let tau_span = 6.0 / profile.width;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for k in 0..=200 {
        let tau = -tau_span + k as f64 * (2.0 * tau_span / 200.0);
        let lhs = transform(tau, &|t| C64::new(0.0, -(t + shift)));
        let deriv: C64 = fd8.iter().map(|&(m, c)| (plain(tau + m as f64 * dt) - plain(tau - m as f64 * dt)) * c).sum::<C64>() / dt;
        let f0 = plain(tau);
        let rhs = deriv - C64::new(0.0, shift) * f0;
        worst = worst.max((lhs - rhs).norm());
        scale = scale.max(f0.norm());
    }
    worst / scale
}

/// Both sides of −W̄_w H(s,z,w) = Z̄_z H̃(s,z,w) at the given sample sources w.
/// Returns the largest defect relative to the largest side.
pub fn reduction_identity_check(
    p: &SubharmonicPolynomial,
    tau: f64,
    s: f64,
    z: C64,
    ws: &[C64],
    spec: GridSpec,
    cfg: &SolverConfig,
) -> Result<f64> {
    let ops = WeightedOperatorSet::new(p, tau, spec, cfg.order)?;
    // H(s, z, ·) = conj(H(s, ·, z)).
    let col = kernel_column(&ops, KernelVariant::Forms, z, &[s], cfg)?;
    let row = GridField { spec, values: col.fields[0].values.iter().map(|v| v.conj()).collect() };
    let lhs_field = ops.apply(OperatorKind::Wbar, &row)?;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &w in ws {
        let lhs = -lhs_field.interpolate(w)?;
        let tilde = kernel_column(&ops, KernelVariant::Functions, w, &[s], cfg)?;
        let rhs = ops.apply(OperatorKind::Zbar, &tilde.fields[0])?.interpolate(z)?;
        worst = worst.max((lhs - rhs).norm());
        scale = scale.max(lhs.norm()).max(rhs.norm());
    }
    Ok(worst / scale)
}

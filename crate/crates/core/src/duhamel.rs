//! Path-tree combinatorics of the Duhamel recursion and the separable time
//! integrals that appear in its estimates.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{SubharmonicPolynomial, C64};
use crate::solver::{evolve, evolve_snapshots, GridField, OperatorKind, SolverConfig, WeightedOperatorSet};

pub const MAX_ENUMERATION: usize = 40;

/// A composition of n into parts from {1, 2}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DuhamelPath {
    pub parts: Vec<u8>,
    pub coefficient: BigInt,
}

impl DuhamelPath {
    pub fn n(&self) -> usize {
        self.parts.iter().map(|&a| a as usize).sum()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn ones(&self) -> usize {
        self.parts.iter().filter(|&&a| a == 1).count()
    }

    pub fn twos(&self) -> usize {
        self.parts.iter().filter(|&&a| a == 2).count()
    }
}

pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

/// All compositions of n into {1, 2} in lexicographic order, with coefficient n!(−1)^{J₂}.
pub fn enumerate_paths(n: usize) -> Result<Vec<DuhamelPath>> {
    if n > MAX_ENUMERATION {
        return Err(Error::TooLarge(n));
    }
    let fact = factorial(n);
    let mut out = Vec::new();
    let mut stack = Vec::new();
    fn rec(rem: usize, stack: &mut Vec<u8>, fact: &BigInt, out: &mut Vec<DuhamelPath>) {
        if rem == 0 {
            let twos = stack.iter().filter(|&&a| a == 2).count();
            let coefficient = if twos % 2 == 0 { fact.clone() } else { -fact.clone() };
            out.push(DuhamelPath { parts: stack.clone(), coefficient });
            return;
        }
        for a in 1..=2u8 {
            if a as usize <= rem {
                stack.push(a);
                rec(rem - a as usize, stack, fact, out);
                stack.pop();
            }
        }
    }
    if n > 0 {
        rec(n, &mut stack, &fact, &mut out);
    }
    Ok(out)
}

/// Coefficient built one level at a time: with m derivatives remaining, a part 1
/// contributes m and a part 2 contributes −m(m−1).
pub fn level_coefficient(parts: &[u8]) -> BigInt {
    let mut m: usize = parts.iter().map(|&a| a as usize).sum();
    let mut c = BigInt::one();
    for &a in parts {
        match a {
            1 => {
                c *= m;
                m -= 1;
            }
            _ => {
                c *= m * (m - 1);
                c = -c;
                m -= 2;
            }
        }
    }
    c
}

/// Number of paths by the recursion f_n = f_{n−1} + f_{n−2}, f_1 = 1, f_2 = 2.
pub fn path_count_recursive(n: usize) -> BigUint {
    let (mut a, mut b) = (BigUint::one(), BigUint::one()); // f_0, f_1
    for _ in 1..n {
        let c = &a + &b;
        a = b;
        b = c;
    }
    if n == 0 {
        BigUint::one()
    } else {
        b
    }
}

/// (φ^{n+1} − ψ^{n+1})/√5, evaluated exactly in ℤ[√5].
pub fn binet(n: usize) -> BigUint {
    // (1 + √5)^m = x + y√5; then (φ^m − ψ^m)/√5 = 2y / 2^m.
    let m = n + 1;
    let (mut x, mut y) = (BigUint::one(), BigUint::zero());
    for _ in 0..m {
        let nx = &x + &y * 5u32;
        let ny = &x + &y;
        x = nx;
        y = ny;
    }
    (y << 1usize) >> m
}

/// Histogram J₂ ↦ (number of paths, signed coefficient) for a CLI summary.
pub fn coefficient_histogram(paths: &[DuhamelPath]) -> BTreeMap<usize, (usize, BigInt)> {
    let mut h = BTreeMap::new();
    for p in paths {
        let e = h.entry(p.twos()).or_insert((0usize, BigInt::zero()));
        e.0 += 1;
        e.1 = p.coefficient.clone();
    }
    h
}

fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// ∫₀^r s^{m/2−1}(r−s)^{−1/2} ds = r^{(m+1)/2−1} √π Γ(m/2)/Γ((m+1)/2).
pub fn beta_step(m: usize, r: f64) -> f64 {
    let h = m as f64 / 2.0;
    ((h + 0.5 - 1.0) * r.ln() + 0.5 * PI.ln() + ln_gamma(h) - ln_gamma(h + 0.5)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainPattern {
    Plain,
    TauDecayI,
    SecondDerivative,
    TauDecayIii,
}

impl ChainPattern {
    pub fn name(self) -> &'static str {
        match self {
            ChainPattern::Plain => "plain",
            ChainPattern::TauDecayI => "tau_decay_i",
            ChainPattern::SecondDerivative => "second_derivative",
            ChainPattern::TauDecayIii => "tau_decay_iii",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Plain, Self::TauDecayI, Self::SecondDerivative, Self::TauDecayIii].into_iter().find(|p| p.name() == s)
    }

    fn min_n(self) -> usize {
        match self {
            ChainPattern::Plain | ChainPattern::SecondDerivative => 1,
            ChainPattern::TauDecayI | ChainPattern::TauDecayIii => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeChainSpec {
    pub n: usize,
    pub pattern: ChainPattern,
    pub s: f64,
}

/// Integrand of a time chain over 0 < r_n < … < r_1 < s:
/// s^{prefactor} (s − r₁)^{outer} Π_{k<n} (r_k − r_{k+1})^{diff[k]} Π_k r_k^{power[k]}.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainIntegrand {
    pub prefactor: f64,
    pub outer: f64,
    pub diff: Vec<f64>,
    pub power: Vec<f64>,
}

impl TimeChainSpec {
    fn check(&self) -> Result<()> {
        if self.n < self.pattern.min_n() || !(self.s > 0.0) {
            return Err(Error::PatternMismatch { pattern: self.pattern.name().into(), n: self.n });
        }
        Ok(())
    }

    pub fn integrand(&self) -> Result<ChainIntegrand> {
        self.check()?;
        let n = self.n;
        let mut power = vec![0.0; n];
        let diff = vec![-0.5; n - 1];
        let (prefactor, outer) = match self.pattern {
            ChainPattern::Plain => {
                power[n - 1] = -0.5;
                (0.0, 0.0)
            }
            ChainPattern::TauDecayI => {
                power[n - 3] = -0.5;
                power[n - 2] = -0.5;
                power[n - 1] = -0.5;
                (-1.0, 0.0)
            }
            ChainPattern::SecondDerivative => {
                power[n - 1] = -0.5;
                (-1.0, -0.5)
            }
            ChainPattern::TauDecayIii => {
                power[n - 3] = -0.25;
                power[n - 2] = -0.5;
                power[n - 1] = -0.75;
                (0.0, -0.5)
            }
        };
        Ok(ChainIntegrand { prefactor, outer, diff, power })
    }
}

/// Closed-form value of a time chain, evaluated in log space.
pub fn time_chain(spec: TimeChainSpec) -> Result<f64> {
    spec.check()?;
    let n = spec.n as f64;
    let ls = spec.s.ln();
    let lp = PI.ln();
    let v = match spec.pattern {
        ChainPattern::Plain => (n / 2.0) * lp + (n / 2.0) * ls - ln_gamma(n / 2.0 + 1.0),
        ChainPattern::TauDecayI => (2.0 + (n - 2.0) / 2.0) * lp + ((n - 2.0) / 2.0 - 1.0) * ls - ln_gamma(n / 2.0),
        ChainPattern::SecondDerivative => ((n + 1.0) / 2.0) * lp + ((n - 3.0) / 2.0) * ls - ln_gamma((n + 1.0) / 2.0),
        ChainPattern::TauDecayIii => {
            ((n - 1.0) / 2.0) * lp - ln_gamma((n - 1.0) / 2.0) + quarter_factor_ln() + ((n - 1.0) / 2.0 - 1.0) * ls
        }
    };
    Ok(v.exp())
}

/// ln(π Γ(1/4)² / Γ(3/4)²).
fn quarter_factor_ln() -> f64 {
    PI.ln() + 2.0 * ln_gamma(0.25) - 2.0 * ln_gamma(0.75)
}

/// Alternative tau_decay_iii form π^{(n−2)/2}/Γ((n−1)/2)·πΓ(1/4)²/Γ(3/4)²·s^{(n−1)/2−1}.
/// It differs from [`time_chain`] by a factor √π; kept for reporting.
pub fn time_chain_literal(spec: TimeChainSpec) -> Result<f64> {
    match spec.pattern {
        ChainPattern::TauDecayIii => {
            spec.check()?;
            let n = spec.n as f64;
            Ok((((n - 2.0) / 2.0) * PI.ln() - ln_gamma((n - 1.0) / 2.0)
                + quarter_factor_ln()
                + ((n - 1.0) / 2.0 - 1.0) * spec.s.ln())
            .exp())
        }
        _ => time_chain(spec),
    }
}

/// Nested adaptive quadrature of a chain integrand, innermost variable first.
///
/// Each level F_k(x) = ∫₀^x (x−ρ)^{a} ρ^{b} F_{k+1}(ρ) dρ is tabulated on a
/// geometric mesh in x and integrated by double-exponential quadrature after
/// power substitutions that remove the endpoint singularities. Between mesh
/// nodes F is interpolated cubically in (ln x, ln F).
pub fn nested_quadrature(integrand: &ChainIntegrand, s: f64, mesh: usize) -> f64 {
    let n = integrand.power.len();
    let l_min = (1e-14f64).ln();
    let nodes: Vec<f64> = (0..mesh).map(|i| l_min * (1.0 - i as f64 / (mesh - 1) as f64)).collect();
    let xs: Vec<f64> = nodes.iter().map(|l| s * l.exp()).collect();
    // ln F_{k+1} on the mesh; F_{n+1} = 1.
    let mut table: Option<Vec<f64>> = None;
    for k in (0..n).rev() {
        let a = if k == 0 { integrand.outer } else { integrand.diff[k - 1] };
        let b = integrand.power[k];
        let inner = |rho: f64| -> f64 {
            match &table {
                None => 1.0,
                Some(t) => interp_log(&nodes, t, (rho / s).ln()).exp(),
            }
        };
        if k == 0 {
            let v = level_integral(s, a, b, &inner);
            return s.powf(integrand.prefactor) * v;
        }
        let next: Vec<f64> = xs.iter().map(|&x| level_integral(x, a, b, &inner).ln()).collect();
        table = Some(next);
    }
    unreachable!("chains have at least one variable")
}

fn level_integral(x: f64, a: f64, b: f64, f: &dyn Fn(f64) -> f64) -> f64 {
    let half = 0.5 * x;
    let qa = 1.0 / (1.0 + b);
    let qb = 1.0 / (1.0 + a);
    let part_a = |u: f64| {
        let rho = half * u.powf(qa);
        (x - rho).powf(a) * f(rho)
    };
    let part_b = |u: f64| {
        let v = half * u.powf(qb);
        let rho = x - v;
        rho.powf(b) * f(rho)
    };
    let scale_a = half.powf(1.0 + b) * qa;
    let scale_b = half.powf(1.0 + a) * qb;
    let ia = quadrature::integrate(part_a, 0.0, 1.0, 1e-13 * part_a(1.0).abs().max(1e-300)).integral;
    let ib = quadrature::integrate(part_b, 0.0, 1.0, 1e-13 * part_b(1.0).abs().max(1e-300)).integral;
    scale_a * ia + scale_b * ib
}

/// Cubic interpolation of a uniformly spaced table; linear extrapolation outside.
fn interp_log(nodes: &[f64], vals: &[f64], l: f64) -> f64 {
    let m = nodes.len();
    let h = nodes[1] - nodes[0];
    let pos = (l - nodes[0]) / h;
    if pos <= 0.0 {
        return vals[0] + (vals[1] - vals[0]) * pos;
    }
    if pos >= (m - 1) as f64 {
        return vals[m - 1] + (vals[m - 1] - vals[m - 2]) * (pos - (m - 1) as f64);
    }
    let i = (pos.floor() as usize).clamp(1, m - 3);
    let t = pos - i as f64;
    let (y0, y1, y2, y3) = (vals[i - 1], vals[i], vals[i + 1], vals[i + 2]);
    // Lagrange on nodes −1, 0, 1, 2
    let w0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
    let w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    let w2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
    let w3 = (t + 1.0) * t * (t - 1.0) / 6.0;
    w0 * y0 + w1 * y1 + w2 * y2 + w3 * y3
}

/// Default mesh size for [`nested_quadrature`].
pub const CHAIN_MESH: usize = 700;

pub fn chain_by_quadrature(spec: TimeChainSpec) -> Result<f64> {
    Ok(nested_quadrature(&spec.integrand()?, spec.s, CHAIN_MESH))
}

/// Both sides of the completed-square identity for two Gaussian factors; returns |lhs − rhs|.
pub fn gauss_convolution_check(
    c0: f64,
    r_prev: f64,
    r_cur: f64,
    xi_prev: C64,
    xi_cur: C64,
) -> f64 {
    let lhs = (-c0 * (xi_prev - xi_cur).norm_sqr() / (r_prev - r_cur)).exp() * (-c0 * xi_cur.norm_sqr() / r_cur).exp();
    let shift = xi_cur - xi_prev * (r_cur / r_prev);
    let rhs = (-c0 * r_prev / ((r_prev - r_cur) * r_cur) * shift.norm_sqr()).exp()
        * (-c0 * xi_prev.norm_sqr() / r_prev).exp();
    (lhs - rhs).abs()
}

/// (Π a_i, (1/k) Σ a_i^k); the first never exceeds the second.
pub fn power_mean_bound(a: &[f64]) -> (f64, f64) {
    let k = a.len() as i32;
    let prod = a.iter().product();
    let mean = a.iter().map(|x| x.powi(k)).sum::<f64>() / k as f64;
    (prod, mean)
}

/// max_{n ≤ n_max} (n!/(n²Γ(n/2)n^{n/2}))^{1/n}: the constant A in n!/(n²Γ(n/2)) ≤ A^n n^{n/2}.
pub fn stirling_constant(n_max: usize) -> f64 {
    (1..=n_max)
        .map(|n| {
            let x = n as f64;
            ((ln_gamma(x + 1.0) - 2.0 * x.ln() - ln_gamma(x / 2.0) - 0.5 * x * x.ln()) / x).exp()
        })
        .fold(0.0, f64::max)
}

/// Result of [`duhamel_residual`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuhamelResidual {
    /// ‖∂_s u + □u − g‖ / (‖□u‖ + ‖g‖) for the Duhamel solution u.
    pub pde_residual: f64,
    /// ‖u − u_cn‖ / ‖u_cn‖ against Crank–Nicolson stepping of the forced equation.
    pub forced_agreement: f64,
}

const DUHAMEL_PANELS: usize = 32;

/// u(s) = e^{−s□}f0 + ∫₀^s e^{−ρ□}g dρ with the ρ-integral by composite Simpson.
pub fn duhamel_solution(ops: &WeightedOperatorSet, f0: &GridField, g: &GridField, s: f64, cfg: &SolverConfig) -> Result<GridField> {
    let mut u = evolve(ops, false, f0, s, cfg)?;
    let m = DUHAMEL_PANELS;
    let rho: Vec<f64> = (1..=m).map(|j| s * j as f64 / m as f64).collect();
    let snaps = evolve_snapshots(ops, false, g, &rho, cfg)?;
    let step = s / m as f64;
    for (k, v) in u.values.iter_mut().enumerate() {
        let mut acc = g.values[k];
        for (j, f) in snaps.iter().enumerate() {
            let wgt = if j + 1 == m { 1.0 } else if j % 2 == 0 { 4.0 } else { 2.0 };
            acc += f.values[k] * wgt;
        }
        *v += acc * (step / 3.0);
    }
    Ok(u)
}

/// Crank–Nicolson stepping of ∂_s u + □u = g with u(0) = f0.
pub fn forced_crank_nicolson(ops: &WeightedOperatorSet, f0: &GridField, g: &GridField, s: f64, cfg: &SolverConfig) -> Result<GridField> {
    let steps = (s / (0.5 * ops.h() * ops.h())).ceil().max(1.0) as usize;
    let dt = s / steps as f64;
    let len = ops.spec.len();
    let mut u = f0.clone();
    let mut scratch = vec![C64::new(0.0, 0.0); 4 * len];
    let mut bu = vec![C64::new(0.0, 0.0); len];
    for _ in 0..steps {
        ops.apply_box_into(false, &u.values, &mut bu, &mut scratch);
        let rhs = GridField {
            spec: ops.spec,
            values: (0..len).map(|k| u.values[k] - bu[k] * (0.5 * dt) + g.values[k] * dt).collect(),
        };
        u = crate::solver::evolve::implicit_half_step(ops, &rhs, dt, cfg)?;
    }
    Ok(u)
}

pub fn duhamel_residual(
    p: &SubharmonicPolynomial,
    tau: f64,
    g: &GridField,
    f0: &GridField,
    s: f64,
    cfg: &SolverConfig,
) -> Result<DuhamelResidual> {
    if g.spec != f0.spec {
        return Err(Error::GridMismatch);
    }
    let ops = WeightedOperatorSet::new(p, tau, g.spec, cfg.order)?;
    let delta = 0.01 * s;
    let u = duhamel_solution(&ops, f0, g, s, cfg)?;
    let up = duhamel_solution(&ops, f0, g, s + delta, cfg)?;
    let um = duhamel_solution(&ops, f0, g, s - delta, cfg)?;
    let bu = ops.apply(OperatorKind::Box, &u)?;
    let res = GridField {
        spec: g.spec,
        values: (0..u.values.len())
            .map(|k| (up.values[k] - um.values[k]) / (2.0 * delta) + bu.values[k] - g.values[k])
            .collect(),
    };
    let pde_residual = res.l2_norm() / (bu.l2_norm() + g.l2_norm()).max(f64::MIN_POSITIVE);
    let cn = forced_crank_nicolson(&ops, f0, g, s, cfg)?;
    let diff = GridField { spec: g.spec, values: u.values.iter().zip(&cn.values).map(|(a, b)| a - b).collect() };
    let forced_agreement = diff.l2_norm() / cn.l2_norm().max(f64::MIN_POSITIVE);
    Ok(DuhamelResidual { pde_residual, forced_agreement })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_enumerations() {
        let p1 = enumerate_paths(1).unwrap();
        assert_eq!(p1.len(), 1);
        assert_eq!(p1[0].parts, vec![1]);
        let p2 = enumerate_paths(2).unwrap();
        assert_eq!(p2.iter().map(|p| p.parts.clone()).collect::<Vec<_>>(), vec![vec![1, 1], vec![2]]);
        assert_eq!(p2[0].coefficient, BigInt::from(2));
        assert_eq!(p2[1].coefficient, BigInt::from(-2));
    }

    #[test]
    fn too_large_rejected() {
        assert_eq!(enumerate_paths(41), Err(Error::TooLarge(41)));
    }

    #[test]
    fn binet_first_values() {
        let v: Vec<u32> = (1..=8).map(|n| binet(n).try_into().unwrap()).collect();
        assert_eq!(v, vec![1, 2, 3, 5, 8, 13, 21, 34]);
    }

    #[test]
    fn pattern_needs_three_slots() {
        let spec = TimeChainSpec { n: 2, pattern: ChainPattern::TauDecayIii, s: 1.0 };
        assert!(matches!(time_chain(spec), Err(Error::PatternMismatch { .. })));
    }

    #[test]
    fn pattern_names_round_trip() {
        for p in [ChainPattern::Plain, ChainPattern::TauDecayI, ChainPattern::SecondDerivative, ChainPattern::TauDecayIii] {
            assert_eq!(ChainPattern::parse(p.name()), Some(p));
        }
    }
}

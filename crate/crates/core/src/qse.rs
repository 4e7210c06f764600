//! Quantitative smoothness estimates: stretched-exponential decay versus
//! derivative/moment growth, and the moment envelopes E_n(z, s).

use std::f64::consts::E;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{TaylorTable, COEFF_FLOOR};

/// Upper cap for the decay rate when every moment beyond the first vanishes.
pub const A_MAX: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    L1,
    Sup,
}

/// The claim ‖g^{(ℓ)}‖_q ≤ C A^ℓ ℓ^{ℓβ} for all ℓ ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QseProfile {
    pub beta: f64,
    pub q: NormKind,
    pub c: f64,
    pub a: f64,
}

impl QseProfile {
    pub fn bound(&self, l: usize) -> f64 {
        self.c * self.a.powi(l as i32) * pow_self(l, self.beta)
    }
}

/// The claim |φ(t)| ≤ C exp(−a|t|^{1/β}).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub a: f64,
    pub beta: f64,
    pub c: f64,
}

impl DecayProfile {
    /// Moment constant A = (β/(a e))^β.
    pub fn moment_constant(&self) -> f64 {
        (self.beta / (self.a * E)).powf(self.beta)
    }

    pub fn bound(&self, t: f64) -> f64 {
        self.c * (-self.a * t.abs().powf(1.0 / self.beta)).exp()
    }
}

/// n^{nβ} with 0^0 = 1.
pub fn pow_self(n: usize, beta: f64) -> f64 {
    if n == 0 {
        1.0
    } else {
        (n as f64).powf(n as f64 * beta)
    }
}

/// inf_{γ≥0} γ^{γβ} / ξ^γ, attained at γ = ξ^{1/β}/e.
pub fn nu_continuous(xi: f64, beta: f64) -> f64 {
    (-(beta / E) * xi.powf(1.0 / beta)).exp()
}

/// ν at the scaling that matches e^{−a t^{1/β}}: ξ = (a e/β)^β t.
pub fn nu_continuous_at(t: f64, a: f64, beta: f64) -> f64 {
    nu_continuous((a * E / beta).powf(beta) * t, beta)
}

/// inf over integers n ≥ 1 of min{1, (nβ/(a e t^{1/β}))^{nβ}}.
pub fn nu_integer(t: f64, a: f64, beta: f64) -> f64 {
    let root = t.powf(1.0 / beta);
    if root == 0.0 {
        return 1.0;
    }
    let g0 = a * root / beta;
    let lo = (g0.floor() - 2.0).max(1.0) as u64;
    let hi = (g0.ceil() + 2.0).max(1.0) as u64;
    let term = |n: u64| {
        let x = n as f64 * beta;
        let v = (x * (x / (a * E * root)).ln()).exp();
        v.min(1.0)
    };
    let mut best = term(1);
    for n in lo..=hi {
        best = best.min(term(n));
    }
    best
}

/// CSV of (t, lower, integer-inf, upper) for the sandwich e^{−a t^{1/β}} ≤ ν ≤ e^{eβ/2} e^{−a t^{1/β}}.
pub fn sandwich_csv(a: f64, beta: f64, ts: &[f64]) -> String {
    let mut out = String::from("t,lower,integer_inf,upper\n");
    for &t in ts {
        let lower = (-a * t.powf(1.0 / beta)).exp();
        writeln!(out, "{:e},{:e},{:e},{:e}", t, lower, nu_integer(t, a, beta), (E * beta / 2.0).exp() * lower).unwrap();
    }
    out
}

/// Infers the decay profile implied by moment bounds M_0, M_1, ... with C = M_0.
pub fn moments_to_decay(moments: &[f64], beta: f64) -> Result<DecayProfile> {
    if moments.is_empty() || moments.iter().any(|m| !m.is_finite() || *m < 0.0) {
        return Err(Error::NonconformingMoments);
    }
    let c = moments[0].max(1e-300);
    let rates: Vec<f64> = moments
        .iter()
        .enumerate()
        .skip(1)
        .map(|(n, &m)| (m / c).powf(1.0 / (n as f64 * beta)) / n as f64)
        .collect();
    let g = rates.iter().cloned().fold(0.0, f64::max);
    // A rate still climbing steeply at the last supplied n has no finite supremum in sight.
    if rates.len() >= 4 {
        let k = rates.len();
        let growing = (k - 3..k).all(|i| rates[i] > 1.01 * rates[i - 1]);
        if growing && rates[k - 1] == g && rates[k - 1] > 1.25 * rates[k - 4] {
            return Err(Error::NonconformingMoments);
        }
    }
    let a = if g > 0.0 { (beta / (E * g)).min(A_MAX) } else { A_MAX };
    Ok(DecayProfile { a, beta, c })
}

/// Smallest A for C = ‖g‖ at ℓ = 0.
pub fn fit_qse(norms: &[f64], beta: f64, q: NormKind) -> QseProfile {
    let c = norms.first().copied().unwrap_or(0.0).max(1e-300);
    let mut a: f64 = 0.0;
    for (l, &v) in norms.iter().enumerate().skip(1) {
        a = a.max((v / (c * pow_self(l, beta))).powf(1.0 / l as f64));
    }
    QseProfile { beta, q, c, a: a.max(f64::MIN_POSITIVE) }
}

/// CSV of (ℓ, norm, bound).
pub fn qse_csv(profile: &QseProfile, norms: &[f64]) -> String {
    let mut out = String::from("l,norm,bound\n");
    for (l, &v) in norms.iter().enumerate() {
        writeln!(out, "{},{:e},{:e}", l, v, profile.bound(l)).unwrap();
    }
    out
}

/// |t|^γ e^{−a|t|^{1/β}} ≤ (γβ/(ae))^{γβ}; returns lhs/rhs (≤ 1 when it holds).
pub fn calculus_ratio(t: f64, gamma: f64, a: f64, beta: f64) -> f64 {
    let lhs = gamma * t.abs().ln() - a * t.abs().powf(1.0 / beta);
    let x = gamma * beta;
    let rhs = if x == 0.0 { 0.0 } else { x * (x / (a * E)).ln() };
    (lhs - rhs).exp()
}

fn log_sum_exp(logs: &[f64]) -> f64 {
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
}

/// ln Σ_{j,k≥1} |A_jk|^m s^{m(j+k)/2} n^{n(j+k)/2}; with m = n this is ln E_n.
fn log_mixed_sum(tbl: &TaylorTable, m: usize, n: usize, s: f64) -> f64 {
    let logs: Vec<f64> = tbl
        .mixed()
        .filter(|(_, _, a)| a.norm() >= COEFF_FLOOR)
        .map(|(j, k, a)| {
            let h = (j + k) as f64 / 2.0;
            let pow_n = if n == 0 { 0.0 } else { n as f64 * h * (n as f64).ln() };
            m as f64 * a.norm().ln() + m as f64 * h * s.ln() + pow_n
        })
        .collect();
    log_sum_exp(&logs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEnvelope {
    pub n: usize,
    pub s: f64,
    pub log_value: f64,
}

impl MomentEnvelope {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }
}

/// E_n(z, s); E_0 is the number of mixed terms.
pub fn envelope(tbl: &TaylorTable, n: usize, s: f64) -> MomentEnvelope {
    MomentEnvelope { n, s, log_value: log_mixed_sum(tbl, n, n, s) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeChain {
    pub n: usize,
    pub s: f64,
    /// ln of (1/s²) Σ|A|^{n−1} s^{(n−1)(j+k)/2} n^{n(j+k)/2}.
    pub log_upper: f64,
    /// ln of E_n / (s B_d(√s)).
    pub log_middle: f64,
    /// ln of the upper term divided by n^{deg p / 2}.
    pub log_lower: f64,
    /// upper / middle.
    pub upper_ratio: f64,
    /// middle / lower.
    pub lower_ratio: f64,
}

/// The two-sided comparison upper ≳ middle ≳ lower at base point tbl.center.
pub fn check_envelope_chain(tbl: &TaylorTable, n: usize, s: f64) -> EnvelopeChain {
    let outer = log_mixed_sum(tbl, n - 1, n, s);
    let log_upper = outer - 2.0 * s.ln();
    // s B_d(√s) = s · s Λ(√s) = s² Σ |A| s^{(j+k)/2}
    let log_ball = log_mixed_sum(tbl, 1, 0, s);
    let log_middle = log_mixed_sum(tbl, n, n, s) - 2.0 * s.ln() - log_ball;
    let log_lower = log_upper - 0.5 * tbl.degree as f64 * (n as f64).ln();
    EnvelopeChain {
        n,
        s,
        log_upper,
        log_middle,
        log_lower,
        upper_ratio: (log_upper - log_middle).exp(),
        lower_ratio: (log_middle - log_lower).exp(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow_self_zero_is_one() {
        assert_eq!(pow_self(0, 2.5), 1.0);
        assert_eq!(pow_self(2, 1.0), 4.0);
    }

    #[test]
    fn nu_integer_at_zero_is_one() {
        assert_eq!(nu_integer(0.0, 1.0, 1.0), 1.0);
    }

    #[test]
    fn moments_all_zero_caps_rate() {
        let d = moments_to_decay(&[1.0, 0.0, 0.0], 1.0).unwrap();
        assert_eq!(d.a, A_MAX);
    }

    #[test]
    fn moments_runaway_rejected() {
        let m: Vec<f64> = (0..12).map(|n| (n as f64).powf(3.0 * n as f64)).collect();
        assert_eq!(moments_to_decay(&m, 1.0), Err(Error::NonconformingMoments));
    }

    #[test]
    fn calculus_ratio_equality_at_optimum() {
        // maximiser of t^γ e^{−a t^{1/β}} is t = (γβ/a)^β
        let (g, a, b): (f64, f64, f64) = (3.0, 2.0, 1.5);
        let t = (g * b / a).powf(b);
        assert!((calculus_ratio(t, g, a, b) - 1.0).abs() < 1e-12);
    }
}

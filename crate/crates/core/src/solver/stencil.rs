//! Twisted τ-derivatives (∂_τ − iT)^n H by finite differences across τ solves.

use serde::{Deserialize, Serialize};

use super::evolve::{kernel_column, KernelVariant, SolverConfig};
use super::grid::{GridField, GridSpec};
use super::operators::WeightedOperatorSet;
use crate::error::{Error, Result};
use crate::geometry::{twist, SubharmonicPolynomial, C64};

/// Relative solver noise assumed when sizing the τ step.
pub const SOLVER_NOISE: f64 = 1e-10;
/// Largest tolerated noise amplification of a stencil.
pub const STENCIL_NOISE_CAP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwistedDerivativeStencil {
    pub n: usize,
    pub dtau: f64,
    /// 2 uses 2n+1 points, 4 uses 2n+3.
    pub order: usize,
}

impl TwistedDerivativeStencil {
    /// dtau = max(1e-3, 1e-2 τ, (ε S_n / η)^{1/n}), balancing truncation against solver noise.
    pub fn for_tau(n: usize, tau: f64, order: usize) -> Result<Self> {
        if n == 0 {
            return Ok(TwistedDerivativeStencil { n, dtau: 1e-3, order });
        }
        let proto = TwistedDerivativeStencil { n, dtau: 1.0, order };
        proto.check()?;
        let s_n: f64 = proto.weights().iter().map(|w| w.abs()).sum();
        let noise_step = (SOLVER_NOISE * s_n / STENCIL_NOISE_CAP).powf(1.0 / n as f64);
        let dtau = 1e-3f64.max(1e-2 * tau.abs()).max(noise_step);
        Ok(TwistedDerivativeStencil { n, dtau, order })
    }

    fn check(&self) -> Result<()> {
        if self.n > 4 || !(self.order == 2 || self.order == 4) || !(self.dtau > 0.0) {
            return Err(Error::ConfigInvalid(format!(
                "stencil n = {} order = {} dtau = {}",
                self.n, self.order, self.dtau
            )));
        }
        Ok(())
    }

    pub fn offsets(&self) -> Vec<i64> {
        if self.n == 0 {
            return vec![0];
        }
        let half = (self.n + self.order / 2 - 1) as i64;
        (-half..=half).collect()
    }

    /// Weights for d^n/dτ^n at offsets·dtau.
    pub fn weights(&self) -> Vec<f64> {
        let xs: Vec<f64> = self.offsets().iter().map(|&m| m as f64 * self.dtau).collect();
        fornberg(0.0, &xs, self.n)
    }

    /// ε Σ|w|: estimated absolute error of the derivative per unit solver noise.
    pub fn noise_gain(&self) -> f64 {
        SOLVER_NOISE * self.weights().iter().map(|w| w.abs()).sum::<f64>()
    }
}

/// Fornberg's finite-difference weights for the m-th derivative at x0 on nodes xs.
pub fn fornberg(x0: f64, xs: &[f64], m: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[m]).collect()
}

/// (M)^n H(s, ·, w) over a fixed grid for each s in s_list: twisted n-th
/// τ-derivative of the kernel column at τ.
pub fn twisted_tau_derivative_fields(
    p: &SubharmonicPolynomial,
    w: C64,
    s_list: &[f64],
    tau: f64,
    stencil: TwistedDerivativeStencil,
    spec: GridSpec,
    cfg: &SolverConfig,
) -> Result<Vec<GridField>> {
    stencil.check()?;
    let gain = stencil.noise_gain();
    if gain > STENCIL_NOISE_CAP * 1e3 {
        return Err(Error::StencilUnderflow { dtau: stencil.dtau });
    }
    let weights = stencil.weights();
    let twists: Vec<f64> = spec.nodes().map(|z| twist(p, z, w)).collect();
    let mut acc = vec![GridField::zeros(spec); s_list.len()];
    for (&m, &wt) in stencil.offsets().iter().zip(&weights) {
        let tm = tau + m as f64 * stencil.dtau;
        let ops = WeightedOperatorSet::new(p, tm, spec, cfg.order)?;
        let slice = kernel_column(&ops, KernelVariant::Forms, w, s_list, cfg)?;
        for (field, out) in slice.fields.iter().zip(acc.iter_mut()) {
            for (k, v) in field.values.iter().enumerate() {
                // G = e^{−iτT(w,z)} H; derivative taken relative to the base τ.
                let phase = C64::from_polar(1.0, -(tm - tau) * twists[k]);
                out.values[k] += phase * v * wt;
            }
        }
    }
    Ok(acc)
}

pub fn twisted_tau_derivative_field(
    p: &SubharmonicPolynomial,
    w: C64,
    s: f64,
    tau: f64,
    stencil: TwistedDerivativeStencil,
    spec: GridSpec,
    cfg: &SolverConfig,
) -> Result<GridField> {
    Ok(twisted_tau_derivative_fields(p, w, &[s], tau, stencil, spec, cfg)?.remove(0))
}

/// Single value of (M)^n H(s, z, w).
pub fn twisted_tau_derivative(
    p: &SubharmonicPolynomial,
    w: C64,
    z: C64,
    s: f64,
    tau: f64,
    stencil: TwistedDerivativeStencil,
    spec: GridSpec,
    cfg: &SolverConfig,
) -> Result<C64> {
    twisted_tau_derivative_field(p, w, s, tau, stencil, spec, cfg)?.interpolate(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_central_second_derivative() {
        let w = fornberg(0.0, &[-1.0, 0.0, 1.0], 2);
        assert!((w[0] - 1.0).abs() < 1e-14 && (w[1] + 2.0).abs() < 1e-14 && (w[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn stencil_differentiates_polynomials_exactly() {
        let st = TwistedDerivativeStencil { n: 3, dtau: 0.1, order: 2 };
        let xs: Vec<f64> = st.offsets().iter().map(|&m| 0.7 + m as f64 * 0.1).collect();
        let f = |x: f64| x.powi(5) - 2.0 * x.powi(3);
        let d3 = st.weights().iter().zip(&xs).map(|(w, &x)| w * f(x)).sum::<f64>();
        let exact = 60.0 * 0.7f64.powi(2) - 12.0;
        assert!((d3 - exact).abs() < 1e-8, "{d3} vs {exact}");
    }

    #[test]
    fn dtau_rule_respects_noise() {
        let st = TwistedDerivativeStencil::for_tau(4, 1.0, 2).unwrap();
        assert!(st.noise_gain() <= STENCIL_NOISE_CAP * 1.0001);
    }
}

use serde::{Deserialize, Serialize};

use super::grid::{GridField, GridSpec};
use crate::error::{Error, Result};
use crate::geometry::{SubharmonicPolynomial, C64};

/// Centered difference coefficients with zero extension.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    pub order: usize,
    /// Second-derivative weights at offsets 0..=r (symmetric).
    pub d2: Vec<f64>,
    /// First-derivative weights at offsets 1..=r (antisymmetric).
    pub d1: Vec<f64>,
}

impl Stencil {
    pub fn new(order: usize) -> Result<Self> {
        let (d2, d1) = match order {
            2 => (vec![-2.0, 1.0], vec![0.5]),
            4 => (vec![-5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0], vec![2.0 / 3.0, -1.0 / 12.0]),
            6 => (
                vec![-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0],
                vec![3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0],
            ),
            _ => return Err(Error::ConfigInvalid(format!("stencil order {order} not in {{2, 4, 6}}"))),
        };
        Ok(Stencil { order, d2, d1 })
    }

    pub fn reach(&self) -> usize {
        self.d1.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorKind {
    Z,
    Zbar,
    W,
    Wbar,
    Box,
    BoxTilde,
}

/// Weighted operators for one τ on one grid; V = τ ∂p/∂z at the nodes.
#[derive(Debug, Clone)]
pub struct WeightedOperatorSet {
    pub p: SubharmonicPolynomial,
    pub tau: f64,
    pub spec: GridSpec,
    pub stencil: Stencil,
    v: Vec<C64>,
}

impl WeightedOperatorSet {
    pub fn new(p: &SubharmonicPolynomial, tau: f64, spec: GridSpec, order: usize) -> Result<Self> {
        spec.validate()?;
        let v = spec.nodes().map(|z| p.dz(z) * tau).collect();
        Ok(WeightedOperatorSet { p: p.clone(), tau, spec, stencil: Stencil::new(order)?, v })
    }

    pub fn potential(&self) -> &[C64] {
        &self.v
    }

    pub fn h(&self) -> f64 {
        self.spec.h()
    }

    /// Diagonal of □ (same for □̃).
    pub fn box_diagonal(&self) -> Vec<f64> {
        let h = self.h();
        let lap = -self.stencil.d2[0] / (2.0 * h * h);
        self.v.iter().map(|v| lap + v.norm_sqr()).collect()
    }

    /// ∂_x f and ∂_y f with the configured stencil.
    fn gradient(&self, f: &[C64], dx: &mut [C64], dy: &mut [C64]) {
        let n = self.spec.n_side;
        let inv = 1.0 / self.h();
        let c = &self.stencil.d1;
        for j in 0..n {
            for i in 0..n {
                let mut ax = C64::new(0.0, 0.0);
                let mut ay = C64::new(0.0, 0.0);
                for (m, &w) in c.iter().enumerate() {
                    let m = m + 1;
                    let xp = if i + m < n { f[j * n + i + m] } else { C64::new(0.0, 0.0) };
                    let xm = if i >= m { f[j * n + i - m] } else { C64::new(0.0, 0.0) };
                    let yp = if j + m < n { f[(j + m) * n + i] } else { C64::new(0.0, 0.0) };
                    let ym = if j >= m { f[(j - m) * n + i] } else { C64::new(0.0, 0.0) };
                    ax += (xp - xm) * w;
                    ay += (yp - ym) * w;
                }
                dx[j * n + i] = ax * inv;
                dy[j * n + i] = ay * inv;
            }
        }
    }

    fn laplacian(&self, f: &[C64], out: &mut [C64]) {
        let n = self.spec.n_side;
        let inv = 1.0 / (self.h() * self.h());
        let c = &self.stencil.d2;
        for j in 0..n {
            for i in 0..n {
                let mut acc = f[j * n + i] * (2.0 * c[0]);
                for (m, &w) in c.iter().enumerate().skip(1) {
                    let mut s = C64::new(0.0, 0.0);
                    if i + m < n {
                        s += f[j * n + i + m];
                    }
                    if i >= m {
                        s += f[j * n + i - m];
                    }
                    if j + m < n {
                        s += f[(j + m) * n + i];
                    }
                    if j >= m {
                        s += f[(j - m) * n + i];
                    }
                    acc += s * w;
                }
                out[j * n + i] = acc * inv;
            }
        }
    }

    /// out = □u (tilde = false) or □̃u (tilde = true); scratch needs 4·len entries.
    pub fn apply_box_into(&self, tilde: bool, u: &[C64], out: &mut [C64], scratch: &mut [C64]) {
        let len = self.spec.len();
        let (vu, rest) = scratch.split_at_mut(len);
        let (dx, rest) = rest.split_at_mut(len);
        let (dy, rest) = rest.split_at_mut(len);
        let lap = &mut rest[..len];
        let i = C64::new(0.0, 1.0);
        self.laplacian(u, lap);
        // Product term: ∂̄(V u) for □, −∂(V̄ u) for □̃.
        for k in 0..len {
            vu[k] = if tilde { self.v[k].conj() * u[k] } else { self.v[k] * u[k] };
        }
        self.gradient(vu, dx, dy);
        for k in 0..len {
            let prod = if tilde { -(dx[k] - i * dy[k]) * 0.5 } else { (dx[k] + i * dy[k]) * 0.5 };
            out[k] = -0.25 * lap[k] + prod + self.v[k].norm_sqr() * u[k];
        }
        // Transport term: −V̄ ∂u for □, V ∂̄u for □̃.
        self.gradient(u, dx, dy);
        for k in 0..len {
            out[k] += if tilde {
                self.v[k] * (dx[k] + i * dy[k]) * 0.5
            } else {
                -self.v[k].conj() * (dx[k] - i * dy[k]) * 0.5
            };
        }
    }

    pub fn apply(&self, which: OperatorKind, u: &GridField) -> Result<GridField> {
        if u.spec != self.spec {
            return Err(Error::GridMismatch);
        }
        let len = self.spec.len();
        let mut out = GridField::zeros(self.spec);
        match which {
            OperatorKind::Box | OperatorKind::BoxTilde => {
                let mut scratch = vec![C64::new(0.0, 0.0); 4 * len];
                self.apply_box_into(which == OperatorKind::BoxTilde, &u.values, &mut out.values, &mut scratch);
            }
            _ => {
                let mut dx = vec![C64::new(0.0, 0.0); len];
                let mut dy = vec![C64::new(0.0, 0.0); len];
                self.gradient(&u.values, &mut dx, &mut dy);
                let i = C64::new(0.0, 1.0);
                for k in 0..len {
                    let d = (dx[k] - i * dy[k]) * 0.5;
                    let db = (dx[k] + i * dy[k]) * 0.5;
                    let (v, x) = (self.v[k], u.values[k]);
                    out.values[k] = match which {
                        OperatorKind::Z => d - v * x,
                        OperatorKind::Zbar => db + v.conj() * x,
                        OperatorKind::W => d + v * x,
                        OperatorKind::Wbar => db - v.conj() * x,
                        _ => unreachable!(),
                    };
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn setup(order: usize) -> WeightedOperatorSet {
        let spec = GridSpec::new(C64::new(0.2, -0.1), 2.0, 41).unwrap();
        let p = SubharmonicPolynomial::radial(2);
        WeightedOperatorSet::new(&p, 0.7, spec, order).unwrap()
    }

    fn field(spec: GridSpec, seed: u64) -> GridField {
        let mut rng = StdRng::seed_from_u64(seed);
        let values = (0..spec.len()).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        GridField { spec, values }
    }

    #[test]
    fn box_is_hermitian_for_every_order() {
        for order in [2, 4, 6] {
            let ops = setup(order);
            let (u, v) = (field(ops.spec, 1), field(ops.spec, 2));
            for kind in [OperatorKind::Box, OperatorKind::BoxTilde] {
                let lhs = ops.apply(kind, &u).unwrap().inner(&v).unwrap();
                let rhs = u.inner(&ops.apply(kind, &v).unwrap()).unwrap();
                assert!((lhs - rhs).norm() < 1e-9 * lhs.norm(), "order {order}");
            }
        }
    }

    #[test]
    fn second_order_box_is_nonnegative() {
        let ops = setup(2);
        for seed in 0..5 {
            let u = field(ops.spec, seed);
            let q = u.inner(&ops.apply(OperatorKind::Box, &u).unwrap()).unwrap();
            assert!(q.re >= -1e-12 * u.l2_norm().powi(2));
        }
    }

    #[test]
    fn unknown_order_rejected() {
        assert!(Stencil::new(3).is_err());
    }
}

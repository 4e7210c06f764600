use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::C64;

pub const MIN_SIDE: usize = 33;

/// Uniform square grid of n_side² nodes covering center + [−R, R]².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(default)]
    pub center: C64,
    pub radius: f64,
    pub n_side: usize,
}

impl GridSpec {
    pub fn new(center: C64, radius: f64, n_side: usize) -> Result<Self> {
        let g = GridSpec { center, radius, n_side };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::ConfigInvalid(format!("grid radius {} must be positive", self.radius)));
        }
        if self.n_side < MIN_SIDE {
            return Err(Error::ConfigInvalid(format!("n_side {} below {}", self.n_side, MIN_SIDE)));
        }
        if self.h() >= 1.0 {
            return Err(Error::ConfigInvalid(format!("grid spacing {} not below 1", self.h())));
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        2.0 * self.radius / (self.n_side - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.n_side * self.n_side
    }

    pub fn is_empty(&self) -> bool {
        self.n_side == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n_side + i
    }

    pub fn node(&self, i: usize, j: usize) -> C64 {
        let h = self.h();
        C64::new(
            self.center.re - self.radius + i as f64 * h,
            self.center.im - self.radius + j as f64 * h,
        )
    }

    pub fn nodes(&self) -> impl Iterator<Item = C64> + '_ {
        (0..self.n_side).flat_map(move |j| (0..self.n_side).map(move |i| self.node(i, j)))
    }

    /// Fractional grid coordinates of z.
    pub fn coords(&self, z: C64) -> (f64, f64) {
        let h = self.h();
        ((z.re - self.center.re + self.radius) / h, (z.im - self.center.im + self.radius) / h)
    }

    pub fn nearest(&self, z: C64) -> Option<(usize, usize)> {
        let (x, y) = self.coords(z);
        let (i, j) = (x.round(), y.round());
        let top = (self.n_side - 1) as f64;
        if i < 0.0 || j < 0.0 || i > top || j > top {
            return None;
        }
        Some((i as usize, j as usize))
    }

    pub fn contains(&self, z: C64) -> bool {
        let d = z - self.center;
        d.re.abs() <= self.radius && d.im.abs() <= self.radius
    }
}

/// Complex samples on a [`GridSpec`], row-major in y.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub spec: GridSpec,
    pub values: Vec<C64>,
}

impl GridField {
    pub fn zeros(spec: GridSpec) -> Self {
        GridField { spec, values: vec![C64::new(0.0, 0.0); spec.len()] }
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(C64) -> C64) -> Self {
        GridField { spec, values: spec.nodes().map(f).collect() }
    }

    /// Discrete delta of unit mass at the node nearest to w.
    pub fn delta(spec: GridSpec, w: C64) -> Result<Self> {
        let (i, j) = spec.nearest(w).ok_or(Error::GridMismatch)?;
        let mut f = Self::zeros(spec);
        let h = spec.h();
        f.values[spec.index(i, j)] = C64::new(1.0 / (h * h), 0.0);
        Ok(f)
    }

    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.values[self.spec.index(i, j)]
    }

    pub fn l2_norm(&self) -> f64 {
        let h = self.spec.h();
        (h * h * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn l1_mass(&self) -> f64 {
        let h = self.spec.h();
        h * h * self.values.iter().map(|v| v.norm()).sum::<f64>()
    }

    pub fn inner(&self, other: &GridField) -> Result<C64> {
        if self.spec != other.spec {
            return Err(Error::GridMismatch);
        }
        let h = self.spec.h();
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum::<C64>() * (h * h))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Share of the L¹ mass held by nodes within `width` nodes of the edge.
    pub fn boundary_fraction(&self, width: usize) -> f64 {
        let n = self.spec.n_side;
        let mut edge = 0.0;
        let mut total = 0.0;
        for j in 0..n {
            for i in 0..n {
                let v = self.at(i, j).norm();
                total += v;
                if i < width || j < width || i >= n - width || j >= n - width {
                    edge += v;
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            edge / total
        }
    }

    /// Bicubic Lagrange interpolation on the 4×4 block around z.
    pub fn interpolate(&self, z: C64) -> Result<C64> {
        if !self.spec.contains(z) {
            return Err(Error::GridMismatch);
        }
        let n = self.spec.n_side;
        let (x, y) = self.spec.coords(z);
        let i0 = (x.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        let j0 = (y.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        let wx = lagrange4(x - i0 as f64);
        let wy = lagrange4(y - j0 as f64);
        let mut acc = C64::new(0.0, 0.0);
        for (b, wyb) in wy.iter().enumerate() {
            for (a, wxa) in wx.iter().enumerate() {
                acc += self.at(i0 + a, j0 + b) * (wxa * wyb);
            }
        }
        Ok(acc)
    }
}

/// Lagrange weights on nodes 0, 1, 2, 3 at position t.
fn lagrange4(t: f64) -> [f64; 4] {
    [
        -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0,
        t * (t - 2.0) * (t - 3.0) / 2.0,
        -t * (t - 1.0) * (t - 3.0) / 2.0,
        t * (t - 1.0) * (t - 2.0) / 6.0,
    ]
}

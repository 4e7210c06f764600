//! Fitted constants for bounds of the form y ≤ ln C − c·x.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fitted constants for a claimed pointwise bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFitReport {
    pub claim: String,
    pub big_c: f64,
    pub small_c: f64,
    pub sup_ratio: f64,
    /// Index of the sample attaining the sup ratio.
    pub argmax: usize,
    pub samples: usize,
    pub excluded: usize,
    pub pass: bool,
}

impl DecayFitReport {
    pub fn consistent(&self) -> bool {
        self.pass == (self.small_c > 0.0 && self.sup_ratio <= 1.0 + 1e-9)
    }
}

/// Largest c and smallest C with y_i ≤ ln C − c x_i for all samples.
///
/// The anchor is the leftmost sample (largest y among ties); c is the smallest
/// chord slope from it, so every sample lies on or below the line and the
/// anchor touches it.
pub fn fit_decay(claim: &str, xs: &[f64], ys: &[f64], excluded: usize) -> Result<DecayFitReport> {
    let pts: Vec<(usize, f64, f64)> = xs
        .iter()
        .zip(ys)
        .enumerate()
        .filter(|(_, (x, y))| x.is_finite() && y.is_finite())
        .map(|(i, (&x, &y))| (i, x, y))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientSamples(pts.len()));
    }
    let &(ia, xa, ya) = pts
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1).then(b.2.total_cmp(&a.2)))
        .expect("nonempty");
    let mut c = f64::INFINITY;
    for &(_, x, y) in &pts {
        if x > xa {
            c = c.min((ya - y) / (x - xa));
        } else if y > ya {
            c = f64::NEG_INFINITY;
        }
    }
    if !c.is_finite() {
        return Err(Error::InsufficientSamples(pts.len()));
    }
    let log_c = ya + c * xa;
    let mut sup = f64::NEG_INFINITY;
    let mut arg = ia;
    for &(i, x, y) in &pts {
        let r = y - (log_c - c * x);
        if r > sup {
            sup = r;
            arg = i;
        }
    }
    let sup_ratio = sup.exp();
    Ok(DecayFitReport {
        claim: claim.to_string(),
        big_c: log_c.exp(),
        small_c: c,
        sup_ratio,
        argmax: arg,
        samples: pts.len(),
        excluded,
        pass: c > 0.0 && sup_ratio <= 1.0 + 1e-9,
    })
}

/// Least-squares line y = a + b x with coefficient of determination.
pub fn linear_regression(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (a, b, r2)
}

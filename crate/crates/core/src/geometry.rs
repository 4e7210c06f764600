//! Polynomial models and their control-metric size functions.
//!
//! A model is a real polynomial p(z) = Σ c_jk z^j z̄^k on ℂ. Everything here
//! works from the recentred Taylor table A_jk(z) = ∂_z^j ∂_z̄^k p(z) / (j! k!).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Coefficients below this magnitude are treated as zero by μ.
pub const COEFF_FLOOR: f64 = 1e-14;

const MAX_DEGREE: usize = 16;

fn binom(n: usize, k: usize) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// Falling factorial n (n-1) ... (n-k+1).
fn falling(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

fn cpow(z: C64, k: usize) -> C64 {
    let mut r = C64::new(1.0, 0.0);
    for _ in 0..k {
        r *= z;
    }
    r
}

/// Options for the sampled subharmonicity check.
#[derive(Debug, Clone, Copy)]
pub struct SampleGrid {
    pub half_width: f64,
    pub points: usize,
}

impl Default for SampleGrid {
    fn default() -> Self {
        SampleGrid { half_width: 4.0, points: 41 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubharmonicPolynomial {
    coeffs: BTreeMap<(usize, usize), C64>,
    degree: usize,
}

#[derive(Serialize, Deserialize)]
struct PolyFile {
    coeffs: Vec<[f64; 4]>,
}

impl SubharmonicPolynomial {
    pub fn new(entries: &[((usize, usize), C64)]) -> Result<Self> {
        Self::with_samples(entries, SampleGrid::default())
    }

    pub fn with_samples(entries: &[((usize, usize), C64)], samples: SampleGrid) -> Result<Self> {
        let mut coeffs = BTreeMap::new();
        for &(jk, c) in entries {
            *coeffs.entry(jk).or_insert(C64::new(0.0, 0.0)) += c;
        }
        coeffs.retain(|_, c| c.norm() > 0.0);
        let degree = coeffs.keys().map(|&(j, k)| j + k).max().unwrap_or(0);
        if degree > MAX_DEGREE {
            return Err(Error::InvalidPolynomial(format!("degree {degree} exceeds {MAX_DEGREE}")));
        }
        for (&(j, k), &c) in &coeffs {
            let mirror = coeffs.get(&(k, j)).copied().unwrap_or_default();
            if (c - mirror.conj()).norm() > 1e-12 {
                return Err(Error::InvalidPolynomial(format!("c_{j}{k} != conj(c_{k}{j}): not real-valued")));
            }
        }
        if !coeffs.keys().any(|&(j, k)| j >= 1 && k >= 1) {
            return Err(Error::InvalidPolynomial("harmonic: no mixed coefficient".into()));
        }
        let p = SubharmonicPolynomial { coeffs, degree };
        let n = samples.points.max(2);
        for a in 0..n {
            for b in 0..n {
                let x = -samples.half_width + 2.0 * samples.half_width * a as f64 / (n - 1) as f64;
                let y = -samples.half_width + 2.0 * samples.half_width * b as f64 / (n - 1) as f64;
                let lap = p.laplacian(C64::new(x, y));
                if lap < -1e-9 {
                    return Err(Error::InvalidPolynomial(format!(
                        "not subharmonic: Δp({x:.3}, {y:.3}) = {lap:.3e}"
                    )));
                }
            }
        }
        Ok(p)
    }

    /// |z|².
    pub fn heisenberg() -> Self {
        Self::new(&[((1, 1), C64::new(1.0, 0.0))]).expect("|z|^2 is valid")
    }

    /// |z|^{2m}.
    pub fn radial(m: usize) -> Self {
        Self::new(&[((m, m), C64::new(1.0, 0.0))]).expect("|z|^2m is valid")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: PolyFile = serde_json::from_str(s)?;
        let entries: Vec<_> = file
            .coeffs
            .iter()
            .map(|r| {
                if r[0] < 0.0 || r[1] < 0.0 || r[0].fract() != 0.0 || r[1].fract() != 0.0 {
                    Err(Error::InvalidPolynomial(format!("bad index pair ({}, {})", r[0], r[1])))
                } else {
                    Ok(((r[0] as usize, r[1] as usize), C64::new(r[2], r[3])))
                }
            })
            .collect::<Result<_>>()?;
        Self::new(&entries)
    }

    pub fn to_json_string(&self) -> String {
        let file = PolyFile {
            coeffs: self.coeffs.iter().map(|(&(j, k), c)| [j as f64, k as f64, c.re, c.im]).collect(),
        };
        serde_json::to_string(&file).expect("plain data serializes")
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> impl Iterator<Item = ((usize, usize), C64)> + '_ {
        self.coeffs.iter().map(|(&k, &v)| (k, v))
    }

    pub fn eval(&self, z: C64) -> f64 {
        self.coeffs.iter().map(|(&(j, k), &c)| c * cpow(z, j) * cpow(z.conj(), k)).sum::<C64>().re
    }

    /// ∂^a_z ∂^b_z̄ p at z.
    pub fn derivative(&self, a: usize, b: usize, z: C64) -> C64 {
        self.coeffs
            .iter()
            .filter(|(&(j, k), _)| j >= a && k >= b)
            .map(|(&(j, k), &c)| c * falling(j, a) * falling(k, b) * cpow(z, j - a) * cpow(z.conj(), k - b))
            .sum()
    }

    pub fn dz(&self, z: C64) -> C64 {
        self.derivative(1, 0, z)
    }

    pub fn dzbar(&self, z: C64) -> C64 {
        self.derivative(0, 1, z)
    }

    pub fn laplacian(&self, z: C64) -> f64 {
        4.0 * self.derivative(1, 1, z).re
    }
}

/// Taylor coefficients of p recentred at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorTable {
    pub center: C64,
    pub degree: usize,
    a: Vec<Vec<C64>>,
}

impl TaylorTable {
    pub fn get(&self, j: usize, k: usize) -> C64 {
        if j > self.degree || k > self.degree {
            return C64::new(0.0, 0.0);
        }
        self.a[j][k]
    }

    /// Mixed coefficients (j, k ≥ 1) in fixed (j, k) order.
    pub fn mixed(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (1..=self.degree).flat_map(move |j| {
            (1..=self.degree - j).filter_map(move |k| {
                let a = self.a[j][k];
                (a.norm() > 0.0).then_some((j, k, a))
            })
        })
    }

    /// Number of mixed terms above the coefficient floor.
    pub fn term_count(&self) -> usize {
        self.mixed().filter(|(_, _, a)| a.norm() >= COEFF_FLOOR).count()
    }

    pub fn reconstruct(&self, w: C64) -> f64 {
        let d = w - self.center;
        let mut s = C64::new(0.0, 0.0);
        for j in 0..=self.degree {
            for k in 0..=self.degree - j {
                s += self.a[j][k] * cpow(d, j) * cpow(d.conj(), k);
            }
        }
        s.re
    }
}

pub fn recenter(p: &SubharmonicPolynomial, z: C64) -> TaylorTable {
    let deg = p.degree;
    let mut a = vec![vec![C64::new(0.0, 0.0); deg + 1]; deg + 1];
    for (&(j, k), &c) in &p.coeffs {
        for aa in 0..=j {
            for bb in 0..=k {
                a[aa][bb] += c * binom(j, aa) * binom(k, bb) * cpow(z, j - aa) * cpow(z.conj(), k - bb);
            }
        }
    }
    TaylorTable { center: z, degree: deg, a }
}

/// T(w, z) = −2 Im Σ_{j≥1} A_j0(z) (w − z)^j.
pub fn twist(p: &SubharmonicPolynomial, z: C64, w: C64) -> f64 {
    twist_from(&recenter(p, z), w)
}

pub fn twist_from(tbl: &TaylorTable, w: C64) -> f64 {
    let d = w - tbl.center;
    let s: C64 = (1..=tbl.degree).map(|j| tbl.get(j, 0) * cpow(d, j)).sum();
    -2.0 * s.im
}

pub fn lambda_size(tbl: &TaylorTable, delta: f64) -> f64 {
    tbl.mixed().map(|(j, k, a)| a.norm() * delta.powi((j + k) as i32)).sum()
}

pub fn mu_size(tbl: &TaylorTable, delta: f64) -> Result<f64> {
    let mut best = f64::INFINITY;
    for (j, k, a) in tbl.mixed() {
        let m = a.norm();
        if m < COEFF_FLOOR {
            continue;
        }
        best = best.min((delta / m).powf(1.0 / (j + k) as f64));
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::DegenerateTable(format!("{}", tbl.center)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPoint {
    pub z: C64,
    pub t: f64,
}

impl MetricPoint {
    pub fn new(z: C64, t: f64) -> Self {
        MetricPoint { z, t }
    }
}

/// d(α, β) = |z − w| + μ(z, |t₁ − t₂ + T(z, w)|).
pub fn control_distance(p: &SubharmonicPolynomial, alpha: MetricPoint, beta: MetricPoint) -> Result<f64> {
    let tbl = recenter(p, alpha.z);
    let tw = twist_from(&recenter(p, beta.z), alpha.z);
    distance_with(&tbl, alpha, beta, tw)
}

fn distance_with(tbl: &TaylorTable, alpha: MetricPoint, beta: MetricPoint, tw: f64) -> Result<f64> {
    let dt = (alpha.t - beta.t + tw).abs();
    Ok((alpha.z - beta.z).norm() + mu_size(tbl, dt)?)
}

pub fn ball_volume(tbl: &TaylorTable, delta: f64) -> f64 {
    delta * delta * lambda_size(tbl, delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairVolume {
    /// d with T(z, w).
    pub distance: f64,
    /// d²Λ(z, d).
    pub volume: f64,
    /// Same two quantities with T(w, z).
    pub distance_wz: f64,
    pub volume_wz: f64,
    /// max{|z−w|²Λ(z,|z−w|), μ(z, t+T(w,z))² |t+T(w,z)|}.
    pub max_form: f64,
    /// |T(z,w) + T(w,z)|: zero iff the two orderings agree up to sign.
    pub twist_defect: f64,
}

pub fn pair_volume(p: &SubharmonicPolynomial, alpha: MetricPoint, beta: MetricPoint) -> Result<PairVolume> {
    let tz = recenter(p, alpha.z);
    let tw = recenter(p, beta.z);
    let t_zw = twist_from(&tw, alpha.z);
    let t_wz = twist_from(&tz, beta.z);
    let d = distance_with(&tz, alpha, beta, t_zw)?;
    let d2 = distance_with(&tz, alpha, beta, t_wz)?;
    let sep = (alpha.z - beta.z).norm();
    let tt = (alpha.t - beta.t + t_wz).abs();
    let m = mu_size(&tz, tt)?;
    Ok(PairVolume {
        distance: d,
        volume: d * d * lambda_size(&tz, d),
        distance_wz: d2,
        volume_wz: d2 * d2 * lambda_size(&tz, d2),
        max_form: (sep * sep * lambda_size(&tz, sep)).max(m * m * tt),
        twist_defect: (t_zw + t_wz).abs(),
    })
}

/// z-centred series e(w, z) = Σ_{j≥1} A_j1(z) (w − z)^j.
pub fn e_series(p: &SubharmonicPolynomial, z: C64, w: C64) -> C64 {
    let tbl = recenter(p, z);
    let d = w - z;
    (1..=tbl.degree).map(|j| tbl.get(j, 1) * cpow(d, j)).sum()
}

/// w-centred expansion −Σ_{j≥1,k≥0} (k+1) A_{j,k+1}(w) (z − w)^j conj(z − w)^k.
pub fn e_series_dual(p: &SubharmonicPolynomial, z: C64, w: C64) -> C64 {
    let tbl = recenter(p, w);
    let d = z - w;
    let mut s = C64::new(0.0, 0.0);
    for j in 1..=tbl.degree {
        for k in 0..tbl.degree {
            s += tbl.get(j, k + 1) * (k + 1) as f64 * cpow(d, j) * cpow(d.conj(), k);
        }
    }
    -s
}

/// Two-sided constant c with μ(z, Λ(z,δ))/δ and Λ(z, μ(z,δ))/δ in [1/c, c] over the samples.
pub fn relative_inverse_constant(tbl: &TaylorTable, deltas: &[f64]) -> Result<f64> {
    let mut c: f64 = 1.0;
    for &d in deltas {
        let r1 = mu_size(tbl, lambda_size(tbl, d))? / d;
        let r2 = lambda_size(tbl, mu_size(tbl, d)?) / d;
        for r in [r1, r2] {
            c = c.max(r).max(1.0 / r);
        }
    }
    Ok(c)
}

pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// CSV rows (z, δ, Λ, μ, ratio) for a geometry report.
pub fn geometry_csv(tbl: &TaylorTable, deltas: &[f64]) -> Result<String> {
    let mut out = String::from("z_re,z_im,delta,lambda,mu,ratio\n");
    for &d in deltas {
        let l = lambda_size(tbl, d);
        let m = mu_size(tbl, d)?;
        let ratio = mu_size(tbl, l)? / d;
        writeln!(out, "{},{},{:e},{:e},{:e},{:e}", tbl.center.re, tbl.center.im, d, l, m, ratio).unwrap();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn rejects_non_real_coefficients() {
        let r = SubharmonicPolynomial::new(&[((1, 1), c(1.0, 0.0)), ((2, 0), c(1.0, 0.0))]);
        assert!(matches!(r, Err(Error::InvalidPolynomial(_))));
    }

    #[test]
    fn rejects_harmonic() {
        let r = SubharmonicPolynomial::new(&[((2, 0), c(1.0, 0.0)), ((0, 2), c(1.0, 0.0))]);
        assert!(matches!(r, Err(Error::InvalidPolynomial(_))));
    }

    #[test]
    fn rejects_superharmonic() {
        let r = SubharmonicPolynomial::new(&[((1, 1), c(-1.0, 0.0))]);
        assert!(matches!(r, Err(Error::InvalidPolynomial(_))));
    }

    #[test]
    fn json_round_trip() {
        let p = SubharmonicPolynomial::new(&[((2, 2), c(1.0, 0.0)), ((3, 1), c(0.5, 0.0)), ((1, 3), c(0.5, 0.0))]).unwrap();
        let q = SubharmonicPolynomial::from_json_str(&p.to_json_string()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn derivative_of_quartic() {
        let p = SubharmonicPolynomial::radial(2);
        let z = c(1.0, 2.0);
        // ∂_z (z² z̄²) = 2 z z̄²
        let expect = 2.0 * z * z.conj() * z.conj();
        assert!((p.dz(z) - expect).norm() < 1e-12);
        assert!((p.laplacian(z) - 16.0 * z.norm_sqr()).abs() < 1e-10);
    }

    #[test]
    fn mu_needs_a_mixed_term() {
        let tbl = TaylorTable { center: c(0.0, 0.0), degree: 2, a: vec![vec![c(0.0, 0.0); 3]; 3] };
        assert!(matches!(mu_size(&tbl, 1.0), Err(Error::DegenerateTable(_))));
    }
}

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::grid::{GridField, GridSpec};
use super::operators::WeightedOperatorSet;
use crate::error::{Error, Result};
use crate::geometry::C64;

/// Time step layout for Crank–Nicolson.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    /// Constant step dt = factor·h² (the last step of each interval is shortened).
    Uniform { factor: f64 },
    /// `steps` steps to the first snapshot, growing exponentially from 0.5·h²;
    /// later intervals use proportionally many uniform steps.
    Graded { steps: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub order: usize,
    pub schedule: Schedule,
    pub cg_tol: f64,
    pub max_iter: usize,
    pub boundary_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            order: 6,
            schedule: Schedule::Graded { steps: 120 },
            cg_tol: 1e-12,
            max_iter: 2000,
            boundary_tol: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if ![2, 4, 6].contains(&self.order) {
            return Err(Error::ConfigInvalid(format!("stencil order {}", self.order)));
        }
        if !(self.cg_tol > 0.0) || !(self.boundary_tol > 0.0) || self.max_iter == 0 {
            return Err(Error::ConfigInvalid("solver tolerances must be positive".into()));
        }
        match self.schedule {
            Schedule::Uniform { factor } if !(factor > 0.0) => {
                Err(Error::ConfigInvalid("uniform step factor must be positive".into()))
            }
            Schedule::Graded { steps } if steps == 0 => Err(Error::ConfigInvalid("graded schedule needs steps".into())),
            _ => Ok(()),
        }
    }
}

/// Step sizes covering [0, s_list[last]] and landing exactly on every snapshot.
/// Returns one Vec of steps per interval.
pub fn time_steps(h: f64, s_list: &[f64], schedule: Schedule) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(s_list.len());
    let mut prev = 0.0;
    for (idx, &s) in s_list.iter().enumerate() {
        let len = s - prev;
        let steps = match schedule {
            Schedule::Uniform { factor } => {
                let dt = factor * h * h;
                let k = (len / dt - 1e-9).ceil().max(1.0) as usize;
                let mut v = vec![dt; k - 1];
                v.push(len - dt * (k - 1) as f64);
                v
            }
            Schedule::Graded { steps } if idx == 0 => graded(len, 0.5 * h * h, steps),
            Schedule::Graded { steps } => {
                let k = ((steps as f64 * len / s).ceil() as usize).max(1);
                vec![len / k as f64; k]
            }
        };
        out.push(steps);
        prev = s;
    }
    out
}

/// n steps t_k = L (e^{βk/n} − 1)/(e^β − 1) with the first step equal to dt0 when possible.
fn graded(len: f64, dt0: f64, n: usize) -> Vec<f64> {
    if len / n as f64 <= dt0 {
        return vec![len / n as f64; n];
    }
    let first = |b: f64| len * (b / n as f64).exp_m1() / b.exp_m1();
    let (mut lo, mut hi) = (1e-12, 1.0);
    while first(hi) > dt0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if first(mid) > dt0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let b = 0.5 * (lo + hi);
    let t = |k: usize| len * (b * k as f64 / n as f64).exp_m1() / b.exp_m1();
    (0..n).map(|k| t(k + 1) - t(k)).collect()
}

pub struct CgStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Solves (I + a·□)x = b by Jacobi-preconditioned conjugate gradients; x holds the initial guess.
fn cg_solve(
    ops: &WeightedOperatorSet,
    tilde: bool,
    a: f64,
    diag: &[f64],
    b: &[C64],
    x: &mut [C64],
    cfg: &SolverConfig,
    scratch: &mut [C64],
) -> Result<CgStats> {
    let len = b.len();
    let apply = |v: &[C64], out: &mut [C64], scratch: &mut [C64]| {
        ops.apply_box_into(tilde, v, out, scratch);
        for k in 0..len {
            out[k] = v[k] + out[k] * a;
        }
    };
    let dot = |u: &[C64], v: &[C64]| u.iter().zip(v).map(|(p, q)| p.conj() * q).sum::<C64>();
    let bnorm = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        return Ok(CgStats { iterations: 0, residual: 0.0 });
    }
    let mut r = vec![C64::new(0.0, 0.0); len];
    let mut ap = vec![C64::new(0.0, 0.0); len];
    apply(x, &mut ap, scratch);
    for k in 0..len {
        r[k] = b[k] - ap[k];
    }
    let prec: Vec<f64> = diag.iter().map(|d| 1.0 / (1.0 + a * d)).collect();
    let mut zv: Vec<C64> = r.iter().zip(&prec).map(|(r, m)| r * m).collect();
    let mut p = zv.clone();
    let mut rz = dot(&r, &zv);
    let mut res = r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt() / bnorm;
    let mut it = 0;
    while res > cfg.cg_tol {
        if it >= cfg.max_iter || !res.is_finite() {
            return Err(Error::SolverDiverged { residual: res, iterations: it });
        }
        apply(&p, &mut ap, scratch);
        let alpha = rz / dot(&p, &ap);
        for k in 0..len {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        res = r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt() / bnorm;
        for k in 0..len {
            zv[k] = r[k] * prec[k];
        }
        let rz_new = dot(&r, &zv);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..len {
            p[k] = zv[k] + beta * p[k];
        }
        it += 1;
    }
    Ok(CgStats { iterations: it, residual: res })
}

/// Crank–Nicolson evolution of ∂_s u + □u = 0 (or □̃), returning u at each s in s_list.
pub fn evolve_snapshots(
    ops: &WeightedOperatorSet,
    tilde: bool,
    u0: &GridField,
    s_list: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<GridField>> {
    cfg.validate()?;
    if u0.spec != ops.spec {
        return Err(Error::GridMismatch);
    }
    if s_list.is_empty() || s_list.windows(2).any(|w| w[1] <= w[0]) || !(s_list[0] > 0.0) {
        return Err(Error::ConfigInvalid("snapshot times must be positive and increasing".into()));
    }
    let len = ops.spec.len();
    let diag = ops.box_diagonal();
    let mut scratch = vec![C64::new(0.0, 0.0); 4 * len];
    let mut rhs = vec![C64::new(0.0, 0.0); len];
    let mut u = u0.values.clone();
    let mut next = u.clone();
    let mut snaps = Vec::with_capacity(s_list.len());
    for interval in time_steps(ops.h(), s_list, cfg.schedule) {
        for dt in interval {
            let a = 0.5 * dt;
            ops.apply_box_into(tilde, &u, &mut rhs, &mut scratch);
            for k in 0..len {
                rhs[k] = u[k] - rhs[k] * a;
            }
            next.copy_from_slice(&rhs);
            cg_solve(ops, tilde, a, &diag, &rhs, &mut next, cfg, &mut scratch)?;
            std::mem::swap(&mut u, &mut next);
        }
        let field = GridField { spec: ops.spec, values: u.clone() };
        let fraction = field.boundary_fraction(3);
        if fraction > cfg.boundary_tol {
            return Err(Error::BoundaryContamination { fraction });
        }
        snaps.push(field);
    }
    Ok(snaps)
}

/// Solves (I + (dt/2)□)x = rhs.
pub fn implicit_half_step(ops: &WeightedOperatorSet, rhs: &GridField, dt: f64, cfg: &SolverConfig) -> Result<GridField> {
    if rhs.spec != ops.spec {
        return Err(Error::GridMismatch);
    }
    let len = ops.spec.len();
    let mut scratch = vec![C64::new(0.0, 0.0); 4 * len];
    let mut x = rhs.values.clone();
    cg_solve(ops, false, 0.5 * dt, &ops.box_diagonal(), &rhs.values, &mut x, cfg, &mut scratch)?;
    Ok(GridField { spec: ops.spec, values: x })
}

pub fn evolve(ops: &WeightedOperatorSet, tilde: bool, u0: &GridField, s_end: f64, cfg: &SolverConfig) -> Result<GridField> {
    Ok(evolve_snapshots(ops, tilde, u0, &[s_end], cfg)?.pop().expect("one snapshot"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelVariant {
    /// Kernel of □ (forms).
    Forms,
    /// Kernel of □̃ (functions).
    Functions,
}

/// H(s, ·, w) for a list of times at fixed τ and source w.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatKernelSlice {
    pub tau: f64,
    pub w: C64,
    pub s_list: Vec<f64>,
    pub fields: Vec<GridField>,
    pub variant: KernelVariant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceHeader {
    pub schema: String,
    pub tau: f64,
    pub w: [f64; 2],
    pub s_list: Vec<f64>,
    pub variant: KernelVariant,
    pub grid: GridSpec,
    pub l1_mass: Vec<f64>,
}

pub const SLICE_SCHEMA: &str = "kernel-slice/1";

impl HeatKernelSlice {
    pub fn value(&self, snapshot: usize, z: C64) -> Result<C64> {
        self.fields[snapshot].interpolate(z)
    }

    pub fn header(&self) -> SliceHeader {
        SliceHeader {
            schema: SLICE_SCHEMA.into(),
            tau: self.tau,
            w: [self.w.re, self.w.im],
            s_list: self.s_list.clone(),
            variant: self.variant,
            grid: self.fields[0].spec,
            l1_mass: self.fields.iter().map(|f| f.l1_mass()).collect(),
        }
    }

    /// Rows (s, x, y, re, im) for every node of every snapshot.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,x,y,re,im\n");
        for (s, f) in self.s_list.iter().zip(&self.fields) {
            for (z, v) in f.spec.nodes().zip(&f.values) {
                writeln!(out, "{},{},{},{:e},{:e}", s, z.re, z.im, v.re, v.im).unwrap();
            }
        }
        out
    }
}

/// Heat kernel with source w: evolves the discrete delta at w and records each s in s_list.
pub fn kernel_column(
    ops: &WeightedOperatorSet,
    variant: KernelVariant,
    w: C64,
    s_list: &[f64],
    cfg: &SolverConfig,
) -> Result<HeatKernelSlice> {
    let u0 = GridField::delta(ops.spec, w)?;
    let fields = evolve_snapshots(ops, variant == KernelVariant::Functions, &u0, s_list, cfg)?;
    Ok(HeatKernelSlice { tau: ops.tau, w, s_list: s_list.to_vec(), fields, variant })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_steps_hit_the_end() {
        let v = graded(0.5, 1e-4, 100);
        assert!((v.iter().sum::<f64>() - 0.5).abs() < 1e-12);
        assert!((v[0] - 1e-4).abs() < 1e-9);
        assert!(v.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn uniform_steps_land_on_snapshots() {
        let steps = time_steps(0.1, &[0.05, 0.12], Schedule::Uniform { factor: 0.5 });
        assert!((steps[0].iter().sum::<f64>() - 0.05).abs() < 1e-14);
        assert!((steps[1].iter().sum::<f64>() - 0.07).abs() < 1e-14);
    }
}

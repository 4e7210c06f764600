//! Experiment configuration for the verification suite.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::checks::REGISTRY;
use crate::error::{Error, Result};
use crate::geometry::SubharmonicPolynomial;
use crate::synthesis::SynthesisConfig;

/// Parameter ranges shared by the sweep checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sweep {
    /// Heat times for the space-time decay sweep.
    pub decay_s: Vec<f64>,
    /// Frequencies t for the space-time decay sweep.
    pub decay_t: Vec<f64>,
    /// Frequencies τ for the workhorse fit.
    pub workhorse_tau: Vec<f64>,
    /// Heat times for the workhorse fit.
    pub workhorse_s: Vec<f64>,
    /// Frequencies τ for the twisted-derivative growth check.
    pub derivative_tau: Vec<f64>,
    /// Heat times for the twisted-derivative growth check.
    pub derivative_s: Vec<f64>,
    /// Derivative orders n for the growth check.
    pub derivative_n: Vec<usize>,
    /// Largest n in the envelope chain.
    pub envelope_n_max: usize,
    /// Base points per polynomial in the relative-inverse check.
    pub geometry_points: usize,
    /// Random tuples in the Gaussian convolution check.
    pub random_tuples: usize,
    /// Log-spaced t values per (a, β) in the sandwich check.
    pub sandwich_points: usize,
}

impl Default for Sweep {
    fn default() -> Self {
        Sweep {
            decay_s: vec![0.25, 0.5, 0.75, 1.0],
            decay_t: (2..=16).map(|k| k as f64 * 0.5).collect(),
            workhorse_tau: vec![0.5, 1.0, 2.0],
            workhorse_s: (1..=10).map(|k| k as f64 * 0.1).collect(),
            derivative_tau: vec![0.5, 1.0, 2.0],
            derivative_s: vec![0.25, 0.5, 1.0],
            derivative_n: vec![1, 2, 3],
            envelope_n_max: 20,
            geometry_points: 50,
            random_tuples: 1000,
            sandwich_points: 200,
        }
    }
}

/// Pass thresholds. Defaults are the acceptance values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub column_rel: f64,
    pub column_seconds: f64,
    pub sandwich_rel: f64,
    pub chain_rel: f64,
    pub chain_seconds: f64,
    pub convolution_abs: f64,
    pub duality_rel: f64,
    pub workhorse_min_c: f64,
    pub workhorse_refinement: f64,
    pub decay_min_c: f64,
    pub decay_seconds: f64,
    pub growth_min_r2: f64,
    pub transform_rel: f64,
    /// Constant c in the Gaussian weight e^{c|z−w|²/2s} of the growth check.
    pub growth_gaussian_c: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            column_rel: 0.01,
            column_seconds: 60.0,
            sandwich_rel: 1e-9,
            chain_rel: 1e-5,
            chain_seconds: 120.0,
            convolution_abs: 1e-12,
            duality_rel: 1e-4,
            workhorse_min_c: 0.05,
            workhorse_refinement: 0.2,
            decay_min_c: 0.01,
            decay_seconds: 1800.0,
            growth_min_r2: 0.9,
            transform_rel: 1e-5,
            growth_gaussian_c: 1.0,
        }
    }
}

impl Tolerances {
    fn all(&self) -> [f64; 14] {
        [
            self.column_rel,
            self.column_seconds,
            self.sandwich_rel,
            self.chain_rel,
            self.chain_seconds,
            self.convolution_abs,
            self.duality_rel,
            self.workhorse_min_c,
            self.workhorse_refinement,
            self.decay_min_c,
            self.decay_seconds,
            self.growth_min_r2,
            self.transform_rel,
            self.growth_gaussian_c,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Polynomial file for the sweep checks; |z|² when absent.
    pub polynomial: Option<PathBuf>,
    /// Check ids to run; all registered checks when empty.
    pub checks: Vec<String>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub sweep: Sweep,
    pub tolerances: Tolerances,
    pub synthesis: SynthesisConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            polynomial: None,
            checks: Vec::new(),
            output_dir: PathBuf::from("out"),
            seed: 20240607,
            sweep: Sweep::default(),
            tolerances: Tolerances::default(),
            synthesis: SynthesisConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::ConfigInvalid(m.to_string()));
        let sw = &self.sweep;
        let lists: [(&str, &[f64]); 6] = [
            ("decay_s", &sw.decay_s),
            ("decay_t", &sw.decay_t),
            ("workhorse_tau", &sw.workhorse_tau),
            ("workhorse_s", &sw.workhorse_s),
            ("derivative_tau", &sw.derivative_tau),
            ("derivative_s", &sw.derivative_s),
        ];
        for (name, v) in lists {
            if v.is_empty() {
                return bad(&format!("empty sweep range {name}"));
            }
            if v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return bad(&format!("sweep range {name} must be positive"));
            }
        }
        if sw.derivative_n.len() < 2 || sw.derivative_n.iter().any(|&n| n == 0 || n > 3) {
            return bad("derivative_n needs at least two orders in 1..=3");
        }
        if sw.envelope_n_max == 0 || sw.geometry_points == 0 || sw.random_tuples == 0 || sw.sandwich_points < 2 {
            return bad("empty sweep count");
        }
        if self.tolerances.all().iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return bad("tolerances must be positive");
        }
        for id in &self.checks {
            if !REGISTRY.iter().any(|c| c.id == id) {
                return bad(&format!("unknown check {id}"));
            }
        }
        self.synthesis.validate()?;
        self.load_polynomial()?;
        Ok(())
    }

    pub fn load_polynomial(&self) -> Result<SubharmonicPolynomial> {
        match &self.polynomial {
            None => Ok(SubharmonicPolynomial::heisenberg()),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::ConfigInvalid(format!("{}: {e}", path.display())))?;
                SubharmonicPolynomial::from_json_str(&text)
            }
        }
    }

    /// Hex SHA-256 of the canonical JSON form, with the polynomial inlined.
    pub fn hash(&self) -> Result<String> {
        let poly = self.load_polynomial()?.to_json_string();
        let mut canon = self.clone();
        canon.output_dir = PathBuf::new();
        canon.polynomial = None;
        let body = serde_json::to_string(&canon)?;
        let digest = Sha256::digest(format!("{poly}\n{body}").as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn empty_sweep_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.sweep.decay_t.clear();
        assert!(matches!(cfg.validate(), Err(Error::ConfigInvalid(_))));
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.output_dir = PathBuf::from("elsewhere");
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        b.seed += 1;
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
    }
}

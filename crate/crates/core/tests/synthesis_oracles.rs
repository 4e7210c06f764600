use std::f64::consts::PI;

use kohn_heat::fit::{fit_decay, linear_regression};
use kohn_heat::geometry::{SubharmonicPolynomial, C64};
use kohn_heat::solver::{GridSpec, SolverConfig};
use kohn_heat::synthesis::*;

/// H_τ(s, 0, 0) for p = |z|².
fn heisenberg_origin(tau: f64, s: f64) -> f64 {
    if tau == 0.0 {
        1.0 / (PI * s)
    } else {
        (2.0 * tau / PI) / ((2.0 * tau * s).exp() - 1.0)
    }
}

#[test]
fn synthesis_of_exact_samples_matches_closed_form() {
    let s = 0.5;
    let grid = TauGrid::new(60.0, 2401).unwrap();
    let taus = grid.taus();
    let samples: Vec<C64> = taus.iter().map(|&t| C64::new(heisenberg_origin(t, s), 0.0)).collect();
    let ts = [0.5, 1.0, 1.5, 2.0];
    let (values, floors) = synthesize_from_samples(&taus, &samples, 0.0, &ts, 1e-8, 1e-14, 1e-9).unwrap();
    for ((&t, v), f) in ts.iter().zip(&values).zip(&floors) {
        let exact = -1.0 / (4.0 * s * s * (PI * t / (2.0 * s)).sinh().powi(2));
        assert!((v.re - exact).abs() < 1e-6 * exact.abs() + 10.0 * f, "t {t}: {} vs {exact}", v.re);
        assert!(v.im.abs() < 1e-10);
    }
}

#[test]
fn truncated_tail_is_reported() {
    // Cut at τ = 4 the second difference is still ~1e-6 of its peak and falling.
    let grid = TauGrid::new(4.0, 401).unwrap();
    let taus = grid.taus();
    let samples: Vec<C64> = taus.iter().map(|&t| C64::new((-t * t).exp(), 0.0)).collect();
    assert!(synthesize_from_samples(&taus, &samples, 0.0, &[1.0], 1e-8, 1e-14, 1e-9).is_err());
}

#[test]
fn tau_grid_is_symmetric() {
    let g = TauGrid::new(3.0, 7).unwrap();
    assert_eq!(g.taus(), vec![-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
    assert!(TauGrid::new(3.0, 8).is_err());
    assert!(TauGrid::new(0.0, 7).is_err());
}

#[test]
fn transform_identity_holds() {
    let profile = GaussianProfile { amplitude: 1.0, center: 0.5, width: 1.0 };
    for p in [SubharmonicPolynomial::heisenberg(), SubharmonicPolynomial::radial(2)] {
        for (z, w) in [(C64::new(0.0, 0.0), C64::new(0.0, 0.0)), (C64::new(0.7, -0.2), C64::new(-0.4, 0.9))] {
            let d = transform_identity_check(&p, z, w, profile);
            assert!(d < 1e-5, "{d}");
        }
    }
}

#[test]
fn reduction_identity_on_heisenberg() {
    let spec = GridSpec::new(C64::new(0.0, 0.0), 4.0, 129).unwrap();
    let ws = [C64::new(0.25, 0.0), C64::new(0.0, -0.5)];
    let d = reduction_identity_check(&SubharmonicPolynomial::heisenberg(), 1.0, 0.3, C64::new(0.0, 0.0), &ws, spec, &SolverConfig::default())
        .unwrap();
    assert!(d < 1e-3, "{d}");
}

#[test]
fn decay_fit_recovers_gaussian_rate() {
    let xs: Vec<f64> = (0..40).map(|i| i as f64 * 0.25).collect();
    let ys: Vec<f64> = xs.iter().map(|x| 2f64.ln() - 0.7 * x).collect();
    let r = fit_decay("gaussian", &xs, &ys, 0).unwrap();
    assert!((r.small_c - 0.7).abs() < 1e-12 && (r.big_c - 2.0).abs() < 1e-12);
    assert!(r.pass && r.consistent());
    // Samples strictly below the line leave the envelope set by the anchor and the flattest chord.
    let ys2: Vec<f64> = xs.iter().enumerate().map(|(i, x)| -0.7 * x - if i % 3 == 0 { 0.0 } else { 0.5 }).collect();
    let r = fit_decay("gaussian", &xs, &ys2, 0).unwrap();
    assert!((r.small_c - 0.7).abs() < 1e-12);
    assert!(r.sup_ratio <= 1.0 + 1e-12);
    let (a, b, r2) = linear_regression(&xs, &ys);
    assert!((a - 2f64.ln()).abs() < 1e-12 && (b + 0.7).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
}

#[test]
fn growing_samples_fail_the_fit() {
    let xs = [0.0, 1.0, 2.0];
    let ys = [0.0, 0.5, 1.0];
    let r = fit_decay("growing", &xs, &ys, 0).unwrap();
    assert!(!r.pass && r.consistent());
}

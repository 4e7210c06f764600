use std::f64::consts::E;

use kohn_heat::geometry::{recenter, SubharmonicPolynomial, C64};
use kohn_heat::qse::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// inf over a dense γ grid of γ^{γβ}/ξ^γ, computed in log space.
fn dense_inf(xi: f64, beta: f64) -> f64 {
    (0..=1_000_000)
        .map(|i| {
            let g = i as f64 * 1e-3;
            if g == 0.0 {
                0.0
            } else {
                g * beta * g.ln() - g * xi.ln()
            }
        })
        .fold(f64::INFINITY, f64::min)
        .exp()
}

#[test]
fn nu_continuous_examples() {
    assert!(rel(nu_continuous(1.0, 1.0), (-1.0 / E).exp()) < 1e-14);
    assert!((nu_continuous(1e-300, 1.0) - 1.0).abs() < 1e-12);
    let xi = E.powi(2) * 4.0;
    assert!(rel(nu_continuous(xi, 2.0), (-4.0f64).exp()) < 1e-13);
    for (xi, beta) in [(1.0, 1.0), (xi, 2.0), (30.0, 0.5)] {
        assert!(rel(nu_continuous(xi, beta), dense_inf(xi, beta)) < 1e-6);
    }
}

#[test]
fn nu_integer_is_one_below_the_moment_constant() {
    let (a, beta) = (1.0, 2.0);
    let big_a = (beta / (a * E)).powf(beta);
    assert_eq!(nu_integer(0.5 * big_a, a, beta), 1.0);
    assert_eq!(nu_integer(big_a, a, beta), 1.0);
}

#[test]
fn nu_integer_matches_enumeration_at_integral_minimiser() {
    let (a, beta, t) = (1.0f64, 1.0f64, 5.0f64);
    let enumerated = (1..=50)
        .map(|n| {
            let x = n as f64 * beta;
            (x * (x / (a * E * t.powf(1.0 / beta))).ln()).exp().min(1.0)
        })
        .fold(f64::INFINITY, f64::min);
    assert!(rel(nu_integer(t, a, beta), enumerated) < 1e-14);
    assert!(rel(nu_integer(t, a, beta), (-t).exp()) < 1e-12);
    assert!(rel(nu_integer(t, a, beta), nu_continuous_at(t, a, beta)) < 1e-12);
}

#[test]
fn moments_examples() {
    let m: Vec<f64> = (0..30).map(|n| if n == 0 { 1.0 } else { (n as f64 / E).powi(n) }).collect();
    assert!(rel(moments_to_decay(&m, 1.0).unwrap().a, 1.0) < 1e-12);
    let (big_a, beta) = (3.0f64, 1.5f64);
    let m: Vec<f64> = (0..30).map(|n| big_a.powi(n) * pow_self(n as usize, beta)).collect();
    let d = moments_to_decay(&m, beta).unwrap();
    assert!(rel(d.a, beta / (E * big_a.powf(1.0 / beta))) < 1e-12);
    assert!(rel(d.moment_constant(), big_a) < 1e-12);
    assert_eq!(moments_to_decay(&[1.0, 0.0, 0.0, 0.0], 1.0).unwrap().a, A_MAX);
}

/// sup_t |t|^n f(t) on a dense grid.
fn sup_moment(f: impl Fn(f64) -> f64, n: i32) -> f64 {
    (1..=200_000).map(|i| i as f64 * 1e-4).map(|t| t.powi(n) * f(t)).fold(0.0, f64::max)
}

#[test]
fn decay_round_trip_from_numerical_moments() {
    for (beta, f) in [(0.5, (|t: f64| (-t * t).exp()) as fn(f64) -> f64), (1.0, |t: f64| (-t).exp())] {
        let m: Vec<f64> = (0..=12).map(|n| sup_moment(f, n)).collect();
        let d = moments_to_decay(&m, beta).unwrap();
        assert!(rel(d.a, 1.0) < 0.1, "beta {beta}: a = {}", d.a);
    }
}

#[test]
fn fit_qse_examples() {
    let beta = 1.3;
    let norms: Vec<f64> = (0..15).map(|l| pow_self(l, beta)).collect();
    let q = fit_qse(&norms, beta, NormKind::Sup);
    assert!(rel(q.c, 1.0) < 1e-14 && rel(q.a, 1.0) < 1e-12);
    let norms: Vec<f64> = (0..15).map(|l| 2f64.powi(l as i32) * pow_self(l, beta)).collect();
    let q = fit_qse(&norms, beta, NormKind::L1);
    assert!(rel(q.a, 2.0) < 1e-12);
}

#[test]
fn fit_qse_gaussian_transform_is_minimal() {
    // ‖φ̂^{(n)}‖_∞ ≤ ‖t^n φ‖_{L¹} for φ = e^{−t²}
    let norms: Vec<f64> = (0..=20)
        .map(|n| {
            let f = move |t: f64| t.powi(n) * (-t * t).exp();
            2.0 * quadrature::integrate(f, 0.0, 12.0, 1e-14).integral
        })
        .collect();
    let q = fit_qse(&norms, 0.5, NormKind::L1);
    assert!(q.c.is_finite() && q.a.is_finite() && q.a > 0.0);
    for (l, &v) in norms.iter().enumerate() {
        assert!(v <= q.bound(l) * (1.0 + 1e-12));
    }
    let smaller = QseProfile { a: q.a * (1.0 - 1e-6), ..q };
    assert!(norms.iter().enumerate().any(|(l, &v)| v > smaller.bound(l)));
    let csv = qse_csv(&q, &norms);
    assert_eq!(csv.lines().count(), 22);
}

#[test]
fn calculus_inequality_on_dense_samples() {
    for &(a, beta) in &[(0.5, 1.0), (1.0, 2.0), (2.0, 0.5)] {
        for i in 1..200 {
            let t = i as f64 * 0.25;
            for g in 0..40 {
                let gamma = g as f64 * 0.25;
                assert!(calculus_ratio(t, gamma, a, beta) <= 1.0 + 1e-12);
            }
        }
    }
}

#[test]
fn sandwich_table_rows() {
    let csv = sandwich_csv(1.0, 2.0, &[0.1, 1.0, 10.0]);
    for line in csv.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[1] <= v[2] * (1.0 + 1e-12) && v[2] <= v[3] * (1.0 + 1e-12));
    }
}

#[test]
fn heisenberg_envelope_closed_form() {
    let tbl = recenter(&SubharmonicPolynomial::heisenberg(), C64::new(0.4, -1.0));
    for n in 1..=10 {
        for s in [0.1, 1.0, 3.0] {
            let e = envelope(&tbl, n, s).value();
            assert!(rel(e, (s * n as f64).powi(n as i32)) < 1e-12);
        }
    }
}

#[test]
fn heisenberg_envelope_chain_ratios() {
    // upper = E'_{n−1}/s² with E' = s^{n−1} n^n; middle = E_n/(s·s²) = s^{n−3} n^n; lower = upper/n.
    let tbl = recenter(&SubharmonicPolynomial::heisenberg(), C64::new(0.0, 0.0));
    for n in 1..=12 {
        for s in [0.2, 2.0] {
            let ch = check_envelope_chain(&tbl, n, s);
            let nn = n as f64;
            let upper = s.powi(n as i32 - 1) * nn.powi(n as i32) / (s * s);
            let middle = s.powi(n as i32 - 3) * nn.powi(n as i32);
            assert!(rel(ch.log_upper.exp(), upper) < 1e-12);
            assert!(rel(ch.log_middle.exp(), middle) < 1e-12);
            assert!(rel(ch.upper_ratio, 1.0) < 1e-12);
            assert!(rel(ch.lower_ratio, nn) < 1e-12);
        }
    }
}

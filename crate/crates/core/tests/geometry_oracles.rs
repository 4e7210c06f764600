use kohn_heat::geometry::*;
use kohn_heat::Error;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn quartic() -> SubharmonicPolynomial {
    SubharmonicPolynomial::radial(2)
}

#[test]
fn recenter_heisenberg_has_single_mixed_term() {
    let t = recenter(&SubharmonicPolynomial::heisenberg(), c(3.0, 4.0));
    assert_eq!(t.get(1, 1), c(1.0, 0.0));
    let mixed: Vec<_> = t.mixed().collect();
    assert_eq!(mixed.len(), 1);
}

#[test]
fn recenter_quartic_at_one() {
    // ∂_z^j ∂_z̄^k (z² z̄²)/(j!k!) = C(2,j) C(2,k) z^{2−j} z̄^{2−k}
    let t = recenter(&quartic(), c(1.0, 0.0));
    let binom = [1.0, 2.0, 1.0];
    for j in 0..=2 {
        for k in 0..=2 {
            assert!((t.get(j, k) - c(binom[j] * binom[k], 0.0)).norm() < 1e-14, "A_{j}{k}");
        }
    }
    assert_eq!(t.get(1, 1), c(4.0, 0.0));
    assert_eq!(t.get(2, 1), c(2.0, 0.0));
    assert_eq!(t.get(2, 2), c(1.0, 0.0));
}

#[test]
fn recenter_at_origin_returns_coefficients() {
    let p = SubharmonicPolynomial::new(&[((2, 2), c(1.0, 0.0)), ((3, 1), c(0.5, 0.0)), ((1, 3), c(0.5, 0.0))]).unwrap();
    let t = recenter(&p, c(0.0, 0.0));
    for ((j, k), v) in p.coeffs() {
        assert_eq!(t.get(j, k), v);
    }
}

#[test]
fn twist_heisenberg_closed_form() {
    let p = SubharmonicPolynomial::heisenberg();
    for (z, w) in [(c(0.3, -1.2), c(2.0, 0.5)), (c(-1.0, 1.0), c(0.0, 3.0))] {
        let expected = -2.0 * (z.conj() * w).im;
        assert!((twist(&p, z, w) - expected).abs() < 1e-13);
    }
}

#[test]
fn twist_vanishes_on_diagonal_and_for_quartic_at_origin() {
    let p = quartic();
    assert_eq!(twist(&p, c(0.7, 0.2), c(0.7, 0.2)), 0.0);
    for w in [c(1.0, 2.0), c(-3.0, 0.5)] {
        assert_eq!(twist(&p, c(0.0, 0.0), w), 0.0);
    }
}

#[test]
fn lambda_examples() {
    assert_eq!(lambda_size(&recenter(&SubharmonicPolynomial::heisenberg(), c(5.0, -2.0)), 2.0), 4.0);
    assert_eq!(lambda_size(&recenter(&quartic(), c(0.0, 0.0)), 2.0), 16.0);
    assert!((lambda_size(&recenter(&quartic(), c(1.0, 0.0)), 1.0) - 9.0).abs() < 1e-13);
}

#[test]
fn mu_examples() {
    let h = recenter(&SubharmonicPolynomial::heisenberg(), c(1.0, 1.0));
    assert!((mu_size(&h, 7.0).unwrap() - 7f64.sqrt()).abs() < 1e-14);
    let q0 = recenter(&quartic(), c(0.0, 0.0));
    assert!((mu_size(&q0, 81.0).unwrap() - 3.0).abs() < 1e-14);
    let q1 = recenter(&quartic(), c(1.0, 0.0));
    // min over (1/4)^{1/2}, (1/2)^{1/3}, (1/2)^{1/3}, 1
    let expected = [0.25f64.powf(0.5), 0.5f64.powf(1.0 / 3.0), 1.0].into_iter().fold(f64::INFINITY, f64::min);
    assert!((mu_size(&q1, 1.0).unwrap() - expected).abs() < 1e-14);
    assert!((expected - 0.5).abs() < 1e-15);
    assert_eq!(mu_size(&q1, 0.0).unwrap(), 0.0);
}

#[test]
fn control_distance_examples() {
    let h = SubharmonicPolynomial::heisenberg();
    let d = control_distance(&h, MetricPoint::new(c(0.0, 0.0), 1.0), MetricPoint::new(c(0.0, 0.0), 0.0)).unwrap();
    assert!((d - 1.0).abs() < 1e-14);
    let a = MetricPoint::new(c(0.4, -0.1), 2.5);
    assert_eq!(control_distance(&h, a, a).unwrap(), 0.0);
    let d = control_distance(&quartic(), MetricPoint::new(c(0.0, 0.0), 16.0), MetricPoint::new(c(0.0, 0.0), 0.0)).unwrap();
    assert!((d - 2.0).abs() < 1e-14);
}

#[test]
fn volume_examples() {
    let h = SubharmonicPolynomial::heisenberg();
    assert_eq!(ball_volume(&recenter(&h, c(0.0, 0.0)), 1.0), 1.0);
    let v = pair_volume(&h, MetricPoint::new(c(0.0, 0.0), 1.0), MetricPoint::new(c(0.0, 0.0), 0.0)).unwrap();
    assert!((v.volume - 1.0).abs() < 1e-14);
    assert_eq!(ball_volume(&recenter(&quartic(), c(0.0, 0.0)), 2.0), 64.0);
}

#[test]
fn twist_orderings_are_antisymmetric_for_heisenberg() {
    let h = SubharmonicPolynomial::heisenberg();
    let v = pair_volume(&h, MetricPoint::new(c(0.5, 1.0), 0.3), MetricPoint::new(c(-1.0, 0.2), 0.0)).unwrap();
    assert!(v.twist_defect < 1e-13);
}

#[test]
fn e_series_examples() {
    let h = SubharmonicPolynomial::heisenberg();
    let (z, w) = (c(0.3, 0.4), c(-1.0, 2.0));
    assert!((e_series(&h, z, w) - (w - z)).norm() < 1e-14);
    assert_eq!(e_series(&quartic(), z, z), c(0.0, 0.0));
    // |z|⁴ at z = 1: e(w, 1) = A_11 (w − 1) + A_21 (w − 1)² = 4 + 2 at w = 2.
    let q = quartic();
    let e = e_series(&q, c(1.0, 0.0), c(2.0, 0.0));
    assert!((e - c(6.0, 0.0)).norm() < 1e-13);
    assert!((e - e_series_dual(&q, c(1.0, 0.0), c(2.0, 0.0))).norm() < 1e-10);
}

#[test]
fn relative_inverse_bounded_by_term_count() {
    let p = SubharmonicPolynomial::new(&[((1, 1), c(1.0, 0.0)), ((3, 3), c(1.0, 0.0))]).unwrap();
    let deltas = log_spaced(1e-3, 1e3, 41);
    for z in [c(0.0, 0.0), c(1.0, -0.5), c(2.0, 2.0)] {
        let t = recenter(&p, z);
        let k = relative_inverse_constant(&t, &deltas).unwrap();
        assert!(k >= 1.0 && k <= t.term_count() as f64, "c = {k}");
    }
}

#[test]
fn geometry_csv_has_header_and_rows() {
    let t = recenter(&quartic(), c(1.0, 0.0));
    let csv = geometry_csv(&t, &[0.1, 1.0, 10.0]).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "z_re,z_im,delta,lambda,mu,ratio");
    assert_eq!(lines.len(), 4);
}

#[test]
fn harmonic_polynomial_rejected() {
    let err = SubharmonicPolynomial::from_json_str(r#"{"coeffs":[[2,0,1,0],[0,2,1,0]]}"#).unwrap_err();
    assert!(matches!(err, Error::InvalidPolynomial(_)));
}

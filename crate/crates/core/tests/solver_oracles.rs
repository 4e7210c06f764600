use std::f64::consts::PI;

use kohn_heat::geometry::{twist, SubharmonicPolynomial, C64};
use kohn_heat::solver::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn small_grid() -> GridSpec {
    GridSpec::new(c(0.0, 0.0), 4.0, 129).unwrap()
}

/// Closed-form kernel of □ for p = |z|²; the functions kernel is the forms amplitude at −τ.
fn heisenberg_exact(tau: f64, s: f64, z: C64, w: C64, variant: KernelVariant) -> C64 {
    let p = SubharmonicPolynomial::heisenberg();
    let a = if variant == KernelVariant::Forms { tau } else { -tau };
    let r2 = (z - w).norm_sqr();
    let amp = if a == 0.0 {
        (-r2 / s).exp() / (PI * s)
    } else {
        a / (PI * (a * s).sinh()) * (-a * s).exp() * (-a / (a * s).tanh() * r2).exp()
    };
    C64::from_polar(amp, tau * twist(&p, z, w))
}

#[test]
fn euclidean_column_at_tau_zero() {
    let p = SubharmonicPolynomial::heisenberg();
    let cfg = SolverConfig::default();
    let ops = WeightedOperatorSet::new(&p, 0.0, small_grid(), cfg.order).unwrap();
    let s = 0.25;
    let slice = kernel_column(&ops, KernelVariant::Forms, c(0.0, 0.0), &[s], &cfg).unwrap();
    let mut worst: f64 = 0.0;
    for (k, z) in ops.spec.nodes().enumerate() {
        if z.norm() <= 1.0 {
            let exact = (-z.norm_sqr() / s).exp() / (PI * s);
            worst = worst.max((slice.fields[0].values[k] - exact).norm() / exact);
        }
    }
    assert!(worst < 1e-2, "rel error {worst}");
}

#[test]
fn heisenberg_kernel_matches_closed_form() {
    let p = SubharmonicPolynomial::heisenberg();
    let cfg = SolverConfig::default();
    let s = 0.5;
    let w = c(0.5, 0.25);
    for tau in [1.0, -1.0, 2.0] {
        let ops = WeightedOperatorSet::new(&p, tau, small_grid(), cfg.order).unwrap();
        for variant in [KernelVariant::Forms, KernelVariant::Functions] {
            let slice = kernel_column(&ops, variant, w, &[s], &cfg).unwrap();
            let peak = heisenberg_exact(tau, s, w, w, variant).norm();
            for z in [w, c(0.0, 0.0), c(1.0, -0.5), c(-0.7, 1.1)] {
                let err = (slice.value(0, z).unwrap() - heisenberg_exact(tau, s, z, w, variant)).norm();
                assert!(err / peak < 1e-3, "tau {tau} {variant:?} z {z}: {}", err / peak);
            }
        }
    }
}

#[test]
fn evolution_is_l2_contractive_and_a_semigroup() {
    let p = SubharmonicPolynomial::radial(2);
    let cfg = SolverConfig { schedule: Schedule::Uniform { factor: 0.5 }, ..SolverConfig::default() };
    let ops = WeightedOperatorSet::new(&p, 1.0, small_grid(), cfg.order).unwrap();
    let u0 = GridField::from_fn(ops.spec, |z| C64::from_polar((-2.0 * (z - c(0.3, 0.1)).norm_sqr()).exp(), z.re));
    let snaps = evolve_snapshots(&ops, false, &u0, &[0.1, 0.2, 0.4], &cfg).unwrap();
    let mut prev = u0.l2_norm();
    for f in &snaps {
        assert!(f.l2_norm() <= prev * (1.0 + 1e-12));
        prev = f.l2_norm();
    }
    let twice = evolve(&ops, false, &evolve(&ops, false, &u0, 0.2, &cfg).unwrap(), 0.2, &cfg).unwrap();
    let diff: f64 = twice.values.iter().zip(&snaps[2].values).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    assert!(diff * ops.h() < 1e-6 * snaps[2].l2_norm(), "{diff}");
}

#[test]
fn kernel_symmetry_for_quartic() {
    let p = SubharmonicPolynomial::radial(2);
    let cfg = SolverConfig::default();
    let ops = WeightedOperatorSet::new(&p, 0.5, small_grid(), cfg.order).unwrap();
    // Grid nodes, so the discrete kernel is a Hermitian matrix entry.
    let (z, w) = (c(0.375, -0.1875), c(-0.3125, 0.5));
    let hz = kernel_column(&ops, KernelVariant::Forms, w, &[0.3], &cfg).unwrap().value(0, z).unwrap();
    let hw = kernel_column(&ops, KernelVariant::Forms, z, &[0.3], &cfg).unwrap().value(0, w).unwrap();
    assert!((hz - hw.conj()).norm() < 1e-6 * hz.norm().max(1e-3), "{hz} vs {hw}");
}

#[test]
fn first_tau_derivative_matches_closed_form() {
    // At w = 0 the twist vanishes, so the twisted derivative is ∂_τ of the closed form.
    let p = SubharmonicPolynomial::heisenberg();
    let cfg = SolverConfig::default();
    let (tau, s) = (1.0, 0.5);
    let stencil = TwistedDerivativeStencil::for_tau(1, tau, 2).unwrap();
    let fields = twisted_tau_derivative_fields(&p, c(0.0, 0.0), &[s], tau, stencil, small_grid(), &cfg).unwrap();
    let d = 1e-4;
    for z in [c(0.0, 0.0), c(0.5, 0.0), c(0.3, -0.6)] {
        let exact = (heisenberg_exact(tau + d, s, z, c(0.0, 0.0), KernelVariant::Forms)
            - heisenberg_exact(tau - d, s, z, c(0.0, 0.0), KernelVariant::Forms))
            / (2.0 * d);
        let got = fields[0].interpolate(z).unwrap();
        assert!((got - exact).norm() < 2e-3 * exact.norm().max(0.05), "z {z}: {got} vs {exact}");
    }
    // Closed form at the origin: ∂_τ [(2τ/π)/(e^{2τs} − 1)].
    let q = (2.0 * tau * s).exp();
    let origin = 2.0 / (PI * (q - 1.0)) - 4.0 * tau * s * q / (PI * (q - 1.0).powi(2));
    assert!((fields[0].values[small_grid().index(64, 64)].re - origin).abs() < 2e-3 * origin.abs());
}

#[test]
fn stencil_weights_sum_to_zero() {
    for n in 1..=4 {
        let st = TwistedDerivativeStencil::for_tau(n, 1.0, 2).unwrap();
        let w = st.weights();
        let scale: f64 = w.iter().map(|x| x.abs()).sum();
        assert!(w.iter().sum::<f64>().abs() < 1e-12 * scale, "n {n}");
    }
}

#[test]
fn delta_outside_grid_is_rejected() {
    assert!(GridField::delta(small_grid(), c(10.0, 0.0)).is_err());
}

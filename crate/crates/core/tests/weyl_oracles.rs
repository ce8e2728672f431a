use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qp_core::arithmetic::Frequency;
use qp_core::cocycle::*;
use qp_core::subordinacy::Side;
use qp_core::weyl::*;
use std::sync::Arc;

fn golden() -> Arc<Frequency> {
    Arc::new(Frequency::golden(256))
}

fn free() -> QpCocycle {
    QpCocycle::schrodinger(golden(), PotentialSpec::zero(), 0.0)
}

fn amo() -> QpCocycle {
    QpCocycle::amo(golden(), 0.5, 0.0)
}

/// Decaying root of `w² − zw + 1 = 0`, from the quadratic formula directly.
fn root(z: C64) -> C64 {
    let d = (z * z - 4.0).sqrt();
    let (a, b) = ((z - d) / 2.0, (z + d) / 2.0);
    if a.norm() < 1.0 {
        a
    } else {
        b
    }
}

#[test]
fn free_m_at_i() {
    let m = half_line_m(&free(), 0.0, C64::new(0.0, 1.0), Side::Plus, 0.0).unwrap();
    let golden_ratio = (5f64.sqrt() - 1.0) / 2.0;
    assert!((m.value - C64::new(0.0, golden_ratio)).norm() < 1e-12);
    assert!((m.value + root(C64::new(0.0, 1.0))).norm() < 1e-12);
}

#[test]
fn free_whole_line_at_band_center() {
    let z = C64::new(0.0, 1e-3);
    let t = whole_line_M(&free(), 0.0, z).unwrap();
    let w = root(z);
    let closed = -w * 2.0 / (1.0 - w * w);
    assert!((t.big_m - closed).norm() < 1e-10);
    assert!((t.big_m - C64::new(0.0, 1.0)).norm() < 1e-3);
    let assembled = (t.m_plus * t.m_minus - 1.0) / (t.m_plus + t.m_minus);
    assert!((assembled - t.big_m).norm() < 1e-12 * t.big_m.norm());
    let p = poisson_mass(&free(), 0.0, 0.0, 1e-3).unwrap();
    assert!((p - 1e-3).abs() < 1e-8);
}

#[test]
fn beta_rotation_is_a_group_action() {
    let z = C64::new(0.4, 0.05);
    let m = half_line_m(&amo(), 0.0, z, Side::Plus, 0.0).unwrap().value;
    let mb = half_line_m(&amo(), 0.0, z, Side::Plus, std::f64::consts::FRAC_PI_4).unwrap().value;
    assert!((rotate_m(m, std::f64::consts::FRAC_PI_4, Side::Plus) - mb).norm() < 1e-12);
    for side in [Side::Plus, Side::Minus] {
        let twice = rotate_m(rotate_m(m, 0.3, side), 0.5, side);
        assert!((twice - rotate_m(m, 0.8, side)).norm() < 1e-12);
        assert!((rotate_m(rotate_m(m, 0.3, side), -0.3, side) - m).norm() < 1e-12);
    }
}

#[test]
fn whole_line_dominates_half_lines() {
    let s = WeylSolver::new(&amo(), 0.0).unwrap();
    for (e, eta) in [(0.2, 1e-2), (-1.7, 1e-3), (2.5, 1e-1)] {
        let z = C64::new(e, eta);
        let t = s.whole(z).unwrap();
        for beta in [0.0, 0.6, -1.1] {
            let p = rotate_m(t.m_plus, beta, Side::Plus).im;
            let q = rotate_m(t.m_minus, beta, Side::Minus).im;
            assert!(t.big_m.im >= 0.25 * p.min(q));
            let mb = assemble_m(rotate_m(t.m_plus, beta, Side::Plus), rotate_m(t.m_minus, beta, Side::Minus)).unwrap();
            assert!((mb - t.big_m).norm() <= 1e-8 * t.big_m.norm());
        }
    }
}

#[test]
fn off_spectrum_resolvent_is_real() {
    let c = QpCocycle::amo(golden(), 0.5, 0.0);
    let ims: Vec<f64> = [1e-2, 1e-3, 1e-4].iter().map(|&eta| whole_line_M(&c, 0.0, C64::new(3.5, eta)).unwrap().big_m.im).collect();
    assert!(ims[1] < 0.2 * ims[0] && ims[2] < 0.2 * ims[1]);
    let m = measure_window(&c, 0.0, 3.5, 1e-2, 1e-2).unwrap();
    assert!(m.mass <= 1e-8, "off-spectrum mass {}", m.mass);
    // Poisson tail: doubling ε quadruples the mass.
    let a = poisson_mass(&c, 0.0, 3.5, 1e-3).unwrap();
    let b = poisson_mass(&c, 0.0, 3.5, 2e-3).unwrap();
    assert!((b / a - 4.0).abs() < 0.05);
}

#[test]
fn free_density_window() {
    let m = measure_window(&free(), 0.0, 0.0, 1e-2, 1e-2).unwrap();
    let expect = 2e-2 / std::f64::consts::PI;
    assert!((m.mass - expect).abs() < 0.05 * expect);
    assert_eq!(m.method, MassMethod::Stieltjes);
    assert!(m.bias.is_some());
}

#[test]
fn window_mass_below_poisson_bound() {
    let c = amo();
    let s = WeylSolver::new(&c, 0.0).unwrap();
    for (e, eps) in [(0.0, 1e-2), (1.2976062486458413, 1e-3), (-2.1, 1e-2), (0.7, 1e-1)] {
        let w = measure_window_with(&s, e, eps, &MeasureOptions { eta_ratio: 0.1, ..Default::default() }).unwrap();
        let bound = 2.0 * eps * s.whole(C64::new(e, eps)).unwrap().big_m.im;
        assert!(w.mass <= bound * (1.0 + 1e-3), "E={e} eps={eps}: {} > {bound}", w.mass);
    }
}

#[test]
fn total_mass_is_two() {
    let s = WeylSolver::new(&amo(), 0.0).unwrap();
    let o = MeasureOptions { max_evals: 400_000, ..Default::default() };
    let (m, _, _) = stieltjes(&s, -4.0, 4.0, 1e-3, &o).unwrap();
    assert!((m - 2.0).abs() < 0.02, "total mass {m}");
}

#[test]
fn dislocation_inequality() {
    // μ(E−ε,E+ε) ≥ ε^{1+τ}·Im M(E+iε^{1+τ}) − C·ε^{4/3+2τ}, checked with C = 1.
    let s = WeylSolver::new(&amo(), 0.0).unwrap();
    let tau = 0.1;
    for e in [0.1, -0.8, 1.9] {
        for eps in [1e-2, 1e-3] {
            let w = measure_window_with(&s, e, eps, &MeasureOptions { eta_ratio: 0.1, ..Default::default() }).unwrap();
            let small = eps.powf(1.0 + tau);
            let lower = small * s.whole(C64::new(e, small)).unwrap().big_m.im - eps.powf(4.0 / 3.0 + 2.0 * tau);
            assert!(w.mass >= lower, "E={e} eps={eps}: {} < {lower}", w.mass);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn herglotz(e in -3.5f64..3.5, lg in -4.0f64..0.0, theta in 0.0f64..1.0) {
        let z = C64::new(e, 10f64.powf(lg));
        let c = QpCocycle::amo(golden(), 0.5, 0.0);
        let s = WeylSolver::new(&c, theta).unwrap();
        let t = s.whole(z).unwrap();
        prop_assert!(t.m_plus.im > 0.0 && t.m_minus.im > 0.0 && t.big_m.im > 0.0);
    }

    #[test]
    fn free_half_line_oracle(e in -3.0f64..3.0, lg in -4.0f64..0.0) {
        let z = C64::new(e, 10f64.powf(lg));
        let m = half_line_m(&free(), 0.0, z, Side::Plus, 0.0).unwrap().value;
        prop_assert!((m + root(z)).norm() <= 1e-10 * m.norm());
    }

    #[test]
    fn poisson_quotient_non_increasing(e in -2.5f64..2.5, lg in -3.0f64..-0.5) {
        let c = amo();
        let eps = 10f64.powf(lg);
        let a = poisson_mass(&c, 0.0, e, eps).unwrap() / eps.powi(2);
        let b = poisson_mass(&c, 0.0, e, 1.5 * eps).unwrap() / (1.5 * eps).powi(2);
        prop_assert!(b <= a * (1.0 + 1e-9));
    }
}

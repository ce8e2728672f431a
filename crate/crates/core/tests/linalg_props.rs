use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qp_core::linalg2::*;

fn sl2_algebra(x: f64, y: f64, z: f64) -> Mat2 {
    Mat2::real(x, y + z, y - z, -x)
}

fn su11_algebra(t: f64, zr: f64, zi: f64) -> Mat2 {
    let z = C64::new(zr, zi);
    Mat2::new(I * t, z, z.conj(), -I * t)
}

/// Independent Taylor-series exponential.
fn exp_taylor(a: &Mat2) -> Mat2 {
    let mut term = Mat2::identity();
    let mut sum = Mat2::identity();
    for n in 1..60 {
        term = (term * *a).scale_re(1.0 / n as f64);
        sum = sum + term;
    }
    sum
}

#[test]
fn cayley_reads_off_generators() {
    let c = cayley(&sl2_algebra(0.0, 0.0, 1.0)).unwrap();
    assert!(c.approx_eq(&Mat2::diag(I, -I), 1e-15));
    let c = cayley(&sl2_algebra(1.0, 0.0, 0.0)).unwrap();
    assert!(c.approx_eq(&Mat2::real(0.0, 1.0, 1.0, 0.0), 1e-15));
}

#[test]
fn bch_trivial_cases() {
    let z = bch_log(&Mat2::zero(), &Mat2::zero()).unwrap();
    assert!(z.max_abs() < 1e-300);
    let x = su11_algebra(0.05, 0.0, 0.0);
    let y = su11_algebra(-0.02, 0.0, 0.0);
    let z = bch_log(&x, &y).unwrap();
    assert!((z - (x + y)).max_abs() < 1e-14);
    let big = su11_algebra(1.0, 0.0, 0.0);
    assert!(bch_log(&big, &big).is_err());
}

proptest! {
    #[test]
    fn cayley_preserves_brackets(a in prop::array::uniform3(-2.0f64..2.0), b in prop::array::uniform3(-2.0f64..2.0)) {
        let b1 = sl2_algebra(a[0], a[1], a[2]);
        let b2 = sl2_algebra(b[0], b[1], b[2]);
        let lhs = cayley(&b1.commutator(&b2)).unwrap();
        let rhs = cayley(&b1).unwrap().commutator(&cayley(&b2).unwrap());
        prop_assert!((lhs - rhs).max_abs() < 1e-13);
    }

    #[test]
    fn normal_form_diagonalizes(t in 0.1f64..3.0, frac in 0.0f64..0.95, arg in -3.1f64..3.1) {
        let z = C64::from_polar(frac * t, arg);
        let nf = elliptic_normal_form(t, z).unwrap();
        let a = su11_algebra(t, z.re, z.im);
        let d = nf.d;
        let diag = d.inv() * a * d;
        prop_assert!((diag - Mat2::diag(I * nf.rho, -I * nf.rho)).max_abs() < 1e-10 * (1.0 + t) / (1.0 - frac));
        // Characteristic polynomial λ² + ρ².
        prop_assert!((a.det() - C64::from(nf.rho * nf.rho)).norm() < 1e-12 * (1.0 + t * t));
        prop_assert!(su11_defect(&d) < 1e-10 / (1.0 - frac));
    }

    #[test]
    fn schur_reconstructs_exponential(t in 0.05f64..1.5, frac in 0.0f64..0.9, arg in -3.1f64..3.1) {
        let z = C64::from_polar(frac * t, arg);
        let s = schur_upper(t, z).unwrap();
        let u = s.u;
        prop_assert!((u.adjoint() * u - Mat2::identity()).max_abs() < 1e-12);
        let tri = Mat2::new(C64::from_polar(1.0, s.rho), s.nu, C64::new(0.0, 0.0), C64::from_polar(1.0, -s.rho));
        let a = su11_algebra(t, z.re, z.im);
        prop_assert!((u * tri * u.adjoint() - exp_taylor(&a)).max_abs() < 1e-12);
        prop_assert!(s.nu.norm() >= frac * t * (1.0 - 1e-12) && s.nu.norm() <= 2.0 * frac * t + 1e-15);
    }

    #[test]
    fn bch_matches_product(a in prop::array::uniform3(-0.05f64..0.05), b in prop::array::uniform3(-0.05f64..0.05)) {
        let x = su11_algebra(a[0], a[1], a[2]);
        let y = su11_algebra(b[0], b[1], b[2]);
        let z = bch_log(&x, &y).unwrap();
        prop_assert!((exp_taylor(&z) - exp_taylor(&x) * exp_taylor(&y)).max_abs() < 1e-12);
    }

    #[test]
    fn bch_leading_terms(a in prop::array::uniform3(-1.0f64..1.0), b in prop::array::uniform3(-1.0f64..1.0)) {
        // Z − (X + Y + [X,Y]/2) is cubic in the size.
        let mut prev: Option<f64> = None;
        for s in [5e-2, 5e-3] {
            let x = su11_algebra(a[0] * s, a[1] * s, a[2] * s);
            let y = su11_algebra(b[0] * s, b[1] * s, b[2] * s);
            let z = bch_log(&x, &y).unwrap();
            let lead = x + y + x.commutator(&y).scale_re(0.5);
            let r = (z - lead).max_abs();
            prop_assert!(r <= 10.0 * s.powi(3) + 1e-16);
            if let Some(p) = prev {
                prop_assert!(r <= p * 2e-2 + 1e-16);
            }
            prev = Some(r);
        }
    }

    #[test]
    fn realization_roundtrip(t in -1.0f64..1.0, zr in -0.5f64..0.5, zi in -0.5f64..0.5) {
        let g = exp_taylor(&su11_algebra(t, zr, zi));
        let r = su11_to_sl2r(&g);
        prop_assert!(r.is_real(1e-12));
        prop_assert!((r.det() - C64::from(1.0)).norm() < 1e-12);
        prop_assert!((sl2r_to_su11(&r) - g).max_abs() < 1e-12);
    }
}

use proptest::prelude::*;
use qp_core::arithmetic::{Ext, ResonanceEntry, ResonanceSequence};
use qp_core::scaling::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn entry(k: i64, eta: f64) -> ResonanceEntry {
    let ln_gap = -eta * k.unsigned_abs() as f64;
    ResonanceEntry { k, gap: ln_gap.exp(), ln_gap, eta: Some(Ext::Finite(eta)) }
}

/// λ = 1/e (h = 1) with resonances at |k| = 1, 50, 4000.
fn amo_sequence() -> ResonanceSequence {
    ResonanceSequence {
        phase: 0.3,
        epsilon0: 0.5,
        entries: vec![
            ResonanceEntry { k: 0, gap: 0.3, ln_gap: 0.3f64.ln(), eta: None },
            entry(1, 3.0),
            entry(-50, 2.5),
            entry(4000, 1.5),
        ],
        search_bound: 100_000,
        repulsion_ratios: vec![],
    }
}

/// Rise branch `1/2 + hn/(2L)`, written out independently of the library.
fn rise(l: f64, h: f64, n: f64) -> f64 {
    0.5 + h * n / (2.0 * l)
}

/// Relax branch `(1 − b·hN/L)/(1 − b)`.
fn relax(l: f64, h: f64, n: f64, nn: f64, eta: f64) -> f64 {
    let b = (eta - h) * n / (h * nn - eta * n);
    (1.0 - b * h * nn / l) / (1.0 - b)
}

fn check_law(law: &ScalingLaw) {
    for (i, w) in law.windows.iter().enumerate() {
        let Ext::Finite(eta) = w.eta else { continue };
        if eta <= w.h {
            continue;
        }
        let lj = (2.0 * eta - w.h) * w.n;
        if let Some(nn) = w.big_n {
            if lj < w.l_hi() {
                let (a, b) = (rise(lj, w.h, w.n), relax(lj, w.h, w.n, nn, eta));
                assert!((a - b).abs() <= 1e-12, "window {i}: {a} vs {b}");
                assert!((w.f_at(lj).0 - a).abs() <= 1e-12);
                assert!((relax(w.h * nn, w.h, w.n, nn, eta) - 1.0).abs() <= 1e-12);
            }
        }
        // Shared endpoint with the next window.
        if let Some(next) = law.windows.get(i + 1) {
            let l = next.l_lo();
            assert!((w.f_at(l).0 - next.f_at(l).0).abs() <= 1e-12, "windows {i}/{}", i + 1);
        }
    }
}

#[test]
fn amo_law_examples() {
    let res = amo_sequence();
    let lambda = (-1f64).exp();
    let law = ScalingLaw::amo(lambda, &res).unwrap();
    assert_eq!(law.windows.len(), 3);
    check_law(&law);
    // Right edge of the first window.
    assert!((amo_f((-1f64).exp(), lambda, &res).unwrap() - 1.0).abs() < 1e-12);
    // Plateau value η/(2η + ln λ) at ε = e^{−(2η + ln λ)|ℓ|}.
    assert!((amo_f((-5f64).exp(), lambda, &res).unwrap() - 0.6).abs() < 1e-12);
    assert!((amo_f((-200f64).exp(), lambda, &res).unwrap() - 2.5 / 4.0).abs() < 1e-12);
    // The last window is only determined up to the end of its rise branch.
    let last = law.windows[2];
    assert!((last.f_at(5000.0).0 - 0.9).abs() < 1e-15 && last.f_at(5000.0).1 == Branch::Rise);
    assert_eq!(last.l_hi(), 8000.0);
    assert!(law.eval(0.9).is_err());
    assert!(ScalingLaw::amo(1.5, &res).is_err());
}

#[test]
fn general_law_examples() {
    assert_eq!(general_f(1e-3, 1.0, 2.0, Ext::Finite(10.0), Ext::Finite(0.5)).unwrap(), 1.0);
    // N = ∞ tail tends to 1.
    let tail = |l: f64| general_f((-l).exp(), 0.5, 3.0, Ext::Infinite, Ext::Finite(2.0)).unwrap();
    assert!((tail(600.0) - (1.0 - 1.5 * 3.0 / 600.0)).abs() < 1e-12);
    assert!(tail(700.0) > tail(650.0) && 1.0 - tail(700.0) < 1e-2);
    assert!(general_f(0.5, 1.0, 2.0, Ext::Finite(10.0), Ext::Finite(3.0)).is_err());
    assert!(ScalingLaw::general(1.0, 5.0, Ext::Finite(4.0), Ext::Finite(2.0)).is_err());
}

#[test]
fn f_is_two_over_psi() {
    let (h, n, nn, eta) = (0.7, 4.0, 600.0, 2.3);
    for i in 0..=200 {
        let lx = h * n + (h * nn - h * n) * i as f64 / 200.0;
        let p = psi_ln(lx, n, nn, eta, h);
        let eps_l = p * lx / 2.0;
        if eps_l > h * nn {
            continue;
        }
        let f = general_f((-eps_l).exp(), h, n, Ext::Finite(nn), Ext::Finite(eta)).unwrap();
        assert!((f - 2.0 / p).abs() < 1e-12, "ln x = {lx}: {f} vs {}", 2.0 / p);
    }
}

#[test]
fn ak_law_examples() {
    let (h, delta) = (0.1, 2.0);
    let th = 2.0 * PI * h;
    let ks = [3, -141, 10_000];
    check_law(&ScalingLaw::ak(h, delta, &ks).unwrap());
    assert!((ak_f((-th * 3.0).exp(), h, delta, &ks).unwrap() - 1.0).abs() < 1e-12);
    let plateau = ak_f((-(2.0 * delta - th) * 3.0).exp(), h, delta, &ks).unwrap();
    assert!((plateau - delta / (2.0 * delta - th)).abs() < 1e-12);
    assert!(ak_f(0.9, h, delta, &ks).is_err());
    assert!(ScalingLaw::ak(1.0, 2.0, &ks).is_err());
}

#[test]
fn psi_examples() {
    let (h, n, nn): (f64, f64, f64) = (0.5, 10.0, 1000.0);
    assert_eq!(psi((h * n * 3.0).exp(), n, nn, 0.4, h).unwrap(), 2.0);
    let eta = 1.5;
    let lj = eta * n;
    let expect = 4.0 - 2.0 * h / eta;
    let taper = 2.0 + (2.0 * eta * n - 2.0 * h * n) / lj * (1.0 - (lj - eta * n) / (h * nn - eta * n));
    assert!((psi_ln(lj, n, nn, eta, h) - expect).abs() < 1e-12 && (taper - expect).abs() < 1e-12);
    assert!((psi_ln(h * nn, n, nn, eta, h) - 2.0).abs() < 1e-15);
    assert!(psi(1.0, n, nn, eta, h).is_err());
}

#[test]
fn eta_plus_examples() {
    let base = EtaProfile { n: 3.0, big_n: 230.0, zeta_n: Ext::Infinite, eta_hat_n: Ext::Finite(2.0), eta_n: Ext::Finite(2.0), gamma0: 1.0, h: 0.2 };
    assert_eq!(eta_plus(2.0, &base).unwrap(), 2.0);
    assert!(eta_plus(1.0, &base).is_err());
    let zeta = 2.0 * PI * 0.2;
    let p = EtaProfile { zeta_n: Ext::Finite(zeta), ..base };
    let lj = 2.0 * p.n;
    let peak = 4.0 - 2.0 * zeta / 2.0;
    assert!((eta_plus_unchecked(lj, &p) - peak).abs() < 1e-12);
    assert!((2.0 + (2.0 * 2.0 * p.n - 2.0 * zeta * p.n) / lj - peak).abs() < 1e-12);
    // Rises to the peak, then decays back to 2.
    let grid: Vec<f64> = (1..400).map(|i| eta_plus_unchecked(0.1 * i as f64, &p)).collect();
    let top = grid.iter().cloned().fold(f64::MIN, f64::max);
    assert!((top - peak).abs() < 1e-2);
    let arg = grid.iter().position(|&v| v == top).unwrap();
    assert!(grid[..=arg].windows(2).all(|w| w[1] >= w[0]));
    assert!(grid[arg..].windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn dimension_and_holder_examples() {
    let (lo, hi) = local_dimensions((-1f64).exp(), Ext::Finite(2.0), false);
    assert!((lo - 2.0 / 3.0).abs() < 1e-15 && hi == 1.0);
    assert_eq!(local_dimensions(0.5, Ext::Finite(0.3), false), (1.0, 1.0));
    assert_eq!(local_dimensions(0.5, Ext::Infinite, true), (0.5, 0.5));
    let th = 2.0 * PI * 0.2;
    assert_eq!(holder_exponent(Ext::Infinite, th), 0.5);
    assert!((holder_exponent(Ext::Finite(th), th) - 1.0).abs() < 1e-15);
    assert!((holder_exponent(Ext::Finite(2.0 * th), th) - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(holder_exponent(Ext::Finite(0.5 * th), th), 1.0);
}

#[test]
fn fit_examples() {
    let eps: Vec<f64> = (0..40).map(|i| 10f64.powf(-6.0 + 4.0 * i as f64 / 39.0)).collect();
    let exact: Vec<(f64, f64)> = eps.iter().map(|&e| (e, e.powf(0.7))).collect();
    assert!((fit_loglog_all(&exact).unwrap().slope - 0.7).abs() < 1e-3);
    let flat: Vec<(f64, f64)> = eps.iter().map(|&e| (e, 3.0)).collect();
    assert!(fit_loglog_all(&flat).unwrap().slope.abs() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noisy: Vec<(f64, f64)> = eps.iter().map(|&e| (e, e.powf(0.7) * (1.0 + 0.05 * rng.gen_range(-1.0..1.0)))).collect();
    let f = fit_loglog_all(&noisy).unwrap();
    assert!((f.slope - 0.7).abs() <= f.band && f.band < 0.05);
    let narrow: Vec<(f64, f64)> = (0..20).map(|i| (1e-3 * (1.0 + i as f64), 1.0)).collect();
    assert!(fit_loglog_all(&narrow).is_err());
    assert!(fit_loglog(&exact, &[(1e-6, 1e-5)]).is_err());
}

/// `(h, n, N, η)` with `η > h` and `hN ≥ 100ηn`.
fn admissible() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.05f64..2.0, 1.0f64..500.0, 1.01f64..10.0, 1.0f64..20.0)
        .prop_map(|(h, n, r, s)| (h, n, 100.0 * h * r * n * s / h, h * r))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn general_law_continuity_and_range((h, n, nn, eta) in admissible(), u in 0.0f64..1.0) {
        let law = ScalingLaw::general(h, n, Ext::Finite(nn), Ext::Finite(eta)).unwrap();
        check_law(&law);
        let l = h * n + u * (h * nn - h * n);
        let f = law.windows[0].f_at(l).0;
        prop_assert!(f > 0.5 && f <= 1.0 + 1e-15);
    }

    #[test]
    fn psi_monotone((h, n, nn, eta) in admissible(), u in 0.0f64..1.0, d in 1e-6f64..0.5) {
        let (lo, hi) = (h * n, h * nn);
        let l = lo + u * (hi - lo);
        let l2 = (l * (1.0 + d)).min(hi);
        prop_assume!(l2 > l);
        prop_assert!(l2 * psi_ln(l2, n, nn, eta, h) > l * psi_ln(l, n, nn, eta, h));
    }

    #[test]
    fn increment_bound((h, n, nn, eta) in admissible(), u in 0.0f64..1.0, dt in 0.0f64..1.5) {
        let (lo, hi) = (h * n, h * nn);
        let lx = lo + u * (hi - lo);
        let ly = (1.0 + dt) * lx;
        prop_assume!(ly <= hi);
        let delta = (1.0 + dt) * psi_ln(ly, n, nn, eta, h) - psi_ln(lx, n, nn, eta, h);
        // The taper costs exactly 2(η−h)n/(hN−ηn) per unit δ̃.
        let loss = 2.0 * (eta - h) * n / (h * nn - eta * n);
        prop_assert!(delta >= (2.0 - loss) * dt - 1e-12, "Δ = {delta}, δ̃ = {dt}");
        if h * nn >= 201.0 * eta * n {
            prop_assert!(delta >= (2.0 - 1e-2) * dt);
        }
    }

    #[test]
    fn dislocation_bound((h, n, nn, eta) in admissible(), u in 0.0f64..1.0, tau in 0.0f64..1.0) {
        let w = ScalingLaw::general(h, n, Ext::Finite(nn), Ext::Finite(eta)).unwrap().windows[0];
        let (lo, hi) = (h * n, h * nn);
        let l = lo + u * (hi - lo);
        prop_assume!((1.0 + tau) * l <= hi);
        prop_assert!(w.f_at((1.0 + tau) * l).0 - w.f_at(l).0 <= 0.6 * tau + 1e-12);
    }
}

use num_bigint::BigInt;
use proptest::prelude::*;
use qp_core::arithmetic::*;
use qp_core::fixed::Fixed;

/// Exhaustive oracle in plain f64 for small |k|.
fn brute_resonances(alpha: f64, phase: f64, eps0: f64, k_max: i64) -> Vec<i64> {
    let d = |k: i64| torus_dist(phase - k as f64 * alpha);
    let mut out = vec![0];
    let mut best = d(0);
    for k in 1..=k_max {
        let (kk, dk) = if d(-k) < d(k) { (-k, d(-k)) } else { (k, d(k)) };
        if dk <= best && dk <= (-eps0 * k as f64).exp() {
            out.push(kk);
        }
        best = best.min(dk);
    }
    out
}

#[test]
fn frequencies_from_digits() {
    let g = build_frequency(&[1; 60], 256).unwrap();
    assert!((g.to_f64() - (5f64.sqrt() - 1.0) / 2.0).abs() < 2e-16);
    let s = build_frequency(&[2; 60], 256).unwrap();
    assert!((s.to_f64() - (2f64.sqrt() - 1.0)).abs() < 2e-16);
    assert!(build_frequency(&[1], 256).is_err());
}

#[test]
fn convergent_recurrences_hold() {
    let g = Frequency::golden(512);
    let c = &g.convergents;
    for n in 2..c.len() {
        let a = BigInt::from(g.partial_quotients[n]);
        assert_eq!(c[n].0, &a * &c[n - 1].0 + &c[n - 2].0);
        assert_eq!(c[n].1, &a * &c[n - 1].1 + &c[n - 2].1);
    }
    assert!(g.partial_quotients.iter().skip(1).all(|&a| a >= 1));
}

#[test]
fn exact_resonance_is_flagged() {
    let g = Frequency::golden(256);
    let r = resonances(&g, g.value(), 0.1, 50).unwrap();
    let e = r.find(1).expect("k=1 present");
    assert_eq!(e.eta, Some(Ext::Infinite));
    let three = g.value().mul_int(3).frac();
    let d = delta_exponent(&g, &three, 20).unwrap();
    assert!(d.lower_bound.is_infinite());
}

#[test]
fn half_phase_matches_brute_force() {
    let g = Frequency::golden(256);
    let r = resonances(&g, &Fixed::from_f64(0.5, 256), 1.0, 50).unwrap();
    assert_eq!(r.ks(), brute_resonances(g.to_f64(), 0.5, 1.0, 50));
    let d = delta_exponent(&g, &Fixed::from_f64(0.5, 256), 1000).unwrap();
    assert!(d.lower_bound.finite().is_some_and(|x| x.is_finite() && x > 0.0));
}

#[test]
fn single_resonance_closed_form() {
    let g = Frequency::golden(256);
    let e = engineer_phase_with(&g, &EngineerOptions::new(1.0, 1, 5)).unwrap();
    let x = e.two_phi.sub(&g.value().mul_int(5)).centered();
    let exact = Fixed::exp_neg(5.0, 256);
    assert!(x.sub(&exact).is_zero() || x.sub(&exact).abs().ln_abs() < -150.0);
}

#[test]
fn engineered_schedule_is_recovered_by_scan() {
    // A third stage would need |k| near e^{2·|k_2|}, beyond any working precision.
    let g = Frequency::golden(1024);
    let mut o = EngineerOptions::new(2.0, 2, 3);
    o.max_disturbance = None;
    o.tol = 0.1;
    let e = engineer_phase_with(&g, &o).unwrap();
    for eta in e.etas() {
        assert!((1.9..=2.1).contains(&eta), "eta {eta}");
    }
    let k_max = e.ks.iter().map(|k| k.abs()).max().unwrap();
    let r = resonances(&g, &e.two_phi, 0.5, k_max).unwrap();
    for (k, eta) in e.ks.iter().zip(e.etas()) {
        let entry = r.find(*k).expect("engineered k is a resonance");
        assert!((entry.ln_gap + eta * k.abs() as f64).abs() < 1e-9);
    }
    assert_eq!(e.etas().last().copied(), Some(2.0));
    let d = delta_exponent(&g, &e.two_phi, k_max).unwrap();
    assert!(d.lower_bound.finite().unwrap() >= 2.0 - 1e-6);
}

#[test]
fn floor_rejects_weak_targets() {
    let g = Frequency::golden(256);
    assert!(engineer_phase(&g, 0.5 * g.diophantine_floor(), 1, 3).is_err());
}

#[test]
fn repulsion_of_resonances() {
    // Natural resonances of a generic phase grow at least exponentially.
    let g = Frequency::golden(256);
    let r = resonances(&g, &Fixed::from_f64(0.318309886, 256), 0.05, 5000).unwrap();
    let ks: Vec<i64> = r.ks().into_iter().filter(|k| *k != 0).map(|k| k.abs()).collect();
    for w in ks.windows(2) {
        assert!(w[1] > w[0]);
    }
    assert!(r.repulsion_ratios.iter().all(|x| *x > 0.05));
}

proptest! {
    #[test]
    fn torus_dist_symmetries(x in -1e3f64..1e3) {
        let d = torus_dist(x);
        prop_assert!((0.0..=0.5).contains(&d));
        prop_assert!((torus_dist(-x) - d).abs() < 1e-12);
        prop_assert!((torus_dist(x + 1.0) - d).abs() < 1e-12);
    }

    #[test]
    fn resonances_reverify(phase in 0.0f64..1.0, eps0 in 0.02f64..0.5) {
        let g = Frequency::golden(256);
        let r = resonances(&g, &Fixed::from_f64(phase, 256), eps0, 300).unwrap();
        prop_assert_eq!(r.ks(), brute_resonances(g.to_f64(), phase, eps0, 300));
        for e in r.entries.iter().skip(1) {
            prop_assert!(e.ln_gap <= -eps0 * e.k.abs() as f64 + 1e-12);
        }
    }

    #[test]
    fn delta_monotone_in_k(phase in 0.0f64..1.0, k in 10i64..400) {
        let g = Frequency::golden(256);
        let p = Fixed::from_f64(phase, 256);
        let a = delta_exponent(&g, &p, k).unwrap().lower_bound.finite().unwrap();
        let b = delta_exponent(&g, &p, 2 * k).unwrap().lower_bound.finite().unwrap();
        prop_assert!(b >= a);
    }
}

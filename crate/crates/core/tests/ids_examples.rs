use proptest::prelude::*;
use qp_core::arithmetic::{torus_dist, Frequency};
use qp_core::cocycle::*;
use qp_core::ids::*;
use std::f64::consts::PI;
use std::sync::Arc;

fn golden() -> Frequency {
    Frequency::golden(256)
}

/// Free-Laplacian IDS `1 − arccos(E/2)/π` inside the band.
fn free_ids(e: f64) -> f64 {
    1.0 - (e / 2.0).clamp(-1.0, 1.0).acos() / PI
}

#[test]
fn counting_examples() {
    let g = golden();
    let n = 10_000;
    let free = PotentialSpec::zero();
    assert!((ids_counting(&free, &g, 0.0, 0.0, n).unwrap() - 0.5).abs() <= 2.0 / n as f64);
    assert!(ids_counting(&free, &g, 0.0, 2.0, n).unwrap() >= 1.0 - 2.0 / n as f64);
    let amo = PotentialSpec::amo(0.5);
    assert!((ids_counting(&amo, &g, 0.0, 0.0, n).unwrap() - 0.5).abs() <= 2.0 / n as f64);
    assert!(ids_counting(&amo, &g, 0.0, 0.0, 50).is_err());
}

#[test]
fn rotation_examples() {
    let g = Arc::new(golden());
    let c = QpCocycle::schrodinger(g.clone(), PotentialSpec::zero(), 0.0);
    assert!((ids_rotation(&c, 100_000).unwrap() - 0.5).abs() < 1e-4);
    let e = 2.0 * (2.0 * PI * 0.2).cos();
    let c = QpCocycle::schrodinger(g, PotentialSpec::zero(), e);
    assert!((ids_rotation(&c, 100_000).unwrap() - 0.6).abs() < 1e-3);
}

#[test]
fn free_branches_match_closed_form() {
    let g = golden();
    let energies: Vec<f64> = (0..41).map(|i| -2.4 + 4.8 * i as f64 / 40.0).collect();
    let curve = ids_scan(&PotentialSpec::zero(), &g, 0.0, &energies, 10_000, 100_000).unwrap();
    assert!(curve.is_monotone());
    for (i, &e) in energies.iter().enumerate() {
        assert!((curve.n_counting[i] - free_ids(e)).abs() < 1e-3);
        assert!((curve.n_rotation[i] - free_ids(e)).abs() < 1e-3);
    }
    assert!(detect_plateaus(&curve, 2e-5).is_empty());
}

#[test]
fn label_examples() {
    let g = golden();
    let l = gap_label(g.to_f64(), &g, 30, 1e-9).unwrap();
    assert_eq!((l.k, l.residual), (Some(1), 0.0));
    assert_eq!(gap_label(0.5, &g, 100, 1e-6).unwrap().k, None);
    let l = gap_label(1.0 - g.to_f64(), &g, 30, 1e-9).unwrap();
    assert_eq!(l.k, Some(-1));
    assert!(gap_label(1.5, &g, 30, 1e-9).is_err());
}

#[test]
fn free_top_edge() {
    let g = golden();
    let rot = RotationIds::new(&PotentialSpec::zero(), &g, 1_000_000);
    let edge = locate_gap_edge_with(&rot, &g, 0, (1.5, 2.5), 1e-10).unwrap();
    assert!((edge.e_edge - 2.0).abs() < 1e-6, "edge {}", edge.e_edge);
}

#[test]
fn bisection_contract() {
    let g = golden();
    let rot = RotationIds::new(&PotentialSpec::amo(0.5), &g, 100_000);
    let a = locate_gap_edge_with(&rot, &g, 1, (1.2, 1.4), 1e-6).unwrap();
    let b = locate_gap_edge_with(&rot, &g, 1, (1.2, 1.4), 1e-7).unwrap();
    let w = |e: &GapEdge| e.bracket.1 - e.bracket.0;
    // Halving ends with tol/2 < width <= tol, so a tenfold smaller tol gives a narrower bracket by at least 5.
    assert!(w(&a) <= 1e-6 && w(&b) <= 1e-7);
    assert!(w(&b) <= w(&a) / 5.0);
    assert!(locate_gap_edge_with(&rot, &g, 1, (1.4, 1.5), 1e-6).is_err());
    assert!(locate_gap_edge_with(&rot, &g, 1, (1.4, 1.2), 1e-6).is_err());
}

#[test]
fn amo_upper_k1_edge() {
    let g = golden();
    let v = PotentialSpec::amo(0.5);
    let edge = locate_gap_edge(&v, &g, 1, (1.2, 1.4), 1e-10).unwrap();
    let rot = RotationIds::new(&v, &g, EDGE_ROTATION_N);
    assert!(torus_dist(rot.ids(edge.e_edge) - g.to_f64()) <= 1e-6);
    assert!(torus_dist(rot.ids(edge.bracket.1 + 1e-6) - g.to_f64()) > 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn branches_agree_and_are_monotone(lambda in 0.1f64..0.9, theta in 0.0f64..1.0) {
        let g = golden();
        let v = PotentialSpec::amo(lambda);
        let energies: Vec<f64> = (0..30).map(|i| -3.0 + 6.0 * i as f64 / 29.0).collect();
        let curve = ids_scan(&v, &g, theta, &energies, 4000, 40_000).unwrap();
        prop_assert!(curve.is_monotone());
        prop_assert!(curve.discrepancy <= 5e-3f64.max(4.0 / 4000.0));
    }

    #[test]
    fn sturm_count_matches_free_spectrum(e in -2.2f64..2.2, n in 100usize..2000) {
        let tr = Truncation::new(&PotentialSpec::zero(), &golden(), 0.0, n);
        let exact = (1..=n).filter(|j| 2.0 * (PI * *j as f64 / (n + 1) as f64).cos() < e).count();
        prop_assert_eq!(tr.count_below(e), exact);
    }
}

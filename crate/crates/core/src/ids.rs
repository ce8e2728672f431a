//! Integrated density of states by Sturm counting and by the rotation number,
//! gap labels and gap-edge location.

use crate::arithmetic::{torus_dist, Frequency};
use crate::cocycle::{rotation_number, schrodinger_rotation, PotentialSpec, QpCocycle, Torus128};
use crate::error::{invalid, QpError, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Dirichlet truncation `n = 0..size` of the operator with diagonal `v(θ + nα)`.
#[derive(Clone, Debug)]
pub struct Truncation {
    pub diag: Vec<f64>,
}

impl Truncation {
    pub fn new(v: &PotentialSpec, alpha: &Frequency, theta: f64, size: usize) -> Self {
        let step = Torus128(alpha.to_u128());
        let mut t = Torus128::from_f64(theta);
        let mut diag = Vec::with_capacity(size);
        for _ in 0..size {
            diag.push(v.eval(t.to_f64()));
            t = t.add(step);
        }
        Truncation { diag }
    }

    /// Number of eigenvalues below `e`, by counting negative pivots of `H − e`.
    pub fn count_below(&self, e: f64) -> usize {
        let mut count = 0;
        let mut d = 1.0f64;
        let mut first = true;
        for &v in &self.diag {
            d = if first { v - e } else { (v - e) - 1.0 / d };
            first = false;
            if d == 0.0 {
                d = -f64::EPSILON;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    pub fn ids(&self, e: f64) -> f64 {
        self.count_below(e) as f64 / self.diag.len() as f64
    }
}

/// Fraction of eigenvalues of the `size × size` truncation below `e`.
/// Dirichlet boundary conditions move the count by at most 2.
pub fn ids_counting(v: &PotentialSpec, alpha: &Frequency, theta: f64, e: f64, size: usize) -> Result<f64> {
    if size < 100 {
        return invalid("ids_counting needs size >= 100");
    }
    Ok(Truncation::new(v, alpha, theta, size).ids(e))
}

/// `1 − 2ρ`.
pub fn ids_rotation(c: &QpCocycle, n: i64) -> Result<f64> {
    if !c.is_schrodinger() {
        return invalid("ids_rotation needs a Schrödinger cocycle");
    }
    Ok(1.0 - 2.0 * rotation_number(c, n, 0.0)?.rho)
}

/// Potential samples along one orbit, shared by rotation-number IDS evaluations.
#[derive(Clone, Debug)]
pub struct RotationIds {
    samples: Vec<f64>,
}

impl RotationIds {
    pub fn new(v: &PotentialSpec, alpha: &Frequency, n: usize) -> Self {
        RotationIds { samples: Truncation::new(v, alpha, 0.0, n).diag }
    }

    pub fn ids(&self, e: f64) -> f64 {
        1.0 - 2.0 * schrodinger_rotation(&self.samples, e)
    }

    /// Estimator error bound `2/n` (the lift of a bounded orbit is off by at most one turn).
    pub fn error_bar(&self) -> f64 {
        2.0 / self.samples.len() as f64
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IdsCurve {
    pub energies: Vec<f64>,
    pub n_counting: Vec<f64>,
    pub n_rotation: Vec<f64>,
    pub size: usize,
    pub rotation_n: usize,
    pub discrepancy: f64,
}

impl IdsCurve {
    pub fn is_monotone(&self) -> bool {
        let mono = |x: &[f64]| x.windows(2).all(|w| w[1] >= w[0]);
        mono(&self.n_counting) && mono(&self.n_rotation)
    }

    pub fn csv_header() -> &'static str {
        "E,N_counting,N_rotation"
    }
}

/// Both IDS branches on an increasing energy grid.
pub fn ids_scan(
    v: &PotentialSpec,
    alpha: &Frequency,
    theta: f64,
    energies: &[f64],
    size: usize,
    rotation_n: usize,
) -> Result<IdsCurve> {
    if size < 100 || rotation_n < 100 {
        return invalid("ids_scan needs size and rotation_n >= 100");
    }
    if energies.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("energy grid must be strictly increasing");
    }
    let tr = Truncation::new(v, alpha, theta, size);
    let rot = RotationIds::new(v, alpha, rotation_n);
    let pairs: Vec<(f64, f64)> = energies.par_iter().map(|&e| (tr.ids(e), rot.ids(e))).collect();
    let (n_counting, n_rotation): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let discrepancy = n_counting.iter().zip(&n_rotation).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(IdsCurve { energies: energies.to_vec(), n_counting, n_rotation, size, rotation_n, discrepancy })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapLabel {
    pub n_star: f64,
    pub k: Option<i64>,
    pub residual: f64,
}

/// Smallest `|k| <= k_max` with `‖N* − kα‖_T <= tol`; positive `k` wins ties.
pub fn gap_label(n_star: f64, alpha: &Frequency, k_max: i64, tol: f64) -> Result<GapLabel> {
    if !(0.0..=1.0).contains(&n_star) {
        return invalid("N* must lie in [0, 1]");
    }
    let a = alpha.to_f64();
    let mut best = GapLabel { n_star, k: None, residual: f64::INFINITY };
    for m in 0..=k_max {
        for k in [m, -m] {
            let r = torus_dist(n_star - (k as f64) * a);
            if r <= tol {
                return Ok(GapLabel { n_star, k: Some(k), residual: r });
            }
            best.residual = best.residual.min(r);
        }
    }
    Ok(best)
}

/// A maximal run of the rotation branch that is flat to the detection threshold.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Plateau {
    pub e_left: f64,
    pub e_right: f64,
    pub n_star: f64,
    pub label: Option<GapLabel>,
}

impl Plateau {
    pub fn width(&self) -> f64 {
        self.e_right - self.e_left
    }
}

/// Slope threshold (per unit energy) below which the IDS counts as flat.
pub const PLATEAU_SLOPE: f64 = 1e-2;
/// Minimum width of a reported plateau.
pub const PLATEAU_MIN_WIDTH: f64 = 1e-3;

/// Runs of grid points on which the rotation branch is flat, excluding the
/// trivial plateaus `N = 0` and `N = 1` outside the spectrum.
pub fn detect_plateaus(curve: &IdsCurve, error_bar: f64) -> Vec<Plateau> {
    let e = &curve.energies;
    let n = &curve.n_rotation;
    let mut out = Vec::new();
    let mut i = 0;
    while i + 1 < e.len() {
        let flat = |j: usize| (n[j + 1] - n[j]).abs() <= PLATEAU_SLOPE * (e[j + 1] - e[j]) + 2.0 * error_bar;
        if !flat(i) {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < e.len() && flat(i) {
            i += 1;
        }
        let n_star = n[start..=i].iter().sum::<f64>() / (i - start + 1) as f64;
        let trivial = n_star < 2.0 * error_bar || n_star > 1.0 - 2.0 * error_bar;
        if !trivial && e[i] - e[start] > PLATEAU_MIN_WIDTH {
            out.push(Plateau { e_left: e[start], e_right: e[i], n_star, label: None });
        }
    }
    out
}

/// Plateaus of `curve` with gap labels attached.
pub fn label_plateaus(curve: &IdsCurve, alpha: &Frequency, k_max: i64, tol: f64, error_bar: f64) -> Result<Vec<Plateau>> {
    detect_plateaus(curve, error_bar)
        .into_iter()
        .map(|mut p| {
            p.label = Some(gap_label(p.n_star.clamp(0.0, 1.0), alpha, k_max, tol)?);
            Ok(p)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GapEdge {
    pub k: i64,
    pub n_star: f64,
    pub e_edge: f64,
    /// Final bisection bracket.
    pub bracket: (f64, f64),
    pub bisections: usize,
}

/// Orbit length used by [`locate_gap_edge`].
pub const EDGE_ROTATION_N: usize = 2_000_000;

/// Bisection on the rotation-number IDS for the energy where `N` leaves the
/// plateau `kα mod 1`. Returns the plateau-side end of the final bracket.
pub fn locate_gap_edge(
    v: &PotentialSpec,
    alpha: &Frequency,
    k: i64,
    bracket: (f64, f64),
    tol_e: f64,
) -> Result<GapEdge> {
    let rot = RotationIds::new(v, alpha, EDGE_ROTATION_N);
    locate_gap_edge_with(&rot, alpha, k, bracket, tol_e)
}

pub fn locate_gap_edge_with(
    rot: &RotationIds,
    alpha: &Frequency,
    k: i64,
    bracket: (f64, f64),
    tol_e: f64,
) -> Result<GapEdge> {
    let (lo, hi) = bracket;
    if !(hi > lo) || !(tol_e > 0.0) {
        return invalid("locate_gap_edge needs lo < hi and tol_e > 0");
    }
    let a = alpha.to_f64();
    let n_star = {
        let x = (k as f64 * a).rem_euclid(1.0);
        // The plateau N = 0 (k = 0) sits at 0, not 1.
        if k == 0 { 0.0 } else { x }
    };
    let plateau_tol = rot.error_bar();
    let on = |e: f64| torus_dist(rot.ids(e) - n_star) <= plateau_tol && !(k != 0 && rot.ids(e) == 0.0);
    let (on_lo, on_hi) = (on(lo), on(hi));
    if on_lo == on_hi {
        return Err(QpError::InvalidInput(format!(
            "bracket [{lo}, {hi}] does not straddle the edge of the plateau N = {n_star:.6}"
        )));
    }
    let (mut inside, mut outside) = if on_lo { (lo, hi) } else { (hi, lo) };
    let mut bisections = 0;
    while (outside - inside).abs() > tol_e {
        let mid = 0.5 * (inside + outside);
        if mid == inside || mid == outside {
            break;
        }
        if on(mid) {
            inside = mid;
        } else {
            outside = mid;
        }
        bisections += 1;
    }
    Ok(GapEdge {
        k,
        n_star,
        e_edge: inside,
        bracket: (inside.min(outside), inside.max(outside)),
        bisections,
    })
}

/// Both edges of every labelled plateau, bracketed by the neighbouring grid points.
pub fn gap_edges(rot: &RotationIds, curve: &IdsCurve, alpha: &Frequency, plateaus: &[Plateau], tol_e: f64) -> Result<Vec<(GapEdge, GapEdge)>> {
    let e = &curve.energies;
    let mut out = Vec::new();
    for p in plateaus {
        let Some(k) = p.label.and_then(|l| l.k) else { continue };
        let il = e.iter().position(|&x| x == p.e_left).unwrap_or(0);
        let ir = e.iter().position(|&x| x == p.e_right).unwrap_or(e.len() - 1);
        if il == 0 || ir + 1 >= e.len() {
            continue;
        }
        let left = locate_gap_edge_with(rot, alpha, k, (e[il - 1], e[il]), tol_e)?;
        let right = locate_gap_edge_with(rot, alpha, k, (e[ir], e[ir + 1]), tol_e)?;
        out.push((left, right));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sturm_counts_free_laplacian() {
        let alpha = Frequency::golden(128);
        let tr = Truncation::new(&PotentialSpec::zero(), &alpha, 0.0, 1000);
        // Eigenvalues 2cos(πj/(N+1)).
        let e = 0.3;
        let exact = (1..=1000).filter(|j| 2.0 * (std::f64::consts::PI * *j as f64 / 1001.0).cos() < e).count();
        assert_eq!(tr.count_below(e), exact);
    }

    #[test]
    fn label_of_alpha_is_one() {
        let alpha = Frequency::golden(128);
        let g = gap_label(alpha.to_f64(), &alpha, 10, 1e-9).unwrap();
        assert_eq!(g.k, Some(1));
        let g = gap_label(0.5, &alpha, 100, 1e-6).unwrap();
        assert_eq!(g.k, None);
    }
}

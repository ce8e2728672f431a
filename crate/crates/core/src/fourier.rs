//! Matrix-valued trigonometric polynomials with half-integer frequencies.
//!
//! A [`FourierMat`] stores `Σ_j Â_j e^{πijθ}`, so the key `j` is twice the
//! frequency. Odd keys appear in conjugators of odd degree, which are only
//! defined up to sign on the circle.

use crate::fixed::Fixed;
use crate::linalg2::Mat2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FourierMat {
    pub modes: BTreeMap<i64, Mat2>,
}

/// JSON form of one coefficient.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FourierTerm {
    /// Frequency `k` (a multiple of 1/2).
    pub k: f64,
    pub twice_k: i64,
    /// Row-major `[re, im]` pairs.
    pub entries: [[f64; 2]; 4],
}

impl FourierMat {
    pub fn constant(m: Mat2) -> Self {
        Self::mode(0, m)
    }

    pub fn identity() -> Self {
        Self::constant(Mat2::identity())
    }

    pub fn mode(twice_k: i64, m: Mat2) -> Self {
        let mut modes = BTreeMap::new();
        modes.insert(twice_k, m);
        FourierMat { modes }
    }

    /// `diag(e^{πimθ}, e^{−πimθ})`, of degree `m/2`.
    pub fn h(m: i64) -> Self {
        if m == 0 {
            return Self::identity();
        }
        let mut modes = BTreeMap::new();
        modes.insert(m, Mat2::diag(C64::new(1.0, 0.0), C64::new(0.0, 0.0)));
        modes.insert(-m, Mat2::diag(C64::new(0.0, 0.0), C64::new(1.0, 0.0)));
        FourierMat { modes }
    }

    pub fn eval(&self, theta: f64) -> Mat2 {
        let mut acc = Mat2::zero();
        for (&j, a) in &self.modes {
            acc = acc + a.scale(cis(PI * j as f64 * theta));
        }
        acc
    }

    /// Evaluation at a phase given to high precision (reduces `jθ` mod 2 exactly).
    pub fn eval_fixed(&self, theta: &Fixed) -> Mat2 {
        let mut acc = Mat2::zero();
        for (&j, a) in &self.modes {
            acc = acc + a.scale(cis(PI * theta.mul_int(j).rem_int(2).to_f64()));
        }
        acc
    }

    pub fn mul(&self, o: &FourierMat) -> FourierMat {
        let mut modes: BTreeMap<i64, Mat2> = BTreeMap::new();
        for (&i, a) in &self.modes {
            for (&j, b) in &o.modes {
                let e = modes.entry(i + j).or_insert_with(Mat2::zero);
                *e = *e + *a * *b;
            }
        }
        FourierMat { modes }
    }

    pub fn add(&self, o: &FourierMat) -> FourierMat {
        let mut modes = self.modes.clone();
        for (&j, b) in &o.modes {
            let e = modes.entry(j).or_insert_with(Mat2::zero);
            *e = *e + *b;
        }
        FourierMat { modes }
    }

    pub fn sub(&self, o: &FourierMat) -> FourierMat {
        self.add(&o.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> FourierMat {
        FourierMat { modes: self.modes.iter().map(|(&j, a)| (j, a.scale(s))).collect() }
    }

    pub fn left_mul(&self, m: &Mat2) -> FourierMat {
        FourierMat { modes: self.modes.iter().map(|(&j, a)| (j, *m * *a)).collect() }
    }

    pub fn right_mul(&self, m: &Mat2) -> FourierMat {
        FourierMat { modes: self.modes.iter().map(|(&j, a)| (j, *a * *m)).collect() }
    }

    /// `θ ↦ F(θ + α)`, with the phases `jα mod 2` reduced at full precision.
    pub fn shift(&self, alpha: &Fixed) -> FourierMat {
        FourierMat {
            modes: self
                .modes
                .iter()
                .map(|(&j, a)| (j, a.scale(cis(PI * alpha.mul_int(j).rem_int(2).to_f64()))))
                .collect(),
        }
    }

    /// Entrywise adjugate; the inverse whenever `det ≡ 1`.
    pub fn adjugate(&self) -> FourierMat {
        FourierMat { modes: self.modes.iter().map(|(&j, a)| (j, a.adjugate())).collect() }
    }

    /// `‖F‖_h = Σ ‖Â_j‖ e^{2πh|j/2|}`.
    pub fn norm_h(&self, h: f64) -> f64 {
        self.modes.iter().map(|(&j, a)| a.norm() * (PI * h * j.abs() as f64).exp()).sum()
    }

    /// `max |F(θ)|` over a uniform grid of real θ.
    pub fn sup_norm(&self, grid: usize) -> f64 {
        let period = if self.is_periodic() { 1.0 } else { 2.0 };
        (0..grid).map(|i| self.eval(period * i as f64 / grid as f64).norm()).fold(0.0, f64::max)
    }

    /// True when only integer frequencies occur.
    pub fn is_periodic(&self) -> bool {
        self.modes.keys().all(|j| j % 2 == 0)
    }

    /// Drop coefficients below `rel` times the largest one.
    pub fn truncate(&mut self, rel: f64) -> f64 {
        let top = self.modes.values().map(|a| a.norm()).fold(0.0, f64::max);
        let mut dropped = 0.0;
        self.modes.retain(|_, a| {
            let keep = a.norm() >= rel * top;
            if !keep {
                dropped += a.norm();
            }
            keep
        });
        dropped
    }

    pub fn max_twice_k(&self) -> i64 {
        self.modes.keys().map(|j| j.abs()).max().unwrap_or(0)
    }

    /// `C = max_j ‖Â_j‖ e^{2πh|j/2|}`, the constant in `‖Â_k‖ ≤ C e^{−2πh|k|}`.
    pub fn decay_constant(&self, h: f64) -> f64 {
        self.modes.iter().map(|(&j, a)| a.norm() * (PI * h * j.abs() as f64).exp()).fold(0.0, f64::max)
    }

    /// Least-squares rate `r` in `ln ‖Â_k‖ ≈ c − 2πr|k|` over nonzero frequencies.
    pub fn fitted_decay_rate(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .modes
            .iter()
            .filter(|(&j, a)| j != 0 && a.norm() > 0.0)
            .map(|(&j, a)| (j.abs() as f64 / 2.0, a.norm().ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        if sxx == 0.0 {
            return None;
        }
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        Some(-sxy / sxx / (2.0 * PI))
    }

    pub fn to_terms(&self) -> Vec<FourierTerm> {
        self.modes
            .iter()
            .map(|(&j, a)| {
                let e: Vec<[f64; 2]> = a.m.iter().flatten().map(|x| [x.re, x.im]).collect();
                FourierTerm { k: j as f64 / 2.0, twice_k: j, entries: [e[0], e[1], e[2], e[3]] }
            })
            .collect()
    }

    pub fn from_terms(terms: &[FourierTerm]) -> Self {
        let modes = terms
            .iter()
            .map(|t| {
                let c = |i: usize| C64::new(t.entries[i][0], t.entries[i][1]);
                (t.twice_k, Mat2::new(c(0), c(1), c(2), c(3)))
            })
            .collect();
        FourierMat { modes }
    }
}

pub fn cis(x: f64) -> C64 {
    let (s, c) = x.sin_cos();
    C64::new(c, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_is_diagonal_phase() {
        let h = FourierMat::h(3);
        let v = h.eval(0.2);
        assert!((v.a() - cis(PI * 0.6)).norm() < 1e-15);
        assert!((v.d() - cis(-PI * 0.6)).norm() < 1e-15);
        assert!(!h.is_periodic());
        let hh = h.mul(&FourierMat::h(-3));
        assert!(hh.eval(0.37).approx_eq(&Mat2::identity(), 1e-15));
    }

    #[test]
    fn product_and_shift_match_pointwise() {
        let a = FourierMat::h(2).add(&FourierMat::constant(Mat2::real(0.1, 0.2, 0.3, 0.4)));
        let b = FourierMat::h(-1).scale(C64::new(0.5, 0.1));
        let th = 0.2718;
        assert!(a.mul(&b).eval(th).approx_eq(&(a.eval(th) * b.eval(th)), 1e-14));
        let alpha = Fixed::from_f64(0.618, 128);
        assert!(a.shift(&alpha).eval(th).approx_eq(&a.eval(th + 0.618), 1e-14));
    }
}

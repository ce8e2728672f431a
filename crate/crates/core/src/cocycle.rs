//! Quasi-periodic SL(2) cocycles `(α, A)` over the circle.

use crate::arithmetic::Frequency;
use crate::error::{invalid, QpError, Result};
use crate::fixed::Fixed;
use crate::fourier::FourierMat;
use crate::linalg2::Mat2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

const TWO_PI: f64 = 2.0 * PI;
const TWO_POW_128: f64 = 340282366920938463463374607431768211456.0;

/// A point of `ℝ/ℤ` stored as a 128-bit binary fraction. Orbits `θ + nα`
/// stay exact to 2⁻¹²⁸ per step for any `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Torus128(pub u128);

impl Torus128 {
    pub fn from_f64(x: f64) -> Self {
        let f = x - x.floor();
        // f in [0,1); split into two 64-bit halves to keep all 53 bits.
        let hi = (f * 2f64.powi(64)).floor();
        let lo = ((f * 2f64.powi(64) - hi) * 2f64.powi(64)).floor();
        Torus128(((hi as u64 as u128) << 64) | (lo as u64 as u128))
    }

    pub fn from_fixed(x: &Fixed) -> Self {
        Torus128(x.to_u128_phase())
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / TWO_POW_128
    }

    pub fn add(self, o: Torus128) -> Self {
        Torus128(self.0.wrapping_add(o.0))
    }

    pub fn sub(self, o: Torus128) -> Self {
        Torus128(self.0.wrapping_sub(o.0))
    }

    pub fn mul(self, n: i64) -> Self {
        let m = (n.unsigned_abs() as u128).wrapping_mul(self.0);
        if n < 0 {
            Torus128(m.wrapping_neg())
        } else {
            Torus128(m)
        }
    }
}

/// Real analytic potential `v(x) = Σ_m c_m cos 2πmx + s_m sin 2πmx`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    /// `c_0, c_1, …`
    pub cos: Vec<f64>,
    /// `s_0, s_1, …` (`s_0` is ignored).
    pub sin: Vec<f64>,
    /// Analyticity band.
    pub h: f64,
}

impl PotentialSpec {
    pub fn zero() -> Self {
        PotentialSpec { cos: vec![0.0], sin: vec![], h: 1.0 }
    }

    /// `2λ cos 2πx`.
    pub fn amo(lambda: f64) -> Self {
        PotentialSpec { cos: vec![0.0, 2.0 * lambda], sin: vec![], h: 1.0 }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut v = self.cos.first().copied().unwrap_or(0.0);
        let harmonics = self.cos.len().max(self.sin.len());
        if harmonics <= 1 {
            return v;
        }
        let (s1, c1) = (TWO_PI * x).sin_cos();
        let (mut s, mut c) = (s1, c1);
        for m in 1..harmonics {
            v += self.cos.get(m).copied().unwrap_or(0.0) * c + self.sin.get(m).copied().unwrap_or(0.0) * s;
            let nc = c * c1 - s * s1;
            s = s * c1 + c * s1;
            c = nc;
        }
        v
    }

    /// Upper bound for `sup_{|Im x| < h} |v(x)|`.
    pub fn sup_norm_h(&self) -> f64 {
        let n = self.cos.len().max(self.sin.len());
        (0..n)
            .map(|m| {
                let w = (TWO_PI * m as f64 * self.h).cosh();
                (self.cos.get(m).copied().unwrap_or(0.0).abs()
                    + if m > 0 { self.sin.get(m).copied().unwrap_or(0.0).abs() } else { 0.0 })
                    * w
            })
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.cos.iter().chain(self.sin.iter().skip(1)).map(|c| c.abs()).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.cos.iter().chain(&self.sin).any(|c| !c.is_finite()) {
            return invalid("potential coefficients must be finite");
        }
        if !(self.h > 0.0) {
            return invalid("potential band h must be positive");
        }
        Ok(())
    }
}

/// How the conjugator `B` is represented.
#[derive(Clone, Debug)]
pub enum ConjugatorForm {
    Constant(Mat2),
    /// `R_{kθ/2}`.
    Rotation { k: i64 },
    Fourier(FourierMat),
}

#[derive(Clone, Debug)]
pub struct ConjugationRecord {
    pub form: ConjugatorForm,
    /// Degree `k` such that `ρ(conjugated) = ρ(original) − kα/2 mod 1`.
    pub degree: i64,
    /// True when `B` is only defined on `ℝ/2ℤ` (odd degree, PSL-valued).
    pub projective: bool,
}

impl ConjugationRecord {
    pub fn identity() -> Self {
        ConjugationRecord { form: ConjugatorForm::Constant(Mat2::identity()), degree: 0, projective: false }
    }

    pub fn constant(b: Mat2) -> Self {
        ConjugationRecord { form: ConjugatorForm::Constant(b), degree: 0, projective: false }
    }

    pub fn rotation(k: i64) -> Self {
        ConjugationRecord { form: ConjugatorForm::Rotation { k }, degree: k, projective: k % 2 != 0 }
    }

    pub fn fourier(b: FourierMat, degree: i64) -> Self {
        let projective = !b.is_periodic();
        ConjugationRecord { form: ConjugatorForm::Fourier(b), degree, projective }
    }

    pub fn eval(&self, theta: f64) -> Mat2 {
        match &self.form {
            ConjugatorForm::Constant(b) => *b,
            ConjugatorForm::Rotation { k } => Mat2::rotation(*k as f64 * theta / 2.0),
            ConjugatorForm::Fourier(f) => f.eval(theta),
        }
    }

    pub fn inverse(&self) -> Self {
        let form = match &self.form {
            ConjugatorForm::Constant(b) => ConjugatorForm::Constant(b.inv()),
            ConjugatorForm::Rotation { k } => ConjugatorForm::Rotation { k: -k },
            ConjugatorForm::Fourier(f) => ConjugatorForm::Fourier(f.adjugate()),
        };
        ConjugationRecord { form, degree: -self.degree, projective: self.projective }
    }
}

#[derive(Clone, Debug)]
pub enum Generator {
    Schrodinger { v: PotentialSpec, e: f64 },
    Amo { lambda: f64, e: f64 },
    Fourier { series: FourierMat, h: f64 },
    Conjugated { base: Box<QpCocycle>, b: Arc<ConjugationRecord> },
}

#[derive(Clone, Debug)]
pub struct QpCocycle {
    pub alpha: Arc<Frequency>,
    pub generator: Generator,
    step: Torus128,
    alpha_f64: f64,
}

/// A matrix `mat · e^{log_scale}` kept away from overflow.
#[derive(Clone, Copy, Debug)]
pub struct ScaledMat {
    pub mat: Mat2,
    pub log_scale: f64,
}

impl ScaledMat {
    pub fn identity() -> Self {
        ScaledMat { mat: Mat2::identity(), log_scale: 0.0 }
    }

    pub fn ln_norm(&self) -> f64 {
        self.mat.norm().ln() + self.log_scale
    }

    /// Plain matrix; overflows for very long products.
    pub fn to_mat(&self) -> Mat2 {
        self.mat.scale_re(self.log_scale.exp())
    }

    /// `det` of the represented matrix divided by `e^{2·log_scale}` undone.
    pub fn det(&self) -> C64 {
        self.mat.det() * (2.0 * self.log_scale).exp()
    }

    fn renormalize(&mut self) {
        let n = self.mat.max_abs();
        if n > 1e64 || (n < 1e-64 && n > 0.0) {
            self.mat = self.mat.scale_re(1.0 / n);
            self.log_scale += n.ln();
        }
    }

    pub fn left_mul(&mut self, a: &Mat2) {
        self.mat = *a * self.mat;
        self.renormalize();
    }
}

impl QpCocycle {
    fn with(alpha: Arc<Frequency>, generator: Generator) -> Self {
        let step = Torus128(alpha.to_u128());
        let alpha_f64 = alpha.to_f64();
        QpCocycle { alpha, generator, step, alpha_f64 }
    }

    pub fn schrodinger(alpha: Arc<Frequency>, v: PotentialSpec, e: f64) -> Self {
        Self::with(alpha, Generator::Schrodinger { v, e })
    }

    pub fn amo(alpha: Arc<Frequency>, lambda: f64, e: f64) -> Self {
        Self::with(alpha, Generator::Amo { lambda, e })
    }

    pub fn fourier(alpha: Arc<Frequency>, series: FourierMat, h: f64) -> Self {
        Self::with(alpha, Generator::Fourier { series, h })
    }

    pub fn constant(alpha: Arc<Frequency>, m: Mat2) -> Self {
        Self::fourier(alpha, FourierMat::constant(m), 1.0)
    }

    /// Same operator at another energy (Schrödinger-type only).
    pub fn at_energy(&self, e: f64) -> Result<Self> {
        let g = match &self.generator {
            Generator::Schrodinger { v, .. } => Generator::Schrodinger { v: v.clone(), e },
            Generator::Amo { lambda, .. } => Generator::Amo { lambda: *lambda, e },
            _ => return invalid("energy is only defined for Schrödinger cocycles"),
        };
        Ok(Self::with(self.alpha.clone(), g))
    }

    pub fn alpha_f64(&self) -> f64 {
        self.alpha_f64
    }

    pub fn step(&self) -> Torus128 {
        self.step
    }

    /// `(v, E)` for Schrödinger-type generators.
    pub fn schrodinger_data(&self) -> Option<(PotentialSpec, f64)> {
        match &self.generator {
            Generator::Schrodinger { v, e } => Some((v.clone(), *e)),
            Generator::Amo { lambda, e } => Some((PotentialSpec::amo(*lambda), *e)),
            _ => None,
        }
    }

    pub fn is_schrodinger(&self) -> bool {
        self.schrodinger_data().is_some()
    }

    /// `v(x)` for Schrödinger-type generators.
    #[inline]
    pub fn potential(&self, x: f64) -> f64 {
        match &self.generator {
            Generator::Amo { lambda, .. } => 2.0 * lambda * (TWO_PI * x).cos(),
            Generator::Schrodinger { v, .. } => v.eval(x),
            _ => 0.0,
        }
    }

    /// `v(θ + nα)` for `n` in `lo..hi`.
    pub fn potential_samples(&self, theta: f64, lo: i64, hi: i64) -> Vec<f64> {
        let t0 = Torus128::from_f64(theta).add(self.step.mul(lo));
        let mut t = t0;
        (lo..hi)
            .map(|_| {
                let v = self.potential(t.to_f64());
                t = t.add(self.step);
                v
            })
            .collect()
    }

    pub fn eval_at(&self, t: Torus128) -> Mat2 {
        match &self.generator {
            Generator::Schrodinger { .. } | Generator::Amo { .. } => {
                let e = self.schrodinger_data().map(|d| d.1).unwrap_or(0.0);
                Mat2::real(e - self.potential(t.to_f64()), -1.0, 1.0, 0.0)
            }
            Generator::Fourier { series, .. } => series.eval(t.to_f64()),
            Generator::Conjugated { base, b } => {
                let th = t.to_f64();
                let a = base.eval_at(t);
                b.eval(th + self.alpha_f64).inv() * a * b.eval(th)
            }
        }
    }

    /// Real entries `[a, b, c, d]` of `A` at a phase; imaginary parts are dropped.
    #[inline]
    pub fn eval_real_at(&self, t: Torus128) -> [f64; 4] {
        match &self.generator {
            Generator::Amo { lambda, e } => [e - 2.0 * lambda * (TWO_PI * t.to_f64()).cos(), -1.0, 1.0, 0.0],
            Generator::Schrodinger { v, e } => [e - v.eval(t.to_f64()), -1.0, 1.0, 0.0],
            _ => real_parts(&self.eval_at(t)),
        }
    }

    pub fn eval(&self, theta: f64) -> Mat2 {
        self.eval_at(Torus128::from_f64(theta))
    }

    /// `𝒜_n(θ)`: `A(θ+(n−1)α)⋯A(θ)` for `n > 0`, identity for `n = 0`, and
    /// `A(θ+nα)⁻¹⋯A(θ−α)⁻¹` for `n < 0`.
    pub fn iterate(&self, theta: f64, n: i64) -> ScaledMat {
        self.iterate_at(Torus128::from_f64(theta), n)
    }

    pub fn iterate_at(&self, t0: Torus128, n: i64) -> ScaledMat {
        let mut acc = ScaledMat::identity();
        if n >= 0 {
            let mut t = t0;
            for _ in 0..n {
                acc.left_mul(&self.eval_at(t));
                t = t.add(self.step);
            }
        } else {
            let mut t = t0;
            for _ in 0..(-n) {
                t = t.sub(self.step);
                acc.left_mul(&self.eval_at(t).inv());
            }
        }
        acc
    }

    /// Fitted Fourier decay constant `C` with `‖Â(k)‖ ≤ C e^{−2πh|k|}`.
    pub fn fourier_decay_constant(&self) -> Option<f64> {
        match &self.generator {
            Generator::Fourier { series, h } => Some(series.decay_constant(*h)),
            _ => None,
        }
    }
}

/// θ-grid of `q` equally spaced points, `q` a convergent denominator when available.
pub fn theta_grid(alpha: &Frequency, samples: usize) -> Vec<f64> {
    let q = alpha.denominator_at_least(samples as i64).max(1) as usize;
    let q = if q > 4 * samples.max(1) { samples.max(1) } else { q };
    (0..q).map(|j| j as f64 / q as f64).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub value: f64,
    /// `|L_n − L_{n/2}|` plus the standard error over θ-samples.
    pub fluctuation: f64,
    pub n: i64,
    pub samples: usize,
}

/// `(1/n) ⟨ln ‖𝒜_n(θ)‖⟩_θ`.
pub fn lyapunov(c: &QpCocycle, n: i64, theta_samples: usize) -> Result<LyapunovEstimate> {
    if n < 1 {
        return invalid("lyapunov needs n >= 1");
    }
    let grid = theta_grid(&c.alpha, theta_samples.max(1));
    let half = (n / 2).max(1);
    let vals: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&th| {
            let mut acc = ScaledMat::identity();
            let mut t = Torus128::from_f64(th);
            let mut at_half = 0.0;
            for i in 0..n {
                acc.left_mul(&c.eval_at(t));
                t = t.add(c.step);
                if i + 1 == half {
                    at_half = acc.ln_norm() / half as f64;
                }
            }
            (acc.ln_norm() / n as f64, at_half)
        })
        .collect();
    let m = vals.len() as f64;
    let mean = vals.iter().map(|v| v.0).sum::<f64>() / m;
    let mean_half = vals.iter().map(|v| v.1).sum::<f64>() / m;
    let var = vals.iter().map(|v| (v.0 - mean).powi(2)).sum::<f64>() / m.max(2.0);
    Ok(LyapunovEstimate {
        value: mean,
        fluctuation: (mean - mean_half).abs() + (var / m).sqrt(),
        n,
        samples: vals.len(),
    })
}

/// Angle increment (in turns) of `w ↦ Aw` along the path from the identity
/// through upper-triangular matrices. Valid when the first column of `A`
/// never points along the negative x-axis.
#[inline]
pub fn lift_increment(a: [f64; 4], w: [f64; 2]) -> (f64, [f64; 2]) {
    let aw = [a[0] * w[0] + a[1] * w[1], a[2] * w[0] + a[3] * w[1]];
    let col = a[2].atan2(a[0]);
    let mut d = aw[1].atan2(aw[0]) - col - w[1].atan2(w[0]);
    d -= TWO_PI * (d / TWO_PI).round();
    let n = (aw[0] * aw[0] + aw[1] * aw[1]).sqrt();
    ((d + col) / TWO_PI, [aw[0] / n, aw[1] / n])
}

fn real_parts(m: &Mat2) -> [f64; 4] {
    [m.a().re, m.b().re, m.c().re, m.d().re]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RotationEstimate {
    /// Rotation number; in `[0, 1/2]` for Schrödinger cocycles, mod 1 otherwise.
    pub rho: f64,
    /// Unreduced average lift increment.
    pub lift: f64,
    pub error_bar: f64,
    pub n: i64,
}

/// Fibered rotation number from the averaged projective lift of `(1, 0)`.
pub fn rotation_number(c: &QpCocycle, n: i64, theta0: f64) -> Result<RotationEstimate> {
    if n < 1 {
        return invalid("rotation_number needs n >= 1");
    }
    let lift_at = |count: i64| -> f64 {
        let mut t = Torus128::from_f64(theta0);
        let mut w = [1.0, 0.0];
        let mut total = 0.0;
        for _ in 0..count {
            let (d, nw) = lift_increment(c.eval_real_at(t), w);
            total += d;
            w = nw;
            t = t.add(c.step);
        }
        total
    };
    let total = lift_at(n);
    let lift = total / n as f64;
    if !lift.is_finite() {
        return Err(QpError::NonConvergence { residual: f64::NAN, detail: "non-finite rotation lift".into() });
    }
    let rho = if c.is_schrodinger() { lift.clamp(0.0, 0.5) } else { lift - lift.floor() };
    if n >= 64 {
        let half = lift_at(n / 2) / (n / 2) as f64;
        let drift = (half - lift).abs();
        if drift > 0.05 {
            return Err(QpError::NonConvergence {
                residual: drift,
                detail: format!("rotation averages at n/2 and n differ by {drift:.3e}"),
            });
        }
    }
    Ok(RotationEstimate { rho, lift, error_bar: 1.0 / n as f64, n })
}

/// Rotation number of a Schrödinger cocycle from precomputed potential samples.
///
/// Shares the orbit across energies; `v[j] = v(θ + jα)`.
pub fn schrodinger_rotation(v: &[f64], e: f64) -> f64 {
    let mut w = [1.0, 0.0];
    let mut total = 0.0;
    for &vj in v {
        let (d, nw) = lift_increment([e - vj, -1.0, 1.0, 0.0], w);
        total += d;
        w = nw;
    }
    (total / v.len() as f64).clamp(0.0, 0.5)
}

/// `(α, B(·+α)⁻¹ A(·) B(·))`; rejects `B` with condition number above 10¹².
pub fn conjugate(c: &QpCocycle, b: &ConjugationRecord) -> Result<QpCocycle> {
    let worst = (0..256)
        .map(|i| {
            let m = b.eval(2.0 * i as f64 / 256.0);
            let det = m.det().norm();
            if det == 0.0 {
                f64::INFINITY
            } else {
                m.norm().powi(2) / det
            }
        })
        .fold(0.0, f64::max);
    if worst > 1e12 {
        return Err(QpError::Singular { cond: worst });
    }
    Ok(QpCocycle::with(
        c.alpha.clone(),
        Generator::Conjugated { base: Box::new(c.clone()), b: Arc::new(b.clone()) },
    ))
}

/// Rotation number difference predicted for a conjugation: `−deg·α/2 mod 1`.
pub fn predicted_rotation_shift(c: &QpCocycle, b: &ConjugationRecord) -> f64 {
    let s = -(b.degree as f64) * c.alpha_f64 / 2.0;
    s - s.floor()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UhProbe {
    pub hyperbolic: bool,
    /// Fitted growth rate of `min_θ ‖𝒜_n(θ)‖`.
    pub margin: f64,
}

/// Uniform hyperbolicity test: uniform exponential growth of `‖𝒜_n‖` and a
/// stable contracted direction between `n/2` and `n`.
pub fn uh_probe(c: &QpCocycle, n: i64) -> Result<UhProbe> {
    if n < 1 {
        return invalid("uh_probe needs n >= 1");
    }
    let n = n.max(8);
    let grid = theta_grid(&c.alpha, 32);
    let (q1, q2, q4) = (n / 4, n / 2, n);
    let rows: Vec<(f64, f64, f64, f64)> = grid
        .par_iter()
        .map(|&th| {
            let mut acc = ScaledMat::identity();
            let mut t = Torus128::from_f64(th);
            let (mut l1, mut l2) = (0.0, 0.0);
            let mut dir2 = 0.0;
            for i in 1..=q4 {
                acc.left_mul(&c.eval_at(t));
                t = t.add(c.step);
                if i == q1 {
                    l1 = acc.ln_norm();
                }
                if i == q2 {
                    l2 = acc.ln_norm();
                    dir2 = contracted_angle(&acc.mat);
                }
            }
            let dir4 = contracted_angle(&acc.mat);
            let mut dd = (dir4 - dir2).abs() % PI;
            dd = dd.min(PI - dd);
            (l1, l2, acc.ln_norm(), dd)
        })
        .collect();
    let min = |f: fn(&(f64, f64, f64, f64)) -> f64| rows.iter().map(f).fold(f64::INFINITY, f64::min);
    let (m1, m2, m4) = (min(|r| r.0), min(|r| r.1), min(|r| r.2));
    let rate = (m4 - m2) / (q4 - q2) as f64;
    let rate_early = (m2 - m1) / (q2 - q1) as f64;
    let worst_cone = rows.iter().map(|r| r.3).fold(0.0, f64::max);
    let threshold = 2.0 * (n as f64).ln() / n as f64;
    let hyperbolic = rate > threshold && rate_early > 0.5 * rate && worst_cone < 1e-3;
    Ok(UhProbe { hyperbolic, margin: if hyperbolic { rate } else { 0.0 } })
}

/// Angle of the most contracted right-singular direction of a real matrix.
fn contracted_angle(m: &Mat2) -> f64 {
    let a = real_parts(m);
    // Eigenvector of AᵀA for the smaller eigenvalue.
    let p = a[0] * a[0] + a[2] * a[2];
    let q = a[0] * a[1] + a[2] * a[3];
    let r = a[1] * a[1] + a[3] * a[3];
    0.5 * (2.0 * q).atan2(p - r) + PI / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> Arc<Frequency> {
        Arc::new(Frequency::golden(256))
    }

    #[test]
    fn torus_roundtrip() {
        let t = Torus128::from_f64(0.3141592653589793);
        assert!((t.to_f64() - 0.3141592653589793).abs() < 1e-17);
        assert_eq!(Torus128::from_f64(0.25).mul(-1).to_f64(), 0.75);
    }

    #[test]
    fn free_constant_lyapunov() {
        let c = QpCocycle::schrodinger(golden(), PotentialSpec::zero(), 3.0);
        let l = lyapunov(&c, 10_000, 4).unwrap();
        assert!((l.value - ((3.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 1e-3);
        let c = QpCocycle::schrodinger(golden(), PotentialSpec::zero(), 0.0);
        assert!(lyapunov(&c, 1000, 4).unwrap().value.abs() < 1e-10);
    }

    #[test]
    fn free_rotation_numbers() {
        let c = QpCocycle::schrodinger(golden(), PotentialSpec::zero(), 0.0);
        assert!((rotation_number(&c, 1000, 0.0).unwrap().rho - 0.25).abs() < 1e-3);
        let e = 2.0 * (TWO_PI * 0.3).cos();
        let c = QpCocycle::schrodinger(golden(), PotentialSpec::zero(), e);
        assert!((rotation_number(&c, 10_000, 0.0).unwrap().rho - 0.3).abs() < 1e-3);
    }
}

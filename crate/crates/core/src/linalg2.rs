//! Closed-form 2×2 linear algebra over ℂ.

use crate::error::{invalid, QpError, Result};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

pub const I: C64 = C64 { re: 0.0, im: 1.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatClass {
    Sl2r,
    Su11,
    General,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub m: [[C64; 2]; 2],
    pub class: MatClass,
}

impl Mat2 {
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2 { m: [[a, b], [c, d]], class: MatClass::General }
    }

    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { m: [[a.into(), b.into()], [c.into(), d.into()]], class: MatClass::Sl2r }
    }

    pub fn identity() -> Self {
        Mat2::real(1.0, 0.0, 0.0, 1.0)
    }

    pub fn zero() -> Self {
        Mat2::real(0.0, 0.0, 0.0, 0.0)
    }

    pub fn diag(a: C64, d: C64) -> Self {
        Mat2::new(a, ZERO, ZERO, d)
    }

    pub fn scalar(s: C64) -> Self {
        Mat2::diag(s, s)
    }

    /// Rotation `R_x` by angle `2πx`.
    pub fn rotation(x: f64) -> Self {
        let (s, c) = (2.0 * std::f64::consts::PI * x).sin_cos();
        Mat2::real(c, -s, s, c)
    }

    pub fn with_class(mut self, class: MatClass) -> Self {
        self.class = class;
        self
    }

    pub fn a(&self) -> C64 {
        self.m[0][0]
    }
    pub fn b(&self) -> C64 {
        self.m[0][1]
    }
    pub fn c(&self) -> C64 {
        self.m[1][0]
    }
    pub fn d(&self) -> C64 {
        self.m[1][1]
    }

    pub fn det(&self) -> C64 {
        self.a() * self.d() - self.b() * self.c()
    }

    pub fn trace(&self) -> C64 {
        self.a() + self.d()
    }

    pub fn scale(&self, s: C64) -> Self {
        Mat2 { m: [[self.a() * s, self.b() * s], [self.c() * s, self.d() * s]], class: self.class }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(s.into())
    }

    pub fn adjugate(&self) -> Self {
        Mat2 { m: [[self.d(), -self.b()], [-self.c(), self.a()]], class: self.class }
    }

    pub fn inv(&self) -> Self {
        self.adjugate().scale(self.det().inv())
    }

    pub fn adjoint(&self) -> Self {
        Mat2 {
            m: [[self.a().conj(), self.c().conj()], [self.b().conj(), self.d().conj()]],
            class: self.class,
        }
    }

    pub fn transpose(&self) -> Self {
        Mat2 { m: [[self.a(), self.c()], [self.b(), self.d()]], class: self.class }
    }

    pub fn conj(&self) -> Self {
        Mat2 {
            m: [[self.a().conj(), self.b().conj()], [self.c().conj(), self.d().conj()]],
            class: self.class,
        }
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.m.iter().flatten().map(|x| x.norm_sqr()).sum()
    }

    /// Spectral norm from the singular values of a 2×2 matrix.
    pub fn norm(&self) -> f64 {
        let f = self.frobenius_sq();
        let d = self.det().norm();
        let disc = ((f - 2.0 * d) * (f + 2.0 * d)).max(0.0);
        ((f + disc.sqrt()) / 2.0).sqrt()
    }

    /// Smallest singular value.
    pub fn min_singular(&self) -> f64 {
        let s = self.norm();
        if s == 0.0 {
            0.0
        } else {
            self.det().norm() / s
        }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.m.iter().flatten().all(|x| x.im.abs() <= tol)
    }

    pub fn commutator(&self, o: &Mat2) -> Mat2 {
        *self * *o - *o * *self
    }

    /// Traceless part.
    pub fn traceless(&self) -> Mat2 {
        let u = self.trace() / 2.0;
        *self - Mat2::scalar(u)
    }

    /// `e^X` via `X² = −det X · I` on the traceless part.
    pub fn exp(&self) -> Mat2 {
        let u = self.trace() / 2.0;
        let x = self.traceless();
        let s = (-x.det()).sqrt();
        let e = Mat2::scalar(s.cosh()) + x.scale(sinhc(s));
        e.scale(u.exp()).with_class(self.class)
    }

    /// `e^X − I` without cancellation for small `X`.
    pub fn expm1(&self) -> Mat2 {
        let u = self.trace() / 2.0;
        let x = self.traceless();
        let s = (-x.det()).sqrt();
        let half = (s / 2.0).sinh();
        let e0 = Mat2::scalar(half * half * 2.0) + x.scale(sinhc(s));
        (e0.scale(u.exp()) + Mat2::scalar(expm1_c(u))).with_class(MatClass::General)
    }

    /// Principal logarithm of `I + W` for `det(I + W) = 1`, robust as `W → 0`.
    ///
    /// The eigen-rotation branch is `(−π, π]`.
    pub fn log1p_sl(&self) -> Mat2 {
        let u = self.trace() / 2.0;
        let s = asinh_c((u / 2.0).sqrt()) * 2.0;
        (*self - Mat2::scalar(u)).scale(sinhc(s).inv()).with_class(MatClass::General)
    }

    /// Principal logarithm of an invertible matrix, splitting off `√det`.
    pub fn log(&self) -> Result<Mat2> {
        let det = self.det();
        if det.norm() == 0.0 {
            return Err(QpError::Singular { cond: f64::INFINITY });
        }
        let r = det.sqrt();
        let v = self.scale(r.inv());
        let w = v - Mat2::identity();
        Ok(w.log1p_sl() + Mat2::scalar(det.ln() / 2.0))
    }

    pub fn approx_eq(&self, o: &Mat2, tol: f64) -> bool {
        (*self - *o).max_abs() <= tol
    }

    /// Entries as `[[re, im]; 4]` in row-major order.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!(self.m.iter().flatten().map(|x| [x.re, x.im]).collect::<Vec<_>>())
    }
}

fn merge(a: MatClass, b: MatClass) -> MatClass {
    if a == b {
        a
    } else {
        MatClass::General
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.m, &o.m);
        Mat2 {
            m: [
                [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
                [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
            ],
            class: merge(self.class, o.class),
        }
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let mut r = self;
        for i in 0..2 {
            for j in 0..2 {
                r.m[i][j] += o.m[i][j];
            }
        }
        r.class = merge(self.class, o.class);
        r
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + (-o)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(-ONE)
    }
}

/// `sinh(s)/s`, even in `s`.
pub fn sinhc(s: C64) -> C64 {
    if s.norm() < 0.1 {
        let s2 = s * s;
        ONE + s2 / 6.0 * (ONE + s2 / 20.0 * (ONE + s2 / 42.0 * (ONE + s2 / 72.0 * (ONE + s2 / 110.0))))
    } else {
        s.sinh() / s
    }
}

fn expm1_c(u: C64) -> C64 {
    if u.norm() < 1e-5 {
        u + u * u / 2.0 + u * u * u / 6.0
    } else {
        u.exp() - ONE
    }
}

/// Complex `asinh` with full relative accuracy near zero.
pub fn asinh_c(z: C64) -> C64 {
    if z.norm() < 0.1 {
        const C: [f64; 8] = [
            1.0,
            -1.0 / 6.0,
            3.0 / 40.0,
            -5.0 / 112.0,
            35.0 / 1152.0,
            -63.0 / 2816.0,
            231.0 / 13312.0,
            -143.0 / 10240.0,
        ];
        let z2 = z * z;
        let mut acc = ZERO;
        for c in C.iter().rev() {
            acc = acc * z2 + *c;
        }
        acc * z
    } else {
        z.asinh()
    }
}

/// The Cayley element `M = (1/√(2i)) [[1, −i], [1, i]]`.
pub fn cayley_matrix() -> Mat2 {
    let k = (I * 2.0).sqrt().inv();
    Mat2::new(k, -I * k, k, I * k)
}

/// `M B M⁻¹`, the algebra isomorphism sl(2,ℝ) → su(1,1):
/// `[[x, y+z], [y−z, −x]] ↦ [[iz, x−iy], [x+iy, −iz]]`.
pub fn cayley(b: &Mat2) -> Result<Mat2> {
    if b.trace().norm() > 1e-12 * (1.0 + b.max_abs()) {
        return invalid("cayley input must be traceless");
    }
    if !b.is_real(1e-14 * (1.0 + b.max_abs())) {
        return invalid("cayley input must be real");
    }
    let m = cayley_matrix();
    Ok((m * *b * m.inv()).with_class(MatClass::Su11))
}

/// Group version `M A M⁻¹`.
pub fn cayley_group(a: &Mat2) -> Mat2 {
    let m = cayley_matrix();
    (m * *a * m.inv()).with_class(MatClass::Su11)
}

/// Realization of an SU(1,1) matrix in SL(2,ℝ) that keeps the orientation of
/// rotations: `diag(e^{2πiρ}, e^{−2πiρ}) ↦ R_ρ`.
pub fn su11_to_sl2r(a: &Mat2) -> Mat2 {
    let mc = cayley_matrix().conj();
    (mc.inv() * *a * mc).with_class(MatClass::Sl2r)
}

/// Inverse of [`su11_to_sl2r`].
pub fn sl2r_to_su11(a: &Mat2) -> Mat2 {
    let mc = cayley_matrix().conj();
    (mc * *a * mc.inv()).with_class(MatClass::Su11)
}

/// Deviation from `A* J A = J`, `J = diag(1, −1)`.
pub fn su11_defect(a: &Mat2) -> f64 {
    let j = Mat2::real(1.0, 0.0, 0.0, -1.0);
    (a.adjoint() * j * *a - j).max_abs()
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct NormalFormResult {
    pub d: Mat2,
    pub rho: f64,
    /// `φ` with `tan 2φ = −|z|/ρ`.
    pub phi: f64,
    /// `2ϕ = arg z − π/2`.
    pub two_phi_phase: f64,
}

/// `D ∈ SU(1,1)` with `D⁻¹ [[it, z], [z̄, −it]] D = diag(iρ, −iρ)`, `ρ = √(t² − |z|²)`.
pub fn elliptic_normal_form(t: f64, z: C64) -> Result<NormalFormResult> {
    let az = z.norm();
    if !(t > az) {
        return invalid(format!("elliptic normal form needs t > |z| (t={t}, |z|={az})"));
    }
    let rho = ((t - az) * (t + az)).sqrt();
    let two_phase = z.arg() - std::f64::consts::FRAC_PI_2;
    let two_phi = (-az).atan2(rho);
    let phi = two_phi / 2.0;
    let k = two_phi.cos().powf(-0.5);
    let e = C64::from_polar(1.0, two_phase);
    let (s, c) = phi.sin_cos();
    let d = Mat2::new((c * k).into(), e * (s * k), e.conj() * (s * k), (c * k).into()).with_class(MatClass::Su11);
    Ok(NormalFormResult { d, rho, phi, two_phi_phase: two_phase })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SchurResult {
    pub u: Mat2,
    pub rho: f64,
    pub nu: C64,
}

/// Unitary `U` with `U⁻¹ exp([[it, z], [z̄, −it]]) U = [[e^{iρ}, ν], [0, e^{−iρ}]]`.
pub fn schur_upper(t: f64, z: C64) -> Result<SchurResult> {
    let az = z.norm();
    if !(t >= az) {
        return invalid(format!("Schur form needs t >= |z| (t={t}, |z|={az})"));
    }
    schur_upper_rho(t, z, ((t - az) * (t + az)).sqrt())
}

/// [`schur_upper`] with `ρ = √(t² − |z|²)` supplied by the caller, for when
/// `t` and `|z|` agree to more digits than a double carries.
pub fn schur_upper_rho(t: f64, z: C64, rho: f64) -> Result<SchurResult> {
    if !(rho > 0.0 && rho <= std::f64::consts::FRAC_PI_2) {
        return invalid(format!("rho={rho} outside (0, π/2]"));
    }
    // Eigenvector of iρ.
    let v1 = C64::from(t + rho);
    let v2 = -I * z.conj();
    let n = (v1.norm_sqr() + v2.norm_sqr()).sqrt();
    let (v1, v2) = (v1 / n, v2 / n);
    let u = Mat2::new(v1, -v2.conj(), v2, v1.conj()).with_class(MatClass::General);
    let a = Mat2::new(I * t, z, z.conj(), -I * t);
    let nu = (u.adjoint() * a * u).b() * (rho.sin() / rho);
    Ok(SchurResult { u, rho, nu })
}

/// Bound on `‖X‖ + ‖Y‖` for [`bch_log`].
pub const BCH_RADIUS: f64 = std::f64::consts::LN_2 / 2.0;

/// `Z` with `e^X e^Y = e^Z`, via the logarithm of the product.
pub fn bch_log(x: &Mat2, y: &Mat2) -> Result<Mat2> {
    let total = x.norm() + y.norm();
    if !(total < BCH_RADIUS) {
        return Err(QpError::NormBound(format!("‖X‖+‖Y‖ = {total:.3e} is not below (ln 2)/2")));
    }
    let scalar = (x.trace() + y.trace()) / 2.0;
    let (x0, y0) = (x.traceless(), y.traceless());
    let (ex, ey) = (x0.expm1(), y0.expm1());
    let w = ex + ey + ex * ey;
    Ok(w.log1p_sl() + Mat2::scalar(scalar))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cayley_examples() {
        let c = cayley(&Mat2::real(1.0, 0.0, 0.0, -1.0)).unwrap();
        assert!(c.approx_eq(&Mat2::real(0.0, 1.0, 1.0, 0.0), 1e-15));
        let c = cayley(&Mat2::real(0.0, 1.0, -1.0, 0.0)).unwrap();
        assert!(c.approx_eq(&Mat2::diag(I, -I), 1e-15));
        assert!(cayley(&Mat2::zero()).unwrap().approx_eq(&Mat2::zero(), 0.0));
        assert!(cayley(&Mat2::identity()).is_err());
    }

    #[test]
    fn orientation_preserving_realization() {
        let x = 0.137;
        let ph = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * x);
        let r = su11_to_sl2r(&Mat2::diag(ph, ph.conj()));
        assert!(r.approx_eq(&Mat2::rotation(x), 1e-15));
        let back = sl2r_to_su11(&r);
        assert!(back.approx_eq(&Mat2::diag(ph, ph.conj()), 1e-15));
    }

    #[test]
    fn normal_form_example() {
        let nf = elliptic_normal_form(5.0 / 3.0, C64::new(0.0, 4.0 / 3.0)).unwrap();
        assert!((nf.rho - 1.0).abs() < 1e-14);
        assert!((nf.d.norm().powi(2) - 3.0).abs() < 1e-12);
        assert!(elliptic_normal_form(1.0, C64::new(1.0, 0.0)).is_err());
        let nf = elliptic_normal_form(1.0, C64::new(1e-12, 0.0)).unwrap();
        assert!(nf.d.approx_eq(&Mat2::identity(), 1e-11));
    }

    #[test]
    fn schur_diagonal_case() {
        let s = schur_upper(0.3, C64::new(0.0, 0.0)).unwrap();
        assert!(s.u.approx_eq(&Mat2::identity(), 0.0));
        assert_eq!(s.nu, ZERO);
        assert!((s.rho - 0.3).abs() < 1e-16);
        let s = schur_upper(0.5, C64::new(0.3, 0.0)).unwrap();
        assert!(s.nu.norm() >= 0.3 && s.nu.norm() <= 0.6);
    }

    #[test]
    fn log_inverts_exp_for_small_and_elliptic() {
        let x = Mat2::new(I * 1e-9, C64::new(3e-10, 1e-10), C64::new(3e-10, -1e-10), -I * 1e-9);
        let z = x.exp().log().unwrap();
        assert!((z - x).max_abs() < 1e-24);
        let r = Mat2::real(0.0, -2.5, 2.5, 0.0);
        let z = r.exp().log().unwrap();
        assert!((z - r).max_abs() < 1e-13);
    }
}

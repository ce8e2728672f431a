//! Binary fixed-point reals backed by `BigInt`.
//!
//! A [`Fixed`] stores `raw / 2^bits`. Sums and integer multiples are exact,
//! which is what torus distances of the form `‖φ − kα‖` need once the gaps
//! drop far below double-precision resolution.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{Float, One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;

const LN_2: f64 = std::f64::consts::LN_2;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Fixed {
    raw: BigInt,
    bits: u32,
}

impl fmt::Debug for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fixed({:.17e} @ {} bits)", self.to_f64(), self.bits)
    }
}

impl Fixed {
    pub fn zero(bits: u32) -> Self {
        Fixed { raw: BigInt::zero(), bits }
    }

    pub fn from_raw(raw: BigInt, bits: u32) -> Self {
        Fixed { raw, bits }
    }

    pub fn from_int(n: i64, bits: u32) -> Self {
        Fixed { raw: BigInt::from(n) << bits, bits }
    }

    /// Exact conversion of a finite double (truncated below `2^-bits`).
    pub fn from_f64(x: f64, bits: u32) -> Self {
        assert!(x.is_finite(), "Fixed::from_f64 on non-finite value");
        if x == 0.0 {
            return Self::zero(bits);
        }
        let (mant, exp, sign) = x.integer_decode();
        let mut raw = BigInt::from(mant);
        let shift = exp as i64 + bits as i64;
        if shift >= 0 {
            raw <<= shift as usize;
        } else {
            raw >>= (-shift) as usize;
        }
        if sign < 0 {
            raw = -raw;
        }
        Fixed { raw, bits }
    }

    /// `floor(p * 2^bits / q)`.
    pub fn from_ratio(p: &BigInt, q: &BigInt, bits: u32) -> Self {
        let num: BigInt = p << bits;
        Fixed { raw: num.div_floor(q), bits }
    }

    /// `e^{-x}` for `x >= 0`, with double-precision relative accuracy even
    /// when the value is far below the double range.
    pub fn exp_neg(x: f64, bits: u32) -> Self {
        assert!(x >= 0.0 && x.is_finite());
        let l2 = x / LN_2;
        let whole = l2.floor();
        let frac = l2 - whole;
        // e^{-x} = 2^{-whole} * 2^{-frac}, 2^{-frac} in (1/2, 1]
        let m = (-frac * LN_2).exp();
        let scaled = Fixed::from_f64(m, bits + 64);
        let shift = whole as u64 + 64;
        Fixed { raw: scaled.raw >> shift as usize, bits }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn raw(&self) -> &BigInt {
        &self.raw
    }

    pub fn is_zero(&self) -> bool {
        self.raw.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.raw.sign() == Sign::Minus
    }

    /// Same value with a larger number of fraction bits.
    pub fn widen(&self, bits: u32) -> Self {
        assert!(bits >= self.bits);
        Fixed { raw: &self.raw << (bits - self.bits) as usize, bits }
    }

    /// Reinterpret with one more fraction bit, i.e. exact halving.
    pub fn half(&self) -> Self {
        Fixed { raw: self.raw.clone(), bits: self.bits + 1 }
    }

    /// Exact doubling that keeps the fraction width.
    pub fn double(&self) -> Self {
        Fixed { raw: &self.raw << 1usize, bits: self.bits }
    }

    pub fn add(&self, o: &Fixed) -> Self {
        debug_assert_eq!(self.bits, o.bits);
        Fixed { raw: &self.raw + &o.raw, bits: self.bits }
    }

    pub fn sub(&self, o: &Fixed) -> Self {
        debug_assert_eq!(self.bits, o.bits);
        Fixed { raw: &self.raw - &o.raw, bits: self.bits }
    }

    pub fn neg(&self) -> Self {
        Fixed { raw: -&self.raw, bits: self.bits }
    }

    pub fn mul_int(&self, k: i64) -> Self {
        Fixed { raw: &self.raw * BigInt::from(k), bits: self.bits }
    }

    pub fn abs(&self) -> Self {
        Fixed { raw: self.raw.abs(), bits: self.bits }
    }

    fn one_raw(&self) -> BigInt {
        BigInt::one() << self.bits as usize
    }

    pub fn floor(&self) -> BigInt {
        self.raw.div_floor(&self.one_raw())
    }

    /// Fractional part in `[0, 1)`.
    pub fn frac(&self) -> Self {
        Fixed { raw: self.raw.mod_floor(&self.one_raw()), bits: self.bits }
    }

    /// Representative of the value modulo the integer `m`, in `[0, m)`.
    pub fn rem_int(&self, m: u32) -> Self {
        let modulus = self.one_raw() * BigInt::from(m);
        Fixed { raw: self.raw.mod_floor(&modulus), bits: self.bits }
    }

    /// Signed distance to the nearest integer, in `[-1/2, 1/2)`.
    pub fn centered(&self) -> Self {
        let one = self.one_raw();
        let half: BigInt = &one >> 1usize;
        let r = (&self.raw + &half).mod_floor(&one) - half;
        Fixed { raw: r, bits: self.bits }
    }

    /// `‖x‖_T = inf_j |x − j|`, in `[0, 1/2]`.
    pub fn torus_dist(&self) -> Self {
        self.centered().abs()
    }

    pub fn to_f64(&self) -> f64 {
        if self.raw.is_zero() {
            return 0.0;
        }
        let (m, e) = self.mantissa_exp();
        ldexp(m, e)
    }

    /// Natural log of `|x|`; `-inf` for zero. Exact exponent bookkeeping means
    /// no underflow for tiny values.
    pub fn ln_abs(&self) -> f64 {
        if self.raw.is_zero() {
            return f64::NEG_INFINITY;
        }
        let (m, e) = self.mantissa_exp();
        m.abs().ln() + e as f64 * LN_2
    }

    /// `x = m * 2^e` with `|m|` in `[2^63, 2^64)` (or exact when small).
    fn mantissa_exp(&self) -> (f64, i64) {
        let len = self.raw.bits() as i64;
        let shift = (len - 64).max(0);
        let top = (&self.raw >> shift as usize).to_f64().unwrap_or(0.0);
        (top, shift - self.bits as i64)
    }

    pub fn cmp_value(&self, o: &Fixed) -> Ordering {
        debug_assert_eq!(self.bits, o.bits);
        self.raw.cmp(&o.raw)
    }

    /// Top 128 fraction bits of `frac(x)`, the phase format used by long orbits.
    pub fn to_u128_phase(&self) -> u128 {
        let f = self.frac();
        let r = if self.bits >= 128 {
            f.raw >> (self.bits - 128) as usize
        } else {
            f.raw << (128 - self.bits) as usize
        };
        let (_, digits) = r.to_u64_digits();
        let lo = *digits.first().unwrap_or(&0) as u128;
        let hi = *digits.get(1).unwrap_or(&0) as u128;
        (hi << 64) | lo
    }
}

/// `m * 2^e` without intermediate overflow or premature underflow.
pub fn ldexp(m: f64, e: i64) -> f64 {
    let mut x = m;
    let mut e = e;
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return 0.0;
        }
    }
    x * 2f64.powi(e as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_torus() {
        let x = Fixed::from_f64(0.75, 128);
        assert_eq!(x.torus_dist().to_f64(), 0.25);
        assert_eq!(Fixed::from_f64(3.0, 64).torus_dist().to_f64(), 0.0);
        assert_eq!(Fixed::from_f64(-0.3, 64).frac().to_f64(), 1.0 - 0.3);
        assert_eq!(Fixed::from_f64(2.5, 64).rem_int(2).to_f64(), 0.5);
    }

    #[test]
    fn tiny_exponentials_keep_relative_accuracy() {
        let g = Fixed::exp_neg(400.0, 1024);
        assert!((g.ln_abs() + 400.0).abs() < 1e-12);
        let g = Fixed::exp_neg(5.0, 256);
        assert!((g.to_f64() / (-5.0f64).exp() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn u128_phase_matches_double() {
        let x = Fixed::from_f64(0.1234567, 256);
        let p = x.to_u128_phase();
        let back = (p >> 64) as f64 / 2f64.powi(64);
        assert!((back - 0.1234567).abs() < 1e-15);
    }
}

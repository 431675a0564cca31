//! Arithmetic in `Z_{2^64}` and the fixed-point codec that maps reals into it.
//!
//! Negative numbers use two's complement, so "less than zero" is the most
//! significant bit of the ring element.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ring width in bits.
pub const RING_BITS: u32 = 64;

/// Default number of fractional bits.
pub const DEFAULT_FRAC_BITS: u32 = 16;

/// An element of `Z_{2^64}`. All arithmetic wraps.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RingValue(pub u64);

impl RingValue {
    pub const ZERO: RingValue = RingValue(0);
    pub const ONE: RingValue = RingValue(1);

    #[inline]
    pub fn from_signed(v: i64) -> Self {
        RingValue(v as u64)
    }

    #[inline]
    pub fn as_signed(self) -> i64 {
        self.0 as i64
    }

    #[inline]
    pub fn msb(self) -> bool {
        self.0 >> (RING_BITS - 1) == 1
    }

    /// Arithmetic (sign-extending) right shift.
    #[inline]
    pub fn shr_arith(self, bits: u32) -> Self {
        RingValue((self.as_signed() >> bits) as u64)
    }

    #[inline]
    pub fn pow2(bits: u32) -> Self {
        RingValue(1u64 << bits)
    }
}

impl fmt::Debug for RingValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R({})", self.as_signed())
    }
}

impl fmt::Display for RingValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for RingValue {
    fn from(v: u64) -> Self {
        RingValue(v)
    }
}

impl Add for RingValue {
    type Output = RingValue;
    #[inline]
    fn add(self, rhs: RingValue) -> RingValue {
        RingValue(self.0.wrapping_add(rhs.0))
    }
}

impl Sub for RingValue {
    type Output = RingValue;
    #[inline]
    fn sub(self, rhs: RingValue) -> RingValue {
        RingValue(self.0.wrapping_sub(rhs.0))
    }
}

impl Mul for RingValue {
    type Output = RingValue;
    #[inline]
    fn mul(self, rhs: RingValue) -> RingValue {
        RingValue(self.0.wrapping_mul(rhs.0))
    }
}

impl Neg for RingValue {
    type Output = RingValue;
    #[inline]
    fn neg(self) -> RingValue {
        RingValue(self.0.wrapping_neg())
    }
}

impl AddAssign for RingValue {
    #[inline]
    fn add_assign(&mut self, rhs: RingValue) {
        *self = *self + rhs;
    }
}

impl SubAssign for RingValue {
    #[inline]
    fn sub_assign(&mut self, rhs: RingValue) {
        *self = *self - rhs;
    }
}

impl MulAssign for RingValue {
    #[inline]
    fn mul_assign(&mut self, rhs: RingValue) {
        *self = *self * rhs;
    }
}

impl std::iter::Sum for RingValue {
    fn sum<I: Iterator<Item = RingValue>>(iter: I) -> Self {
        iter.fold(RingValue::ZERO, |a, b| a + b)
    }
}

/// Multiplicative inverse of an odd element, by Newton iteration on 2-adic digits.
pub fn inverse_odd(v: u64) -> Option<u64> {
    if v & 1 == 0 {
        return None;
    }
    // x = v is correct to 3 bits for odd v; each step doubles the correct bits.
    let mut x = v;
    for _ in 0..5 {
        x = x.wrapping_mul(2u64.wrapping_sub(v.wrapping_mul(x)));
    }
    Some(x)
}

/// Fixed-point codec: a real `x` is represented by `round(x * 2^f)` in the ring.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedPointCodec {
    frac_bits: u32,
}

impl Default for FixedPointCodec {
    fn default() -> Self {
        FixedPointCodec {
            frac_bits: DEFAULT_FRAC_BITS,
        }
    }
}

impl FixedPointCodec {
    pub fn new(frac_bits: u32) -> Result<Self> {
        if frac_bits == 0 || frac_bits >= 31 {
            return Err(Error::Param(format!(
                "fractional bits must lie in 1..=30, got {frac_bits}"
            )));
        }
        Ok(FixedPointCodec { frac_bits })
    }

    #[inline]
    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    #[inline]
    pub fn total_bits(&self) -> u32 {
        RING_BITS
    }

    /// The fixed-point encoding of 1.0.
    #[inline]
    pub fn one(&self) -> RingValue {
        RingValue::pow2(self.frac_bits)
    }

    /// Largest magnitude accepted by [`encode`](Self::encode): `2^(k-f-1)`.
    pub fn max_magnitude(&self) -> f64 {
        2f64.powi((RING_BITS - self.frac_bits - 1) as i32)
    }

    pub fn encode(&self, x: f64) -> Result<RingValue> {
        if !x.is_finite() || x.abs() >= self.max_magnitude() {
            return Err(Error::Range {
                value: x,
                limit: self.max_magnitude(),
            });
        }
        let scaled = (x * 2f64.powi(self.frac_bits as i32)).round();
        Ok(RingValue::from_signed(scaled as i64))
    }

    pub fn encode_slice(&self, xs: &[f64]) -> Result<Vec<RingValue>> {
        xs.iter().map(|&x| self.encode(x)).collect()
    }

    #[inline]
    pub fn decode(&self, v: RingValue) -> f64 {
        v.as_signed() as f64 / 2f64.powi(self.frac_bits as i32)
    }

    pub fn decode_slice(&self, vs: &[RingValue]) -> Vec<f64> {
        vs.iter().map(|&v| self.decode(v)).collect()
    }

    /// Arithmetic right shift by `bits`, used to drop the extra fractional
    /// bits after multiplying two encoded values.
    #[inline]
    pub fn truncate(&self, v: RingValue, bits: u32) -> RingValue {
        v.shr_arith(bits)
    }

    /// Product of two encoded values, rescaled to `f` fractional bits.
    #[inline]
    pub fn mul(&self, a: RingValue, b: RingValue) -> RingValue {
        self.truncate(a * b, self.frac_bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn encode_examples() {
        let c = FixedPointCodec::default();
        assert_eq!(c.encode(0.0).unwrap(), RingValue(0));
        assert_eq!(c.encode(1.0).unwrap(), RingValue(65536));
        // round(-1.5 * 2^16) mod 2^64 computed with i128: 2^64 - 98304
        let oracle = ((1i128 << 64) - 98304) as u64;
        assert_eq!(c.encode(-1.5).unwrap(), RingValue(oracle));
    }

    #[test]
    fn encode_rejects_out_of_range() {
        let c = FixedPointCodec::default();
        assert!(c.encode(2f64.powi(47)).is_err());
        assert!(c.encode(f64::NAN).is_err());
        assert!(c.encode(2f64.powi(47) - 1.0).is_ok());
    }

    #[test]
    fn decode_examples() {
        let c = FixedPointCodec::default();
        assert_eq!(c.decode(RingValue(0)), 0.0);
        assert_eq!(c.decode(RingValue(65536)), 1.0);
        assert_eq!(c.decode(c.encode(3.25).unwrap()), 3.25);
    }

    #[test]
    fn truncate_examples() {
        let c = FixedPointCodec::default();
        let raw = c.encode(2.0).unwrap() * c.encode(3.0).unwrap();
        // (2*2^16)(3*2^16)/2^16 = 6*2^16 exactly
        let oracle = (2i128 * 65536 * 3 * 65536) / 65536;
        let got = c.truncate(raw, 16);
        assert!((got.as_signed() as i128 - oracle).abs() <= 1);
        assert_eq!(got, c.encode(6.0).unwrap());
        assert_eq!(c.truncate(RingValue(0), 16), RingValue(0));
        let doubled = RingValue(1u64 << 32);
        assert_eq!(c.truncate(doubled, 16), c.encode(1.0).unwrap());
    }

    #[test]
    fn inverse_of_odd_elements() {
        for v in [1u64, 3, 5, 45, u64::MAX, 0x1234_5677] {
            let inv = inverse_odd(v).unwrap();
            assert_eq!(v.wrapping_mul(inv), 1);
        }
        assert!(inverse_odd(6).is_none());
    }

    #[test]
    fn additive_inverse() {
        let v = RingValue(12345);
        assert_eq!(v + (-v), RingValue::ZERO);
        assert_eq!(RingValue(0) - RingValue(1), RingValue(u64::MAX));
    }

    proptest! {
        #[test]
        fn ring_ops_associative_commutative(a: u64, b: u64, c: u64) {
            let (a, b, c) = (RingValue(a), RingValue(b), RingValue(c));
            prop_assert_eq!((a + b) + c, a + (b + c));
            prop_assert_eq!(a + b, b + a);
            prop_assert_eq!((a * b) * c, a * (b * c));
            prop_assert_eq!(a * b, b * a);
            prop_assert_eq!(a * (b + c), a * b + a * c);
        }

        #[test]
        fn encode_decode_within_half_ulp(x in -1.0e9f64..1.0e9) {
            let c = FixedPointCodec::default();
            let back = c.decode(c.encode(x).unwrap());
            prop_assert!((back - x).abs() <= 2f64.powi(-16));
        }

        #[test]
        fn encode_of_decode_is_identity(raw in -(1i64 << 46)..(1i64 << 46)) {
            let c = FixedPointCodec::default();
            let v = RingValue::from_signed(raw);
            prop_assert_eq!(c.encode(c.decode(v)).unwrap(), v);
        }

        #[test]
        fn fixed_product_error_bound(ra in -(1i64 << 26)..(1i64 << 26), rb in -(1i64 << 26)..(1i64 << 26)) {
            // exactly representable inputs in [-2^10, 2^10]
            let c = FixedPointCodec::default();
            let (a, b) = (ra as f64 / 65536.0, rb as f64 / 65536.0);
            let got = c.decode(c.mul(c.encode(a).unwrap(), c.encode(b).unwrap()));
            let tol = 2f64.powi(-15) * (a * b).abs().max(1.0);
            prop_assert!((got - a * b).abs() <= tol, "{} vs {}", got, a * b);
        }

        #[test]
        fn encode_is_monotone(a in -1.0e6f64..1.0e6, b in -1.0e6f64..1.0e6) {
            let c = FixedPointCodec::default();
            let (ea, eb) = (c.encode(a).unwrap().as_signed(), c.encode(b).unwrap().as_signed());
            if a <= b { prop_assert!(ea <= eb); } else { prop_assert!(ea >= eb); }
        }
    }
}

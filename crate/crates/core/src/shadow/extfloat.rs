//! Software binary floating point with a configurable mantissa width.
//!
//! A value is `±m · 2^e` with an arbitrary-size integer `m`; every operation
//! computes the exact result (or enough quotient/root bits plus a sticky bit)
//! and rounds once to the requested width, so results are correctly rounded
//! in all three supported modes.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rounding {
    Nearest,
    /// Toward +∞.
    Up,
    /// Toward −∞.
    Down,
}

/// Highest binary exponent considered in range; beyond it affine
/// coefficients are treated as overflowed.
pub const EXP_LIMIT: i64 = 1 << 24;

/// Canonical form: zero is `(+, 0, 0)`; otherwise the mantissa is odd.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExtFloat {
    neg: bool,
    mant: BigUint,
    exp: i64,
}

impl fmt::Debug for ExtFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExtFloat({:e})", self.to_f64(Rounding::Nearest))
    }
}

fn make(neg: bool, mant: BigUint, exp: i64) -> ExtFloat {
    if mant.is_zero() {
        return ExtFloat::zero();
    }
    let tz = mant.trailing_zeros().unwrap_or(0);
    if tz == 0 {
        ExtFloat { neg, mant, exp }
    } else {
        ExtFloat { neg, mant: mant >> tz, exp: exp + tz as i64 }
    }
}

/// Rounds `±mant · 2^exp` to `prec` significant bits. Returns the rounded
/// value and whether rounding changed it.
fn round(neg: bool, mant: BigUint, exp: i64, prec: u32, mode: Rounding) -> (ExtFloat, bool) {
    if mant.is_zero() {
        return (ExtFloat::zero(), false);
    }
    let bits = mant.bits();
    if bits <= prec as u64 {
        return (make(neg, mant, exp), false);
    }
    let shift = bits - prec as u64;
    let tz = mant.trailing_zeros().unwrap_or(0);
    if tz >= shift {
        return (make(neg, mant, exp), false);
    }
    let guard = mant.bit(shift - 1);
    let sticky = tz < shift - 1;
    let mut q = mant >> shift;
    let away = match mode {
        Rounding::Nearest => guard && (sticky || q.bit(0)),
        Rounding::Up => !neg,
        Rounding::Down => neg,
    };
    if away {
        q += 1u32;
    }
    (make(neg, q, exp + shift as i64), true)
}

impl ExtFloat {
    pub fn zero() -> Self {
        ExtFloat { neg: false, mant: BigUint::zero(), exp: 0 }
    }

    pub fn one() -> Self {
        ExtFloat { neg: false, mant: BigUint::one(), exp: 0 }
    }

    /// `2^k`.
    pub fn pow2(k: i64) -> Self {
        ExtFloat { neg: false, mant: BigUint::one(), exp: k }
    }

    /// Exact conversion of a finite binary64.
    pub fn from_f64(v: f64) -> Self {
        assert!(v.is_finite(), "ExtFloat::from_f64 on non-finite value");
        if v == 0.0 {
            return Self::zero();
        }
        let bits = v.to_bits();
        let neg = bits >> 63 == 1;
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if biased == 0 { (frac, -1074) } else { (frac | (1u64 << 52), biased - 1075) };
        make(neg, BigUint::from(m), e)
    }

    pub fn from_u64(v: u64) -> Self {
        make(false, BigUint::from(v), 0)
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.neg
    }

    /// Exponent of the most significant bit (value in `[2^top, 2^(top+1))`).
    pub fn top(&self) -> i64 {
        debug_assert!(!self.is_zero());
        self.exp + self.mant.bits() as i64 - 1
    }

    /// Compares magnitudes.
    pub fn cmp_abs(&self, other: &Self) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        match self.top().cmp(&other.top()) {
            Ordering::Equal if self.exp > other.exp => (&self.mant << (self.exp - other.exp) as u64).cmp(&other.mant),
            Ordering::Equal => self.mant.cmp(&(&other.mant << (other.exp - self.exp) as u64)),
            o => o,
        }
    }

    pub fn significant_bits(&self) -> u64 {
        self.mant.bits()
    }

    pub fn in_range(&self) -> bool {
        self.is_zero() || self.top().abs() <= EXP_LIMIT
    }

    pub fn neg(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        ExtFloat { neg: !self.neg, mant: self.mant.clone(), exp: self.exp }
    }

    pub fn abs(&self) -> Self {
        ExtFloat { neg: false, mant: self.mant.clone(), exp: self.exp }
    }

    /// Exact multiplication by `2^k`.
    pub fn mul_pow2(&self, k: i64) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        ExtFloat { neg: self.neg, mant: self.mant.clone(), exp: self.exp + k }
    }

    /// Half a unit in the last place at width `prec`: an upper bound of the
    /// round-to-nearest error committed when producing `self`.
    pub fn half_ulp(&self, prec: u32) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        Self::pow2(self.top() - prec as i64)
    }

    pub fn round_to(&self, prec: u32, mode: Rounding) -> (Self, bool) {
        round(self.neg, self.mant.clone(), self.exp, prec, mode)
    }

    pub fn add_r(&self, other: &Self, prec: u32, mode: Rounding) -> (Self, bool) {
        if self.is_zero() {
            return other.round_to(prec, mode);
        }
        if other.is_zero() {
            return self.round_to(prec, mode);
        }
        let (big, small) = if self.top() >= other.top() { (self, other) } else { (other, self) };
        let reach = (prec as u64).max(big.mant.bits()) as i64 + 3;
        let sticky;
        let small = if big.top() - small.top() > reach {
            // far below the rounding position: any value of the same sign
            // strictly inside that gap rounds identically
            sticky = ExtFloat { neg: small.neg, mant: BigUint::one(), exp: big.top() - reach };
            &sticky
        } else {
            small
        };
        let e = big.exp.min(small.exp);
        let mb = &big.mant << (big.exp - e) as u64;
        let ms = &small.mant << (small.exp - e) as u64;
        if big.neg == small.neg {
            return round(big.neg, mb + ms, e, prec, mode);
        }
        match mb.cmp(&ms) {
            Ordering::Equal => (Self::zero(), false),
            Ordering::Greater => round(big.neg, mb - ms, e, prec, mode),
            Ordering::Less => round(small.neg, ms - mb, e, prec, mode),
        }
    }

    pub fn sub_r(&self, other: &Self, prec: u32, mode: Rounding) -> (Self, bool) {
        self.add_r(&other.neg(), prec, mode)
    }

    pub fn mul_r(&self, other: &Self, prec: u32, mode: Rounding) -> (Self, bool) {
        if self.is_zero() || other.is_zero() {
            return (Self::zero(), false);
        }
        round(self.neg != other.neg, &self.mant * &other.mant, self.exp + other.exp, prec, mode)
    }

    /// Panics on division by zero; callers check the divisor range first.
    pub fn div_r(&self, other: &Self, prec: u32, mode: Rounding) -> (Self, bool) {
        assert!(!other.is_zero(), "ExtFloat division by zero");
        if self.is_zero() {
            return (Self::zero(), false);
        }
        let want = prec as i64 + 3 + other.mant.bits() as i64 - self.mant.bits() as i64;
        let s = want.max(0) as u64;
        let num = &self.mant << s;
        let (q, r) = num.div_rem(&other.mant);
        let mut m = q << 1u32;
        if !r.is_zero() {
            m += 1u32;
        }
        round(self.neg != other.neg, m, self.exp - other.exp - s as i64 - 1, prec, mode)
    }

    /// Panics on a negative argument.
    pub fn sqrt_r(&self, prec: u32, mode: Rounding) -> (Self, bool) {
        assert!(!self.neg, "ExtFloat sqrt of negative value");
        if self.is_zero() {
            return (Self::zero(), false);
        }
        let need = 2 * (prec as i64 + 2);
        let mut s = (need - self.mant.bits() as i64).max(0);
        if (self.exp - s) % 2 != 0 {
            s += 1;
        }
        let m = &self.mant << s as u64;
        let e = self.exp - s;
        let r = m.sqrt();
        let exact = &r * &r == m;
        let mut root = r << 1u32;
        if !exact {
            root += 1u32;
        }
        round(false, root, e / 2 - 1, prec, mode)
    }

    pub fn add(&self, other: &Self, prec: u32, mode: Rounding) -> Self {
        self.add_r(other, prec, mode).0
    }

    pub fn sub(&self, other: &Self, prec: u32, mode: Rounding) -> Self {
        self.sub_r(other, prec, mode).0
    }

    pub fn mul(&self, other: &Self, prec: u32, mode: Rounding) -> Self {
        self.mul_r(other, prec, mode).0
    }

    pub fn div(&self, other: &Self, prec: u32, mode: Rounding) -> Self {
        self.div_r(other, prec, mode).0
    }

    pub fn sqrt(&self, prec: u32, mode: Rounding) -> Self {
        self.sqrt_r(prec, mode).0
    }

    /// `floor(self)` for non-negative values, saturating at `u64::MAX`.
    pub fn floor_u64(&self) -> u64 {
        if self.is_zero() || self.neg {
            return 0;
        }
        if self.exp >= 0 {
            if self.top() >= 64 {
                return u64::MAX;
            }
            return (&self.mant << self.exp as u64).to_u64().unwrap_or(u64::MAX);
        }
        let shift = (-self.exp) as u64;
        if shift >= self.mant.bits() {
            return 0;
        }
        (&self.mant >> shift).to_u64().unwrap_or(u64::MAX)
    }

    /// Conversion to binary64 with the given rounding, including the
    /// subnormal range and overflow to infinity.
    pub fn to_f64(&self, mode: Rounding) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let neg = self.neg;
        let top = self.top();
        if top > 1023 {
            return overflow_value(neg, mode);
        }
        let prec = if top >= -1022 { 53 } else { top + 1075 };
        if prec <= 0 {
            // below half the smallest subnormal (or exactly half when prec == 0)
            let exactly_half = prec == 0 && self.mant.bits() == 1;
            let away = match mode {
                Rounding::Nearest => prec == 0 && !exactly_half,
                Rounding::Up => !neg,
                Rounding::Down => neg,
            };
            let mag = if away { f64::from_bits(1) } else { 0.0 };
            return if neg { -mag } else { mag };
        }
        let (r, _) = round(neg, self.mant.clone(), self.exp, prec as u32, mode);
        if r.top() > 1023 {
            return overflow_value(neg, mode);
        }
        let m = r.mant.to_u64().expect("rounded mantissa fits 53 bits") as f64;
        let mag = ldexp(m, r.exp);
        if neg {
            -mag
        } else {
            mag
        }
    }
}

fn overflow_value(neg: bool, mode: Rounding) -> f64 {
    match (mode, neg) {
        (Rounding::Nearest, false) | (Rounding::Up, false) => f64::INFINITY,
        (Rounding::Nearest, true) | (Rounding::Down, true) => f64::NEG_INFINITY,
        (Rounding::Down, false) => f64::MAX,
        (Rounding::Up, true) => f64::MIN,
    }
}

/// `m · 2^e` for a value known to be representable.
fn ldexp(mut m: f64, mut e: i64) -> f64 {
    while e > 1000 {
        m *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        m *= 2f64.powi(-1000);
        e += 1000;
    }
    m * 2f64.powi(e as i32)
}

impl Ord for ExtFloat {
    fn cmp(&self, other: &Self) -> Ordering {
        let neg = |v: &Self| !v.is_zero() && v.neg;
        match (neg(self), neg(other)) {
            (false, false) => self.cmp_abs(other),
            (true, true) => other.cmp_abs(self),
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
        }
    }
}

impl PartialOrd for ExtFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Rounding::*;

    fn x(v: f64) -> ExtFloat {
        ExtFloat::from_f64(v)
    }

    #[test]
    fn binary64_round_trip() {
        for v in [0.0, 1.0, -2.5, 0.1, 1e300, -1e-300, 5e-324, f64::MAX, f64::MIN_POSITIVE] {
            for mode in [Nearest, Up, Down] {
                assert_eq!(x(v).to_f64(mode), v);
            }
        }
    }

    #[test]
    fn agrees_with_binary64_at_53_bits() {
        let vals = [0.1, 0.2, 3.0, 1.0 / 3.0, 7e10, -2.5e-7];
        for &a in &vals {
            for &b in &vals {
                assert_eq!(x(a).add(&x(b), 53, Nearest).to_f64(Nearest), a + b);
                assert_eq!(x(a).sub(&x(b), 53, Nearest).to_f64(Nearest), a - b);
                assert_eq!(x(a).mul(&x(b), 53, Nearest).to_f64(Nearest), a * b);
                assert_eq!(x(a).div(&x(b), 53, Nearest).to_f64(Nearest), a / b);
            }
            if a > 0.0 {
                assert_eq!(x(a).sqrt(53, Nearest).to_f64(Nearest), a.sqrt());
            }
        }
    }

    #[test]
    fn exact_results_match_binary64_at_wide_width() {
        assert_eq!(x(1.5).add(&x(2.25), 319, Nearest), x(3.75));
        assert_eq!(x(3.0).mul(&x(4.0), 319, Nearest), x(12.0));
        assert_eq!(x(1.0).div(&x(8.0), 319, Nearest), x(0.125));
        assert_eq!(x(4.0).sqrt(319, Nearest), x(2.0));
    }

    #[test]
    fn directed_rounding_brackets() {
        let third_lo = x(1.0).div(&x(3.0), 128, Down);
        let third_hi = x(1.0).div(&x(3.0), 128, Up);
        assert!(third_lo < third_hi);
        // 3 * lo < 1 < 3 * hi, evaluated exactly
        assert!(third_lo.mul(&x(3.0), 400, Nearest) < x(1.0));
        assert!(third_hi.mul(&x(3.0), 400, Nearest) > x(1.0));
        let r_lo = x(2.0).sqrt(200, Down);
        let r_hi = x(2.0).sqrt(200, Up);
        assert!(r_lo.mul(&r_lo, 500, Nearest) < x(2.0));
        assert!(r_hi.mul(&r_hi, 500, Nearest) > x(2.0));
        assert!(x(0.1).to_f64(Up) == 0.1);
    }

    #[test]
    fn tiny_addend_rounding() {
        let one = x(1.0);
        let tiny = ExtFloat::pow2(-1000);
        assert_eq!(one.add(&tiny, 64, Nearest), one);
        assert_eq!(one.add(&tiny, 64, Up), x(1.0).add(&ExtFloat::pow2(-63), 64, Nearest));
        assert_eq!(one.sub(&tiny, 64, Down), x(1.0).sub(&ExtFloat::pow2(-64), 64, Nearest));
        assert_eq!(one.sub(&tiny, 64, Up), one);
    }

    #[test]
    fn nearest_ties_to_even() {
        // 1 + 2^-53 at 53 bits is a tie between 1 and 1 + 2^-52
        let t = x(1.0).add(&ExtFloat::pow2(-53), 53, Nearest);
        assert_eq!(t, x(1.0));
        let t = x(1.0 + 2f64.powi(-52)).add(&ExtFloat::pow2(-53), 53, Nearest);
        assert_eq!(t.to_f64(Nearest), 1.0 + 2f64.powi(-51));
    }

    #[test]
    fn conversion_to_subnormal_and_overflow() {
        let half_min = ExtFloat::pow2(-1075);
        assert_eq!(half_min.to_f64(Nearest), 0.0);
        assert_eq!(half_min.to_f64(Up), 5e-324);
        assert_eq!(ExtFloat::pow2(2000).to_f64(Nearest), f64::INFINITY);
        assert_eq!(ExtFloat::pow2(2000).to_f64(Down), f64::MAX);
        let third = x(1.0).div(&x(3.0), 200, Nearest).mul_pow2(-1060);
        let (lo, hi) = (third.to_f64(Down), third.to_f64(Up));
        assert_eq!(lo.next_up(), hi);
    }

    #[test]
    fn ordering_and_floor() {
        assert!(x(-1.0) < x(0.0) && x(0.0) < x(1e-300) && x(2.0) > x(1.5));
        assert!(x(-2.0) < x(-1.5));
        assert_eq!(x(99.999).floor_u64(), 99);
        assert_eq!(x(100.0).floor_u64(), 100);
        assert_eq!(x(0.25).floor_u64(), 0);
        assert_eq!(x(-3.0).floor_u64(), 0);
    }

    #[test]
    fn half_over_five_thousandths_is_just_below_one_hundred() {
        // the binary64 nearest 0.005 exceeds 0.005, so 0.5 / dy is below 100
        let q = x(0.5).div(&x(0.005), 319, Nearest);
        assert!(q < x(100.0));
        assert_eq!(q.floor_u64(), 99);
        assert_eq!(0.5 / 0.005, 100.0);
        let gap = x(100.0).sub(&q, 319, Nearest).to_f64(Nearest);
        assert!((gap - 2.0816681711721685e-15).abs() < 1e-28);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn ops_agree_with_binary64_when_width_is_53(a in -1e10f64..1e10, b in 1e-3f64..1e10) {
                prop_assert_eq!(x(a).add(&x(b), 53, Nearest).to_f64(Nearest), a + b);
                prop_assert_eq!(x(a).mul(&x(b), 53, Nearest).to_f64(Nearest), a * b);
                prop_assert_eq!(x(a).div(&x(b), 53, Nearest).to_f64(Nearest), a / b);
                prop_assert_eq!(x(b).sqrt(53, Nearest).to_f64(Nearest), b.sqrt());
            }

            #[test]
            fn directed_results_bracket_nearest(a in -1e10f64..1e10, b in 1e-3f64..1e10) {
                let lo = x(a).div(&x(b), 100, Down);
                let hi = x(a).div(&x(b), 100, Up);
                let rn = x(a).div(&x(b), 100, Nearest);
                prop_assert!(lo <= rn && rn <= hi);
            }
        }
    }
}

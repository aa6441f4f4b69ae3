//! Error-free transformations on binary64 values.
//!
//! `two_sum` and `two_prod` return the round-to-nearest result together with
//! the exact residual, so that `s + e` (resp. `p + e`) equals the real sum
//! (resp. product) of the inputs. `adjacent` steps to the neighbouring
//! representable value, which is how the random-rounding scalars obtain the
//! second faithful rounding of an inexact result.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EftError {
    #[error("eft-overflow")]
    Overflow,
    #[error("eft-underflow")]
    Underflow,
    #[error("eft-invalid-operand")]
    InvalidOperand,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumSplit {
    pub s: f64,
    pub e: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProdSplit {
    pub p: f64,
    pub e: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
}

fn check_finite(x: f64) -> Result<(), EftError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(EftError::InvalidOperand)
    }
}

/// Knuth's branch-free TwoSum.
pub fn two_sum(a: f64, b: f64) -> Result<SumSplit, EftError> {
    check_finite(a)?;
    check_finite(b)?;
    let s = a + b;
    if !s.is_finite() {
        return Err(EftError::Overflow);
    }
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    Ok(SumSplit { s, e })
}

/// Smallest exponent `k` such that `x` is an integer multiple of `2^k`.
fn lowest_bit_exponent(x: f64) -> i32 {
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, exp) = if biased == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), biased - 1075)
    };
    exp + mant.trailing_zeros() as i32
}

/// The exact product `a·b` is a multiple of `2^-1074` iff its residual fits
/// in binary64.
fn product_residual_underflows(a: f64, b: f64) -> bool {
    if a == 0.0 || b == 0.0 {
        return false;
    }
    lowest_bit_exponent(a) + lowest_bit_exponent(b) < -1074
}

/// TwoProd through a fused multiply-add. `f64::mul_add` is correctly rounded
/// on every platform Rust supports (hardware FMA or a software fallback).
pub fn two_prod(a: f64, b: f64) -> Result<ProdSplit, EftError> {
    check_finite(a)?;
    check_finite(b)?;
    let p = a * b;
    if !p.is_finite() {
        return Err(EftError::Overflow);
    }
    if product_residual_underflows(a, b) {
        return Err(EftError::Underflow);
    }
    let e = a.mul_add(b, -p);
    Ok(ProdSplit { p, e })
}

const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1

fn split(a: f64) -> (f64, f64) {
    let c = SPLITTER * a;
    let hi = c - (c - a);
    (hi, a - hi)
}

/// TwoProd through Dekker/Veltkamp splitting, for targets without a
/// correctly rounded fused multiply-add.
pub fn two_prod_dekker(a: f64, b: f64) -> Result<ProdSplit, EftError> {
    check_finite(a)?;
    check_finite(b)?;
    let p = a * b;
    if !p.is_finite() {
        return Err(EftError::Overflow);
    }
    // the splitter multiplication overflows above 2^996
    const SPLIT_LIMIT: f64 = 6.696_928_794_914_17e299;
    if a.abs() > SPLIT_LIMIT || b.abs() > SPLIT_LIMIT {
        return Err(EftError::Overflow);
    }
    if product_residual_underflows(a, b) {
        return Err(EftError::Underflow);
    }
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let e = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    Ok(ProdSplit { p, e })
}

/// Next representable binary64 strictly above (`Up`) or below (`Down`) `z`.
pub fn adjacent(z: f64, direction: Direction) -> Result<f64, EftError> {
    check_finite(z)?;
    let next = match direction {
        Direction::Up => z.next_up(),
        Direction::Down => z.next_down(),
    };
    if next.is_infinite() {
        Err(EftError::Overflow)
    } else {
        Ok(next)
    }
}

/// Unit in the last place of a finite `x` (spacing to the next value away
/// from zero).
pub fn ulp(x: f64) -> f64 {
    let a = x.abs();
    if a == f64::MAX {
        return a - a.next_down();
    }
    a.next_up() - a
}

/// Sign of the exact residual `op(a, b) − z` for the rounded result `z`,
/// as -1, 0 or +1. Only meaningful for finite, non-overflowing results.
pub fn residual_sign_add(a: f64, b: f64, z: f64) -> i32 {
    // z = fl(a + b); exact residual = (a + b) − z
    let bb = z - a;
    let e = (a - (z - bb)) + (b - bb);
    sign(e)
}

pub fn residual_sign_mul(a: f64, b: f64, z: f64) -> i32 {
    if product_residual_underflows(a, b) {
        // the exact product is not on the binary64 grid, so z is inexact;
        // recover the direction from a wider evaluation
        let e = a.mul_add(b, -z);
        if e != 0.0 {
            return sign(e);
        }
        return sign_of_tiny_product_residual(a, b, z);
    }
    sign(a.mul_add(b, -z))
}

/// Exact residual direction of a product whose residual is below the
/// subnormal range. Scales both operands up by powers of two, which keeps
/// the comparison exact.
fn sign_of_tiny_product_residual(a: f64, b: f64, z: f64) -> i32 {
    let scale = 2f64.powi(300);
    let sa = a * scale;
    let sb = b * scale;
    let sz = z * scale * scale;
    sign(sa.mul_add(sb, -sz))
}

/// Residual direction of `z = fl(a / b)`: sign of `a/b − z`.
pub fn residual_sign_div(a: f64, b: f64, z: f64) -> i32 {
    // a − z·b is exactly representable for a correctly rounded quotient
    let r = (-z).mul_add(b, a);
    sign(r) * sign(b)
}

/// Residual direction of `z = fl(sqrt(a))`: sign of `sqrt(a) − z`.
pub fn residual_sign_sqrt(a: f64, z: f64) -> i32 {
    sign((-z).mul_add(z, a))
}

fn sign(x: f64) -> i32 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

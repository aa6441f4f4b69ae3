//! Asynchronous random rounding: every inexact operation returns one of the
//! two faithful roundings of its exact result, chosen by a fair coin.

use super::{truncate_unsigned, Arith, FaultCell, Relation, ScalarError, Site};
use crate::eft::{self, Direction};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Sqrt,
}

/// Source of rounding decisions.
#[derive(Debug, Clone)]
pub enum RoundingDraw {
    Random(RngStream),
    /// Degenerate source reproducing IEEE round-to-nearest.
    Nearest,
    /// Always the faithful rounding below the exact value.
    Down,
    /// Always the faithful rounding above the exact value.
    Up,
}

impl RoundingDraw {
    fn take_upper(&mut self, nearest_is_upper: bool) -> bool {
        match self {
            RoundingDraw::Random(rng) => rng.next_bool(),
            RoundingDraw::Nearest => nearest_is_upper,
            RoundingDraw::Down => false,
            RoundingDraw::Up => true,
        }
    }

    pub fn is_perturbing(&self) -> bool {
        !matches!(self, RoundingDraw::Nearest)
    }
}

fn nearest(op: Op, a: f64, b: f64) -> f64 {
    match op {
        Op::Add => a + b,
        Op::Sub => a - b,
        Op::Mul => a * b,
        Op::Div => a / b,
        Op::Sqrt => a.sqrt(),
    }
}

/// Applies `op` with random rounding. `b` is ignored for `Sqrt`.
pub fn rr_apply(op: Op, a: f64, b: Option<f64>, draw: &mut RoundingDraw) -> Result<f64, ScalarError> {
    let b = match (op, b) {
        (Op::Sqrt, _) => 0.0,
        (_, Some(b)) => b,
        (_, None) => return Err(ScalarError::InvalidOperand),
    };
    if a.is_nan() || b.is_nan() {
        return Err(ScalarError::InvalidOperand);
    }
    let z = nearest(op, a, b);
    if z.is_nan() {
        return Err(ScalarError::InvalidOperand);
    }
    if z == 0.0 || z.is_infinite() || a.is_infinite() || b.is_infinite() {
        return Ok(z);
    }
    let dir = match op {
        Op::Add => eft::residual_sign_add(a, b, z),
        Op::Sub => eft::residual_sign_add(a, -b, z),
        Op::Mul => eft::residual_sign_mul(a, b, z),
        Op::Div => eft::residual_sign_div(a, b, z),
        Op::Sqrt => eft::residual_sign_sqrt(a, z),
    };
    if dir == 0 {
        return Ok(z);
    }
    let (lower, upper, nearest_is_upper) = if dir > 0 {
        (z, eft::adjacent(z, Direction::Up).unwrap_or(z), false)
    } else {
        (eft::adjacent(z, Direction::Down).unwrap_or(z), z, true)
    };
    Ok(if draw.take_upper(nearest_is_upper) { upper } else { lower })
}

/// Random-rounding back end: one perturbed execution per instance.
#[derive(Debug, Clone)]
pub struct RandomRound {
    draw: RoundingDraw,
    fault: FaultCell,
}

impl RandomRound {
    pub fn new(draw: RoundingDraw) -> Self {
        Self { draw, fault: FaultCell::default() }
    }

    pub fn seeded(seed: u64) -> Self {
        Self::new(RoundingDraw::Random(RngStream::new(seed)))
    }

    fn apply(&mut self, op: Op, a: f64, b: Option<f64>) -> f64 {
        match rr_apply(op, a, b, &mut self.draw) {
            Ok(v) => v,
            Err(e) => {
                self.fault.raise(e);
                f64::NAN
            }
        }
    }
}

impl Arith for RandomRound {
    type Num = f64;

    fn constant(&mut self, v: f64) -> f64 {
        v
    }

    fn infinity(&mut self) -> f64 {
        f64::INFINITY
    }

    fn add(&mut self, a: &f64, b: &f64) -> f64 {
        self.apply(Op::Add, *a, Some(*b))
    }

    fn sub(&mut self, a: &f64, b: &f64) -> f64 {
        self.apply(Op::Sub, *a, Some(*b))
    }

    fn mul(&mut self, a: &f64, b: &f64) -> f64 {
        self.apply(Op::Mul, *a, Some(*b))
    }

    fn div(&mut self, a: &f64, b: &f64) -> f64 {
        self.apply(Op::Div, *a, Some(*b))
    }

    fn sqrt(&mut self, a: &f64) -> f64 {
        self.apply(Op::Sqrt, *a, None)
    }

    fn neg(&mut self, a: &f64) -> f64 {
        -a
    }

    fn compare(&mut self, _site: &'static Site, rel: Relation, a: &f64, b: &f64) -> bool {
        rel.eval(*a, *b)
    }

    fn truncate(&mut self, _site: &'static Site, a: &f64) -> Result<u64, ScalarError> {
        truncate_unsigned(*a)
    }

    fn is_infinite(&self, a: &f64) -> bool {
        a.is_infinite()
    }

    fn value(&self, a: &f64) -> f64 {
        *a
    }

    fn take_fault(&mut self) -> Option<ScalarError> {
        self.fault.take()
    }
}

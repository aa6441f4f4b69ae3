//! The numeric contract the solver and the path extraction are written
//! against.
//!
//! Every arithmetic operation, comparison and float-to-integer conversion
//! performed by [`crate::fmm`] and [`crate::backtrace`] goes through an
//! [`Arith`] implementation. Values are opaque `Arith::Num`s; the
//! implementation owns whatever analysis state is needed (random streams,
//! instability counters, affine symbol pools, flow control).
//!
//! Comparisons and conversions are tagged with a [`Site`], a stable name for
//! the code location, so that analyses can report where control flow became
//! unstable.

mod ieee;
mod random_round;
mod stochastic;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use ieee::Ieee;
pub use random_round::{rr_apply, Op, RandomRound, RoundingDraw};
pub use stochastic::{
    significant_digits, st_apply, st_compare, st_truncate_to_integer, InstabilityCounters,
    Stochastic, StochasticTriple, DIGITS_CAPACITY, STUDENT_K,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScalarError {
    #[error("invalid-operand")]
    InvalidOperand,
    #[error("negative-unsigned-conversion")]
    NegativeUnsignedConversion,
}

/// A named comparison or conversion location.
#[derive(Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Site {
    pub id: &'static str,
    pub file: &'static str,
    pub line: u32,
}

impl Site {
    pub fn location(&self) -> String {
        format!("{}:{}", self.file, self.line)
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({}:{})", self.id, self.file, self.line)
    }
}

/// Declares a `&'static Site` for the current source location.
#[macro_export]
macro_rules! site {
    ($id:literal) => {{
        static SITE: $crate::scalar::Site = $crate::scalar::Site {
            id: $id,
            file: file!(),
            line: line!(),
        };
        &SITE
    }};
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    Lt,
    Le,
    Eq,
}

impl Relation {
    pub fn eval(self, a: f64, b: f64) -> bool {
        match self {
            Relation::Lt => a < b,
            Relation::Le => a <= b,
            Relation::Eq => a == b,
        }
    }
}

/// Numeric back end for the solver.
///
/// Arithmetic never fails directly: an invalid operand (NaN) is recorded as
/// a sticky fault that callers collect with [`Arith::take_fault`] once a
/// computation phase finishes.
pub trait Arith {
    type Num: Clone + fmt::Debug;

    fn constant(&mut self, v: f64) -> Self::Num;
    /// The distinguished `+∞`, never perturbed.
    fn infinity(&mut self) -> Self::Num;

    fn add(&mut self, a: &Self::Num, b: &Self::Num) -> Self::Num;
    fn sub(&mut self, a: &Self::Num, b: &Self::Num) -> Self::Num;
    fn mul(&mut self, a: &Self::Num, b: &Self::Num) -> Self::Num;
    fn div(&mut self, a: &Self::Num, b: &Self::Num) -> Self::Num;
    fn sqrt(&mut self, a: &Self::Num) -> Self::Num;
    fn neg(&mut self, a: &Self::Num) -> Self::Num;

    fn compare(&mut self, site: &'static Site, rel: Relation, a: &Self::Num, b: &Self::Num)
        -> bool;
    /// Unsigned truncation (C-style `(unsigned) x`).
    fn truncate(&mut self, site: &'static Site, a: &Self::Num) -> Result<u64, ScalarError>;
    fn is_infinite(&self, a: &Self::Num) -> bool;

    /// Representative binary64 value, for reporting only.
    fn value(&self, a: &Self::Num) -> f64;

    fn take_fault(&mut self) -> Option<ScalarError>;

    fn lt(&mut self, site: &'static Site, a: &Self::Num, b: &Self::Num) -> bool {
        self.compare(site, Relation::Lt, a, b)
    }

    fn le(&mut self, site: &'static Site, a: &Self::Num, b: &Self::Num) -> bool {
        self.compare(site, Relation::Le, a, b)
    }

    fn zero(&mut self) -> Self::Num {
        self.constant(0.0)
    }
}

/// Shared NaN bookkeeping for back ends whose values are plain binary64.
#[derive(Debug, Default, Clone)]
pub(crate) struct FaultCell(Option<ScalarError>);

impl FaultCell {
    pub(crate) fn check(&mut self, v: f64) -> f64 {
        if v.is_nan() && self.0.is_none() {
            self.0 = Some(ScalarError::InvalidOperand);
        }
        v
    }

    pub(crate) fn raise(&mut self, e: ScalarError) {
        if self.0.is_none() {
            self.0 = Some(e);
        }
    }

    pub(crate) fn take(&mut self) -> Option<ScalarError> {
        self.0.take()
    }
}

pub(crate) fn truncate_unsigned(v: f64) -> Result<u64, ScalarError> {
    if v.is_nan() {
        return Err(ScalarError::InvalidOperand);
    }
    if v < 0.0 {
        return Err(ScalarError::NegativeUnsignedConversion);
    }
    Ok(v.trunc() as u64)
}

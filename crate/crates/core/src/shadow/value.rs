use std::fmt;

use serde::ser::{Serialize, SerializeStruct, Serializer};

use super::affine::AffineForm;
use super::extfloat::{ExtFloat, Rounding};

/// The ideal (or error-ledger) side of a shadow value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ideal {
    Form(AffineForm),
    /// The exact `+∞` used for unreached nodes.
    PosInf,
    /// Unbounded.
    Top,
}

impl Ideal {
    pub fn constant(v: f64) -> Self {
        Ideal::Form(AffineForm::from_f64(v))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn form(&self) -> Option<&AffineForm> {
        match self {
            Ideal::Form(f) => Some(f),
            _ => None,
        }
    }

    pub fn concretize(&self, prec: u32) -> Option<(ExtFloat, ExtFloat)> {
        self.form().map(|f| f.concretize(prec))
    }

    pub fn range(&self, prec: u32) -> Range {
        match self {
            Ideal::Form(f) => {
                let (lo, hi) = f.interval_f64(prec);
                Range::Bounded { lo, hi }
            }
            Ideal::PosInf => Range::PosInf,
            Ideal::Top => Range::Top,
        }
    }
}

/// A concrete binary64 execution paired with its ideal counterpart and a
/// ledger enclosing `float − ideal` built from per-operation rounding errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowScalar {
    pub float: f64,
    pub ideal: Ideal,
    pub ledger: Ideal,
}

impl ShadowScalar {
    pub fn constant(v: f64) -> Self {
        Self { float: v, ideal: Ideal::constant(v), ledger: Ideal::zero() }
    }

    /// Hull of `float − concretization(ideal)`, rounded outward.
    pub fn error_range(&self, prec: u32) -> Range {
        match (&self.ideal, self.float.is_finite()) {
            (Ideal::Form(f), true) => {
                let (lo, hi) = f.concretize(prec);
                let x = ExtFloat::from_f64(self.float);
                Range::Bounded {
                    lo: x.sub(&hi, prec, Rounding::Down).to_f64(Rounding::Down),
                    hi: x.sub(&lo, prec, Rounding::Up).to_f64(Rounding::Up),
                }
            }
            (Ideal::PosInf, false) if self.float == f64::INFINITY => Range::Bounded { lo: 0.0, hi: 0.0 },
            _ => Range::Top,
        }
    }

    /// Largest distance between `reference` and a point of the ideal range.
    pub fn distance_from(&self, reference: f64, prec: u32) -> ErrorBound {
        hull_distance(reference, &self.ideal, prec)
    }

    pub fn error_bound(&self, prec: u32) -> ErrorBound {
        self.distance_from(self.float, prec)
    }
}

pub fn hull_distance(reference: f64, ideal: &Ideal, prec: u32) -> ErrorBound {
    match ideal {
        Ideal::Form(f) if reference.is_finite() => {
            let (lo, hi) = f.concretize(prec);
            let x = ExtFloat::from_f64(reference);
            let a = x.sub(&lo, prec, Rounding::Up).abs();
            let b = hi.sub(&x, prec, Rounding::Up).abs();
            ErrorBound::Finite(std::cmp::max(a, b).to_f64(Rounding::Up))
        }
        Ideal::PosInf if reference == f64::INFINITY => ErrorBound::Finite(0.0),
        _ => ErrorBound::Top,
    }
}

/// Binary64 enclosure of an ideal value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Range {
    Bounded { lo: f64, hi: f64 },
    PosInf,
    Top,
}

impl Serialize for Range {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Range::Bounded { lo, hi } => {
                let mut st = s.serialize_struct("Range", 2)?;
                st.serialize_field("lo", lo)?;
                st.serialize_field("hi", hi)?;
                st.end()
            }
            Range::PosInf => s.serialize_str("inf"),
            Range::Top => s.serialize_str("top"),
        }
    }
}

/// A non-negative bound, or unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorBound {
    Finite(f64),
    Top,
}

impl ErrorBound {
    pub fn max(self, other: ErrorBound) -> ErrorBound {
        match (self, other) {
            (ErrorBound::Finite(a), ErrorBound::Finite(b)) => ErrorBound::Finite(a.max(b)),
            _ => ErrorBound::Top,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ErrorBound::Finite(v) => Some(v),
            ErrorBound::Top => None,
        }
    }
}

impl fmt::Display for ErrorBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErrorBound::Finite(v) => write!(f, "{v:e}"),
            ErrorBound::Top => f.write_str("top"),
        }
    }
}

impl Serialize for ErrorBound {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ErrorBound::Finite(v) => s.serialize_f64(*v),
            ErrorBound::Top => s.serialize_str("top"),
        }
    }
}

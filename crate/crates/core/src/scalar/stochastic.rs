//! Synchronous stochastic arithmetic: each value is a triple of samples that
//! are randomly rounded independently but driven through a single control
//! flow. Disagreements are counted rather than explored.

use serde::Serialize;

use super::random_round::{rr_apply, Op, RoundingDraw};
use super::{truncate_unsigned, Arith, FaultCell, Relation, ScalarError, Site};
use crate::rng::RngStream;

/// Decimal digits carried by a binary64 significand, as reported for
/// samples that agree exactly.
pub const DIGITS_CAPACITY: f64 = 15.7;
/// Student t quantile, 95 %, two degrees of freedom.
pub const STUDENT_K: f64 = 4.303;
/// Minimum drop in significant digits that counts as a cancellation.
const CANCELLATION_LOSS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StochasticTriple(pub [f64; 3]);

impl StochasticTriple {
    pub fn splat(v: f64) -> Self {
        Self([v; 3])
    }

    pub fn mean(&self) -> f64 {
        let [a, b, c] = self.0;
        if a == b && b == c {
            return a;
        }
        (a + b + c) / 3.0
    }

    /// Sample standard deviation (n − 1 denominator).
    pub fn sigma(&self) -> f64 {
        let [a, b, c] = self.0;
        if a == b && b == c {
            return 0.0;
        }
        let m = self.mean();
        let ss: f64 = self.0.iter().map(|v| (v - m) * (v - m)).sum();
        (ss / 2.0).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct InstabilityCounters {
    pub unstable_branching: u64,
    pub cancellation: u64,
    pub unstable_multiplication: u64,
    pub unstable_conversion: u64,
}

impl InstabilityCounters {
    pub fn total(&self) -> u64 {
        self.unstable_branching
            + self.cancellation
            + self.unstable_multiplication
            + self.unstable_conversion
    }
}

/// Estimated number of exact significant decimal digits of the mean.
pub fn significant_digits(a: &StochasticTriple) -> f64 {
    let sigma = a.sigma();
    if sigma == 0.0 {
        return DIGITS_CAPACITY;
    }
    let mean = a.mean();
    if mean == 0.0 || !sigma.is_finite() {
        return 0.0;
    }
    (mean.abs() / (sigma * STUDENT_K)).log10().clamp(0.0, DIGITS_CAPACITY)
}

pub fn st_apply(
    op: Op,
    a: &StochasticTriple,
    b: Option<&StochasticTriple>,
    draw: &mut RoundingDraw,
    counters: &mut InstabilityCounters,
) -> Result<StochasticTriple, ScalarError> {
    let mut out = [0.0; 3];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = rr_apply(op, a.0[i], b.map(|b| b.0[i]), draw)?;
    }
    let out = StochasticTriple(out);
    match (op, b) {
        (Op::Add | Op::Sub, Some(b)) if a.is_finite() && b.is_finite() && out.is_finite() => {
            let da = significant_digits(a);
            let db = significant_digits(b);
            if da > 0.0 && db > 0.0 && significant_digits(&out) <= da.max(db) - CANCELLATION_LOSS {
                counters.cancellation += 1;
            }
        }
        (Op::Mul, Some(b))
            if a.is_finite() && b.is_finite() && significant_digits(a) == 0.0 && significant_digits(b) == 0.0 =>
        {
            counters.unstable_multiplication += 1;
        }
        _ => {}
    }
    Ok(out)
}

/// Samplewise comparison resolved by majority vote.
pub fn st_compare(
    rel: Relation,
    a: &StochasticTriple,
    b: &StochasticTriple,
    counters: &mut InstabilityCounters,
) -> bool {
    let votes = (0..3).filter(|&i| rel.eval(a.0[i], b.0[i])).count();
    if votes != 0 && votes != 3 {
        counters.unstable_branching += 1;
    }
    votes >= 2
}

pub fn st_truncate_to_integer(
    a: &StochasticTriple,
    counters: &mut InstabilityCounters,
) -> Result<u64, ScalarError> {
    let t0 = truncate_unsigned(a.0[0])?;
    let t1 = truncate_unsigned(a.0[1])?;
    let t2 = truncate_unsigned(a.0[2])?;
    if t0 == t1 && t1 == t2 {
        return Ok(t0);
    }
    counters.unstable_conversion += 1;
    truncate_unsigned(a.mean())
}

/// Stochastic back end: three samples per value, shared random stream and
/// shared instability counters.
#[derive(Debug, Clone)]
pub struct Stochastic {
    draw: RoundingDraw,
    counters: InstabilityCounters,
    fault: FaultCell,
}

impl Stochastic {
    pub fn new(draw: RoundingDraw) -> Self {
        Self { draw, counters: InstabilityCounters::default(), fault: FaultCell::default() }
    }

    pub fn seeded(seed: u64) -> Self {
        Self::new(RoundingDraw::Random(RngStream::new(seed)))
    }

    pub fn counters(&self) -> InstabilityCounters {
        self.counters
    }

    fn apply(&mut self, op: Op, a: &StochasticTriple, b: Option<&StochasticTriple>) -> StochasticTriple {
        match st_apply(op, a, b, &mut self.draw, &mut self.counters) {
            Ok(v) => v,
            Err(e) => {
                self.fault.raise(e);
                StochasticTriple::splat(f64::NAN)
            }
        }
    }
}

impl Arith for Stochastic {
    type Num = StochasticTriple;

    fn constant(&mut self, v: f64) -> StochasticTriple {
        StochasticTriple::splat(v)
    }

    fn infinity(&mut self) -> StochasticTriple {
        StochasticTriple::splat(f64::INFINITY)
    }

    fn add(&mut self, a: &StochasticTriple, b: &StochasticTriple) -> StochasticTriple {
        self.apply(Op::Add, a, Some(b))
    }

    fn sub(&mut self, a: &StochasticTriple, b: &StochasticTriple) -> StochasticTriple {
        self.apply(Op::Sub, a, Some(b))
    }

    fn mul(&mut self, a: &StochasticTriple, b: &StochasticTriple) -> StochasticTriple {
        self.apply(Op::Mul, a, Some(b))
    }

    fn div(&mut self, a: &StochasticTriple, b: &StochasticTriple) -> StochasticTriple {
        self.apply(Op::Div, a, Some(b))
    }

    fn sqrt(&mut self, a: &StochasticTriple) -> StochasticTriple {
        self.apply(Op::Sqrt, a, None)
    }

    fn neg(&mut self, a: &StochasticTriple) -> StochasticTriple {
        StochasticTriple(a.0.map(|v| -v))
    }

    fn compare(
        &mut self,
        _site: &'static Site,
        rel: Relation,
        a: &StochasticTriple,
        b: &StochasticTriple,
    ) -> bool {
        st_compare(rel, a, b, &mut self.counters)
    }

    fn truncate(&mut self, _site: &'static Site, a: &StochasticTriple) -> Result<u64, ScalarError> {
        st_truncate_to_integer(a, &mut self.counters)
    }

    fn is_infinite(&self, a: &StochasticTriple) -> bool {
        a.0[0].is_infinite()
    }

    fn value(&self, a: &StochasticTriple) -> f64 {
        a.mean()
    }

    fn take_fault(&mut self) -> Option<ScalarError> {
        self.fault.take()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(a: f64, b: f64, c: f64) -> StochasticTriple {
        StochasticTriple([a, b, c])
    }

    #[test]
    fn exact_add_is_unperturbed() {
        let mut c = InstabilityCounters::default();
        let mut d = RoundingDraw::Random(RngStream::new(1));
        let r = st_apply(Op::Add, &t(1.0, 1.0, 1.0), Some(&t(2.0, 2.0, 2.0)), &mut d, &mut c).unwrap();
        assert_eq!(r, t(3.0, 3.0, 3.0));
        assert_eq!(c, InstabilityCounters::default());
    }

    #[test]
    fn cancellation_detected() {
        // samples spread by one ulp around 1: sigma = 2^-52, digits ≈ 15.02
        let u = 2f64.powi(-52);
        let a = t(1.0 - u, 1.0, 1.0 + u);
        let b = t(1.0 + 1e-9 + u, 1.0 + 1e-9, 1.0 + 1e-9 - u);
        let da = (1.0 / (u * STUDENT_K)).log10();
        assert!((significant_digits(&a) - da).abs() < 1e-3);
        assert!(significant_digits(&a) > 15.0 && significant_digits(&b) > 15.0);
        let mut c = InstabilityCounters::default();
        let r = st_apply(Op::Sub, &a, Some(&b), &mut RoundingDraw::Nearest, &mut c).unwrap();
        // |mean| ≈ 1e-9, sigma ≈ 2u → about 6 digits left
        assert!(significant_digits(&r) < 7.0);
        assert_eq!(c.cancellation, 1);
    }

    #[test]
    fn unstable_multiplication_on_noise() {
        let mut c = InstabilityCounters::default();
        let noise = t(0.0, 1.0, -1.0);
        assert_eq!(significant_digits(&noise), 0.0);
        st_apply(Op::Mul, &noise, Some(&noise), &mut RoundingDraw::Nearest, &mut c).unwrap();
        assert_eq!(c.unstable_multiplication, 1);
    }

    #[test]
    fn compare_majority() {
        let mut c = InstabilityCounters::default();
        assert!(st_compare(Relation::Lt, &t(1.0, 1.0, 1.0), &t(2.0, 2.0, 2.0), &mut c));
        assert_eq!(c.unstable_branching, 0);
        let u = 2f64.powi(-52);
        let b = t(1.0 + u, 1.0 - u, 1.0 + u);
        assert!(st_compare(Relation::Lt, &t(1.0, 1.0, 1.0), &b, &mut c));
        assert_eq!(c.unstable_branching, 1);
        assert!(st_compare(Relation::Eq, &t(5.0, 5.0, 5.0), &t(5.0, 5.0, 5.0), &mut c));
        assert_eq!(c.unstable_branching, 1);
    }

    #[test]
    fn digits_formula() {
        assert_eq!(significant_digits(&t(0.392, 0.392, 0.392)), DIGITS_CAPACITY);
        assert_eq!(significant_digits(&t(0.0, 1.0, -1.0)), 0.0);
        // mean 100, sigma 1e-13: log10(100 / 4.303e-13) = 14.36621...
        let s = 1e-13;
        let tr = t(100.0 - s, 100.0, 100.0 + s);
        let expected = (100.0f64 / (tr.sigma() * STUDENT_K)).log10();
        assert!((significant_digits(&tr) - expected).abs() < 1e-12);
        assert!((significant_digits(&tr) - 14.366).abs() < 0.01);
    }

    #[test]
    fn truncation() {
        let mut c = InstabilityCounters::default();
        assert_eq!(st_truncate_to_integer(&t(100.0, 100.0, 100.0), &mut c).unwrap(), 100);
        assert_eq!(st_truncate_to_integer(&t(0.0, 0.0, 0.0), &mut c).unwrap(), 0);
        assert_eq!(c.unstable_conversion, 0);
        let below = 100f64.next_down();
        assert_eq!(below.trunc(), 99.0);
        assert_eq!(st_truncate_to_integer(&t(100.0, below, 100.0), &mut c).unwrap(), 100);
        assert_eq!(c.unstable_conversion, 1);
        assert_eq!(
            st_truncate_to_integer(&t(1.0, -1.0, 1.0), &mut c),
            Err(ScalarError::NegativeUnsignedConversion)
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn compare_is_permutation_invariant(
                a in prop::array::uniform3(-2.0f64..2.0),
                b in prop::array::uniform3(-2.0f64..2.0),
            ) {
                let mut c = InstabilityCounters::default();
                let base = st_compare(Relation::Lt, &StochasticTriple(a), &StochasticTriple(b), &mut c);
                for p in [[1, 0, 2], [2, 1, 0], [0, 2, 1], [1, 2, 0], [2, 0, 1]] {
                    let pa = StochasticTriple([a[p[0]], a[p[1]], a[p[2]]]);
                    let pb = StochasticTriple([b[p[0]], b[p[1]], b[p[2]]]);
                    prop_assert_eq!(st_compare(Relation::Lt, &pa, &pb, &mut c), base);
                }
            }
        }
    }
}

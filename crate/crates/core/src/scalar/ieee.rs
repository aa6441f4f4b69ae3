use super::{truncate_unsigned, Arith, FaultCell, Relation, ScalarError, Site};

/// Plain IEEE-754 binary64 execution, round-to-nearest.
#[derive(Debug, Default, Clone)]
pub struct Ieee {
    fault: FaultCell,
}

impl Ieee {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Arith for Ieee {
    type Num = f64;

    fn constant(&mut self, v: f64) -> f64 {
        v
    }

    fn infinity(&mut self) -> f64 {
        f64::INFINITY
    }

    fn add(&mut self, a: &f64, b: &f64) -> f64 {
        self.fault.check(a + b)
    }

    fn sub(&mut self, a: &f64, b: &f64) -> f64 {
        self.fault.check(a - b)
    }

    fn mul(&mut self, a: &f64, b: &f64) -> f64 {
        self.fault.check(a * b)
    }

    fn div(&mut self, a: &f64, b: &f64) -> f64 {
        self.fault.check(a / b)
    }

    fn sqrt(&mut self, a: &f64) -> f64 {
        self.fault.check(a.sqrt())
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

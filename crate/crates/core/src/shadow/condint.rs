//! Conditional integers: the result of a float-to-integer conversion whose
//! float and ideal values disagree, written as a cascade
//! `if b₀ then base else if b₁ then v₀ else … v_{k−1}`.

use serde::Serialize;

use super::extfloat::ExtFloat;

pub type GuardId = u32;

pub const DEFAULT_MAX_GUARDS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CondInt {
    /// Value under the float semantics.
    pub base: u64,
    /// `(bⱼ, vⱼ)`: `vⱼ` is selected when every guard up to `bⱼ` is false and
    /// the next one (if any) is true.
    pub alternatives: Vec<(GuardId, u64)>,
}

impl CondInt {
    pub fn exact(base: u64) -> Self {
        Self { base, alternatives: Vec::new() }
    }

    pub fn is_exact(&self) -> bool {
        self.alternatives.is_empty()
    }

    /// Every value the cascade can take, float value first.
    pub fn values(&self) -> Vec<u64> {
        std::iter::once(self.base).chain(self.alternatives.iter().map(|a| a.1)).collect()
    }

    /// Resolves the cascade under a full guard assignment.
    pub fn collapse(&self, guard: impl Fn(GuardId) -> bool) -> u64 {
        let values = self.values();
        for (j, (g, _)) in self.alternatives.iter().enumerate() {
            if guard(*g) {
                return values[j];
            }
        }
        *values.last().expect("values is never empty")
    }
}

/// Outcome of converting a shadow value with a bounded ideal range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Conversion {
    /// The ideal range stays inside `[base, base + 1)`.
    Stable(u64),
    Split(CondInt),
    /// Too many alternatives, or an unbounded ideal: only the float value is
    /// kept.
    Fallback(u64),
}

/// Builds the conditional integer for `trunc(float)` given the ideal range
/// `[lo, hi]` (`None` when unbounded). `float` must be finite and ≥ 0.
pub fn conditional_truncation(
    float: f64,
    ideal: Option<(&ExtFloat, &ExtFloat)>,
    next_guard: &mut GuardId,
    max_guards: usize,
) -> Conversion {
    let base = float.trunc() as u64;
    let Some((lo, hi)) = ideal else {
        return Conversion::Fallback(base);
    };
    let lo_i = lo.floor_u64();
    let hi_i = hi.floor_u64();
    if lo_i == base && hi_i == base {
        return Conversion::Stable(base);
    }
    let count = hi_i.saturating_sub(lo_i) + 1 - u64::from(lo_i <= base && base <= hi_i);
    if count as usize > max_guards {
        return Conversion::Fallback(base);
    }
    let alternatives = (lo_i..=hi_i)
        .filter(|&v| v != base)
        .map(|v| {
            let g = *next_guard;
            *next_guard += 1;
            (g, v)
        })
        .collect();
    Conversion::Split(CondInt { base, alternatives })
}

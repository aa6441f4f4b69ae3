//! Position-addressable random stream.
//!
//! Draw number `k` of the stream with seed `s` is the `(k+1)`-th output of
//! SplitMix64 started from state `s`:
//!
//! ```text
//! z = s + (k + 1) * 0x9E3779B97F4A7C15          (mod 2^64)
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! draw(s, k) = z ^ (z >> 31)
//! ```
//!
//! A stream is therefore fully determined by `(seed, counter)`, and any
//! implementation of the formula above reproduces the same bits. Derived
//! seeds for ensemble members are `draw(seed, i)` for member `i`.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn draw(seed: u64, counter: u64) -> u64 {
    mix64(seed.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN)))
}

/// Seed of ensemble member `index` derived from a parent seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    draw(seed, index)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
    counter: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, counter: 0 }
    }

    pub fn at(seed: u64, counter: u64) -> Self {
        Self { seed, counter }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = draw(self.seed, self.counter);
        self.counter = self.counter.wrapping_add(1);
        v
    }

    /// Top bit of the next draw.
    pub fn next_bool(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

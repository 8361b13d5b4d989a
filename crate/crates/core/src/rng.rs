//! Counter-based pseudo-random stream used by every generator and sampler.
//!
//! The stream is SplitMix64 evaluated at explicit counters: the `i`-th draw
//! (zero-based) under key `key` is
//!
//! ```text
//! z = key + (i + 1) * 0x9E3779B97F4A7C15          (wrapping)
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9        (wrapping)
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB        (wrapping)
//! out = z ^ (z >> 31)
//! ```
//!
//! Uniform reals on `[0, 1)` take the top 53 bits: `(out >> 11) * 2^-53`.
//! Bounded integers in `[0, m)` use rejection: draws below `(2^64 - m) mod m`
//! are discarded and the result is `out mod m`. These constants are enough to
//! reproduce every stream bit-for-bit in another language.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX2: u64 = 0x94D0_49BB_1331_11EB;

/// Domain tag mixed into per-round sampling keys.
const SAMPLING_DOMAIN: u64 = 0x7461_755f_6e69_6365; // "tau_nice"

/// The SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(MIX1);
    z = (z ^ (z >> 27)).wrapping_mul(MIX2);
    z ^ (z >> 31)
}

/// A keyed counter stream. Cloning it forks the stream at the current counter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        Self { key, counter: 0 }
    }

    /// Stream used to draw the client subset of round `round` under `seed`.
    pub fn for_round(seed: u64, round: u64) -> Self {
        Self::new(mix64(seed ^ mix64(round ^ SAMPLING_DOMAIN)))
    }

    /// Value of the stream at an explicit counter, without advancing.
    #[inline]
    pub fn at(key: u64, counter: u64) -> u64 {
        mix64(key.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let out = Self::at(self.key, self.counter);
        self.counter = self.counter.wrapping_add(1);
        out
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[0, bound)`. `bound` must be nonzero.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "next_below requires a positive bound");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let r = self.next_u64();
            if r >= threshold {
                return r % bound;
            }
        }
    }
}

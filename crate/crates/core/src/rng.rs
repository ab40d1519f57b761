//! Counter-based random streams.
//!
//! Every stream is a pure function of `(seed, stream index)`, so sample `i`
//! of a Monte Carlo run draws the same numbers no matter which worker
//! processes it or in what order. The generator is SplitMix64 with a
//! per-stream key: output `k` is `mix(key + k * GOLDEN)`.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline(always)]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Source of uniform 64-bit words.
pub trait RandomSource {
    fn next_u64(&mut self) -> u64;

    /// Uniform in `[0, 1)` with 53 bits of precision.
    fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, bound)`. `bound` must be positive.
    fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "next_below requires a positive bound");
        // Lemire's multiply-shift with rejection.
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let product = (self.next_u64() as u128) * (bound as u128);
            if (product as u64) >= threshold {
                return (product >> 64) as u64;
            }
        }
    }

    fn next_sign(&mut self) -> i8 {
        if self.next_u64() >> 63 == 1 {
            1
        } else {
            -1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    /// Stream `stream` of the family keyed by `seed`.
    #[inline]
    pub fn new(seed: u64, stream: u64) -> Self {
        let key = mix64(seed ^ mix64(stream.wrapping_add(GOLDEN)));
        CounterRng { key, counter: 0 }
    }

    /// Derived family for a sub-task; `split(a).stream(b)` differs from `split(c).stream(d)` unless `(a, b) == (c, d)`.
    pub fn split(&self, tag: u64) -> u64 {
        mix64(self.key ^ mix64(tag.wrapping_mul(GOLDEN).wrapping_add(0x632B_E59B_D9B4_E019)))
    }

    pub fn position(&self) -> u64 {
        self.counter
    }
}

impl RandomSource for CounterRng {
    #[inline(always)]
    fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }
}

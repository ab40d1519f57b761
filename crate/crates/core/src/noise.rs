use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::{CubePoint, Error, RandomSource, Result};

const TWO_POW_64: f64 = 18_446_744_073_709_551_616.0;

/// Flip probability `eps`, optionally held as an exact fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    epsilon: f64,
    rational: Option<(u64, u64)>,
}

impl NoiseParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidEpsilon(epsilon));
        }
        Ok(NoiseParams {
            epsilon,
            rational: None,
        })
    }

    /// Exact `num / den`, stored reduced.
    pub fn rational(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num > den {
            return Err(Error::InvalidRational { num, den });
        }
        let g = num.gcd(&den);
        let (num, den) = (num / g, den / g);
        Ok(NoiseParams {
            epsilon: num as f64 / den as f64,
            rational: Some((num, den)),
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn exact(&self) -> Option<(u64, u64)> {
        self.rational
    }

    pub fn exact_big(&self) -> Option<BigRational> {
        self.rational
            .map(|(p, q)| BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    /// `m = floor(1 / eps)`, defined for `eps > 0`.
    pub fn m(&self) -> Option<u64> {
        if let Some((p, q)) = self.rational {
            return (p > 0).then(|| q / p);
        }
        if self.epsilon == 0.0 {
            return None;
        }
        let mut m = (1.0 / self.epsilon).floor();
        // keep m * eps <= 1 < (m + 1) * eps under f64 rounding
        while m > 1.0 && m * self.epsilon > 1.0 {
            m -= 1.0;
        }
        while (m + 1.0) * self.epsilon <= 1.0 {
            m += 1.0;
        }
        Some(m as u64)
    }

    pub fn flip_rule(&self) -> FlipRule {
        FlipRule::new(self)
    }

    /// `eps` rounded down to a multiple of `2^-32`, as the numerator over `2^32`.
    pub fn dyadic32(&self) -> u64 {
        match self.rational {
            Some((p, q)) => ((p as u128) << 32).div_euclid(q as u128) as u64,
            None => (self.epsilon * 4_294_967_296.0).floor() as u64,
        }
    }
}

/// Per-coordinate flip decision: a uniform 64-bit draw flips iff it is below
/// `floor(eps * 2^64)`. `eps = 1` always flips.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlipRule {
    threshold: u64,
    always: bool,
}

impl FlipRule {
    fn new(noise: &NoiseParams) -> Self {
        let always = noise.epsilon >= 1.0;
        let threshold = match noise.rational {
            Some((p, q)) if !always => (((p as u128) << 64) / q as u128) as u64,
            _ if always => u64::MAX,
            // saturating cast; eps < 1 never reaches 2^64 after the floor except by rounding
            _ => (noise.epsilon * TWO_POW_64).floor() as u64,
        };
        FlipRule { threshold, always }
    }

    #[inline(always)]
    pub fn flips(self, draw: u64) -> bool {
        draw < self.threshold || self.always
    }

    /// The flip probability this rule realizes.
    pub fn realized_epsilon(self) -> f64 {
        if self.always {
            1.0
        } else {
            self.threshold as f64 / TWO_POW_64
        }
    }
}

/// Negate each coordinate independently with probability `eps`. One 64-bit
/// draw is consumed per coordinate.
pub fn apply_noise<R: RandomSource + ?Sized>(
    x: &CubePoint,
    noise: &NoiseParams,
    rng: &mut R,
) -> CubePoint {
    let rule = noise.flip_rule();
    let mut y = x.clone();
    for c in y.coords_mut() {
        if rule.flips(rng.next_u64()) {
            *c = -*c;
        }
    }
    y
}

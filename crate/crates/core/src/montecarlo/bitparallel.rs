use std::time::Instant;

use super::{draw_masks, draw_point, parallel_count, DecisionProtocol, McConfig, McEstimate, McMethod};
use crate::{CounterRng, Error, NoiseParams, RandomSource, Result, SignValue};

/// 64 independent flip decisions with probability `dyadic / 2^32`
/// (`dyadic <= 2^32`).
///
/// Each lane compares a uniform number `u = 0.r1 r2 ...`, one random word per
/// binary digit, against `eps = 0.b1 b2 ... b32` from the most significant
/// digit down, and flips iff `u < eps`. A lane is settled at the first digit
/// where `r_k != b_k`; generation stops once every lane is settled or the
/// remaining digits of `eps` are zero, so about `log2(64) + 2` words are
/// consumed on average.
#[inline]
pub(crate) fn noise_mask_word<R: RandomSource + ?Sized>(rng: &mut R, dyadic: u64) -> u64 {
    if dyadic == 0 {
        return 0;
    }
    if dyadic >= 1 << 32 {
        return !0;
    }
    let lowest = dyadic.trailing_zeros();
    let mut flips = 0u64;
    let mut undecided = !0u64;
    let mut digit = 31u32;
    loop {
        let r = rng.next_u64();
        // all ones where the digit of eps is 1
        let bit = (dyadic >> digit & 1).wrapping_neg();
        flips |= undecided & !r & bit;
        undecided &= !(r ^ bit);
        if undecided == 0 || digit == lowest {
            return flips;
        }
        digit -= 1;
    }
}

/// Estimate `p_eps` for simple majority `sgn(sum_i x_i - t)` on `n`
/// coordinates, 64 coordinates per machine word.
///
/// `eps` is realized as `floor(eps * 2^32) / 2^32`, reported in
/// [`McEstimate::realized_epsilon`]. Given the same seed this consumes exactly
/// the stream of [`super::estimate`] under [`DecisionProtocol::SharedWords`],
/// so the two agree on the disagreement count.
pub fn estimate_bitparallel(
    n: usize,
    threshold: f64,
    noise: &NoiseParams,
    samples: u64,
    seed: u64,
    config: &McConfig,
) -> Result<McEstimate> {
    if n == 0 {
        return Err(Error::EmptyWeights);
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    if !threshold.is_finite() {
        return Err(Error::NonFinite { what: "threshold" });
    }
    let started = Instant::now();
    let words = n.div_ceil(64);
    let tail = if n % 64 == 0 { !0u64 } else { (1u64 << (n % 64)) - 1 };
    let dyadic = noise.dyadic32();
    // f depends on x only through its number of +1 coordinates
    let signs: Vec<SignValue> = (0..=n as i64)
        .map(|ones| SignValue::compare_f64((2 * ones - n as i64) as f64, threshold))
        .collect();
    let sign = |ones: u32| signs[ones as usize];

    let count = if words == 1 {
        parallel_count(samples, config.workers, |range| {
            let mut hits = 0;
            for i in range {
                let mut rng = CounterRng::new(seed, i);
                let x = rng.next_u64() & tail;
                let mask = noise_mask_word(&mut rng, dyadic) & tail;
                hits += (sign(x.count_ones()) != sign((x ^ mask).count_ones())) as u64;
            }
            hits
        })
    } else {
        parallel_count(samples, config.workers, |range| {
            let mut x = vec![0u64; words];
            let mut masks = vec![0u64; words];
            let mut hits = 0;
            for i in range {
                let mut rng = CounterRng::new(seed, i);
                draw_point(&mut rng, &mut x);
                draw_masks(&mut rng, dyadic, n, &mut masks);
                *x.last_mut().expect("n >= 1") &= tail;
                let ones: u32 = x.iter().map(|w| w.count_ones()).sum();
                let noisy: u32 = x.iter().zip(&masks).map(|(w, m)| (w ^ m).count_ones()).sum();
                hits += (sign(ones) != sign(noisy)) as u64;
            }
            hits
        })
    };
    Ok(McEstimate::from_count(
        count,
        samples,
        seed,
        config,
        McMethod::Bitparallel,
        DecisionProtocol::SharedWords,
        noise.epsilon(),
        dyadic as f64 / 4_294_967_296.0,
        started,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::sheppard;
    use crate::montecarlo::estimate;
    use crate::ThresholdFunction;

    fn shared() -> McConfig {
        McConfig {
            protocol: DecisionProtocol::SharedWords,
            ..McConfig::default()
        }
    }

    #[test]
    fn mask_bit_density() {
        for (num, den) in [(1u64, 10u64), (1, 4), (3, 8), (1, 3), (1, 2), (7, 10)] {
            let noise = NoiseParams::rational(num, den).unwrap();
            let dyadic = noise.dyadic32();
            let mut rng = CounterRng::new(4, 0);
            let words = 20_000;
            let ones: u64 = (0..words).map(|_| noise_mask_word(&mut rng, dyadic).count_ones() as u64).sum();
            let trials = (64 * words) as f64;
            let p = dyadic as f64 / 4_294_967_296.0;
            let sd = (trials * p * (1.0 - p)).sqrt();
            assert!((ones as f64 - trials * p).abs() < 5.0 * sd, "{num}/{den}: {ones}");
        }
    }

    #[test]
    fn mask_endpoints() {
        let mut rng = CounterRng::new(4, 0);
        assert_eq!(noise_mask_word(&mut rng, 0), 0);
        assert_eq!(noise_mask_word(&mut rng, 1 << 32), !0);
    }

    #[test]
    fn matches_general_path_under_shared_words() {
        for (n, t) in [(63usize, 0.0), (64, 0.0), (65, 1.0), (130, -2.0), (7, 0.5)] {
            let noise = NoiseParams::new(0.1).unwrap();
            let fast = estimate_bitparallel(n, t, &noise, 20_000, 9, &McConfig::default()).unwrap();
            let f = ThresholdFunction::simple_majority(n, t).unwrap();
            let slow = estimate(&f, &noise, 20_000, 9, &shared()).unwrap();
            assert_eq!(fast.disagreements, slow.disagreements, "n = {n}");
            assert_eq!(fast.realized_epsilon, slow.realized_epsilon);
        }
    }

    #[test]
    fn zero_noise_is_exactly_zero() {
        let est = estimate_bitparallel(101, 0.0, &NoiseParams::new(0.0).unwrap(), 10_000, 1, &McConfig::default()).unwrap();
        assert_eq!(est.p_hat, 0.0);
        assert_eq!(est.disagreements, 0);
    }

    #[test]
    fn large_n_matches_arccos_limit() {
        let noise = NoiseParams::new(0.01).unwrap();
        let est = estimate_bitparallel(10_001, 0.0, &noise, 200_000, 2, &McConfig::default()).unwrap();
        let limit = sheppard(&noise).value;
        assert!((est.p_hat - limit).abs() <= 3.0 * est.standard_error() + 0.005, "{est:?}");
    }

    #[test]
    fn half_noise_odd_majority() {
        let est = estimate_bitparallel(7, 0.0, &NoiseParams::new(0.5).unwrap(), 200_000, 8, &McConfig::default()).unwrap();
        assert!(est.covers(0.5), "{est:?}");
    }
}

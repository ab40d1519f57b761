use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use super::partition::{PartitionTrace, Partitioner};
use crate::bounds::mad_binomial;
use crate::exact::{p_exact, Engine, ExactConfig};
use crate::montecarlo::{parallel_ranges, z_for_level};
use crate::{reduce_threshold, CounterRng, CubePoint, Error, NoiseParams, Result, SignValue, ThresholdFunction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KeypointCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub equal: bool,
}

/// Both sides of the pointwise identity
///
/// ```text
/// 1[sgn(y1 + s1) != sgn(y1 - s1)] = 2 * 1[s1 != 0] * E(1/2 - 1[sgn(S1 + y1) = -sgn(S1)] | y1, |s1|)
/// ```
///
/// with the conditional expectation taken exactly over `S1 = +-|s1|`.
pub fn check_keypoint(s1: f64, y1: f64) -> KeypointCheck {
    keypoint_with_offset(s1, y1, 0.0)
}

pub(crate) fn keypoint_with_offset(s1: f64, y1: f64, offset: f64) -> KeypointCheck {
    let lhs = if SignValue::of_f64(y1 + s1) != SignValue::of_f64(y1 - s1) { 1.0 } else { 0.0 };
    let rhs = if s1 == 0.0 {
        0.0
    } else {
        let a = s1.abs();
        let opposite = |s: f64| (SignValue::of_f64(s + y1) == SignValue::of_f64(s).negate()) as u8 as f64;
        let mean = 0.5 * (opposite(-a) + opposite(a));
        2.0 * (0.5 - mean)
    } + offset;
    KeypointCheck { lhs, rhs, equal: lhs == rhs }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointwiseCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `sum_{j in lambda} (1/2 - 1[sgn<w,x> = -xi_j]) <= |B - #lambda/2| + 1[<w,x> = 0] #{j >= 1 : A_j nonempty} / 2`.
pub fn check_pointwise_inequality(trace: &PartitionTrace, sign_wx: SignValue) -> PointwiseCheck {
    let lhs: f64 = trace
        .lambda
        .iter()
        .map(|&j| if sign_wx == trace.xi[j].negate() { -0.5 } else { 0.5 })
        .sum();
    let occupied = trace.blocks[1..].iter().filter(|b| !b.is_empty()).count() as f64;
    let tie = if sign_wx == SignValue::Zero { 0.5 * occupied } else { 0.0 };
    let rhs = (trace.b_lambda as f64 - trace.lambda.len() as f64 / 2.0).abs() + tie;
    PointwiseCheck { lhs, rhs, holds: lhs <= rhs }
}

/// `E|B_l - l/2|` nondecreasing for `l = 1..=l_max`.
pub fn check_mad_monotone(l_max: u64) -> Result<bool> {
    if l_max < 2 {
        return Err(Error::InvalidArgument("check_mad_monotone requires l_max >= 2".into()));
    }
    let mut previous = mad_binomial(1)?;
    for l in 2..=l_max {
        let current = mad_binomial(l)?;
        let ordered = match (&previous.exact, &current.exact) {
            (Some(a), Some(b)) => a <= b,
            _ => previous.value <= current.value * (1.0 + 1e-12),
        };
        if !ordered {
            return Ok(false);
        }
        previous = current;
    }
    Ok(true)
}

/// Zero-threshold form of `f` and its noise-exempt coordinates.
pub(crate) fn zero_threshold_form(f: &ThresholdFunction) -> Result<(ThresholdFunction, Vec<usize>)> {
    if f.threshold() == 0.0 {
        Ok((f.clone(), Vec::new()))
    } else {
        let r = reduce_threshold(f)?;
        Ok((r.function, vec![r.exempt]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightCheck {
    /// Mean of `(2/m) sum_{j in lambda} (1/2 - 1[sgn<w,X> = -xi_j])`.
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
    pub draws: u64,
    pub exact_p: f64,
    pub passed: bool,
}

/// Statistical check that the partition average equals `p_eps`.
///
/// Each draw yields a value in `[-1, 1]`, so the interval is the normal one
/// from the sample variance rather than a binomial interval. `t != 0` is
/// handled through the extra exempt coordinate.
pub fn check_tight(
    f: &ThresholdFunction,
    noise: &NoiseParams,
    draws: u64,
    seed: u64,
    level: f64,
    workers: usize,
) -> Result<TightCheck> {
    if draws < 2 {
        return Err(Error::InvalidArgument("check_tight needs at least two draws".into()));
    }
    let exact_p = p_exact(f, noise, Engine::Auto, &ExactConfig::default())?.value();
    let (g, exempt) = zero_threshold_form(f)?;
    let partitioner = Partitioner::new(&g, noise, &exempt)?;
    let m = partitioner.m() as f64;
    let sums = parallel_ranges(draws, workers, |range| {
        let (mut sum, mut squares) = (0i128, 0i128);
        for i in range {
            let k = partitioner.sample(&mut CounterRng::new(seed, i)).scaled_tight_term() as i128;
            sum += k;
            squares += k * k;
        }
        (sum, squares)
    });
    let (sum, squares) = sums.iter().fold((0i128, 0i128), |a, b| (a.0 + b.0, a.1 + b.1));
    let d = draws as f64;
    // values are k / m
    let mean = sum as f64 / (m * d);
    let second = squares as f64 / (m * m * d);
    let variance = (second - mean * mean).max(0.0) * d / (d - 1.0);
    let half = z_for_level(level) * (variance / d).sqrt();
    let (ci_low, ci_high) = (mean - half, mean + half);
    Ok(TightCheck {
        estimate: mean,
        ci_low,
        ci_high,
        level,
        draws,
        exact_p,
        passed: ci_low <= exact_p && exact_p <= ci_high,
    })
}

/// Largest `2^n (m+1)^n'` walked by [`tight_exact`].
pub const TIGHT_EXACT_CAP: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightExact {
    #[serde(serialize_with = "crate::exact::serialize_rational")]
    pub partition_average: BigRational,
    #[serde(serialize_with = "crate::exact::serialize_rational")]
    pub exact_p: BigRational,
    pub equal: bool,
}

/// The partition average as an exact fraction, by walking every `x` and every
/// labelling `tau`. Needs `eps` given as a fraction.
pub fn tight_exact(f: &ThresholdFunction, noise: &NoiseParams) -> Result<TightExact> {
    let eps = noise.exact_big().ok_or_else(|| {
        Error::InvalidArgument("exact partition check needs eps as a fraction p/q".into())
    })?;
    let exact_p = p_exact(f, noise, Engine::Enum, &ExactConfig::default())?
        .p
        .as_rational()
        .cloned()
        .expect("rational eps gives a rational result");
    let (g, exempt) = zero_threshold_form(f)?;
    let partitioner = Partitioner::new(&g, noise, &exempt)?;
    let n = g.n();
    let m = partitioner.m();
    let free: Vec<usize> = (0..n).filter(|i| !exempt.contains(i)).collect();
    let work = (m as u64 + 1)
        .checked_pow(free.len() as u32)
        .and_then(|v| v.checked_mul(1 << n))
        .unwrap_or(u64::MAX);
    if work > TIGHT_EXACT_CAP {
        return Err(Error::Cap {
            what: "exact partition walk 2^n (m+1)^n",
            value: work,
            cap: TIGHT_EXACT_CAP,
        });
    }

    // acc[c] = sum over (x, tau) with c labelled coordinates of m * value
    let mut acc = vec![0i64; free.len() + 1];
    let mut tau = vec![0usize; n];
    for bits in 0..1u64 << n {
        let x = CubePoint::from_index(bits, n);
        loop {
            let labelled = free.iter().filter(|&&i| tau[i] != 0).count();
            acc[labelled] += partitioner.trace(x.clone(), tau.clone()).scaled_tight_term();
            // odometer over the free coordinates
            let mut carry = true;
            for &i in &free {
                if tau[i] == m {
                    tau[i] = 0;
                } else {
                    tau[i] += 1;
                    carry = false;
                    break;
                }
            }
            if carry {
                break;
            }
        }
    }
    let rest = BigRational::one() - &eps * BigRational::from_integer(BigInt::from(m));
    let mut total = BigRational::zero();
    for (c, &a) in acc.iter().enumerate() {
        if a != 0 {
            total += num_traits::pow(eps.clone(), c)
                * num_traits::pow(rest.clone(), free.len() - c)
                * BigRational::from_integer(BigInt::from(a));
        }
    }
    let partition_average = total / BigRational::from_integer(BigInt::from(m as u64) << n);
    Ok(TightExact {
        equal: partition_average == exact_p,
        partition_average,
        exact_p,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetupLawCheck {
    /// `(value, exact probability, empirical frequency)` over the union of supports.
    pub cells: Vec<(i64, f64, f64)>,
    pub draws: u64,
    pub passed: bool,
}

/// Given `x`, the empirical law of `Y_1 - S_1` against the exact law of
/// `<w, N_eps(x)>`; every cell within five standard errors. Integer weights.
pub fn check_setup_law(
    f: &ThresholdFunction,
    noise: &NoiseParams,
    x: &CubePoint,
    draws: u64,
    seed: u64,
) -> Result<SetupLawCheck> {
    let (g, exempt) = zero_threshold_form(f)?;
    let (w, _) = g.integer_weights().ok_or(Error::NonIntegerWeights)?;
    let mut coords = x.coords().to_vec();
    if coords.len() != f.n() {
        return Err(Error::DimensionMismatch { expected: f.n(), actual: coords.len() });
    }
    if !exempt.is_empty() {
        // the extra coordinate: condition on x_(n+1) = +1
        coords.push(1);
    }
    let eps = noise.epsilon();
    let mut law: BTreeMap<i64, f64> = BTreeMap::from([(0, 1.0)]);
    for (i, (&wi, &xi)) in w.iter().zip(&coords).enumerate() {
        let v = wi * xi as i64;
        let flip = if exempt.contains(&i) { 0.0 } else { eps };
        let mut next = BTreeMap::new();
        for (&s, &p) in &law {
            *next.entry(s + v).or_insert(0.0) += p * (1.0 - flip);
            *next.entry(s - v).or_insert(0.0) += p * flip;
        }
        law = next;
    }
    let partitioner = Partitioner::new(&g, noise, &exempt)?;
    let point = CubePoint::new(coords).expect("coordinates are signs");
    let mut seen: BTreeMap<i64, u64> = BTreeMap::new();
    for i in 0..draws {
        let t = partitioner.sample_at(point.clone(), &mut CounterRng::new(seed, i));
        *seen.entry((t.y1 - t.s[1]) as i64).or_insert(0) += 1;
    }
    let d = draws as f64;
    let mut keys: Vec<i64> = law.keys().chain(seen.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    let mut passed = true;
    let cells = keys
        .into_iter()
        .map(|k| {
            let p = law.get(&k).copied().unwrap_or(0.0);
            let freq = seen.get(&k).copied().unwrap_or(0) as f64 / d;
            let se = (p * (1.0 - p) / d).sqrt();
            if (freq - p).abs() > 5.0 * se + 1.0 / d {
                passed = false;
            }
            (k, p, freq)
        })
        .collect();
    Ok(SetupLawCheck { cells, draws, passed })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AveragingCheck {
    /// Sample mean of `|B_lambda - #lambda/2|`.
    pub mean: f64,
    pub standard_error: f64,
    /// `E|B_m - m/2|`.
    pub mad_m: f64,
    pub draws: u64,
    pub passed: bool,
}

/// `E|B_lambda - #lambda/2| <= E|B_m - m/2|`, passing unless the sample mean
/// exceeds the right side by more than five standard errors.
pub fn check_averaging(f: &ThresholdFunction, noise: &NoiseParams, draws: u64, seed: u64) -> Result<AveragingCheck> {
    if draws < 2 {
        return Err(Error::InvalidArgument("check_averaging needs at least two draws".into()));
    }
    let (g, exempt) = zero_threshold_form(f)?;
    let partitioner = Partitioner::new(&g, noise, &exempt)?;
    let mad_m = mad_binomial(partitioner.m() as u64)?.value;
    // 2 |B - L/2| = |2B - L| is an integer
    let (mut sum, mut squares) = (0u64, 0u64);
    for i in 0..draws {
        let t = partitioner.sample(&mut CounterRng::new(seed, i));
        let v = (2 * t.b_lambda).abs_diff(t.lambda.len()) as u64;
        sum += v;
        squares += v * v;
    }
    let d = draws as f64;
    let mean = sum as f64 / (2.0 * d);
    let variance = (squares as f64 / (4.0 * d) - mean * mean).max(0.0) * d / (d - 1.0);
    let standard_error = (variance / d).sqrt();
    Ok(AveragingCheck {
        mean,
        standard_error,
        mad_m,
        draws,
        passed: mean <= mad_m + 5.0 * standard_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RandomSource;
    use proptest::prelude::*;

    #[test]
    fn keypoint_cases() {
        // s1 = 0: both sides vanish
        assert_eq!(check_keypoint(0.0, 2.0), KeypointCheck { lhs: 0.0, rhs: 0.0, equal: true });
        // 0 < |s1| < |y1|: both vanish
        assert_eq!(check_keypoint(1.0, 3.0), KeypointCheck { lhs: 0.0, rhs: 0.0, equal: true });
        // s1 != 0, |s1| >= |y1|: both are one
        assert_eq!(check_keypoint(2.0, 1.0), KeypointCheck { lhs: 1.0, rhs: 1.0, equal: true });
        assert_eq!(check_keypoint(-1.5, 1.5), KeypointCheck { lhs: 1.0, rhs: 1.0, equal: true });
        assert!(!keypoint_with_offset(2.0, 1.0, 0.5).equal);
    }

    #[test]
    fn keypoint_grid_and_random() {
        let grid: Vec<f64> = (-6..=6).map(|k| k as f64 / 2.0).collect();
        for &s in &grid {
            for &y in &grid {
                assert!(check_keypoint(s, y).equal, "s1 = {s}, y1 = {y}");
            }
        }
        let mut rng = CounterRng::new(8, 0);
        for _ in 0..100_000 {
            let s = (rng.next_f64() - 0.5) * 10.0;
            let y = (rng.next_f64() - 0.5) * 10.0;
            assert!(check_keypoint(s, y).equal);
        }
    }

    #[test]
    fn pointwise_positive_sign_is_identity() {
        let f = ThresholdFunction::from_integers(&[1, 2, 3, 1], 0).unwrap();
        let p = Partitioner::new(&f, &NoiseParams::rational(1, 4).unwrap(), &[]).unwrap();
        let mut rng = CounterRng::new(2, 0);
        for _ in 0..2000 {
            let t = p.sample(&mut rng);
            let c = check_pointwise_inequality(&t, SignValue::Positive);
            assert_eq!(c.lhs, t.b_lambda as f64 - t.lambda.len() as f64 / 2.0);
            assert!(c.holds);
            assert!(check_pointwise_inequality(&t, t.sign_total()).holds);
        }
    }

    #[test]
    fn pointwise_tie_with_all_positive_blocks() {
        let f = ThresholdFunction::from_integers(&[1, 1, 1, 1], 0).unwrap();
        let p = Partitioner::new(&f, &NoiseParams::rational(1, 4).unwrap(), &[]).unwrap();
        let x = CubePoint::new(vec![1, 1, -1, -1]).unwrap();
        // every nonempty block among 1..=m is positive; the negatives sit in A_0
        let t = p.trace(x, vec![1, 2, 0, 0]);
        assert_eq!(t.sign_total(), SignValue::Zero);
        let c = check_pointwise_inequality(&t, SignValue::Zero);
        assert_eq!(c.lhs, 1.0);
        assert_eq!(c.rhs, 1.0 + 1.0);
        assert!(c.holds);
    }

    #[test]
    fn mad_monotone_examples() {
        assert!(check_mad_monotone(2).unwrap());
        assert!(check_mad_monotone(4).unwrap());
        assert!(check_mad_monotone(200).unwrap());
        assert!(check_mad_monotone(1).is_err());
    }

    #[test]
    fn tight_small_instances() {
        let f = ThresholdFunction::from_integers(&[1], 0).unwrap();
        let c = check_tight(&f, &NoiseParams::new(0.3).unwrap(), 200_000, 1, 0.99, 1).unwrap();
        assert!(c.passed, "{c:?}");
        assert!((c.exact_p - 0.3).abs() < 1e-15);
        let f = ThresholdFunction::from_integers(&[1, 1, 1, 1], 0).unwrap();
        let c = check_tight(&f, &NoiseParams::new(0.25).unwrap(), 200_000, 2, 0.99, 2).unwrap();
        assert!(c.passed, "{c:?}");
        let f = ThresholdFunction::from_integers(&[2, 1, 1], 1).unwrap();
        let c = check_tight(&f, &NoiseParams::rational(1, 5).unwrap(), 200_000, 3, 0.99, 1).unwrap();
        assert!(c.passed, "{c:?}");
    }

    #[test]
    fn tight_exact_matches() {
        for (w, t, num, den) in [
            (vec![1i64, 1, 1], 0i64, 1u64, 4u64),
            (vec![1, 1], 0, 1, 3),
            (vec![1, 2, 3, 1], 0, 1, 4),
            (vec![2, -1, 1], 1, 2, 7),
            (vec![1], 0, 1, 2),
        ] {
            let f = ThresholdFunction::from_integers(&w, t).unwrap();
            let r = tight_exact(&f, &NoiseParams::rational(num, den).unwrap()).unwrap();
            assert!(r.equal, "{w:?} t = {t}: {} vs {}", r.partition_average, r.exact_p);
        }
        let f = ThresholdFunction::simple_majority(6, 0.0).unwrap();
        let r = tight_exact(&f, &NoiseParams::rational(1, 10).unwrap());
        assert!(r.unwrap_err().is_cap_violation());
        assert!(tight_exact(&f, &NoiseParams::new(0.25).unwrap()).is_err());
    }

    #[test]
    fn setup_law_examples() {
        let f = ThresholdFunction::from_integers(&[1, 2, 3], 0).unwrap();
        let x = CubePoint::new(vec![1, -1, 1]).unwrap();
        let c = check_setup_law(&f, &NoiseParams::new(0.2).unwrap(), &x, 100_000, 4).unwrap();
        assert!(c.passed, "{c:?}");
        let f = ThresholdFunction::from_integers(&[1, 1], 1).unwrap();
        let x = CubePoint::new(vec![1, 1]).unwrap();
        let c = check_setup_law(&f, &NoiseParams::rational(1, 3).unwrap(), &x, 100_000, 5).unwrap();
        assert!(c.passed, "{c:?}");
    }

    #[test]
    fn averaging_example() {
        let f = ThresholdFunction::from_integers(&[1, 1, 2, 3, 1], 0).unwrap();
        let c = check_averaging(&f, &NoiseParams::new(0.1).unwrap(), 50_000, 6).unwrap();
        assert!(c.passed && c.mean <= c.mad_m, "{c:?}");
    }

    proptest! {
        #[test]
        fn keypoint_holds_everywhere(s in -5.0f64..5.0, y in -5.0f64..5.0, pick in 0u8..4) {
            let (s, y) = match pick {
                0 => (0.0, y),
                1 => (s, s),
                2 => (s, -s),
                _ => (s, y),
            };
            prop_assert!(check_keypoint(s, y).equal);
        }

        #[test]
        fn pointwise_holds_on_random_traces(
            weights in proptest::collection::vec((1i64..9, any::<bool>()), 1..9),
            den in 2u64..9,
            seed in any::<u64>(),
        ) {
            let w: Vec<i64> = weights.iter().map(|&(a, neg)| if neg { -a } else { a }).collect();
            let f = ThresholdFunction::from_integers(&w, 0).unwrap();
            let p = Partitioner::new(&f, &NoiseParams::rational(1, den).unwrap(), &[]).unwrap();
            let t = p.sample(&mut CounterRng::new(seed, 0));
            prop_assert!(check_pointwise_inequality(&t, t.sign_total()).holds);
        }
    }
}

use serde::Serialize;

use crate::{CubePoint, Error, NoiseParams, RandomSource, Result, SignValue, ThresholdFunction};

/// One draw of the random partition together with the point it acts on.
///
/// Coordinates are split into blocks `A_0, ..., A_m` by i.i.d. labels `tau_i`
/// with `P(tau = j) = eps` for `1 <= j <= m` and `P(tau = 0) = 1 - m eps`.
/// Vectors indexed by block have length `m + 1`; entry `0` is `A_0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionTrace {
    pub tau: Vec<usize>,
    pub blocks: Vec<Vec<usize>>,
    /// Block sums `S_j = sum_{i in A_j} w_i x_i`.
    pub s: Vec<f64>,
    /// `<w, x>`.
    pub total: f64,
    /// `<w, x> - S_1`.
    pub y1: f64,
    /// `sgn(S_j)`.
    pub xi: Vec<SignValue>,
    /// Blocks `j in 1..=m` with `S_j != 0`.
    pub lambda: Vec<usize>,
    /// Number of `j` in `lambda` with `S_j > 0`.
    pub b_lambda: usize,
    pub x: CubePoint,
}

impl PartitionTrace {
    pub fn m(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn sign_total(&self) -> SignValue {
        SignValue::of_f64(self.total)
    }

    /// `m * sum_{j in lambda} (1/2 - 1[sgn<w,x> = -xi_j])`, an integer.
    pub(crate) fn scaled_tight_term(&self) -> i64 {
        let sign = self.sign_total();
        self.lambda
            .iter()
            .map(|&j| if sign == self.xi[j].negate() { -1 } else { 1 })
            .sum()
    }
}

/// Label law for the partition, with exact integer draws when `eps` is a
/// fraction.
#[derive(Debug, Clone, Copy)]
enum LabelLaw {
    Rational { num: u64, den: u64 },
    Float(f64),
}

/// Validated inputs for repeated partition sampling.
#[derive(Debug, Clone)]
pub struct Partitioner {
    weights: Vec<f64>,
    exempt: Vec<bool>,
    m: usize,
    law: LabelLaw,
}

impl Partitioner {
    /// Requires `t = 0` (see [`crate::reduce_threshold`]) and `eps > 0`.
    /// Coordinates in `exempt` always land in `A_0`.
    pub fn new(f: &ThresholdFunction, noise: &NoiseParams, exempt: &[usize]) -> Result<Self> {
        if f.threshold() != 0.0 {
            return Err(Error::NonZeroThreshold);
        }
        let m = noise.m().ok_or(Error::EpsilonOutOfRange {
            operation: "sample_partition",
            requirement: "eps > 0",
            epsilon: noise.epsilon(),
        })?;
        let mut mask = vec![false; f.n()];
        for &i in exempt {
            if i >= f.n() {
                return Err(Error::ExemptOutOfRange { index: i, n: f.n() });
            }
            mask[i] = true;
        }
        let law = match noise.exact() {
            Some((num, den)) => LabelLaw::Rational { num, den },
            None => LabelLaw::Float(noise.epsilon()),
        };
        Ok(Partitioner {
            weights: f.weights().to_vec(),
            exempt: mask,
            m: m as usize,
            law,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    fn label<R: RandomSource + ?Sized>(&self, rng: &mut R) -> usize {
        match self.law {
            LabelLaw::Rational { num, den } => {
                let u = rng.next_below(den);
                if u < self.m as u64 * num {
                    (u / num) as usize + 1
                } else {
                    0
                }
            }
            LabelLaw::Float(eps) => {
                let u = rng.next_f64();
                if u < self.m as f64 * eps {
                    ((u / eps) as usize + 1).min(self.m)
                } else {
                    0
                }
            }
        }
    }

    /// Uniform `x`, then one label per non-exempt coordinate.
    pub fn sample<R: RandomSource + ?Sized>(&self, rng: &mut R) -> PartitionTrace {
        let n = self.n();
        let mut words = vec![0u64; n.div_ceil(64)];
        for w in words.iter_mut() {
            *w = rng.next_u64();
        }
        let x = CubePoint::from_packed(&words, n).expect("enough words for n");
        self.sample_at(x, rng)
    }

    /// Labels for a given `x`.
    pub fn sample_at<R: RandomSource + ?Sized>(&self, x: CubePoint, rng: &mut R) -> PartitionTrace {
        let tau: Vec<usize> = self
            .exempt
            .iter()
            .map(|&fixed| if fixed { 0 } else { self.label(rng) })
            .collect();
        self.trace(x, tau)
    }

    pub(crate) fn trace(&self, x: CubePoint, tau: Vec<usize>) -> PartitionTrace {
        let mut blocks = vec![Vec::new(); self.m + 1];
        let mut s = vec![0.0; self.m + 1];
        let mut total = 0.0;
        for (i, (&w, &xi)) in self.weights.iter().zip(x.coords()).enumerate() {
            let v = w * xi as f64;
            total += v;
            s[tau[i]] += v;
            blocks[tau[i]].push(i);
        }
        let xi: Vec<SignValue> = s.iter().map(|&v| SignValue::of_f64(v)).collect();
        let lambda: Vec<usize> = (1..=self.m).filter(|&j| xi[j] != SignValue::Zero).collect();
        let b_lambda = lambda.iter().filter(|&&j| xi[j] == SignValue::Positive).count();
        PartitionTrace {
            tau,
            blocks,
            y1: total - s[1],
            s,
            total,
            xi,
            lambda,
            b_lambda,
            x,
        }
    }
}

/// One partition draw for a zero-threshold `f`.
pub fn sample_partition<R: RandomSource + ?Sized>(
    f: &ThresholdFunction,
    noise: &NoiseParams,
    exempt: &[usize],
    rng: &mut R,
) -> Result<PartitionTrace> {
    Ok(Partitioner::new(f, noise, exempt)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::CounterRng;
    use proptest::prelude::*;

    fn majority(n: usize) -> ThresholdFunction {
        ThresholdFunction::simple_majority(n, 0.0).unwrap()
    }

    #[test]
    fn half_noise_never_uses_block_zero() {
        let p = Partitioner::new(&majority(2), &NoiseParams::new(0.5).unwrap(), &[]).unwrap();
        assert_eq!(p.m(), 2);
        let mut rng = CounterRng::new(1, 0);
        for _ in 0..1000 {
            let t = p.sample(&mut rng);
            assert!(t.tau.iter().all(|&j| j == 1 || j == 2));
        }
    }

    #[test]
    fn third_noise_occupancy() {
        let p = Partitioner::new(&majority(1), &NoiseParams::rational(1, 3).unwrap(), &[]).unwrap();
        let mut rng = CounterRng::new(2, 0);
        let mut counts = [0u32; 4];
        let draws = 100_000;
        for _ in 0..draws {
            counts[p.sample(&mut rng).tau[0]] += 1;
        }
        assert_eq!(counts[0], 0);
        for &c in &counts[1..] {
            assert!((c as f64 / draws as f64 - 1.0 / 3.0).abs() < 0.006, "{counts:?}");
        }
    }

    #[test]
    fn float_labels_follow_law() {
        let noise = NoiseParams::new(0.15).unwrap();
        let p = Partitioner::new(&majority(4), &noise, &[]).unwrap();
        assert_eq!(p.m(), 6);
        let mut rng = CounterRng::new(3, 0);
        let mut counts = [0u32; 7];
        let draws = 50_000;
        for _ in 0..draws {
            for &j in &p.sample(&mut rng).tau {
                counts[j] += 1;
            }
        }
        let total = (4 * draws) as f64;
        assert!((counts[0] as f64 / total - 0.1).abs() < 0.004);
        for &c in &counts[1..] {
            assert!((c as f64 / total - 0.15).abs() < 0.005);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let f = ThresholdFunction::from_integers(&[1, 1], 1).unwrap();
        let noise = NoiseParams::new(0.1).unwrap();
        assert_eq!(Partitioner::new(&f, &noise, &[]).unwrap_err(), Error::NonZeroThreshold);
        assert!(matches!(
            Partitioner::new(&majority(2), &NoiseParams::new(0.0).unwrap(), &[]),
            Err(Error::EpsilonOutOfRange { .. })
        ));
        assert!(Partitioner::new(&majority(2), &noise, &[2]).is_err());
    }

    #[test]
    fn exempt_coordinates_stay_in_block_zero() {
        let p = Partitioner::new(&majority(3), &NoiseParams::new(0.5).unwrap(), &[1]).unwrap();
        let mut rng = CounterRng::new(5, 0);
        for _ in 0..200 {
            assert_eq!(p.sample(&mut rng).tau[1], 0);
        }
    }

    proptest! {
        #[test]
        fn trace_invariants(
            weights in proptest::collection::vec((1i64..9, any::<bool>()), 1..10),
            den in 2u64..12,
            seed in any::<u64>(),
        ) {
            let w: Vec<i64> = weights.iter().map(|&(a, neg)| if neg { -a } else { a }).collect();
            let f = ThresholdFunction::from_integers(&w, 0).unwrap();
            let p = Partitioner::new(&f, &NoiseParams::rational(1, den).unwrap(), &[]).unwrap();
            let t = p.sample(&mut CounterRng::new(seed, 0));
            let mut seen: Vec<usize> = t.blocks.concat();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..w.len()).collect::<Vec<_>>());
            for (j, block) in t.blocks.iter().enumerate() {
                prop_assert!(block.iter().all(|&i| t.tau[i] == j));
            }
            prop_assert_eq!(t.s.iter().sum::<f64>(), t.total);
            prop_assert_eq!(t.y1 + t.s[1], t.total);
            prop_assert!(t.b_lambda <= t.lambda.len());
            let direct: i64 = w.iter().zip(t.x.coords()).map(|(&a, &b)| a * b as i64).sum();
            prop_assert_eq!(direct as f64, t.total);
        }
    }
}

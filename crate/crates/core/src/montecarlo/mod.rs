//! Paired-sample Monte Carlo estimation of `p_eps`.
//!
//! Sample `i` draws `X` uniformly, applies fresh noise, and records whether
//! `f(X) != f(N_eps(X))` (three-valued). All randomness for sample `i` comes
//! from [`CounterRng::new(seed, i)`](crate::CounterRng), so the disagreement
//! count depends only on `(seed, samples)` and the decision protocol, not on
//! the number of workers.
//!
//! Two ways of turning random words into flip decisions exist:
//!
//! - [`DecisionProtocol::PerCoordinate`]: one 64-bit draw per coordinate,
//!   flipping iff it is below `floor(eps * 2^64)`;
//! - [`DecisionProtocol::SharedWords`]: one flip mask per 64 coordinates,
//!   built by comparing 64 lanes of uniform bits against the binary expansion
//!   of `eps` rounded down to 32 bits. This is what the bit-parallel path
//!   uses; the general path can consume the same stream, in which case both
//!   produce identical counts.

mod bitparallel;
mod sweep;
mod wilson;

use std::thread;
use std::time::Instant;

use serde::Serialize;

pub use bitparallel::estimate_bitparallel;
pub(crate) use bitparallel::noise_mask_word;
pub use sweep::{sweep, Family, SweepRow};
pub use wilson::{wilson_interval, z_for_level};

use crate::{CounterRng, Error, FlipRule, NoiseParams, RandomSource, Result, SignValue, ThresholdFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum McMethod {
    General,
    Bitparallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecisionProtocol {
    PerCoordinate,
    SharedWords,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    /// Two-sided confidence level of the Wilson interval.
    pub level: f64,
    pub workers: usize,
    /// Flip-decision stream for the general path. The bit-parallel path
    /// always uses [`DecisionProtocol::SharedWords`].
    pub protocol: DecisionProtocol,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            level: 0.99,
            workers: 1,
            protocol: DecisionProtocol::PerCoordinate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
    pub samples: u64,
    pub disagreements: u64,
    pub seed: u64,
    pub workers: usize,
    pub method: McMethod,
    pub protocol: DecisionProtocol,
    pub epsilon: f64,
    /// The flip probability the decision stream actually realizes.
    pub realized_epsilon: f64,
    /// Wall time; excluded from [`McEstimate::same_result`] and from
    /// serialization, so equal runs serialize identically.
    #[serde(skip)]
    pub elapsed_secs: f64,
}

impl McEstimate {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_count(
        disagreements: u64,
        samples: u64,
        seed: u64,
        config: &McConfig,
        method: McMethod,
        protocol: DecisionProtocol,
        epsilon: f64,
        realized_epsilon: f64,
        started: Instant,
    ) -> Self {
        let (ci_low, ci_high) = wilson_interval(disagreements, samples, config.level);
        McEstimate {
            p_hat: disagreements as f64 / samples as f64,
            ci_low,
            ci_high,
            level: config.level,
            samples,
            disagreements,
            seed,
            workers: config.workers.max(1),
            method,
            protocol,
            epsilon,
            realized_epsilon,
            elapsed_secs: started.elapsed().as_secs_f64(),
        }
    }

    /// Equality ignoring wall time.
    pub fn same_result(&self, other: &McEstimate) -> bool {
        McEstimate {
            elapsed_secs: 0.0,
            ..self.clone()
        } == McEstimate {
            elapsed_secs: 0.0,
            ..other.clone()
        }
    }

    /// Standard error of `p_hat`.
    pub fn standard_error(&self) -> f64 {
        (self.p_hat * (1.0 - self.p_hat) / self.samples as f64).sqrt()
    }

    pub fn covers(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }
}

/// Run `count` over `[0, samples)` split into contiguous per-worker ranges
/// and sum the results.
pub(crate) fn parallel_count<F>(samples: u64, workers: usize, count: F) -> u64
where
    F: Fn(std::ops::Range<u64>) -> u64 + Sync,
{
    parallel_ranges(samples, workers, count).into_iter().sum()
}

/// Run `task` over contiguous per-worker ranges of `[0, samples)`, results in
/// range order.
pub(crate) fn parallel_ranges<T, F>(samples: u64, workers: usize, task: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<u64>) -> T + Sync,
{
    let workers = (workers.max(1) as u64).min(samples.max(1));
    if workers == 1 {
        return vec![task(0..samples)];
    }
    let chunk = samples.div_ceil(workers);
    thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|k| {
                let range = (k * chunk).min(samples)..((k + 1) * chunk).min(samples);
                let task = &task;
                scope.spawn(move || task(range))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sampling worker panicked"))
            .collect()
    })
}

#[derive(Debug, Clone)]
enum Weights {
    Int(Vec<i64>, i64),
    Float(Vec<f64>, f64),
}

impl Weights {
    fn of(f: &ThresholdFunction) -> Self {
        match f.integer_weights() {
            Some((w, t)) => Weights::Int(w.to_vec(), t),
            None => Weights::Float(f.weights().to_vec(), f.threshold()),
        }
    }

    /// Whether `f(x) != f(x xor flips)`, reading `x` and the flips from packed
    /// words via `flip_at(i)`.
    #[inline]
    fn disagrees(&self, x: &[u64], mut flip_at: impl FnMut(usize) -> bool) -> bool {
        match self {
            Weights::Int(w, t) => {
                let (mut s, mut s2) = (0i64, 0i64);
                for (i, &wi) in w.iter().enumerate() {
                    let v = if x[i >> 6] >> (i & 63) & 1 == 1 { wi } else { -wi };
                    s += v;
                    s2 += if flip_at(i) { -v } else { v };
                }
                SignValue::of_i64(s - t) != SignValue::of_i64(s2 - t)
            }
            Weights::Float(w, t) => {
                let (mut s, mut s2) = (0.0f64, 0.0f64);
                for (i, &wi) in w.iter().enumerate() {
                    let v = if x[i >> 6] >> (i & 63) & 1 == 1 { wi } else { -wi };
                    s += v;
                    s2 += if flip_at(i) { -v } else { v };
                }
                SignValue::compare_f64(s, *t) != SignValue::compare_f64(s2, *t)
            }
        }
    }
}

/// Fill `x` with uniform packed coordinates.
#[inline]
pub(crate) fn draw_point(rng: &mut CounterRng, x: &mut [u64]) {
    for word in x.iter_mut() {
        *word = rng.next_u64();
    }
}

/// Fill `masks` with shared-word flip masks, clearing bits at and beyond `n`.
#[inline]
pub(crate) fn draw_masks(rng: &mut CounterRng, dyadic: u64, n: usize, masks: &mut [u64]) {
    for word in masks.iter_mut() {
        *word = noise_mask_word(rng, dyadic);
    }
    if n % 64 != 0 {
        if let Some(last) = masks.last_mut() {
            *last &= (1u64 << (n % 64)) - 1;
        }
    }
}

/// Estimate `p_eps` for arbitrary weights.
pub fn estimate(
    f: &ThresholdFunction,
    noise: &NoiseParams,
    samples: u64,
    seed: u64,
    config: &McConfig,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let started = Instant::now();
    let n = f.n();
    let words = n.div_ceil(64);
    let weights = Weights::of(f);
    let (count, realized) = match config.protocol {
        DecisionProtocol::PerCoordinate => {
            let rule: FlipRule = noise.flip_rule();
            let count = parallel_count(samples, config.workers, |range| {
                let mut x = vec![0u64; words];
                let mut hits = 0;
                for i in range {
                    let mut rng = CounterRng::new(seed, i);
                    draw_point(&mut rng, &mut x);
                    if weights.disagrees(&x, |_| rule.flips(rng.next_u64())) {
                        hits += 1;
                    }
                }
                hits
            });
            (count, rule.realized_epsilon())
        }
        DecisionProtocol::SharedWords => {
            let dyadic = noise.dyadic32();
            let count = parallel_count(samples, config.workers, |range| {
                let mut x = vec![0u64; words];
                let mut masks = vec![0u64; words];
                let mut hits = 0;
                for i in range {
                    let mut rng = CounterRng::new(seed, i);
                    draw_point(&mut rng, &mut x);
                    draw_masks(&mut rng, dyadic, n, &mut masks);
                    if weights.disagrees(&x, |c| masks[c >> 6] >> (c & 63) & 1 == 1) {
                        hits += 1;
                    }
                }
                hits
            });
            (count, dyadic as f64 / 4_294_967_296.0)
        }
    };
    Ok(McEstimate::from_count(
        count,
        samples,
        seed,
        config,
        McMethod::General,
        config.protocol,
        noise.epsilon(),
        realized,
        started,
    ))
}

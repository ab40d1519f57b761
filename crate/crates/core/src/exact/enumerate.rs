use std::thread;

use super::{combine_distance_counts, ExactConfig, ExactResult, Method};
use crate::{Error, NoiseParams, Result, SignValue, ThresholdFunction};

/// Hard ceiling on enumerated coordinates, independent of configuration.
pub(super) const MAX_ENUM_BITS: usize = 30;

/// Values of `f` at every point of the cube, indexed by packed point.
///
/// Integer weights walk the cube in Gray-code order and update the sum by
/// `+-2 w_i` per step. Float weights are summed afresh at each point in
/// coordinate order, so that a tie here is a tie in [`ThresholdFunction::evaluate`].
fn value_table(f: &ThresholdFunction) -> Vec<SignValue> {
    let n = f.n();
    let size = 1usize << n;
    let mut table = vec![SignValue::Zero; size];
    match f.integer_weights() {
        Some((w, t)) => {
            let mut sum: i64 = -w.iter().sum::<i64>();
            let mut point = 0usize;
            table[0] = SignValue::of_i64(sum - t);
            for g in 1..size {
                let bit = g.trailing_zeros() as usize;
                point ^= 1 << bit;
                if point >> bit & 1 == 1 {
                    sum += 2 * w[bit];
                } else {
                    sum -= 2 * w[bit];
                }
                table[point] = SignValue::of_i64(sum - t);
            }
        }
        None => {
            for (bits, slot) in table.iter_mut().enumerate() {
                *slot = f.evaluate_index(bits as u64);
            }
        }
    }
    table
}

/// Number of cube points with `<w, x> = t`.
pub(super) fn count_ties(f: &ThresholdFunction) -> u64 {
    value_table(f)
        .iter()
        .filter(|&&v| v == SignValue::Zero)
        .count() as u64
}

/// Disagreeing pairs `(x, x ^ z)` bucketed by the Hamming weight of `z`,
/// for `x` in `range` and `z` ranging over submasks of `free_mask`.
fn count_range(table: &[SignValue], free_mask: usize, range: std::ops::Range<usize>, buckets: usize) -> Vec<u64> {
    let mut counts = vec![0u64; buckets];
    for x in range {
        let fx = table[x];
        let mut z = free_mask;
        loop {
            if table[x ^ z] != fx {
                counts[z.count_ones() as usize] += 1;
            }
            if z == 0 {
                break;
            }
            z = (z - 1) & free_mask;
        }
    }
    counts
}

/// `p_eps` by walking every pair `(x, y)` of cube points.
///
/// Coordinates listed in `exempt` (zero-based) never flip. Pairs are first
/// counted by Hamming distance with exact integers, then weighted by
/// `eps^d (1 - eps)^(n' - d)` where `n'` counts the non-exempt coordinates,
/// so rational mode only touches `n' + 1` big-number terms.
pub fn p_exact_enum(
    f: &ThresholdFunction,
    noise: &NoiseParams,
    exempt: &[usize],
    config: &ExactConfig,
) -> Result<ExactResult> {
    let n = f.n();
    let cap = config.enum_cap.min(MAX_ENUM_BITS);
    if n > cap {
        return Err(Error::EnumerationCap { n, cap });
    }
    let mut exempt_mask = 0usize;
    for &i in exempt {
        if i >= n {
            return Err(Error::ExemptOutOfRange { index: i, n });
        }
        exempt_mask |= 1 << i;
    }
    let size = 1usize << n;
    let free_mask = (size - 1) & !exempt_mask;
    let free = free_mask.count_ones() as usize;
    let table = value_table(f);

    let workers = config.workers.clamp(1, size);
    let counts = if workers == 1 {
        count_range(&table, free_mask, 0..size, free + 1)
    } else {
        let chunk = size.div_ceil(workers);
        thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|k| {
                    let table = &table;
                    let range = (k * chunk).min(size)..((k + 1) * chunk).min(size);
                    scope.spawn(move || count_range(table, free_mask, range, free + 1))
                })
                .collect();
            let mut total = vec![0u64; free + 1];
            for h in handles {
                for (acc, c) in total.iter_mut().zip(h.join().expect("enumeration worker panicked")) {
                    *acc += c;
                }
            }
            total
        })
    };

    let mut exempt_sorted: Vec<usize> = exempt.to_vec();
    exempt_sorted.sort_unstable();
    exempt_sorted.dedup();
    Ok(ExactResult::new(
        combine_distance_counts(&counts, n, free, noise),
        Method::Enumeration,
        f,
        Some(noise),
        exempt_sorted,
    ))
}

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{ExactConfig, ExactResult, Method, Probability};
use crate::{Error, NoiseParams, Result, SignValue, ThresholdFunction};

/// Cell mass of the joint table: probabilities as `f64`, or integer counts
/// scaled by `(2 * den)` per coordinate in rational mode.
trait Mass: Clone {
    fn empty() -> Self;
    fn unit() -> Self;
    fn is_empty(&self) -> bool;
    fn add_product(&mut self, a: &Self, b: &Self);
}

impl Mass for f64 {
    fn empty() -> Self {
        0.0
    }
    fn unit() -> Self {
        1.0
    }
    fn is_empty(&self) -> bool {
        *self == 0.0
    }
    #[inline]
    fn add_product(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }
}

impl Mass for BigUint {
    fn empty() -> Self {
        Zero::zero()
    }
    fn unit() -> Self {
        One::one()
    }
    fn is_empty(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add_product(&mut self, a: &Self, b: &Self) {
        if !Zero::is_zero(b) {
            *self += a * b;
        }
    }
}

/// Joint law of `(S, S')` over `[-r, r]^2`.
enum JointTable<T> {
    Dense { radius: i64, cells: Vec<T> },
    Sparse(BTreeMap<(i64, i64), T>),
}

impl<T: Mass> JointTable<T> {
    fn new(total_weight: u64, dense_cell_cap: usize) -> Self {
        let width = 2 * total_weight as usize + 1;
        if width.checked_mul(width).is_some_and(|c| c <= dense_cell_cap) {
            let mut cells = vec![T::empty(); width * width];
            cells[(width * width) / 2] = T::unit();
            JointTable::Dense {
                radius: total_weight as i64,
                cells,
            }
        } else {
            let mut map = BTreeMap::new();
            map.insert((0, 0), T::unit());
            JointTable::Sparse(map)
        }
    }

    /// Add coordinate weight `a`: the increment `(a x, a sigma x)` is
    /// `(+a,+a)` or `(-a,-a)` with mass `same`, `(+a,-a)` or `(-a,+a)` with
    /// mass `cross`. `reach` is the largest `|S|` reachable before the step.
    fn step(&mut self, a: i64, reach: i64, same: &T, cross: &T) {
        match self {
            JointTable::Dense { radius, cells } => {
                let r = *radius;
                let width = (2 * r + 1) as usize;
                let idx = |s: i64, s2: i64| ((s + r) as usize) * width + (s2 + r) as usize;
                let mut next = vec![T::empty(); cells.len()];
                for s in -reach..=reach {
                    for s2 in -reach..=reach {
                        let mass = &cells[idx(s, s2)];
                        if mass.is_empty() {
                            continue;
                        }
                        next[idx(s + a, s2 + a)].add_product(mass, same);
                        next[idx(s - a, s2 - a)].add_product(mass, same);
                        next[idx(s + a, s2 - a)].add_product(mass, cross);
                        next[idx(s - a, s2 + a)].add_product(mass, cross);
                    }
                }
                *cells = next;
            }
            JointTable::Sparse(map) => {
                let mut next: BTreeMap<(i64, i64), T> = BTreeMap::new();
                for (&(s, s2), mass) in map.iter() {
                    for (ds, ds2, factor) in [(a, a, same), (-a, -a, same), (a, -a, cross), (-a, a, cross)] {
                        if factor.is_empty() {
                            continue;
                        }
                        next.entry((s + ds, s2 + ds2))
                            .or_insert_with(T::empty)
                            .add_product(mass, factor);
                    }
                }
                *map = next;
            }
        }
    }

    fn for_each(&self, mut visit: impl FnMut(i64, i64, &T)) {
        match self {
            JointTable::Dense { radius, cells } => {
                let r = *radius;
                let width = (2 * r + 1) as usize;
                for (k, mass) in cells.iter().enumerate() {
                    if !mass.is_empty() {
                        visit((k / width) as i64 - r, (k % width) as i64 - r, mass);
                    }
                }
            }
            JointTable::Sparse(map) => {
                for (&(s, s2), mass) in map {
                    visit(s, s2, mass);
                }
            }
        }
    }
}

fn joint_table<T: Mass>(weights: &[i64], same: &T, cross: &T, dense_cell_cap: usize) -> JointTable<T> {
    let total: u64 = weights.iter().map(|w| w.unsigned_abs()).sum();
    let mut table = JointTable::new(total, dense_cell_cap);
    let mut reach = 0i64;
    for &w in weights {
        let a = w.abs();
        table.step(a, reach, same, cross);
        reach += a;
    }
    table
}

/// `p_eps` from the exact joint law of `(<w,X>, <w,N_eps(X)>)`.
///
/// Requires integer weights and threshold with `sum |w_i|` within the dp
/// cap. Each coordinate contributes `(w x, w sigma x)`, whose four values have
/// mass `(1 - eps) / 2` (same sign) or `eps / 2` (opposite sign); the sign of
/// `w_i` is irrelevant because `x_i` is symmetric.
pub fn p_exact_dp(f: &ThresholdFunction, noise: &NoiseParams, config: &ExactConfig) -> Result<ExactResult> {
    let (weights, t) = f.integer_weights().ok_or(Error::NonIntegerWeights)?;
    let total = f.total_abs_weight().expect("integer mode has a total weight");
    if total > config.dp_weight_cap {
        return Err(Error::WeightCap {
            total,
            cap: config.dp_weight_cap,
        });
    }
    let disagree = |s: i64, s2: i64| SignValue::of_i64(s - t) != SignValue::of_i64(s2 - t);

    let p = match noise.exact() {
        Some((num, den)) => {
            let same = BigUint::from(den - num);
            let cross = BigUint::from(num);
            let table = joint_table(weights, &same, &cross, config.dense_cell_cap);
            let mut hits = BigUint::zero();
            table.for_each(|s, s2, mass| {
                if disagree(s, s2) {
                    hits += mass;
                }
            });
            let scale = num_traits::pow(BigUint::from(2 * den), weights.len());
            Probability::Rational(BigRational::new(BigInt::from(hits), BigInt::from(scale)))
        }
        None => {
            let eps = noise.epsilon();
            let table = joint_table(weights, &((1.0 - eps) / 2.0), &(eps / 2.0), config.dense_cell_cap);
            let mut value = 0.0;
            table.for_each(|s, s2, mass| {
                if disagree(s, s2) {
                    value += mass;
                }
            });
            Probability::Float {
                value: value.min(1.0),
                error_bound: (4 * weights.len() + 8) as f64 * f64::EPSILON,
            }
        }
    };
    Ok(ExactResult::new(p, Method::Dp, f, Some(noise), Vec::new()))
}

/// Number of `x` in the cube with `<w, x> = t`, by convolving the marginal.
pub(super) fn count_sum_equal(weights: &[i64], t: i64) -> BigUint {
    let total: i64 = weights.iter().map(|w| w.abs()).sum();
    if t.abs() > total {
        return BigUint::zero();
    }
    let width = (2 * total + 1) as usize;
    let mut counts = vec![BigUint::zero(); width];
    counts[total as usize] = BigUint::one();
    let mut reach = 0i64;
    for &w in weights {
        let a = w.abs();
        let mut next = vec![BigUint::zero(); width];
        for s in -reach..=reach {
            let c = &counts[(s + total) as usize];
            if Zero::is_zero(c) {
                continue;
            }
            next[(s + a + total) as usize] += c;
            next[(s - a + total) as usize] += c;
        }
        counts = next;
        reach += a;
    }
    std::mem::take(&mut counts[(t + total) as usize])
}

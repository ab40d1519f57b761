use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest magnitude at which every integer is exactly representable in an `f64`.
const EXACT_INT_LIMIT: f64 = 9_007_199_254_740_992.0;

/// Three-valued sign, with `sgn(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SignValue {
    Negative,
    Zero,
    Positive,
}

impl SignValue {
    #[inline]
    pub fn of_f64(u: f64) -> Self {
        if u > 0.0 {
            SignValue::Positive
        } else if u < 0.0 {
            SignValue::Negative
        } else {
            SignValue::Zero
        }
    }

    #[inline]
    pub fn of_i64(u: i64) -> Self {
        match u.signum() {
            1 => SignValue::Positive,
            -1 => SignValue::Negative,
            _ => SignValue::Zero,
        }
    }

    /// Sign of `lhs - rhs` without forming the difference.
    #[inline]
    pub fn compare_f64(lhs: f64, rhs: f64) -> Self {
        if lhs > rhs {
            SignValue::Positive
        } else if lhs < rhs {
            SignValue::Negative
        } else {
            SignValue::Zero
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            SignValue::Negative => -1,
            SignValue::Zero => 0,
            SignValue::Positive => 1,
        }
    }

    pub fn negate(self) -> Self {
        match self {
            SignValue::Negative => SignValue::Positive,
            SignValue::Zero => SignValue::Zero,
            SignValue::Positive => SignValue::Negative,
        }
    }
}

/// A point of `{-1, +1}^n`.
///
/// Packed form: coordinate `i` lives in bit `i % 64` of word `i / 64`, with
/// `+1` encoded as bit 1 and `-1` as bit 0. The Monte Carlo engines use the
/// same layout.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct CubePoint {
    coords: Vec<i8>,
}

impl CubePoint {
    pub fn new(coords: Vec<i8>) -> Result<Self> {
        if let Some(bad) = coords.iter().find(|&&c| c != 1 && c != -1) {
            return Err(Error::InvalidArgument(format!(
                "cube coordinates must be +1 or -1, got {bad}"
            )));
        }
        Ok(CubePoint { coords })
    }

    /// Point whose coordinate `i` is `+1` iff bit `i` of `bits` is set.
    pub fn from_index(bits: u64, n: usize) -> Self {
        assert!(n <= 64);
        let coords = (0..n)
            .map(|i| if bits >> i & 1 == 1 { 1 } else { -1 })
            .collect();
        CubePoint { coords }
    }

    pub fn from_packed(words: &[u64], n: usize) -> Result<Self> {
        if words.len() != n.div_ceil(64) {
            return Err(Error::DimensionMismatch {
                expected: n.div_ceil(64),
                actual: words.len(),
            });
        }
        let coords = (0..n)
            .map(|i| if words[i / 64] >> (i % 64) & 1 == 1 { 1 } else { -1 })
            .collect();
        Ok(CubePoint { coords })
    }

    pub fn pack(&self) -> Vec<u64> {
        let mut words = vec![0u64; self.coords.len().div_ceil(64)];
        for (i, &c) in self.coords.iter().enumerate() {
            if c == 1 {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        words
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[i8] {
        &self.coords
    }

    pub(crate) fn coords_mut(&mut self) -> &mut [i8] {
        &mut self.coords
    }
}

/// `f(x) = sgn(sum_i w_i x_i - t)` with nonzero weights.
///
/// When every weight and the threshold are integers the function is in
/// integer mode and ties (`<w, x> = t`) are detected exactly. Otherwise the
/// tie test is exact equality of the floating-point sum accumulated in
/// coordinate order, so float weights should be chosen tie-free unless ties
/// are intended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFunction")]
pub struct ThresholdFunction {
    weights: Vec<f64>,
    threshold: f64,
    #[serde(skip)]
    int_weights: Option<(Vec<i64>, i64)>,
}

#[derive(Deserialize)]
struct RawFunction {
    weights: Vec<f64>,
    threshold: f64,
}

impl TryFrom<RawFunction> for ThresholdFunction {
    type Error = Error;

    fn try_from(raw: RawFunction) -> Result<Self> {
        ThresholdFunction::new(raw.weights, raw.threshold)
    }
}

fn as_exact_int(v: f64) -> Option<i64> {
    (v.fract() == 0.0 && v.abs() < EXACT_INT_LIMIT).then_some(v as i64)
}

impl ThresholdFunction {
    pub fn new(weights: Vec<f64>, threshold: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyWeights);
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite { what: "weights" });
        }
        if !threshold.is_finite() {
            return Err(Error::NonFinite { what: "threshold" });
        }
        if let Some(index) = weights.iter().position(|&w| w == 0.0) {
            return Err(Error::ZeroWeight { index });
        }
        let int_weights = weights
            .iter()
            .map(|&w| as_exact_int(w))
            .collect::<Option<Vec<i64>>>()
            .zip(as_exact_int(threshold));
        Ok(ThresholdFunction {
            weights,
            threshold,
            int_weights,
        })
    }

    pub fn from_integers(weights: &[i64], threshold: i64) -> Result<Self> {
        Self::new(
            weights.iter().map(|&w| w as f64).collect(),
            threshold as f64,
        )
    }

    /// Unit weights, threshold `t`.
    pub fn simple_majority(n: usize, threshold: f64) -> Result<Self> {
        Self::new(vec![1.0; n], threshold)
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn integer_mode(&self) -> bool {
        self.int_weights.is_some()
    }

    /// Integer weights and threshold, when in integer mode.
    pub fn integer_weights(&self) -> Option<(&[i64], i64)> {
        self.int_weights.as_ref().map(|(w, t)| (w.as_slice(), *t))
    }

    pub fn is_unit_weight(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }

    /// `sum_i |w_i|` for integer weights.
    pub fn total_abs_weight(&self) -> Option<u64> {
        self.int_weights
            .as_ref()
            .map(|(w, _)| w.iter().map(|x| x.unsigned_abs()).sum())
    }

    pub fn evaluate(&self, x: &CubePoint) -> Result<SignValue> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                actual: x.len(),
            });
        }
        Ok(self.evaluate_unchecked(x.coords()))
    }

    pub(crate) fn evaluate_unchecked(&self, x: &[i8]) -> SignValue {
        match &self.int_weights {
            Some((w, t)) => {
                let s: i64 = w.iter().zip(x).map(|(&w, &x)| w * x as i64).sum();
                SignValue::of_i64(s - t)
            }
            None => {
                let mut s = 0.0;
                for (&w, &x) in self.weights.iter().zip(x) {
                    s += w * x as f64;
                }
                SignValue::compare_f64(s, self.threshold)
            }
        }
    }

    /// Evaluation at the point encoded by the low `n` bits of `bits` (`n <= 64`).
    pub(crate) fn evaluate_index(&self, bits: u64) -> SignValue {
        match &self.int_weights {
            Some((w, t)) => {
                let s: i64 = w
                    .iter()
                    .enumerate()
                    .map(|(i, &w)| if bits >> i & 1 == 1 { w } else { -w })
                    .sum();
                SignValue::of_i64(s - t)
            }
            None => {
                let mut s = 0.0;
                for (i, &w) in self.weights.iter().enumerate() {
                    s += if bits >> i & 1 == 1 { w } else { -w };
                }
                SignValue::compare_f64(s, self.threshold)
            }
        }
    }
}

/// Zero-threshold form of a function with `t != 0`: one extra coordinate of
/// weight `t` whose input is an independent uniform sign that never receives
/// noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedThreshold {
    pub function: ThresholdFunction,
    /// Zero-based index of the appended coordinate (always `n`).
    pub exempt: usize,
}

/// Move the threshold into an extra coordinate of weight `t`.
///
/// The disagreement probability of the result, with coordinate `n` kept out
/// of the noise, equals that of `f`: conditioned on `x_n = -1` it is exactly
/// `f`, and conditioned on `x_n = +1` it is `f` with threshold `-t`, which has
/// the same disagreement probability by the symmetry `x -> -x`.
pub fn reduce_threshold(f: &ThresholdFunction) -> Result<ReducedThreshold> {
    if f.threshold() == 0.0 {
        return Err(Error::ThresholdAlreadyZero);
    }
    let mut weights = f.weights().to_vec();
    weights.push(f.threshold());
    Ok(ReducedThreshold {
        function: ThresholdFunction::new(weights, 0.0)?,
        exempt: f.n(),
    })
}

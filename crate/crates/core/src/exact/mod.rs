//! Exact noise sensitivity.
//!
//! Two independent engines compute `p_eps(n, w, t) = P(f(X) != f(N_eps(X)))`:
//!
//! - [`p_exact_enum`] walks every pair `(x, y)` of cube points, for any
//!   weights and small `n`;
//! - [`p_exact_dp`] convolves the joint law of `(<w,X>, <w,N_eps(X)>)` one
//!   coordinate at a time, for integer weights of moderate total size.
//!
//! Both produce a reduced fraction when the flip probability was given as an
//! exact rational, and an `f64` otherwise. Ties (`f = 0`) are a value of their
//! own, so a move from `0` to `+1` counts as a disagreement.

mod dp;
mod enumerate;

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

pub use dp::p_exact_dp;
pub use enumerate::p_exact_enum;

use crate::{Error, NoiseParams, Result, ThresholdFunction};

/// Size caps for the exact engines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactConfig {
    /// Largest `n` for enumeration; cost grows as `4^n`.
    pub enum_cap: usize,
    /// Largest `sum |w_i|` for the dp; cost is `O(n W^2)`.
    pub dp_weight_cap: u64,
    /// Largest dense `(2W+1)^2` table before the dp switches to a sparse map.
    pub dense_cell_cap: usize,
    /// Worker threads for the enumeration outer loop.
    pub workers: usize,
}

impl Default for ExactConfig {
    fn default() -> Self {
        ExactConfig {
            enum_cap: 13,
            dp_weight_cap: 2000,
            dense_cell_cap: 1 << 22,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Enumeration,
    Dp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Enum,
    Dp,
    Auto,
}

/// A probability, exact or floating point.
#[derive(Debug, Clone, PartialEq)]
pub enum Probability {
    /// `error_bound` is a conservative absolute rounding bound.
    Float { value: f64, error_bound: f64 },
    /// Always reduced.
    Rational(BigRational),
}

impl Probability {
    pub fn to_f64(&self) -> f64 {
        match self {
            Probability::Float { value, .. } => *value,
            Probability::Rational(r) => r.to_f64().unwrap_or(f64::NAN),
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Probability::Rational(r) => Some(r),
            Probability::Float { .. } => None,
        }
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Probability::Float { value, .. } => write!(f, "{value}"),
            Probability::Rational(r) => write!(f, "{}/{}", r.numer(), r.denom()),
        }
    }
}

/// A fraction as `{"num": "..", "den": ".."}`.
pub(crate) fn serialize_rational<S: Serializer>(r: &BigRational, serializer: S) -> std::result::Result<S::Ok, S::Error> {
    let mut s = serializer.serialize_struct("Rational", 2)?;
    s.serialize_field("num", &r.numer().to_string())?;
    s.serialize_field("den", &r.denom().to_string())?;
    s.end()
}

/// Serialized as `{"float": x, "error_bound": e}` or `{"num": "..", "den": ".."}`.
impl Serialize for Probability {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Probability::Float { value, error_bound } => {
                let mut s = serializer.serialize_struct("Probability", 2)?;
                s.serialize_field("float", value)?;
                s.serialize_field("error_bound", error_bound)?;
                s.end()
            }
            Probability::Rational(r) => serialize_rational(r, serializer),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactResult {
    pub p: Probability,
    pub method: Method,
    pub n: usize,
    pub weights: Vec<f64>,
    pub threshold: f64,
    /// `None` for quantities that do not depend on noise (tie probability).
    pub epsilon: Option<f64>,
    /// Zero-based coordinates kept out of the noise.
    pub exempt: Vec<usize>,
    /// False when `eps > 1/2`, where the `2 sqrt(eps)` bounds make no claim.
    pub bounds_apply: bool,
}

impl ExactResult {
    pub fn value(&self) -> f64 {
        self.p.to_f64()
    }

    fn new(
        p: Probability,
        method: Method,
        f: &ThresholdFunction,
        noise: Option<&NoiseParams>,
        exempt: Vec<usize>,
    ) -> Self {
        ExactResult {
            p,
            method,
            n: f.n(),
            weights: f.weights().to_vec(),
            threshold: f.threshold(),
            epsilon: noise.map(|e| e.epsilon()),
            exempt,
            bounds_apply: noise.map_or(true, |e| e.epsilon() <= 0.5),
        }
    }
}

/// `p_eps` by the requested engine; `Auto` prefers the dp when it applies.
pub fn p_exact(
    f: &ThresholdFunction,
    noise: &NoiseParams,
    engine: Engine,
    config: &ExactConfig,
) -> Result<ExactResult> {
    match engine {
        Engine::Enum => p_exact_enum(f, noise, &[], config),
        Engine::Dp => p_exact_dp(f, noise, config),
        Engine::Auto => {
            if f.total_abs_weight().is_some_and(|w| w <= config.dp_weight_cap) {
                p_exact_dp(f, noise, config)
            } else if f.n() <= config.enum_cap {
                p_exact_enum(f, noise, &[], config)
            } else if let Some(total) = f.total_abs_weight() {
                Err(Error::WeightCap {
                    total,
                    cap: config.dp_weight_cap,
                })
            } else {
                Err(Error::EnumerationCap {
                    n: f.n(),
                    cap: config.enum_cap,
                })
            }
        }
    }
}

/// Exact `P(<w, X> = t)`: single-marginal dp for integer weights within the
/// dp cap, enumeration otherwise.
pub fn tie_probability(f: &ThresholdFunction, config: &ExactConfig) -> Result<ExactResult> {
    let n = f.n();
    let dp_inputs = f
        .integer_weights()
        .filter(|_| f.total_abs_weight().is_some_and(|w| w <= config.dp_weight_cap));
    let (ties, method) = match dp_inputs {
        Some((w, t)) => (dp::count_sum_equal(w, t), Method::Dp),
        None => {
            // a single marginal costs 2^n rather than 4^n
            let cap = (2 * config.enum_cap).min(enumerate::MAX_ENUM_BITS);
            if n > cap {
                return Err(Error::EnumerationCap { n, cap });
            }
            (enumerate::count_ties(f).into(), Method::Enumeration)
        }
    };
    let p = BigRational::new(BigInt::from(ties), BigInt::one() << n);
    Ok(ExactResult::new(
        Probability::Rational(p),
        method,
        f,
        None,
        Vec::new(),
    ))
}

/// `2^-n * sum_d counts[d] * eps^d * (1 - eps)^(free - d)`.
pub(crate) fn combine_distance_counts(
    counts: &[u64],
    n: usize,
    free: usize,
    noise: &NoiseParams,
) -> Probability {
    match noise.exact_big() {
        Some(eps) => {
            let keep = BigRational::one() - &eps;
            let mut total = BigRational::zero();
            for (d, &c) in counts.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let term = num_traits::pow(eps.clone(), d) * num_traits::pow(keep.clone(), free - d);
                total += term * BigRational::from_integer(BigInt::from(c));
            }
            Probability::Rational(total / BigRational::from_integer(BigInt::one() << n))
        }
        None => {
            let eps = noise.epsilon();
            let keep = 1.0 - eps;
            let scale = 0.5f64.powi(n as i32);
            let value: f64 = counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(d, &c)| c as f64 * scale * eps.powi(d as i32) * keep.powi((free - d) as i32))
                .sum();
            Probability::Float {
                value,
                error_bound: (2 * free + 8) as f64 * f64::EPSILON,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tie_probability_examples() {
        let cfg = ExactConfig::default();
        let half = BigRational::new(1.into(), 2.into());
        let f = ThresholdFunction::from_integers(&[1, 1], 0).unwrap();
        assert_eq!(tie_probability(&f, &cfg).unwrap().p.as_rational(), Some(&half));
        let f = ThresholdFunction::from_integers(&[1, 2], 0).unwrap();
        assert_eq!(tie_probability(&f, &cfg).unwrap().value(), 0.0);
        let f = ThresholdFunction::from_integers(&[1, 1, 1, 1], 0).unwrap();
        let three_eighths = BigRational::new(3.into(), 8.into());
        assert_eq!(tie_probability(&f, &cfg).unwrap().p.as_rational(), Some(&three_eighths));
        // float weights go through enumeration
        let f = ThresholdFunction::new(vec![0.5, 0.5, 1.0], 0.0).unwrap();
        let r = tie_probability(&f, &cfg).unwrap();
        assert_eq!(r.method, Method::Enumeration);
        assert_eq!(r.p.as_rational(), Some(&BigRational::new(1.into(), 4.into())));
    }

    #[test]
    fn tie_engines_agree() {
        let cfg = ExactConfig::default();
        let no_dp = ExactConfig {
            dp_weight_cap: 0,
            ..cfg
        };
        for (w, t) in [(vec![1, 2, 3], 0), (vec![3, 1, 1, 1, 2], 2), (vec![5, -2, 4, 1], -2)] {
            let f = ThresholdFunction::from_integers(&w, t).unwrap();
            let a = tie_probability(&f, &cfg).unwrap();
            let b = tie_probability(&f, &no_dp).unwrap();
            assert_eq!(a.method, Method::Dp);
            assert_eq!(b.method, Method::Enumeration);
            assert_eq!(a.p, b.p);
        }
    }

    #[test]
    fn auto_engine_selection() {
        let cfg = ExactConfig::default();
        let noise = NoiseParams::new(0.1).unwrap();
        let f = ThresholdFunction::from_integers(&[1, 1, 1], 0).unwrap();
        assert_eq!(p_exact(&f, &noise, Engine::Auto, &cfg).unwrap().method, Method::Dp);
        let f = ThresholdFunction::new(vec![1.5, 1.0, 1.0], 0.0).unwrap();
        assert_eq!(
            p_exact(&f, &noise, Engine::Auto, &cfg).unwrap().method,
            Method::Enumeration
        );
        let f = ThresholdFunction::new(vec![1.5; 20], 0.0).unwrap();
        assert!(matches!(
            p_exact(&f, &noise, Engine::Auto, &cfg),
            Err(Error::EnumerationCap { n: 20, cap: 13 })
        ));
        let f = ThresholdFunction::from_integers(&[1000; 20], 0).unwrap();
        let err = p_exact(&f, &noise, Engine::Auto, &cfg).unwrap_err();
        assert!(err.is_cap_violation());
    }

    #[test]
    fn probability_serialization() {
        let p = Probability::Rational(BigRational::new(17.into(), 125.into()));
        assert_eq!(
            serde_json::to_string(&p).unwrap(),
            r#"{"num":"17","den":"125"}"#
        );
        let p = Probability::Float {
            value: 0.136,
            error_bound: 1e-15,
        };
        assert_eq!(
            serde_json::to_string(&p).unwrap(),
            r#"{"float":0.136,"error_bound":1e-15}"#
        );
    }

    #[test]
    fn bounds_apply_flag() {
        let cfg = ExactConfig::default();
        let f = ThresholdFunction::from_integers(&[1], 0).unwrap();
        let r = p_exact(&f, &NoiseParams::new(0.7).unwrap(), Engine::Enum, &cfg).unwrap();
        assert!(!r.bounds_apply);
        assert!((r.value() - 0.7).abs() < 1e-15);
    }
}

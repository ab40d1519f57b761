//! Closed-form bounds and limits for `p_eps`.
//!
//! For `0 < eps <= 1/2`, `m = floor(1/eps)` and any `n`, `w`, `t`:
//!
//! ```text
//! p_eps <= (2/m) E|B_m - m/2| + [1 - (1-eps)^n] C(n, floor(n/2)) 2^-n   (refined)
//!       <= 2 sqrt(eps)
//! ```
//!
//! where `B_m ~ Binomial(m, 1/2)`. Simple majority attains
//! `arccos(1 - 2 eps) / pi ~ (2/pi) sqrt(eps)` as `n -> infinity`, and
//! `E|2 B_m - m| / sqrt(m) -> sqrt(2/pi)`.

use std::f64::consts::PI;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use statrs::function::factorial::ln_binomial;

use crate::{Error, NoiseParams, Result};

/// `sqrt(2/pi)`, the limit of `E|2 B_m - m| / sqrt(m)`.
pub const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
/// `2/pi`, the small-`eps` slope of `p_eps / sqrt(eps)` for simple majority.
pub const TWO_OVER_PI: f64 = 2.0 / PI;
/// Default largest `m` for which [`mad_binomial`] also returns an exact fraction.
pub const MAD_EXACT_CAP: u64 = 4096;
/// Largest `m` accepted by the direct sum.
pub const MAD_DIRECT_CAP: u64 = 1_000_000;

/// `E|B_m - m/2|` for `B_m ~ Binomial(m, 1/2)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinomialMad {
    pub m: u64,
    pub value: f64,
    #[serde(skip)]
    pub exact: Option<BigRational>,
}

pub fn mad_binomial(m: u64) -> Result<BinomialMad> {
    mad_binomial_with_cap(m, MAD_EXACT_CAP)
}

/// Direct sum `sum_k C(m,k) 2^-m |k - m/2|`: exact integers up to
/// `exact_cap`, log-space floats beyond.
pub fn mad_binomial_with_cap(m: u64, exact_cap: u64) -> Result<BinomialMad> {
    if m == 0 {
        return Err(Error::InvalidArgument("mad_binomial requires m >= 1".into()));
    }
    if m > MAD_DIRECT_CAP {
        return Err(Error::Cap {
            what: "binomial MAD order m",
            value: m,
            cap: MAD_DIRECT_CAP,
        });
    }
    if m <= exact_cap {
        let exact = mad_exact(m);
        return Ok(BinomialMad {
            m,
            value: exact.to_f64().expect("MAD is a finite ratio"),
            exact: Some(exact),
        });
    }
    Ok(BinomialMad {
        m,
        value: mad_log_space(m),
        exact: None,
    })
}

fn mad_exact(m: u64) -> BigRational {
    // sum_k C(m,k) |2k - m|, over 2^(m+1)
    let mut binom = BigUint::one();
    let mut total = BigUint::zero();
    for k in 0..=m {
        let dev = (2 * k).abs_diff(m);
        if dev != 0 {
            total += &binom * dev;
        }
        binom = binom * (m - k) / (k + 1);
    }
    BigRational::new(BigInt::from(total), BigInt::one() << (m + 1))
}

fn mad_log_space(m: u64) -> f64 {
    let center = m / 2;
    let ln_half_pow = -(m as f64) * std::f64::consts::LN_2;
    let ln_center = ln_binomial(m, center) + ln_half_pow;
    let half_m = m as f64 / 2.0;
    let mut sum = 0.0;
    // walk outwards from the mode, multiplying successive pmf ratios
    let mut ln_p = ln_center;
    for k in center..=m {
        let term = ln_p.exp() * (k as f64 - half_m).abs();
        sum += term;
        if k < m {
            ln_p += ((m - k) as f64).ln() - ((k + 1) as f64).ln();
        }
        if ln_p < -745.0 {
            break;
        }
    }
    let mut ln_p = ln_center;
    for k in (0..center).rev() {
        ln_p += ((k + 1) as f64).ln() - ((m - k) as f64).ln();
        if ln_p < -745.0 {
            break;
        }
        sum += ln_p.exp() * (half_m - k as f64).abs();
    }
    sum
}

/// Which hypotheses of the bounds hold at this `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Hypotheses {
    pub eps_le_half: bool,
    pub eps_le_quarter: bool,
}

impl Hypotheses {
    pub fn of(noise: &NoiseParams) -> Self {
        Hypotheses {
            eps_le_half: noise.epsilon() <= 0.5,
            eps_le_quarter: noise.epsilon() <= 0.25,
        }
    }
}

fn require_bound_range(noise: &NoiseParams, operation: &'static str) -> Result<()> {
    let eps = noise.epsilon();
    if eps > 0.0 && eps <= 0.5 {
        Ok(())
    } else {
        Err(Error::EpsilonOutOfRange {
            operation,
            requirement: "0 < eps <= 1/2",
            epsilon: eps,
        })
    }
}

/// `2 sqrt(eps)`.
pub fn bound_sqrt(noise: &NoiseParams) -> Result<f64> {
    require_bound_range(noise, "bound_sqrt")?;
    Ok(2.0 * noise.epsilon().sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinedBound {
    pub value: f64,
    pub m: u64,
    pub mad: f64,
    /// `(2/m) E|B_m - m/2|`.
    pub binomial_term: f64,
    /// `[1 - (1-eps)^n] C(n, floor(n/2)) 2^-n`.
    pub tie_term: f64,
    pub hypotheses: Hypotheses,
}

pub fn bound_refined(n: u64, noise: &NoiseParams) -> Result<RefinedBound> {
    require_bound_range(noise, "bound_refined")?;
    if n == 0 {
        return Err(Error::InvalidArgument("bound_refined requires n >= 1".into()));
    }
    let m = noise.m().expect("eps > 0 has a defined m");
    let mad = mad_binomial(m)?.value;
    let binomial_term = 2.0 / m as f64 * mad;
    let touched = 1.0 - (1.0 - noise.epsilon()).powf(n as f64);
    let tie_term = touched * sperner_bound(n).value;
    Ok(RefinedBound {
        value: binomial_term + tie_term,
        m,
        mad,
        binomial_term,
        tie_term,
        hypotheses: Hypotheses::of(noise),
    })
}

/// Intermediate step `m^-1/2 + sqrt(3/4) sqrt(eps)` between the refined bound
/// and the constant bound, valid for `eps <= 1/4`.
pub fn bound_intermediate(noise: &NoiseParams) -> Result<f64> {
    require_bound_range(noise, "bound_intermediate")?;
    let m = noise.m().expect("eps > 0 has a defined m") as f64;
    Ok(m.powf(-0.5) + 0.75f64.sqrt() * noise.epsilon().sqrt())
}

/// `(sqrt(5/4) + sqrt(3/4)) sqrt(eps)`, valid for `eps <= 1/4`.
pub fn bound_constant(noise: &NoiseParams) -> Result<f64> {
    require_bound_range(noise, "bound_constant")?;
    Ok((1.25f64.sqrt() + 0.75f64.sqrt()) * noise.epsilon().sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpernerBound {
    pub n: u64,
    /// `C(n, floor(n/2)) 2^-n`.
    pub value: f64,
    /// `sqrt(3/4) n^-1/2`.
    pub aux_rhs: f64,
    pub aux_holds: bool,
}

/// Upper bound on `P(<w, X> = 0)` over all nonzero weight vectors.
pub fn sperner_bound(n: u64) -> SpernerBound {
    assert!(n >= 1, "sperner_bound requires n >= 1");
    let value = if n <= 1000 {
        sperner_bound_exact(n).to_f64().expect("finite ratio")
    } else {
        (ln_binomial(n, n / 2) - n as f64 * std::f64::consts::LN_2).exp()
    };
    let aux_rhs = 0.75f64.sqrt() / (n as f64).sqrt();
    SpernerBound {
        n,
        value,
        aux_rhs,
        aux_holds: value <= aux_rhs,
    }
}

pub fn sperner_bound_exact(n: u64) -> BigRational {
    let k = n / 2;
    let mut binom = BigUint::one();
    for i in 0..k {
        binom = binom * (n - i) / (i + 1);
    }
    BigRational::new(BigInt::from(binom), BigInt::one() << n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sheppard {
    /// `arccos(1 - 2 eps) / pi`.
    pub value: f64,
    /// Angle with `cos(alpha) = 1 - 2 eps`.
    pub alpha: f64,
}

/// Large-`n` limit of `p_eps` for simple majority.
pub fn sheppard(noise: &NoiseParams) -> Sheppard {
    let alpha = (1.0 - 2.0 * noise.epsilon()).clamp(-1.0, 1.0).acos();
    Sheppard {
        value: alpha / PI,
        alpha,
    }
}

/// `E|2 B_m - m| / sqrt(m)`, to be compared with [`SQRT_2_OVER_PI`].
pub fn clt_constant_check(m: u64) -> Result<f64> {
    let mad = mad_binomial(m)?;
    Ok(2.0 * mad.value / (m as f64).sqrt())
}

/// Every bound at one `(n, eps)`. Fields needing `0 < eps <= 1/2` are
/// `None` outside that range; the arccos limit is always present.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsSummary {
    pub n: u64,
    pub epsilon: f64,
    pub m: Option<u64>,
    pub mad_binomial: Option<f64>,
    pub bound_sqrt: Option<f64>,
    pub bound_refined: Option<RefinedBound>,
    pub sperner_bound: SpernerBound,
    pub sheppard: Sheppard,
    pub hypotheses: Hypotheses,
    /// Reason the bound fields are absent, if they are.
    pub bound_error: Option<String>,
}

pub fn bounds_summary(n: u64, noise: &NoiseParams) -> Result<BoundsSummary> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let refined = bound_refined(n, noise);
    let (bound_sqrt, bound_refined, bound_error) = match refined {
        Ok(r) => (Some(bound_sqrt(noise)?), Some(r), None),
        Err(e) => (None, None, Some(e.to_string())),
    };
    Ok(BoundsSummary {
        n,
        epsilon: noise.epsilon(),
        m: bound_refined.as_ref().map(|r| r.m),
        mad_binomial: bound_refined.as_ref().map(|r| r.mad),
        bound_sqrt,
        bound_refined,
        sperner_bound: sperner_bound(n),
        sheppard: sheppard(noise),
        hypotheses: Hypotheses::of(noise),
        bound_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eps(e: f64) -> NoiseParams {
        NoiseParams::new(e).unwrap()
    }

    fn ratio(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    /// Brute-force E|B_m - m/2| from the pmf, independent of the library path.
    fn mad_oracle(m: u64) -> f64 {
        let mut c = 1.0f64;
        let mut s = 0.0;
        for k in 0..=m {
            s += c * (k as f64 - m as f64 / 2.0).abs();
            c = c * (m - k) as f64 / (k + 1) as f64;
        }
        s / 2f64.powi(m as i32)
    }

    #[test]
    fn mad_small_values() {
        assert_eq!(mad_binomial(1).unwrap().exact, Some(ratio(1, 2)));
        assert_eq!(mad_binomial(2).unwrap().exact, Some(ratio(1, 2)));
        assert_eq!(mad_binomial(4).unwrap().exact, Some(ratio(3, 4)));
        assert!(mad_binomial(0).is_err());
        assert!(mad_binomial(MAD_DIRECT_CAP + 1).unwrap_err().is_cap_violation());
        for m in 1..60 {
            assert!((mad_binomial(m).unwrap().value - mad_oracle(m)).abs() < 1e-12);
        }
    }

    #[test]
    fn mad_matches_random_walk_closed_form() {
        // E|S_2k| = 2k C(2k,k) 4^-k for the simple random walk S = 2B - m,
        // and E|S_(2k+1)| = E|S_(2k+2)|.
        for m in 1..=300u64 {
            let even = m + (m % 2);
            let k = even / 2;
            let closed = even as f64 * (ln_binomial(even, k) - even as f64 * std::f64::consts::LN_2).exp();
            let direct = 2.0 * mad_binomial(m).unwrap().value;
            assert!((closed - direct).abs() < 1e-10 * closed, "m = {m}");
        }
    }

    #[test]
    fn mad_log_space_agrees_with_exact() {
        for m in [5u64, 64, 501, 1000, 4096] {
            let exact = mad_binomial_with_cap(m, u64::MAX).unwrap().value;
            let float = mad_binomial_with_cap(m, 0).unwrap().value;
            assert!((exact - float).abs() < 1e-10 * exact, "m = {m}: {exact} vs {float}");
        }
    }

    #[test]
    fn mad_nondecreasing_to_200() {
        let values: Vec<BigRational> = (1..=200).map(|m| mad_binomial(m).unwrap().exact.unwrap()).collect();
        assert!(values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn bound_sqrt_examples() {
        assert_eq!(bound_sqrt(&eps(0.25)).unwrap(), 1.0);
        assert!((bound_sqrt(&eps(0.01)).unwrap() - 0.2).abs() < 1e-15);
        assert!((bound_sqrt(&eps(0.5)).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(bound_sqrt(&eps(0.0)).is_err());
        assert!(bound_sqrt(&eps(0.51)).is_err());
    }

    #[test]
    fn refined_bound_examples() {
        let r = bound_refined(4, &eps(0.25)).unwrap();
        assert_eq!(r.m, 4);
        assert!((r.binomial_term - 0.375).abs() < 1e-15);
        assert!((r.tie_term - 0.256_347_656_25).abs() < 1e-12);
        assert!((r.value - 0.631_347_656_25).abs() < 1e-12);

        let r = bound_refined(1, &eps(0.5)).unwrap();
        assert_eq!(r.m, 2);
        assert!((r.value - 0.75).abs() < 1e-15);
        assert!(r.hypotheses.eps_le_half && !r.hypotheses.eps_le_quarter);

        for m in [3u64, 10, 100, 1000] {
            let r = bound_refined(7, &NoiseParams::rational(1, m).unwrap()).unwrap();
            assert!((r.binomial_term - 2.0 / m as f64 * mad_binomial(m).unwrap().value).abs() < 1e-15);
        }
    }

    #[test]
    fn sperner_examples() {
        assert_eq!(sperner_bound_exact(2), ratio(1, 2));
        assert_eq!(sperner_bound_exact(4), ratio(3, 8));
        assert_eq!(sperner_bound_exact(3), ratio(3, 8));
        let s = sperner_bound(3);
        assert!((s.aux_rhs - 0.5).abs() < 1e-15);
        assert!(s.aux_holds);
        // the float path beyond n = 1000 agrees with the exact one at the seam
        let exact = sperner_bound_exact(1001).to_f64().unwrap();
        assert!((sperner_bound(1001).value - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn sheppard_examples() {
        assert_eq!(sheppard(&eps(0.0)).value, 0.0);
        assert!((sheppard(&eps(0.5)).value - 0.5).abs() < 1e-15);
        // arccos(1 - 2e) = 2 sqrt(e) (1 + e/6 + O(e^2)), so the limit sits just
        // above its leading term (2/pi) sqrt(e)
        let s = sheppard(&eps(0.01)).value;
        assert!((s - 0.063_768_56).abs() < 1e-8, "{s}");
        let expansion = TWO_OVER_PI * 0.1;
        assert!((expansion - 0.063_662).abs() < 1e-6);
        assert!(s > expansion && s - expansion < 1e-3);
        assert!((s - expansion - 0.01f64.powf(1.5) / (3.0 * PI)).abs() < 1e-6);
        assert!((sheppard(&eps(0.6)).value - 0.5641).abs() < 1e-4);
        assert!((sheppard(&eps(0.3)).alpha - 0.4f64.acos()).abs() < 1e-15);
    }

    #[test]
    fn clt_constant_values() {
        assert_eq!(clt_constant_check(1).unwrap(), 1.0);
        assert!((clt_constant_check(4).unwrap() - 0.75).abs() < 1e-15);
        assert!((clt_constant_check(10_000).unwrap() - SQRT_2_OVER_PI).abs() <= 0.01);
    }

    #[test]
    fn constant_chain_on_grid() {
        for k in 1..=400 {
            let e = 0.25 * k as f64 / 400.0;
            let noise = eps(e);
            let inter = bound_intermediate(&noise).unwrap();
            let constant = bound_constant(&noise).unwrap();
            let sqrt = bound_sqrt(&noise).unwrap();
            assert!(inter <= constant + 1e-15, "eps = {e}");
            assert!(constant < sqrt);
            for n in [1u64, 2, 3, 5, 10, 50, 333, 1000, 10_000] {
                let refined = bound_refined(n, &noise).unwrap().value;
                assert!(refined <= inter + 1e-15, "n = {n}, eps = {e}");
            }
        }
    }

    #[test]
    fn sheppard_ratio_trend() {
        // p/sqrt(eps) -> 2/pi for the limit curve, so the ratio of
        // sqrt(2/pi) sqrt(eps) to it tends to sqrt(pi/2) < 1.26
        let mut previous = f64::INFINITY;
        for k in 1..=8 {
            let e = 10f64.powi(-k);
            let s = sheppard(&eps(e)).value;
            let slope = s / e.sqrt();
            assert!((slope - TWO_OVER_PI).abs() <= e.sqrt());
            let r = SQRT_2_OVER_PI * e.sqrt() / s;
            let gap = (r - (PI / 2.0).sqrt()).abs();
            assert!(gap <= previous);
            previous = gap;
            assert!(r < 1.26);
        }
        assert!(previous < 1e-6);
    }

    #[test]
    fn summary_outside_bound_range() {
        let s = bounds_summary(4, &eps(0.6)).unwrap();
        assert!(s.bound_sqrt.is_none() && s.bound_refined.is_none());
        assert!(s.bound_error.is_some());
        assert!((s.sheppard.value - 0.5641).abs() < 1e-4);
        let s = bounds_summary(4, &eps(0.25)).unwrap();
        assert_eq!(s.bound_sqrt, Some(1.0));
        assert_eq!(s.m, Some(4));
        assert_eq!(s.mad_binomial, Some(0.75));
    }

    proptest! {
        #[test]
        fn sperner_aux_inequality(n in 1u64..20_000) {
            prop_assert!(sperner_bound(n).aux_holds);
        }

        #[test]
        fn refined_never_exceeds_sqrt_for_small_eps(n in 1u64..5000, e in 1e-6f64..0.5) {
            let noise = eps(e);
            prop_assert!(bound_refined(n, &noise).unwrap().value <= bound_sqrt(&noise).unwrap());
        }
    }
}

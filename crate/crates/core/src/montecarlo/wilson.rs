use statrs::distribution::{ContinuousCDF, Normal};

/// Two-sided standard normal quantile for confidence `level`.
pub fn z_for_level(level: f64) -> f64 {
    let normal = Normal::standard();
    normal.inverse_cdf(1.0 - (1.0 - level) / 2.0)
}

/// Wilson score interval for `successes` out of `trials`.
///
/// The interval always contains the point estimate and lies in `[0, 1]`.
pub fn wilson_interval(successes: u64, trials: u64, level: f64) -> (f64, f64) {
    assert!(trials > 0, "wilson_interval requires at least one trial");
    let n = trials as f64;
    let p = successes as f64 / n;
    let z = z_for_level(level);
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let low = (center - half).clamp(0.0, 1.0).min(p);
    let high = (center + half).clamp(0.0, 1.0).max(p);
    (low, high)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        assert!((z_for_level(0.95) - 1.959_963_984_540_054).abs() < 1e-9);
        assert!((z_for_level(0.99) - 2.575_829_303_548_901).abs() < 1e-9);
    }

    #[test]
    fn known_interval() {
        // 10 of 100 at 95%: (0.0552, 0.1744) to four places
        let (lo, hi) = wilson_interval(10, 100, 0.95);
        assert!((lo - 0.0552).abs() < 1e-4, "{lo}");
        assert!((hi - 0.1744).abs() < 1e-4, "{hi}");
    }

    #[test]
    fn edges() {
        let (lo, hi) = wilson_interval(0, 1000, 0.99);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.01);
        let (lo, hi) = wilson_interval(1000, 1000, 0.99);
        assert_eq!(hi, 1.0);
        assert!(lo > 0.99);
        let (lo, hi) = wilson_interval(1, 1, 0.99);
        assert!(lo <= 1.0 && hi == 1.0);
    }
}

//! Executable checks of the random-partition argument behind the
//! `2 sqrt(eps)` bound.
//!
//! With `m = floor(1/eps)`, coordinates are split into blocks `A_0..A_m` by
//! i.i.d. labels; `S_j` is the weighted sum over block `j`. The checks here
//! confirm, exactly where possible and statistically otherwise, that
//!
//! - `Y_1 - S_1` has the law of `<w, N_eps(x)>` given `x`;
//! - the disagreement indicator equals `2 * 1[S_1 != 0]` times a conditional
//!   expectation over the sign of `S_1` (pointwise, exactly);
//! - averaging over blocks gives `p_eps = (2/m) E sum_{j in lambda} (1/2 - 1[sgn<w,X> = -xi_j])`;
//! - each summand is bounded pointwise by `|B_lambda - #lambda/2|` plus a tie term;
//! - `E|B_l - l/2|` is nondecreasing in `l`, and the assembled bound holds.

mod identities;
mod partition;

use serde::Serialize;

pub use identities::{
    check_averaging, check_keypoint, check_mad_monotone, check_pointwise_inequality, check_setup_law,
    check_tight, tight_exact, AveragingCheck, KeypointCheck, PointwiseCheck, SetupLawCheck, TightCheck,
    TightExact, TIGHT_EXACT_CAP,
};
pub use partition::{sample_partition, PartitionTrace, Partitioner};

use identities::{keypoint_with_offset, zero_threshold_form};

use crate::bounds::bound_refined;
use crate::exact::{p_exact, Engine, ExactConfig};
use crate::{CounterRng, CubePoint, NoiseParams, RandomSource, Result, ThresholdFunction};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub instance: String,
    pub draws: u64,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
}

impl VerificationReport {
    fn new(checks: Vec<CheckOutcome>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        VerificationReport { checks, passed }
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Deliberate errors for negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Add `1/2` to the right side of the pointwise identity.
    KeypointRhs,
}

/// Which checks to run and at what size. A zero count disables a check.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    pub keypoint_grid: bool,
    pub keypoint_random: u64,
    pub partition_law: u64,
    pub setup_law: u64,
    pub tight: u64,
    pub tight_exact: bool,
    pub pointwise: u64,
    pub averaging: u64,
    pub mad_l_max: u64,
    pub bound_chain: u64,
    pub seed: u64,
    pub workers: usize,
    pub level: f64,
    pub fault: Option<Fault>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            keypoint_grid: true,
            keypoint_random: 100_000,
            partition_law: 100_000,
            setup_law: 100_000,
            tight: 1_000_000,
            tight_exact: true,
            pointwise: 100_000,
            averaging: 100_000,
            mad_l_max: 200,
            bound_chain: 200,
            seed: 0x5EED,
            workers: 1,
            level: 0.99,
            fault: None,
        }
    }
}

impl SuiteOptions {
    /// Everything switched off; enable checks field by field.
    pub fn nothing() -> Self {
        SuiteOptions {
            keypoint_grid: false,
            keypoint_random: 0,
            partition_law: 0,
            setup_law: 0,
            tight: 0,
            tight_exact: false,
            pointwise: 0,
            averaging: 0,
            mad_l_max: 0,
            bound_chain: 0,
            ..SuiteOptions::default()
        }
    }

    fn stream(&self, tag: u64) -> u64 {
        CounterRng::new(self.seed, 0).split(tag)
    }
}

fn describe(f: &ThresholdFunction, noise: &NoiseParams) -> String {
    let eps = match noise.exact() {
        Some((p, q)) => format!("{p}/{q}"),
        None => noise.epsilon().to_string(),
    };
    format!("w={:?} t={} eps={eps}", f.weights(), f.threshold())
}

fn fraction(num: u64, den: u64) -> NoiseParams {
    NoiseParams::rational(num, den).expect("valid corpus fraction")
}

fn integers(w: &[i64], t: i64) -> ThresholdFunction {
    ThresholdFunction::from_integers(w, t).expect("valid corpus weights")
}

/// Instances for the statistical identity checks.
fn tight_corpus() -> Vec<(ThresholdFunction, NoiseParams)> {
    vec![
        (integers(&[1, 1, 1], 0), fraction(1, 10)),
        (integers(&[1], 0), fraction(3, 10)),
        (integers(&[1, 1, 1, 1], 0), fraction(1, 4)),
        (integers(&[3, 1, 1, 2], 1), fraction(1, 5)),
    ]
}

fn tight_exact_corpus() -> Vec<(ThresholdFunction, NoiseParams)> {
    vec![
        (integers(&[1, 1, 1], 0), fraction(1, 4)),
        (integers(&[1, 1, 1, 1], 0), fraction(1, 4)),
        (integers(&[1, 2, 3, 1], 0), fraction(1, 3)),
        (integers(&[2, 1, 1], 1), fraction(1, 4)),
        (integers(&[1, 1], 0), fraction(1, 2)),
    ]
}

/// Random integer instance with `n <= max_n`, `|w_i| <= 8`, `t in -2..=2`.
pub(crate) fn random_instance<R: RandomSource>(rng: &mut R, max_n: usize) -> ThresholdFunction {
    let n = 1 + rng.next_below(max_n as u64) as usize;
    let w: Vec<i64> = (0..n)
        .map(|_| (1 + rng.next_below(8) as i64) * rng.next_sign() as i64)
        .collect();
    let t = rng.next_below(5) as i64 - 2;
    ThresholdFunction::from_integers(&w, t).expect("nonzero weights")
}

/// Random `eps = 1/k` or `2/k` with `eps <= 1/2`.
fn random_noise<R: RandomSource>(rng: &mut R) -> NoiseParams {
    let den = 4 + rng.next_below(17);
    let num = 1 + rng.next_below(2);
    fraction(num, den)
}

pub fn check_keypoint_grid(fault: Option<Fault>) -> CheckOutcome {
    let offset = if fault == Some(Fault::KeypointRhs) { 0.5 } else { 0.0 };
    let grid: Vec<f64> = (-6..=6).map(|k| k as f64 / 2.0).collect();
    let mut failures = Vec::new();
    for &s in &grid {
        for &y in &grid {
            let c = keypoint_with_offset(s, y, offset);
            if !c.equal {
                failures.push((s, y, c.lhs, c.rhs));
            }
        }
    }
    CheckOutcome {
        name: "keypoint-grid".into(),
        instance: "s1, y1 in {-3, -2.5, ..., 3}".into(),
        draws: (grid.len() * grid.len()) as u64,
        passed: failures.is_empty(),
        detail: match failures.first() {
            None => "lhs = rhs on every grid pair".into(),
            Some(f) => format!("{} mismatches, first at s1={} y1={}: lhs={} rhs={}", failures.len(), f.0, f.1, f.2, f.3),
        },
    }
}

/// Random real pairs, a fifth each with `s1 = 0`, `s1 = y1` and `s1 = -y1`.
pub fn check_keypoint_random(draws: u64, seed: u64, fault: Option<Fault>) -> CheckOutcome {
    let offset = if fault == Some(Fault::KeypointRhs) { 0.5 } else { 0.0 };
    let mut mismatches = 0u64;
    for i in 0..draws {
        let mut rng = CounterRng::new(seed, i);
        let s = (rng.next_f64() - 0.5) * 8.0;
        let y = (rng.next_f64() - 0.5) * 8.0;
        let (s, y) = match rng.next_below(5) {
            0 => (0.0, y),
            1 => (s, s),
            2 => (s, -s),
            _ => (s, y),
        };
        if !keypoint_with_offset(s, y, offset).equal {
            mismatches += 1;
        }
    }
    CheckOutcome {
        name: "keypoint-random".into(),
        instance: "random real pairs with boundary cases".into(),
        draws,
        passed: mismatches == 0,
        detail: format!("{mismatches} mismatches"),
    }
}

/// Label frequencies against `eps` per block and `1 - m eps` for block zero.
pub fn check_partition_law(noise: &NoiseParams, draws: u64, seed: u64) -> Result<CheckOutcome> {
    let f = integers(&[1], 0);
    let partitioner = Partitioner::new(&f, noise, &[])?;
    let m = partitioner.m();
    let mut counts = vec![0u64; m + 1];
    for i in 0..draws {
        counts[partitioner.sample(&mut CounterRng::new(seed, i)).tau[0]] += 1;
    }
    let eps = noise.epsilon();
    let d = draws as f64;
    let mut worst = 0.0f64;
    let mut passed = true;
    for (j, &c) in counts.iter().enumerate() {
        let p = if j == 0 { (1.0 - m as f64 * eps).max(0.0) } else { eps };
        let freq = c as f64 / d;
        let gap = (freq - p).abs();
        worst = worst.max(gap);
        if gap > 5.0 * (p * (1.0 - p) / d).sqrt() + 1.0 / d {
            passed = false;
        }
    }
    Ok(CheckOutcome {
        name: "partition-law".into(),
        instance: describe(&f, noise),
        draws,
        passed,
        detail: format!("m={m}, largest frequency gap {worst:.3e}"),
    })
}

/// Pointwise inequality on traces of fresh random instances, `n <= max_n`.
pub fn check_pointwise_sampled(draws: u64, max_n: usize, seed: u64) -> Result<CheckOutcome> {
    let mut violations = 0u64;
    let mut first = None;
    for i in 0..draws {
        let mut rng = CounterRng::new(seed, i);
        let f = random_instance(&mut rng, max_n);
        let noise = random_noise(&mut rng);
        let (g, exempt) = zero_threshold_form(&f)?;
        let trace = Partitioner::new(&g, &noise, &exempt)?.sample(&mut rng);
        let c = check_pointwise_inequality(&trace, trace.sign_total());
        if !c.holds {
            violations += 1;
            first.get_or_insert_with(|| format!("{}: lhs={} rhs={}", describe(&f, &noise), c.lhs, c.rhs));
        }
    }
    Ok(CheckOutcome {
        name: "pointwise-inequality".into(),
        instance: format!("random integer instances, n <= {max_n}"),
        draws,
        passed: violations == 0,
        detail: first.unwrap_or_else(|| "holds on every trace".into()),
    })
}

/// Exact `p` against the refined bound on random instances with `n <= 8`.
pub fn check_bound_chain(instances: u64, seed: u64) -> Result<CheckOutcome> {
    let config = ExactConfig::default();
    let mut violations = Vec::new();
    for i in 0..instances {
        let mut rng = CounterRng::new(seed, i);
        let f = random_instance(&mut rng, 8);
        let noise = random_noise(&mut rng);
        let p = p_exact(&f, &noise, Engine::Auto, &config)?.value();
        let bound = bound_refined(f.n() as u64, &noise)?.value;
        if p > bound + 1e-12 {
            violations.push(format!("{}: p={p} > {bound}", describe(&f, &noise)));
        }
    }
    Ok(CheckOutcome {
        name: "bound-chain".into(),
        instance: "random integer instances, n <= 8".into(),
        draws: instances,
        passed: violations.is_empty(),
        detail: violations
            .first()
            .cloned()
            .unwrap_or_else(|| "exact p <= refined bound on every instance".into()),
    })
}

/// Run the selected checks.
pub fn run_suite(options: &SuiteOptions) -> Result<VerificationReport> {
    let mut checks = Vec::new();
    if options.keypoint_grid {
        checks.push(check_keypoint_grid(options.fault));
    }
    if options.keypoint_random > 0 {
        checks.push(check_keypoint_random(options.keypoint_random, options.stream(1), options.fault));
    }
    if options.partition_law > 0 {
        for noise in [fraction(1, 3), fraction(1, 2), NoiseParams::new(0.15)?] {
            checks.push(check_partition_law(&noise, options.partition_law, options.stream(2))?);
        }
    }
    if options.setup_law > 0 {
        let cases = [
            (integers(&[1, 2, 3], 0), fraction(1, 5), vec![1i8, -1, 1]),
            (integers(&[1, 1, 2], 1), fraction(1, 3), vec![1, 1, -1]),
        ];
        for (f, noise, x) in cases {
            let x = CubePoint::new(x).expect("sign vector");
            let c = check_setup_law(&f, &noise, &x, options.setup_law, options.stream(3))?;
            checks.push(CheckOutcome {
                name: "setup-law".into(),
                instance: format!("{} x={:?}", describe(&f, &noise), x.coords()),
                draws: c.draws,
                passed: c.passed,
                detail: format!("{} support values compared", c.cells.len()),
            });
        }
    }
    if options.tight > 0 {
        for (f, noise) in tight_corpus() {
            let c = check_tight(&f, &noise, options.tight, options.stream(4), options.level, options.workers)?;
            checks.push(CheckOutcome {
                name: "tight".into(),
                instance: describe(&f, &noise),
                draws: c.draws,
                passed: c.passed,
                detail: format!(
                    "estimate {:.6} in [{:.6}, {:.6}], exact {:.6}",
                    c.estimate, c.ci_low, c.ci_high, c.exact_p
                ),
            });
        }
    }
    if options.tight_exact {
        for (f, noise) in tight_exact_corpus() {
            let c = tight_exact(&f, &noise)?;
            checks.push(CheckOutcome {
                name: "tight-exact".into(),
                instance: describe(&f, &noise),
                draws: 0,
                passed: c.equal,
                detail: format!("partition average {} vs exact {}", c.partition_average, c.exact_p),
            });
        }
    }
    if options.pointwise > 0 {
        checks.push(check_pointwise_sampled(options.pointwise, 8, options.stream(5))?);
    }
    if options.averaging > 0 {
        for (f, noise) in tight_corpus() {
            let c = check_averaging(&f, &noise, options.averaging, options.stream(6))?;
            checks.push(CheckOutcome {
                name: "averaging".into(),
                instance: describe(&f, &noise),
                draws: c.draws,
                passed: c.passed,
                detail: format!("mean {:.6} (se {:.2e}) vs E|B_m - m/2| = {:.6}", c.mean, c.standard_error, c.mad_m),
            });
        }
    }
    if options.mad_l_max > 0 {
        let ok = check_mad_monotone(options.mad_l_max.max(2))?;
        checks.push(CheckOutcome {
            name: "mad-monotone".into(),
            instance: format!("l <= {}", options.mad_l_max.max(2)),
            draws: 0,
            passed: ok,
            detail: if ok { "nondecreasing".into() } else { "decrease found".into() },
        });
    }
    if options.bound_chain > 0 {
        checks.push(check_bound_chain(options.bound_chain, options.stream(7))?);
    }
    Ok(VerificationReport::new(checks))
}

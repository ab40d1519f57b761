//! Search for the most noise sensitive weights at fixed `(n, eps)`.
//!
//! Simple majority has `p_eps ~ (2/pi) sqrt(eps)` for large `n`, while the
//! general bound is `2 sqrt(eps)`. Whether some weighting beats the
//! `2/pi` constant as `eps -> 0` and `n eps -> infinity` is open; the searches
//! here compare candidates against finite-`n` simple majority and against
//! the bound, and treat any candidate above `2 sqrt(eps)` as a bug.

use std::collections::HashMap;

use num_integer::Integer;
use serde::Serialize;

use crate::bounds::{bound_sqrt, sheppard};
use crate::exact::{p_exact_dp, ExactConfig};
use crate::montecarlo::{estimate, parallel_ranges, McConfig};
use crate::{CounterRng, Error, NoiseParams, RandomSource, Result, ThresholdFunction};

/// Largest `n` accepted by [`search_exhaustive`].
pub const EXHAUSTIVE_MAX_N: usize = 10;
/// Largest number of near-optimal candidates kept in a report.
pub const TOP_LIMIT: usize = 64;
/// Candidates within this distance of the best are reported alongside it.
pub const TOP_TOLERANCE: f64 = 1e-12;
/// Rough operation budget under which the dp serves as an exact objective.
pub const DP_COST_BUDGET: u64 = 200_000_000;

const OPEN_QUESTION: &str = "open: whether simple majority is asymptotically the most noise sensitive \
weighted majority (constant 2/pi in place of the bound's 2) as eps -> 0 and n eps -> infinity; \
a finite search is only suggestive";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SearchMethod {
    #[serde(rename = "exhaustive")]
    Exhaustive,
    #[serde(rename = "random-restart local search")]
    LocalSearch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Objective {
    Exact,
    /// Paired Monte Carlo; a move is taken only when the candidate's lower
    /// confidence limit exceeds the incumbent's point estimate.
    MonteCarlo { samples: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub weights: Vec<i64>,
    pub threshold: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchReport {
    pub n: usize,
    pub epsilon: f64,
    pub method: SearchMethod,
    pub objective: Objective,
    pub best_f: ThresholdFunction,
    pub best_p: f64,
    /// Every candidate within [`TOP_TOLERANCE`] of the best, at most [`TOP_LIMIT`].
    pub top: Vec<Candidate>,
    pub evaluations: u64,
    /// Simple majority at this `n` with `t = 0`.
    pub baseline_simple_majority_p: f64,
    pub simple_majority_in_family: bool,
    /// Whether any candidate beat simple majority by more than [`TOP_TOLERANCE`].
    pub beats_simple_majority: bool,
    pub bound_2sqrt: Option<f64>,
    /// `best_p / (arccos(1 - 2 eps) / pi)`.
    pub ratio_to_sheppard: f64,
    pub open_question: String,
    /// Incumbent value after each accepted move, per restart (local search only).
    pub trajectories: Vec<Vec<f64>>,
}

/// `sum_i (2 W_i + 1)^2` over prefix weight totals `W_i`, the dense dp's work.
pub fn dp_cost(weights: &[i64]) -> u64 {
    let mut prefix = 0u64;
    let mut cost = 0u64;
    for w in weights {
        prefix += w.unsigned_abs();
        cost = cost.saturating_add((2 * prefix + 1).saturating_mul(2 * prefix + 1));
    }
    cost
}

fn exact_p(weights: &[i64], doubled_threshold: i64, noise: &NoiseParams) -> Result<f64> {
    // thresholds are carried doubled so half-integers stay integral
    let f = if doubled_threshold % 2 == 0 {
        ThresholdFunction::from_integers(weights, doubled_threshold / 2)?
    } else {
        let w2: Vec<i64> = weights.iter().map(|w| 2 * w).collect();
        ThresholdFunction::from_integers(&w2, doubled_threshold)?
    };
    let config = ExactConfig {
        dp_weight_cap: u64::MAX,
        ..ExactConfig::default()
    };
    Ok(p_exact_dp(&f, noise, &config)?.value())
}

fn simple_majority_baseline(n: usize, noise: &NoiseParams, samples: u64, seed: u64) -> Result<f64> {
    let ones = vec![1i64; n];
    if dp_cost(&ones) <= DP_COST_BUDGET {
        exact_p(&ones, 0, noise)
    } else {
        let f = ThresholdFunction::simple_majority(n, 0.0)?;
        Ok(estimate(&f, noise, samples.max(1), seed, &McConfig::default())?.p_hat)
    }
}

fn guard(report: &SearchReport, witness: f64) -> Result<()> {
    match report.bound_2sqrt {
        Some(bound) if witness > bound => Err(Error::CounterExample(format!(
            "weights {:?}, t = {}, eps = {}: p = {} exceeds 2 sqrt(eps) = {}",
            report.best_f.weights(),
            report.best_f.threshold(),
            report.epsilon,
            report.best_p,
            bound
        ))),
        _ => Ok(()),
    }
}

/// Next nondecreasing vector in `1..=cap`, lexicographically.
fn advance(w: &mut [i64], cap: i64) -> bool {
    let Some(i) = w.iter().rposition(|&v| v < cap) else {
        return false;
    };
    let v = w[i] + 1;
    for slot in &mut w[i..] {
        *slot = v;
    }
    true
}

fn gcd_all(w: &[i64]) -> i64 {
    w.iter().fold(0, |g, &v| g.gcd(&v))
}

/// Every nondecreasing weight vector `1 <= w_1 <= ... <= w_n <= weight_cap`,
/// scored by the exact dp.
///
/// Permutations and sign flips of coordinates leave `p_eps` unchanged, so
/// sorted positive vectors cover the family. With `t = 0` a common factor
/// does not change the function either, and vectors with `gcd > 1` are
/// skipped. With `include_half_thresholds`, every `t` in `1/2, 3/2, ...`
/// below `sum w` is tried as well (negative `t` mirrors positive `t`).
pub fn search_exhaustive(
    n: usize,
    noise: &NoiseParams,
    weight_cap: i64,
    include_half_thresholds: bool,
) -> Result<SearchReport> {
    if n == 0 {
        return Err(Error::EmptyWeights);
    }
    if n > EXHAUSTIVE_MAX_N {
        return Err(Error::Cap {
            what: "exhaustive search n",
            value: n as u64,
            cap: EXHAUSTIVE_MAX_N as u64,
        });
    }
    if weight_cap < 1 {
        return Err(Error::InvalidArgument("weight cap must be at least 1".into()));
    }
    let mut w = vec![1i64; n];
    let mut scored: Vec<Candidate> = Vec::new();
    loop {
        if gcd_all(&w) == 1 {
            scored.push(Candidate {
                p: exact_p(&w, 0, noise)?,
                weights: w.clone(),
                threshold: 0.0,
            });
        }
        if include_half_thresholds {
            let total: i64 = w.iter().sum();
            for doubled in (1..2 * total).step_by(2) {
                scored.push(Candidate {
                    p: exact_p(&w, doubled, noise)?,
                    weights: w.clone(),
                    threshold: doubled as f64 / 2.0,
                });
            }
        }
        if !advance(&mut w, weight_cap) {
            break;
        }
    }
    let evaluations = scored.len() as u64;
    let baseline = scored[0].p;
    let report = assemble(n, noise, SearchMethod::Exhaustive, Objective::Exact, scored, evaluations, baseline, Vec::new())?;
    guard(&report, report.best_p)?;
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    n: usize,
    noise: &NoiseParams,
    method: SearchMethod,
    objective: Objective,
    mut scored: Vec<Candidate>,
    evaluations: u64,
    baseline: f64,
    trajectories: Vec<Vec<f64>>,
) -> Result<SearchReport> {
    // best first; equal values by weights, then threshold
    scored.sort_by(|a, b| {
        b.p.total_cmp(&a.p)
            .then_with(|| a.weights.cmp(&b.weights))
            .then_with(|| a.threshold.total_cmp(&b.threshold))
    });
    let best = scored[0].clone();
    let top: Vec<Candidate> = scored
        .into_iter()
        .take_while(|c| best.p - c.p <= TOP_TOLERANCE)
        .take(TOP_LIMIT)
        .collect();
    let limit = sheppard(noise).value;
    Ok(SearchReport {
        n,
        epsilon: noise.epsilon(),
        method,
        objective,
        best_f: ThresholdFunction::new(best.weights.iter().map(|&w| w as f64).collect(), best.threshold)?,
        best_p: best.p,
        top,
        evaluations,
        baseline_simple_majority_p: baseline,
        simple_majority_in_family: true,
        beats_simple_majority: best.p > baseline + TOP_TOLERANCE,
        bound_2sqrt: bound_sqrt(noise).ok(),
        ratio_to_sheppard: if limit > 0.0 { best.p / limit } else { f64::NAN },
        open_question: OPEN_QUESTION.to_string(),
        trajectories,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalSearchConfig {
    pub objective: Objective,
    /// Random starting weights are drawn from `1..=init_cap`.
    pub init_cap: i64,
    /// Passes over all coordinates per restart.
    pub max_passes: usize,
    /// Threads across restarts.
    pub workers: usize,
    pub level: f64,
}

impl Default for LocalSearchConfig {
    fn default() -> Self {
        LocalSearchConfig {
            objective: Objective::Exact,
            init_cap: 8,
            max_passes: 50,
            workers: 1,
            level: 0.99,
        }
    }
}

/// Score of one candidate: point value and lower confidence limit (equal
/// under the exact objective).
#[derive(Debug, Clone, Copy)]
struct Score {
    p: f64,
    low: f64,
}

struct Restart {
    best: Candidate,
    trajectory: Vec<f64>,
    evaluations: u64,
}

fn run_restart(n: usize, noise: &NoiseParams, seed: u64, index: u64, config: &LocalSearchConfig) -> Result<Restart> {
    let mut rng = CounterRng::new(seed, index);
    let mc_seed = rng.split(0);
    let mut evaluations = 0u64;
    let mut cache: HashMap<Vec<i64>, Score> = HashMap::new();
    let mut score = |w: &[i64]| -> Result<Score> {
        let mut key = w.to_vec();
        key.sort_unstable();
        if let Some(s) = cache.get(&key) {
            return Ok(*s);
        }
        evaluations += 1;
        let s = match config.objective {
            Objective::Exact => {
                let p = exact_p(&key, 0, noise)?;
                Score { p, low: p }
            }
            Objective::MonteCarlo { samples } => {
                let f = ThresholdFunction::from_integers(&key, 0)?;
                let mc = McConfig {
                    level: config.level,
                    ..McConfig::default()
                };
                let est = estimate(&f, noise, samples, mc_seed, &mc)?;
                Score {
                    p: est.p_hat,
                    low: est.ci_low,
                }
            }
        };
        cache.insert(key, s);
        Ok(s)
    };

    let mut w: Vec<i64> = if index == 0 {
        vec![1; n]
    } else {
        (0..n).map(|_| 1 + rng.next_below(config.init_cap as u64) as i64).collect()
    };
    let mut current = score(&w)?;
    let mut trajectory = vec![current.p];
    for _ in 0..config.max_passes {
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            order.swap(i, rng.next_below(i as u64 + 1) as usize);
        }
        let mut moved = false;
        for &i in &order {
            for delta in [1i64, -1] {
                if w[i] + delta < 1 {
                    continue;
                }
                w[i] += delta;
                let candidate = score(&w)?;
                let accept = match config.objective {
                    Objective::Exact => candidate.p > current.p,
                    Objective::MonteCarlo { .. } => candidate.low > current.p,
                };
                if accept {
                    current = candidate;
                    trajectory.push(current.p);
                    moved = true;
                    break;
                }
                w[i] -= delta;
            }
        }
        if !moved {
            break;
        }
    }
    w.sort_unstable();
    let g = gcd_all(&w);
    Ok(Restart {
        best: Candidate {
            weights: w.iter().map(|v| v / g).collect(),
            threshold: 0.0,
            p: current.p,
        },
        trajectory,
        evaluations,
    })
}

/// Random-restart coordinate search over positive integer weights with
/// `t = 0`. Restart `0` starts from simple majority, the rest from random
/// weights. Moves add or subtract one from a single weight, never below one.
/// Deterministic given `seed`, whatever the worker count.
pub fn search_local(
    n: usize,
    noise: &NoiseParams,
    restarts: u64,
    seed: u64,
    config: &LocalSearchConfig,
) -> Result<SearchReport> {
    if restarts < 1 {
        return Err(Error::InvalidArgument("at least one restart is required".into()));
    }
    if n == 0 {
        return Err(Error::EmptyWeights);
    }
    if config.init_cap < 1 {
        return Err(Error::InvalidArgument("initial weight cap must be at least 1".into()));
    }
    if let Objective::MonteCarlo { samples: 0 } = config.objective {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let runs: Vec<Result<Vec<Restart>>> = parallel_ranges(restarts, config.workers, |range| {
        range.map(|r| run_restart(n, noise, seed, r, config)).collect()
    });
    let mut results = Vec::new();
    for chunk in runs {
        results.extend(chunk?);
    }
    let evaluations = results.iter().map(|r| r.evaluations).sum();
    let baseline = match config.objective {
        Objective::Exact => results[0].trajectory[0],
        Objective::MonteCarlo { samples } => simple_majority_baseline(n, noise, samples, CounterRng::new(seed, 0).split(0))?,
    };
    let trajectories = results.iter().map(|r| r.trajectory.clone()).collect();
    let scored = results.into_iter().map(|r| r.best).collect();
    let report = assemble(n, noise, SearchMethod::LocalSearch, config.objective, scored, evaluations, baseline, trajectories)?;
    guard(&report, report.best_p)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub enum CurveFamily {
    SimpleMajority,
    Weights(ThresholdFunction),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioRow {
    pub epsilon: f64,
    pub p: f64,
    pub p_over_sqrt_eps: f64,
    pub p_over_sheppard: f64,
    /// Whether `p` is exact (dp) or a Monte Carlo estimate.
    pub exact: bool,
}

/// `p_eps`, `p / sqrt(eps)` and `p` over the arccos limit along a grid in
/// `(0, 1/2]`. Uses the dp when the weights are integers and cheap enough,
/// Monte Carlo with `samples` otherwise.
pub fn ratio_curve(
    n: usize,
    grid: &[NoiseParams],
    family: &CurveFamily,
    samples: u64,
    seed: u64,
) -> Result<Vec<RatioRow>> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("epsilon grid is empty".into()));
    }
    let f = match family {
        CurveFamily::SimpleMajority => ThresholdFunction::simple_majority(n, 0.0)?,
        CurveFamily::Weights(f) => {
            if f.n() != n {
                return Err(Error::DimensionMismatch { expected: n, actual: f.n() });
            }
            f.clone()
        }
    };
    let exact = f
        .integer_weights()
        .filter(|(w, _)| dp_cost(w) <= DP_COST_BUDGET);
    grid.iter()
        .map(|noise| {
            let e = noise.epsilon();
            if !(e > 0.0 && e <= 0.5) {
                return Err(Error::EpsilonOutOfRange {
                    operation: "ratio_curve",
                    requirement: "0 < eps <= 1/2",
                    epsilon: e,
                });
            }
            let p = match exact {
                Some(_) => {
                    let config = ExactConfig {
                        dp_weight_cap: u64::MAX,
                        ..ExactConfig::default()
                    };
                    p_exact_dp(&f, noise, &config)?.value()
                }
                None => estimate(&f, noise, samples.max(1), seed, &McConfig::default())?.p_hat,
            };
            Ok(RatioRow {
                epsilon: e,
                p,
                p_over_sqrt_eps: p / e.sqrt(),
                p_over_sheppard: p / sheppard(noise).value,
                exact: exact.is_some(),
            })
        })
        .collect()
}

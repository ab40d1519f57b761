use serde::Serialize;

use super::{estimate, estimate_bitparallel, McConfig, McEstimate};
use crate::bounds::{bound_sqrt, sheppard};
use crate::{Error, NoiseParams, Result, ThresholdFunction};

/// Instance family swept over a grid of flip probabilities.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Unit weights on `n` coordinates with threshold `t`; uses the
    /// bit-parallel path when `fast` is set.
    SimpleMajority { n: usize, threshold: f64, fast: bool },
    Weights(ThresholdFunction),
}

impl Family {
    pub fn n(&self) -> usize {
        match self {
            Family::SimpleMajority { n, .. } => *n,
            Family::Weights(f) => f.n(),
        }
    }

    pub fn threshold(&self) -> f64 {
        match self {
            Family::SimpleMajority { threshold, .. } => *threshold,
            Family::Weights(f) => f.threshold(),
        }
    }

    /// Short stable identifier: `simple` for unit weights, otherwise `w` and
    /// the FNV-1a hash of the decimal weight list.
    pub fn weights_id(&self) -> String {
        match self {
            Family::SimpleMajority { .. } => "simple".to_string(),
            Family::Weights(f) if f.is_unit_weight() => "simple".to_string(),
            Family::Weights(f) => {
                let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
                let text = f.weights().iter().map(|w| w.to_string()).collect::<Vec<_>>().join(",");
                for byte in text.bytes() {
                    hash ^= byte as u64;
                    hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
                }
                format!("w{hash:016x}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub weights_id: String,
    pub t: f64,
    pub epsilon: f64,
    pub estimate: McEstimate,
    /// `None` outside `0 < eps <= 1/2`.
    pub bound_sqrt: Option<f64>,
    pub sheppard: f64,
}

/// One estimate per grid point, each drawn from the same `seed` so any row
/// can be reproduced on its own.
///
/// Fails with [`Error::CounterExample`] if a row's lower confidence limit
/// exceeds `2 sqrt(eps)`.
pub fn sweep(
    family: &Family,
    grid: &[NoiseParams],
    samples: u64,
    seed: u64,
    config: &McConfig,
) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("epsilon grid is empty".into()));
    }
    let simple = match family {
        Family::SimpleMajority { n, threshold, .. } => Some(ThresholdFunction::simple_majority(*n, *threshold)?),
        Family::Weights(_) => None,
    };
    grid.iter()
        .map(|noise| {
            let est = match family {
                Family::SimpleMajority { n, threshold, fast: true } => {
                    estimate_bitparallel(*n, *threshold, noise, samples, seed, config)?
                }
                Family::SimpleMajority { .. } => estimate(simple.as_ref().expect("built above"), noise, samples, seed, config)?,
                Family::Weights(f) => estimate(f, noise, samples, seed, config)?,
            };
            let bound = bound_sqrt(noise).ok();
            if let Some(b) = bound {
                if est.ci_low > b {
                    return Err(Error::CounterExample(format!(
                        "family {} (n = {}, t = {}), eps = {}: ci_low {} > 2 sqrt(eps) = {}",
                        family.weights_id(),
                        family.n(),
                        family.threshold(),
                        noise.epsilon(),
                        est.ci_low,
                        b
                    )));
                }
            }
            Ok(SweepRow {
                n: family.n(),
                weights_id: family.weights_id(),
                t: family.threshold(),
                epsilon: noise.epsilon(),
                bound_sqrt: bound,
                sheppard: sheppard(noise).value,
                estimate: est,
            })
        })
        .collect()
}

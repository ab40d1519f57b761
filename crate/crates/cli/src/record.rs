use std::time::{Instant, SystemTime, UNIX_EPOCH};

use ltfnoise_core::{NoiseParams, ThresholdFunction};
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Serialize)]
pub struct Instance {
    pub n: usize,
    pub weights: Vec<f64>,
    pub t: f64,
}

impl Instance {
    pub fn of(f: &ThresholdFunction) -> Self {
        Instance {
            n: f.n(),
            weights: f.weights().to_vec(),
            t: f.threshold(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Fraction {
    pub num: String,
    pub den: String,
}

#[derive(Debug, Serialize)]
pub struct Epsilon {
    pub value: f64,
    /// Present when given as an exact fraction.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<Fraction>,
    /// The flip probability the sampler realizes, when it differs in kind.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub realized: Option<f64>,
}

impl Epsilon {
    pub fn of(noise: &NoiseParams) -> Self {
        Epsilon {
            value: noise.epsilon(),
            exact: noise.exact().map(|(p, q)| Fraction {
                num: p.to_string(),
                den: q.to_string(),
            }),
            realized: None,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Timing {
    /// Seconds since the Unix epoch.
    pub timestamp: f64,
    pub elapsed_secs: f64,
}

/// One machine-readable result. Everything but `timing` is a function of the
/// command line.
#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub command: Vec<String>,
    pub version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<Instance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Epsilon>,
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl RunRecord {
    pub fn new(method: impl Into<String>, result: Value) -> Self {
        RunRecord {
            command: std::env::args().skip(1).collect(),
            version: env!("CARGO_PKG_VERSION"),
            instance: None,
            epsilon: None,
            method: method.into(),
            seed: None,
            result,
            timing: None,
        }
    }

    pub fn with_instance(mut self, f: &ThresholdFunction) -> Self {
        self.instance = Some(Instance::of(f));
        self
    }

    pub fn with_epsilon(mut self, epsilon: Epsilon) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn stamp(&mut self, started: Instant) {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        self.timing = Some(Timing {
            timestamp,
            elapsed_secs: started.elapsed().as_secs_f64(),
        });
    }
}

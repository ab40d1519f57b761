use std::fmt::Write as _;
use std::time::Instant;

use ltfnoise_core::bounds::bounds_summary;
use ltfnoise_core::exact::{p_exact, Engine, ExactConfig};
use ltfnoise_core::montecarlo::{estimate, estimate_bitparallel, sweep as run_sweep, DecisionProtocol, Family, McConfig};
use ltfnoise_core::proofcheck::{run_suite, Fault, SuiteOptions};
use ltfnoise_core::search::{ratio_curve as run_ratio_curve, search_exhaustive, search_local, CurveFamily, LocalSearchConfig, Objective};
use ltfnoise_core::{NoiseParams, ThresholdFunction};
use serde::Serialize;

use crate::record::{Epsilon, RunRecord};
use crate::{parse, BoundsArgs, CliError, EngineArg, ExactArgs, InstanceArgs, McArgs, NoiseArgs, Output, RatioArgs, SearchArgs, SweepArgs, VerifyArgs};

fn function(a: &InstanceArgs) -> Result<ThresholdFunction, CliError> {
    match (&a.weights, a.simple_majority) {
        (Some(w), _) => Ok(ThresholdFunction::new(parse::weights(w)?, a.threshold)?),
        (None, Some(n)) => Ok(ThresholdFunction::simple_majority(n, a.threshold)?),
        (None, None) => Err(CliError::usage("give --weights or --simple-majority")),
    }
}

fn noise(a: &NoiseArgs) -> Result<NoiseParams, CliError> {
    parse::epsilon(&a.epsilon, a.rational)
}

fn to_value<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("results serialize to JSON")
}

fn finish(mut record: RunRecord, started: Instant, compare: bool, failure: Option<String>) -> Output {
    if !compare {
        record.stamp(started);
    }
    let mut text = serde_json::to_string_pretty(&record).expect("records serialize to JSON");
    text.push('\n');
    Output { text, failure }
}

pub fn exact(a: ExactArgs, compare: bool) -> Result<Output, CliError> {
    let started = Instant::now();
    let f = function(&a.instance)?;
    let noise = noise(&a.noise)?;
    let config = ExactConfig {
        enum_cap: a.enum_cap,
        dp_weight_cap: a.dp_cap,
        workers: a.workers.max(1),
        ..ExactConfig::default()
    };
    let engine = match a.engine {
        EngineArg::Enum => Engine::Enum,
        EngineArg::Dp => Engine::Dp,
        EngineArg::Auto => Engine::Auto,
    };
    let result = p_exact(&f, &noise, engine, &config)?;
    let method = to_value(&result.method).as_str().unwrap_or_default().to_string();
    let record = RunRecord::new(method, to_value(&result))
        .with_instance(&f)
        .with_epsilon(Epsilon::of(&noise));
    Ok(finish(record, started, compare, None))
}

pub fn mc(a: McArgs, compare: bool) -> Result<Output, CliError> {
    let started = Instant::now();
    let f = function(&a.instance)?;
    let noise = noise(&a.noise)?;
    let s = &a.sampling;
    let config = McConfig {
        level: s.level,
        workers: s.workers.max(1),
        protocol: if a.shared_words {
            DecisionProtocol::SharedWords
        } else {
            DecisionProtocol::PerCoordinate
        },
    };
    let est = if a.fast_path {
        if !f.is_unit_weight() {
            return Err(CliError::usage("--fast-path needs unit weights; drop it for general weights"));
        }
        estimate_bitparallel(f.n(), f.threshold(), &noise, s.samples, s.seed, &config)?
    } else {
        estimate(&f, &noise, s.samples, s.seed, &config)?
    };
    let mut epsilon = Epsilon::of(&noise);
    if est.protocol == DecisionProtocol::SharedWords {
        epsilon.realized = Some(est.realized_epsilon);
    }
    let method = to_value(&est.method).as_str().unwrap_or_default().to_string();
    let record = RunRecord::new(method, to_value(&est))
        .with_instance(&f)
        .with_epsilon(epsilon)
        .with_seed(s.seed);
    Ok(finish(record, started, compare, None))
}

pub fn bounds(a: BoundsArgs, compare: bool) -> Result<Output, CliError> {
    let started = Instant::now();
    let noise = noise(&a.noise)?;
    let summary = bounds_summary(a.n, &noise)?;
    let record = RunRecord::new("bounds", to_value(&summary)).with_epsilon(Epsilon::of(&noise));
    Ok(finish(record, started, compare, None))
}

pub fn verify(a: VerifyArgs, compare: bool) -> Result<Output, CliError> {
    let started = Instant::now();
    let selected = a.keypoint_grid
        || a.tight_exact
        || [a.keypoint_random, a.partition_law, a.setup_law, a.tight, a.pointwise, a.averaging, a.mad, a.chain]
            .iter()
            .any(Option::is_some);
    let base = if selected {
        SuiteOptions::nothing()
    } else {
        SuiteOptions::default()
    };
    let options = SuiteOptions {
        keypoint_grid: base.keypoint_grid || a.keypoint_grid,
        keypoint_random: a.keypoint_random.unwrap_or(base.keypoint_random),
        partition_law: a.partition_law.unwrap_or(base.partition_law),
        setup_law: a.setup_law.unwrap_or(base.setup_law),
        tight: a.tight.unwrap_or(base.tight),
        tight_exact: base.tight_exact || a.tight_exact,
        pointwise: a.pointwise.unwrap_or(base.pointwise),
        averaging: a.averaging.unwrap_or(base.averaging),
        mad_l_max: a.mad.unwrap_or(base.mad_l_max),
        bound_chain: a.chain.unwrap_or(base.bound_chain),
        seed: a.seed,
        workers: a.workers.max(1),
        fault: a.inject_fault.then_some(Fault::KeypointRhs),
        ..base
    };
    let report = run_suite(&options)?;
    let failure = (!report.passed).then(|| {
        report
            .failures()
            .map(|c| format!("{} ({})", c.name, c.instance))
            .collect::<Vec<_>>()
            .join(", ")
    });
    let record = RunRecord::new("proofcheck", to_value(&report)).with_seed(a.seed);
    Ok(finish(record, started, compare, failure))
}

pub fn search(a: SearchArgs, compare: bool) -> Result<Output, CliError> {
    let started = Instant::now();
    let noise = noise(&a.noise)?;
    let report = if a.local || a.mc_samples.is_some() {
        let config = LocalSearchConfig {
            objective: match a.mc_samples {
                Some(samples) => Objective::MonteCarlo { samples },
                None => Objective::Exact,
            },
            max_passes: a.max_passes,
            workers: a.workers.max(1),
            ..LocalSearchConfig::default()
        };
        search_local(a.n, &noise, a.restarts, a.seed, &config)?
    } else {
        search_exhaustive(a.n, &noise, a.cap, a.half_thresholds)?
    };
    let method = to_value(&report.method).as_str().unwrap_or_default().to_string();
    let mut record = RunRecord::new(method, to_value(&report))
        .with_instance(&report.best_f)
        .with_epsilon(Epsilon::of(&noise));
    if a.local {
        record = record.with_seed(a.seed);
    }
    Ok(finish(record, started, compare, None))
}

fn csv_float(v: f64) -> String {
    format!("{v}")
}

pub fn sweep(a: SweepArgs, compare: bool) -> Result<Output, CliError> {
    let started = Instant::now();
    let grid = parse::grid(&a.eps)?;
    let f = function(&a.instance)?;
    let family = if a.fast_path {
        if !f.is_unit_weight() {
            return Err(CliError::usage("--fast-path needs unit weights"));
        }
        Family::SimpleMajority {
            n: f.n(),
            threshold: f.threshold(),
            fast: true,
        }
    } else {
        Family::Weights(f.clone())
    };
    let config = McConfig {
        level: a.level,
        workers: a.workers.max(1),
        ..McConfig::default()
    };
    let rows = run_sweep(&family, &grid, a.samples, a.seed, &config)?;
    if a.json {
        let record = RunRecord::new(if a.fast_path { "bitparallel" } else { "general" }, to_value(&rows))
            .with_instance(&f)
            .with_seed(a.seed);
        return Ok(finish(record, started, compare, None));
    }
    let mut text = String::from("n,weights_id,t,epsilon,p,ci_low,ci_high,bound_sqrt,sheppard,p_over_sqrt_eps\n");
    for r in &rows {
        let e = &r.estimate;
        writeln!(
            text,
            "{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.weights_id,
            csv_float(r.t),
            csv_float(r.epsilon),
            csv_float(e.p_hat),
            csv_float(e.ci_low),
            csv_float(e.ci_high),
            r.bound_sqrt.map(csv_float).unwrap_or_default(),
            csv_float(r.sheppard),
            csv_float(e.p_hat / r.epsilon.sqrt()),
        )
        .expect("writing to a String");
    }
    Ok(Output { text, failure: None })
}

pub fn ratio_curve(a: RatioArgs) -> Result<Output, CliError> {
    let grid = parse::grid(&a.eps)?;
    let f = function(&a.instance)?;
    let family = if f.is_unit_weight() && f.threshold() == 0.0 {
        CurveFamily::SimpleMajority
    } else {
        CurveFamily::Weights(f.clone())
    };
    let rows = run_ratio_curve(f.n(), &grid, &family, a.samples, a.seed)?;
    let mut text = String::from("epsilon,p,p_over_sqrt_eps,p_over_sheppard,exact\n");
    for r in &rows {
        writeln!(
            text,
            "{},{},{},{},{}",
            csv_float(r.epsilon),
            csv_float(r.p),
            csv_float(r.p_over_sqrt_eps),
            csv_float(r.p_over_sheppard),
            r.exact
        )
        .expect("writing to a String");
    }
    Ok(Output { text, failure: None })
}

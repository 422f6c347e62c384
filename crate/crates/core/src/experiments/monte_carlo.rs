//! Rejection-rate estimates over independent simulated data sets.
//!
//! Trial `t` draws everything (data, then the split permutation) from stream
//! `(seed, t)`, and per-trial results are aggregated in trial order, so the
//! output does not depend on the number of workers.

use super::datasets::DatasetSpec;
use super::menu::KernelMenuSpec;
use crate::error::{Error, Result};
use crate::kernels::HMatrix;
use crate::numerics::RngStream;
use crate::seltest::{run_method, Method, SelTestConfig};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;
use std::time::{Duration, Instant};

/// Largest tolerated fraction of failed trials per method.
pub const MAX_FAILURE_RATE: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct MonteCarloConfig {
    pub dataset: DatasetSpec,
    pub menu: KernelMenuSpec,
    pub methods: Vec<Method>,
    pub n: usize,
    pub trials: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Worker threads; 0 uses all cores.
    pub workers: usize,
    pub test_config: SelTestConfig,
}

impl MonteCarloConfig {
    pub fn new(dataset: DatasetSpec, menu: KernelMenuSpec, methods: Vec<Method>) -> Self {
        MonteCarloConfig {
            dataset,
            menu,
            methods,
            n: 512,
            trials: 1000,
            alpha: 0.05,
            seed: 0,
            workers: 0,
            test_config: SelTestConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::domain("trials must be at least 1"));
        }
        if self.n < 2 {
            return Err(Error::domain(format!("sample size must be at least 2, got {}", self.n)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.methods.is_empty() {
            return Err(Error::domain("no methods selected"));
        }
        self.dataset.validate()?;
        self.menu.validate()?;
        self.test_config.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MCReport {
    #[serde(serialize_with = "as_display")]
    pub method: Method,
    pub n: usize,
    pub trials: usize,
    pub rejection_rate: f64,
    pub std_error: f64,
    pub failures: usize,
    pub seed: u64,
    #[serde(skip)]
    pub wall_time: Duration,
}

fn as_display<S: serde::Serializer>(m: &Method, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(m)
}

impl MCReport {
    pub fn type_two_error(&self) -> f64 {
        1.0 - self.rejection_rate
    }

    pub const CSV_HEADER: [&'static str; 7] = [
        "method",
        "n",
        "trials",
        "rejection_rate",
        "std_error",
        "failures",
        "seed",
    ];

    pub fn csv_record(&self) -> [String; 7] {
        [
            self.method.to_string(),
            self.n.to_string(),
            self.trials.to_string(),
            self.rejection_rate.to_string(),
            self.std_error.to_string(),
            self.failures.to_string(),
            self.seed.to_string(),
        ]
    }
}

/// Outcome of one method on one trial: `Some(reject)` or `None` on a
/// numerical failure.
pub type TrialResult = Vec<Option<bool>>;

/// Runs a single trial. Numerical failures while preparing the data fail every
/// method of the trial; other errors abort.
pub fn run_trial(cfg: &MonteCarloConfig, trial: u64) -> Result<TrialResult> {
    let mut rng = RngStream::new(cfg.seed, trial).generator();
    let (x, y) = cfg.dataset.generate(cfg.n, &mut rng)?;
    let prepared = cfg
        .menu
        .resolve(&x, &y)
        .and_then(|k| HMatrix::compute(&x, &y, &k))
        .and_then(|h| h.statistics().map(|s| (h, s)));
    let (h, full) = match prepared {
        Ok(v) => v,
        Err(e) if e.is_numerical() || matches!(e, Error::DegenerateSample(_)) => {
            return Ok(vec![None; cfg.methods.len()])
        }
        Err(e) => return Err(e),
    };
    let mut perm: Vec<usize> = (0..h.n()).collect();
    if cfg.methods.iter().any(|m| matches!(m, Method::Split { .. })) {
        perm.shuffle(&mut rng);
    }
    cfg.methods
        .iter()
        .map(|m| match run_method(m, &h, &full, &perm, cfg.alpha, &cfg.test_config) {
            Ok(o) => Ok(Some(o.reject)),
            Err(e) if e.is_numerical() => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

pub fn run_monte_carlo(cfg: &MonteCarloConfig) -> Result<Vec<MCReport>> {
    cfg.validate()?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::domain(format!("cannot start worker pool: {e}")))?;
    let results: Vec<TrialResult> = pool.install(|| {
        (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| run_trial(cfg, t))
            .collect::<Result<Vec<_>>>()
    })?;
    let wall_time = start.elapsed();
    cfg.methods
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let failures = results.iter().filter(|r| r[k].is_none()).count();
            if failures as f64 > MAX_FAILURE_RATE * cfg.trials as f64 {
                return Err(Error::ExcessiveFailures {
                    method: method.to_string(),
                    failures,
                    trials: cfg.trials,
                });
            }
            let ok = cfg.trials - failures;
            let rejects = results.iter().filter(|r| r[k] == Some(true)).count();
            let (rate, se) = if ok == 0 {
                (f64::NAN, f64::NAN)
            } else {
                let r = rejects as f64 / ok as f64;
                (r, (r * (1.0 - r) / ok as f64).sqrt())
            };
            Ok(MCReport {
                method,
                n: cfg.n,
                trials: cfg.trials,
                rejection_rate: rate,
                std_error: se,
                failures,
                seed: cfg.seed,
                wall_time,
            })
        })
        .collect()
}

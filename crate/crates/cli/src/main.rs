//! `ostkit` command-line interface.
//!
//! Exit codes: 0 on a clean run (whether or not the test rejects), 2 on input
//! or configuration errors, 3 on numerical failures.

mod config;

use clap::{Args, Parser, Subcommand, ValueEnum};
use config::FileConfig;
use ostkit::experiments::{
    load_mnist_downsampled, load_points_csv, run_monte_carlo, write_reports_csv, DatasetKind,
    DatasetSpec, KernelMenuSpec, MCReport, MonteCarloConfig,
};
use ostkit::kernels::HMatrix;
use ostkit::numerics::RngStream;
use ostkit::seltest::{ost_threshold, run_method, Constraint, Method, SelTestConfig, TestOutcome};
use ostkit::Error;
use rand::seq::SliceRandom;
use serde_json::{json, Value};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "ostkit", version, about = "Selective kernel two-sample tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test whether two samples (CSV files, one point per row) differ.
    Test(RunArgs),
    /// Estimate rejection rates by simulation.
    Simulate(RunArgs),
    /// Print the OST rejection threshold.
    Threshold {
        #[arg(long)]
        alpha: f64,
        /// Degrees of freedom (size of the active set).
        #[arg(long)]
        l: usize,
        /// Lower truncation point, only used for l = 1.
        #[arg(long, allow_hyphen_values = true, default_value = "-inf")]
        v_minus: String,
    },
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with defaults for any of the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    x: Option<PathBuf>,
    #[arg(long)]
    y: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Method name; `simulate` accepts a comma-separated list.
    #[arg(long, value_delimiter = ',')]
    method: Option<Vec<String>>,
    /// Kernel menu: d1, d2, d6, poly<d>, or a list such as `gaussian:0.5,linear`.
    #[arg(long)]
    kernels: Option<String>,
    #[arg(long)]
    train_fraction: Option<f64>,
    /// sigma_beta_pos or beta_pos.
    #[arg(long)]
    constraint: Option<String>,
    #[arg(long)]
    cond_threshold: Option<f64>,
    #[arg(long)]
    ridge: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Number of tuples (each sample has 2n points); a comma-separated list
    /// for `simulate`.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long, env = "OSTKIT_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// diff_var, blobs, mnist_all_vs_odd, symmetric_matched_moments, custom_files.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    null_mode: Option<bool>,
    #[arg(long)]
    variance: Option<f64>,
    #[arg(long)]
    mu0: Option<f64>,
    /// Directory with train-images-idx3-ubyte and train-labels-idx1-ubyte.
    #[arg(long)]
    mnist_dir: Option<PathBuf>,
}

impl RunArgs {
    fn as_config(&self) -> FileConfig {
        FileConfig {
            command: None,
            alpha: self.alpha,
            method: self.method.clone(),
            kernels: self.kernels.clone(),
            train_fraction: self.train_fraction,
            constraint: self.constraint.clone(),
            cond_threshold: self.cond_threshold,
            ridge: self.ridge,
            trials: self.trials,
            n: self.n.clone(),
            seed: self.seed,
            workers: self.workers,
            out: self.out.clone(),
            format: self.format.map(|f| match f {
                Format::Json => "json".into(),
                Format::Csv => "csv".into(),
            }),
            dataset: self.dataset.clone(),
            null_mode: self.null_mode,
            variance: self.variance,
            mu0: self.mu0,
            mnist_dir: self.mnist_dir.clone(),
            x: self.x.clone(),
            y: self.y.clone(),
        }
    }

    fn effective(&self, command: &str) -> Result<FileConfig, Failure> {
        let file = match &self.config {
            Some(p) => FileConfig::load(p).map_err(Failure::Input)?,
            None => FileConfig::default(),
        };
        if let Some(c) = &file.command {
            if c != command {
                return Err(Failure::Input(format!(
                    "config is for command '{c}', not '{command}'"
                )));
            }
        }
        let mut cfg = file.merge(self.as_config());
        cfg.command = Some(command.into());
        let cfg = cfg.with_defaults();
        eprintln!("# effective configuration\n{}", cfg.to_toml());
        Ok(cfg)
    }
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Test(args) => cmd_test(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Threshold { alpha, l, v_minus } => cmd_threshold(*alpha, *l, v_minus),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical error: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}

fn parse<T: FromStr<Err = Error>>(s: &str) -> Result<T, Failure> {
    s.parse::<T>().map_err(Failure::from)
}

fn parse_f64(s: &str) -> Result<f64, Failure> {
    match s.trim() {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        t => t
            .parse()
            .map_err(|_| Failure::Input(format!("not a number: '{s}'"))),
    }
}

fn seltest_config(cfg: &FileConfig) -> Result<SelTestConfig, Failure> {
    let mut c = SelTestConfig::default();
    if let Some(t) = cfg.cond_threshold {
        c.cond_threshold = t;
    }
    c.ridge = cfg.ridge.filter(|&r| r != 0.0);
    c.validate()?;
    Ok(c)
}

/// Resolves method names; a bare `split` takes its fraction from
/// `train_fraction`, and `constraint` applies to every split method.
fn methods(cfg: &FileConfig, default: &str) -> Result<Vec<Method>, Failure> {
    let names = cfg
        .method
        .clone()
        .unwrap_or_else(|| vec![default.to_string()]);
    let constraint = cfg.constraint.as_deref().map(parse::<Constraint>).transpose()?;
    let fraction = cfg.train_fraction.unwrap_or(0.5);
    let mut out = Vec::new();
    for name in names {
        let name = name.trim();
        let mut m = if name == "split" {
            parse::<Method>(&format!("split{fraction}"))?
        } else {
            parse::<Method>(name)?
        };
        if let (Method::Split { constraint: c, .. }, Some(want)) = (&mut m, constraint) {
            *c = want;
        }
        out.push(m);
    }
    if out.is_empty() {
        return Err(Failure::Input("no methods given".into()));
    }
    Ok(out)
}

fn alpha(cfg: &FileConfig) -> Result<f64, Failure> {
    let a = cfg.alpha.unwrap_or(0.05);
    if !(a > 0.0 && a < 1.0) {
        return Err(Failure::Input(format!("alpha must lie in (0, 1), got {a}")));
    }
    Ok(a)
}

fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn outcome_json(o: &TestOutcome, n: usize, d: usize) -> Value {
    json!({
        "method": o.method.to_string(),
        "n": n,
        "d": d,
        "statistic": num(o.statistic),
        "threshold": num(o.threshold),
        "p_value": num(o.p_value),
        "reject": o.reject,
        "l": o.l,
        "active_set": o.active_set,
        "v_minus": num(o.v_minus),
        "immediate_reject": o.immediate_reject,
        "warnings": o.warnings,
    })
}

fn config_json(cfg: &FileConfig) -> Value {
    let mut v = serde_json::to_value(cfg).unwrap_or(Value::Null);
    if let Value::Object(m) = &mut v {
        m.retain(|_, x| !x.is_null());
    }
    v
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Failure::Input(format!("cannot write output: {e}")))
        }
    }
}

fn cmd_test(args: &RunArgs) -> Result<(), Failure> {
    let cfg = args.effective("test")?;
    let (Some(xp), Some(yp)) = (&cfg.x, &cfg.y) else {
        return Err(Failure::Input("test needs --x and --y".into()));
    };
    let x = load_points_csv(xp)?;
    let y = load_points_csv(yp)?;
    let menu: KernelMenuSpec = parse(cfg.kernels.as_deref().unwrap_or("d6"))?;
    let ms = methods(&cfg, "ost")?;
    if ms.len() != 1 {
        return Err(Failure::Input("test runs exactly one method".into()));
    }
    let alpha = alpha(&cfg)?;
    let st = seltest_config(&cfg)?;
    let kernels = menu.resolve(&x, &y)?;
    let h = HMatrix::compute(&x, &y, &kernels)?;
    let full = h.statistics()?;
    let mut perm: Vec<usize> = (0..h.n()).collect();
    perm.shuffle(&mut RngStream::new(cfg.seed.unwrap_or(0), 0).generator());
    let outcome = run_method(&ms[0], &h, &full, &perm, alpha, &st)?;
    let mut report = outcome_json(&outcome, h.n(), h.d());
    report["kernels"] = json!(kernels.iter().map(|k| k.to_string()).collect::<Vec<_>>());
    report["config"] = config_json(&cfg);
    let text = serde_json::to_string_pretty(&report).expect("JSON value serializes") + "\n";
    emit(cfg.out.as_deref(), &text)
}

fn dataset(cfg: &FileConfig) -> Result<DatasetSpec, Failure> {
    let null = cfg.null_mode.unwrap_or(false);
    let name = cfg.dataset.as_deref().unwrap_or("diff_var");
    let kind = match name {
        "diff_var" => DatasetKind::DiffVar {
            variance: cfg.variance.unwrap_or(ostkit::experiments::datasets::DIFF_VAR_VARIANCE),
        },
        "blobs" => DatasetKind::Blobs,
        "symmetric_matched_moments" | "symmetric_matched" => DatasetKind::SymmetricMatched {
            mu0: cfg.mu0.unwrap_or(ostkit::experiments::datasets::SYMMETRIC_MU0),
        },
        "mnist_all_vs_odd" | "mnist" => {
            let Some(dir) = &cfg.mnist_dir else {
                return Err(Failure::Input("the MNIST dataset needs --mnist-dir".into()));
            };
            let pool = load_mnist_downsampled(
                &dir.join("train-images-idx3-ubyte"),
                &dir.join("train-labels-idx1-ubyte"),
            )?;
            DatasetKind::MnistAllVsOdd(Arc::new(pool))
        }
        "custom_files" => {
            let (Some(xp), Some(yp)) = (&cfg.x, &cfg.y) else {
                return Err(Failure::Input("custom_files needs --x and --y".into()));
            };
            let x = load_points_csv(xp)?;
            let y = load_points_csv(yp)?;
            DatasetKind::CustomFiles {
                x: Arc::new(x),
                y: Arc::new(y),
            }
        }
        other => return Err(Failure::Input(format!("unknown dataset '{other}'"))),
    };
    Ok(DatasetSpec::new(kind, null)?)
}

fn cmd_simulate(args: &RunArgs) -> Result<(), Failure> {
    let cfg = args.effective("simulate")?;
    let trials = cfg.trials.unwrap_or(1000);
    if trials == 0 {
        return Err(Failure::Input("trials must be at least 1".into()));
    }
    let sizes = cfg.n.clone().unwrap_or_else(|| vec![512]);
    if sizes.is_empty() {
        return Err(Failure::Input("no sample sizes given".into()));
    }
    let format = match cfg.format.as_deref().unwrap_or("csv") {
        "csv" => Format::Csv,
        "json" => Format::Json,
        f => return Err(Failure::Input(format!("unknown format '{f}'"))),
    };
    let mut mc = MonteCarloConfig::new(
        dataset(&cfg)?,
        parse(cfg.kernels.as_deref().unwrap_or("d6"))?,
        methods(&cfg, "ost")?,
    );
    mc.trials = trials;
    mc.alpha = alpha(&cfg)?;
    mc.seed = cfg.seed.unwrap_or(0);
    mc.workers = cfg.workers.unwrap_or(0);
    mc.test_config = seltest_config(&cfg)?;
    let mut reports: Vec<MCReport> = Vec::new();
    for &n in &sizes {
        mc.n = n;
        reports.extend(run_monte_carlo(&mc)?);
    }
    let text = match format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_reports_csv(&reports, &mut buf)?;
            String::from_utf8(buf).expect("CSV is UTF-8")
        }
        Format::Json => {
            let rows = serde_json::to_value(&reports).expect("reports serialize");
            let doc = json!({ "config": config_json(&cfg), "results": rows });
            serde_json::to_string_pretty(&doc).expect("JSON value serializes") + "\n"
        }
    };
    emit(cfg.out.as_deref(), &text)
}

/// `v` with 12 significant digits.
fn significant(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return v.to_string();
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}

fn cmd_threshold(alpha: f64, l: usize, v_minus: &str) -> Result<(), Failure> {
    let vm = parse_f64(v_minus)?;
    let t = ost_threshold(alpha, l, vm)?;
    println!("{}", significant(t));
    Ok(())
}

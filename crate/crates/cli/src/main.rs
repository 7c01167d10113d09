//! `hht`: command-line driver for CEEMD decomposition, Hilbert spectra,
//! mode filtering, HHT features and walk-forward forecasting.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use toml::Value;

use config::{parse_assignment, RunConfig};

#[derive(Debug)]
pub enum Failure {
    /// Bad configuration or arguments (exit code 1).
    Validation(String),
    /// A pipeline stage failed while running (exit code 2).
    Runtime {
        stage: &'static str,
        message: String,
    },
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(m) => write!(f, "{m}"),
            Failure::Runtime { stage, message } => write!(f, "{stage} failed: {message}"),
        }
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Runtime { .. } => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "hht",
    version,
    about = "CEEMD and Hilbert-Huang analysis of time series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decompose a series into IMFs and a residue.
    Decompose(Common),
    /// Hilbert spectrum points plus per-mode mean frequency and energy.
    Spectrum(Common),
    /// Low- or high-pass reconstruction from a subset of modes.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        cutoff: Option<usize>,
        #[arg(long, value_parser = ["low", "high"])]
        pass: Option<String>,
    },
    /// HHT feature matrix with next-step targets.
    Features(Common),
    /// HHT-feature and plain-lag ridge forecasts with their MSEs.
    Forecast(Common),
    /// Decomposition error against known components, binned by end-effect factor.
    Endeffect(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, short)]
    input: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    value_column: Option<String>,
    #[arg(long)]
    timestamp_column: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Analyse log values; reconstructions are exponentiated back.
    #[arg(long)]
    log_price: bool,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    target_modes: Option<usize>,
    #[arg(long)]
    sd_threshold: Option<f64>,
    #[arg(long)]
    max_sift_iterations: Option<usize>,
    #[arg(long)]
    max_modes: Option<usize>,
    #[arg(long)]
    lowess_span: Option<f64>,
    #[arg(long)]
    robust_iterations: Option<usize>,
    /// Comma-separated kinds from c, hc, a, f, lambda.
    #[arg(long)]
    features: Option<String>,
    /// `all`, `first:k` or `last:k`.
    #[arg(long)]
    modes: Option<String>,
    #[arg(long)]
    tau: Option<usize>,
    #[arg(long)]
    t1: Option<usize>,
    #[arg(long)]
    t2: Option<usize>,
    #[arg(long)]
    train_window: Option<usize>,
    /// `walk_forward` or `split`.
    #[arg(long)]
    protocol: Option<String>,
    /// Comma-separated ridge penalties searched by GCV.
    #[arg(long)]
    reg_grid: Option<String>,
    #[arg(long)]
    regularization: Option<f64>,
    #[arg(long)]
    refit_every: Option<usize>,
    #[arg(long)]
    replications: Option<usize>,
    /// Comma-separated truth component columns for `endeffect`.
    #[arg(long)]
    components: Option<String>,
    /// Extra `dotted.key=value` assignments, applied after the other flags.
    #[arg(long = "set", value_parser = parse_assignment)]
    set: Vec<(String, Value)>,
}

fn feature_flags(list: &str) -> Result<Vec<(String, Value)>, Failure> {
    let mut on = [false; 5];
    let names = ["c", "hc", "a", "f", "lambda"];
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let k = names.iter().position(|n| *n == item).ok_or_else(|| {
            Failure::Validation(format!(
                "invalid parameter `features`: unknown kind `{item}`"
            ))
        })?;
        on[k] = true;
    }
    let keys = [
        "include_imf",
        "include_hilbert",
        "include_amplitude",
        "include_frequency",
        "include_lambda",
    ];
    Ok(keys
        .iter()
        .zip(on)
        .map(|(k, v)| (format!("features.{k}"), Value::Boolean(v)))
        .collect())
}

fn float_list(field: &str, list: &str) -> Result<Value, Failure> {
    list.split(',')
        .map(|s| {
            s.trim().parse::<f64>().map(Value::Float).map_err(|_| {
                Failure::Validation(format!("invalid parameter `{field}`: cannot parse `{s}`"))
            })
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Value::Array)
}

fn string_list(list: &str) -> Value {
    Value::Array(
        list.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| Value::String(s.to_string()))
            .collect(),
    )
}

impl Common {
    fn overrides(&self) -> Result<Vec<(String, Value)>, Failure> {
        let mut out: Vec<(String, Value)> = Vec::new();
        let mut put = |key: &str, value: Value| out.push((key.to_string(), value));
        let path = |p: &PathBuf| Value::String(p.to_string_lossy().into_owned());
        let int = |v: usize| Value::Integer(v as i64);
        if let Some(p) = &self.input {
            put("input", path(p));
        }
        if let Some(p) = &self.output {
            put("output", path(p));
        }
        if let Some(c) = &self.value_column {
            put("value_column", Value::String(c.clone()));
        }
        if let Some(c) = &self.timestamp_column {
            put("timestamp_column", Value::String(c.clone()));
        }
        if let Some(s) = self.seed {
            let s = i64::try_from(s).map_err(|_| {
                Failure::Validation("invalid parameter `seed`: above 2^63 - 1".into())
            })?;
            put("seed", Value::Integer(s));
        }
        if self.log_price {
            put("log_price", Value::Boolean(true));
        }
        let ints = [
            ("ensemble.trials", self.trials),
            ("ensemble.target_modes", self.target_modes),
            ("sift.max_sift_iterations", self.max_sift_iterations),
            ("sift.max_modes", self.max_modes),
            ("lowess.robust_iterations", self.robust_iterations),
            ("forecast.tau", self.tau),
            ("forecast.t1", self.t1),
            ("forecast.t2", self.t2),
            ("forecast.train_window", self.train_window),
            ("forecast.refit_every", self.refit_every),
            ("endeffect.replications", self.replications),
        ];
        for (key, v) in ints {
            if let Some(v) = v {
                put(key, int(v));
            }
        }
        let floats = [
            ("ensemble.noise_sigma", self.noise_sigma),
            ("sift.sd_threshold", self.sd_threshold),
            ("lowess.span", self.lowess_span),
            ("forecast.regularization", self.regularization),
        ];
        for (key, v) in floats {
            if let Some(v) = v {
                put(key, Value::Float(v));
            }
        }
        if let Some(m) = &self.modes {
            put("features.mode_subset", Value::String(m.clone()));
        }
        if let Some(p) = &self.protocol {
            put("forecast.protocol", Value::String(p.clone()));
        }
        if let Some(c) = &self.components {
            put("endeffect.components", string_list(c));
        }
        if let Some(g) = &self.reg_grid {
            out.push((
                "forecast.reg_grid".into(),
                float_list("forecast.reg_grid", g)?,
            ));
        }
        if let Some(f) = &self.features {
            out.extend(feature_flags(f)?);
        }
        out.extend(self.set.iter().cloned());
        Ok(out)
    }

    fn resolve(&self, extra: Vec<(String, Value)>) -> Result<RunConfig, Failure> {
        let mut overrides = self.overrides()?;
        overrides.extend(extra);
        let cfg = RunConfig::resolve(self.config.as_deref(), &overrides)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Decompose(c) => commands::decompose(&c.resolve(Vec::new())?),
        Command::Spectrum(c) => commands::spectrum(&c.resolve(Vec::new())?),
        Command::Reconstruct {
            common,
            cutoff,
            pass,
        } => {
            let mut extra = Vec::new();
            if let Some(m) = cutoff {
                extra.push(("reconstruct.cutoff".into(), Value::Integer(m as i64)));
            }
            if let Some(p) = pass {
                extra.push(("reconstruct.pass".into(), Value::String(p)));
            }
            commands::reconstruct(&common.resolve(extra)?)
        }
        Command::Features(c) => commands::features(&c.resolve(Vec::new())?),
        Command::Forecast(c) => commands::forecast(&c.resolve(Vec::new())?),
        Command::Endeffect(c) => commands::endeffect(&c.resolve(Vec::new())?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}

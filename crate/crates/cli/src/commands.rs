use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use hht_core::ceemd::characterize_end_effect;
use hht_core::features::build_dataset;
use hht_core::filters::{high_pass, low_pass};
use hht_core::forecast::{
    evaluate_split, walk_forward, ForecastSummary, Predictors, RidgeRegressor, SplitConfig,
    WalkForwardConfig,
};
use hht_core::hsa::{
    analytic_modes, mode_spectrum_means, spectrum_points, write_means_csv, write_spectrum_csv,
};
use hht_core::series::{load_csv, log_transform};
use hht_core::{ceemd, Decomposition64, ForecastReport64, HhtError, TimeSeries64};
use serde::Serialize;

use crate::config::{Pass, Protocol, RunConfig};
use crate::Failure;

fn at(stage: &'static str) -> impl Fn(HhtError) -> Failure {
    move |e| match e {
        HhtError::InvalidParameter { .. } => Failure::Validation(e.to_string()),
        other => Failure::Runtime {
            stage,
            message: other.to_string(),
        },
    }
}

fn input(cfg: &RunConfig) -> &Path {
    cfg.input.as_deref().expect("validated")
}

fn output(cfg: &RunConfig) -> &Path {
    cfg.output.as_deref().expect("validated")
}

fn load(cfg: &RunConfig) -> Result<TimeSeries64, Failure> {
    let raw = load_csv(
        input(cfg),
        &cfg.value_column,
        cfg.timestamp_column.as_deref(),
    )
    .map_err(at("load"))?;
    if cfg.log_price {
        log_transform(&raw).map_err(at("load"))
    } else {
        Ok(raw)
    }
}

/// `<dir>/<stem><suffix>.<ext>` next to `path`.
fn sibling(path: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}

fn write_file(
    path: &Path,
    header: Option<&str>,
    body: impl FnOnce(&mut Vec<u8>) -> hht_core::Result<()>,
) -> Result<(), Failure> {
    let mut buf = Vec::new();
    if let Some(h) = header {
        buf.extend_from_slice(h.as_bytes());
    }
    body(&mut buf).map_err(at("write"))?;
    let mut file = File::create(path).map_err(|e| Failure::Runtime {
        stage: "write",
        message: format!("{}: {e}", path.display()),
    })?;
    file.write_all(&buf).map_err(|e| Failure::Runtime {
        stage: "write",
        message: format!("{}: {e}", path.display()),
    })
}

fn digest_line(cfg: &RunConfig) -> String {
    format!("# config-digest: {}\n", cfg.digest())
}

fn decomposition(cfg: &RunConfig, series: &TimeSeries64) -> Result<Decomposition64, Failure> {
    ceemd(series, &cfg.ensemble()?).map_err(at("decompose"))
}

pub fn decompose(cfg: &RunConfig) -> Result<(), Failure> {
    let series = load(cfg)?;
    let d = decomposition(cfg, &series)?;
    write_file(output(cfg), Some(&digest_line(cfg)), |w| d.write_csv(w))
}

pub fn spectrum(cfg: &RunConfig) -> Result<(), Failure> {
    let series = load(cfg)?;
    let d = decomposition(cfg, &series)?;
    let modes = analytic_modes(&d, &cfg.lowess).map_err(at("spectrum"))?;
    let points = spectrum_points(&modes);
    let means = mode_spectrum_means(&points).map_err(at("spectrum"))?;
    let header = digest_line(cfg);
    write_file(output(cfg), Some(&header), |w| {
        write_spectrum_csv(&points, w)
    })?;
    write_file(&sibling(output(cfg), "_means", "csv"), Some(&header), |w| {
        write_means_csv(&means, w)
    })
}

pub fn reconstruct(cfg: &RunConfig) -> Result<(), Failure> {
    let m = cfg.reconstruct.cutoff.ok_or_else(|| {
        Failure::Validation("invalid parameter `reconstruct.cutoff`: required".into())
    })?;
    let series = load(cfg)?;
    let d = decomposition(cfg, &series)?;
    let filtered = match cfg.reconstruct.pass {
        Pass::Low => low_pass(&d, m),
        Pass::High => high_pass(&d, m),
    }
    .map_err(at("reconstruct"))?;
    let values = if cfg.log_price {
        filtered.into_iter().map(f64::exp).collect()
    } else {
        filtered
    };
    let out = series.map_values(values).map_err(at("reconstruct"))?;
    write_file(output(cfg), Some(&digest_line(cfg)), |w| out.write_csv(w))
}

pub fn features(cfg: &RunConfig) -> Result<(), Failure> {
    let series = load(cfg)?;
    let tau = cfg.forecast.tau;
    if series.len() < tau + 1 {
        return Err(Failure::Validation(format!(
            "invalid parameter `forecast.tau`: series of length {} has no rows for tau = {tau}",
            series.len()
        )));
    }
    let data = build_dataset(
        &series,
        (tau, series.len() - 1),
        tau,
        &cfg.features,
        &cfg.ensemble()?,
        &cfg.lowess,
    )
    .map_err(at("features"))?;
    write_file(output(cfg), Some(&digest_line(cfg)), |w| data.write_csv(w))
}

#[derive(Serialize)]
struct ForecastOutput<'a> {
    config_digest: String,
    protocol: Protocol,
    hht: ForecastSummary,
    lags: ForecastSummary,
    /// HHT-feature MSE divided by plain-lag MSE.
    hht_over_lags_mse: Option<f64>,
    hht_steps_csv: &'a str,
    lags_steps_csv: &'a str,
}

pub fn forecast(cfg: &RunConfig) -> Result<(), Failure> {
    let series = load(cfg)?;
    let f = &cfg.forecast;
    let t2 = f
        .t2
        .ok_or_else(|| Failure::Validation("invalid parameter `forecast.t2`: required".into()))?;
    if t2 >= series.len() {
        return Err(Failure::Validation(format!(
            "invalid parameter `forecast.t2`: must be below the series length {}",
            series.len()
        )));
    }
    let t1 = f.t1.unwrap_or(series.len() - t2);
    let regressor = match f.regularization {
        Some(r) => RidgeRegressor::fixed(r),
        None => RidgeRegressor::gcv(f.reg_grid.clone()),
    };
    let ensemble = cfg.ensemble()?;
    let hht = Predictors::Hht(cfg.features);
    let run = |p: &Predictors| -> Result<ForecastReport64, Failure> {
        match f.protocol {
            Protocol::WalkForward => {
                let config = WalkForwardConfig {
                    t1,
                    t2,
                    train_window: f.train_window.unwrap_or(t1),
                    tau: f.tau,
                    ensemble,
                    lowess: cfg.lowess,
                    refit_every: f.refit_every,
                };
                walk_forward(&series, &config, p, &regressor)
            }
            Protocol::Split => {
                let config = SplitConfig {
                    t1,
                    t2,
                    tau: f.tau,
                    ensemble,
                    lowess: cfg.lowess,
                };
                evaluate_split(&series, &config, p, &regressor)
            }
        }
        .map_err(at("forecast"))
    };
    let clock = Instant::now();
    let hht_report = run(&hht)?;
    let lag_report = run(&Predictors::Lags)?;
    eprintln!(
        "forecast: {} steps in {:.2} s",
        hht_report.predictions.len(),
        clock.elapsed().as_secs_f64()
    );

    let out = output(cfg);
    let hht_csv = sibling(out, "_hht", "csv");
    let lags_csv = sibling(out, "_lags", "csv");
    let name = |p: &Path| {
        p.file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    };
    let (hht_name, lags_name) = (name(&hht_csv), name(&lags_csv));
    let hs = hht_report.summary();
    let ls = lag_report.summary();
    let summary = ForecastOutput {
        config_digest: cfg.digest(),
        protocol: f.protocol,
        hht_over_lags_mse: (ls.mse > 0.0).then(|| hs.mse / ls.mse),
        hht: hs,
        lags: ls,
        hht_steps_csv: &hht_name,
        lags_steps_csv: &lags_name,
    };
    let header = digest_line(cfg);
    write_file(&hht_csv, Some(&header), |w| hht_report.write_csv(w))?;
    write_file(&lags_csv, Some(&header), |w| lag_report.write_csv(w))?;
    write_file(out, None, |w| {
        serde_json::to_writer_pretty(&mut *w, &summary)?;
        w.push(b'\n');
        Ok(())
    })
}

fn header_columns(path: &Path) -> Result<Vec<String>, Failure> {
    let file = File::open(path).map_err(|e| Failure::Runtime {
        stage: "load",
        message: format!("{}: {e}", path.display()),
    })?;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Failure::Runtime {
            stage: "load",
            message: e.to_string(),
        })?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        return Ok(line.split(',').map(|s| s.trim().to_string()).collect());
    }
    Err(Failure::Runtime {
        stage: "load",
        message: format!("{}: no header row", path.display()),
    })
}

pub fn endeffect(cfg: &RunConfig) -> Result<(), Failure> {
    let columns = if cfg.endeffect.components.is_empty() {
        header_columns(input(cfg))?
            .into_iter()
            .filter(|c| Some(c) != cfg.timestamp_column.as_ref())
            .collect()
    } else {
        cfg.endeffect.components.clone()
    };
    let truth = columns
        .iter()
        .map(|c| load_csv::<f64>(input(cfg), c, None).map(|s| s.values().to_vec()))
        .collect::<hht_core::Result<Vec<_>>>()
        .map_err(at("load"))?;
    let report = characterize_end_effect(&truth, &cfg.ensemble()?, cfg.endeffect.replications)
        .map_err(at("endeffect"))?;
    write_file(output(cfg), Some(&digest_line(cfg)), |w| {
        report.write_csv(w)
    })
}

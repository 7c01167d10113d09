use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{naive_of, ForecastReport, Regressor};
use crate::ceemd::{replication_seed, EnsembleConfig};
use crate::error::{HhtError, Result};
use crate::features::{lag_dataset, FeatureMatrix, FeatureSetSelector, WindowAnalysis};
use crate::hsa::LowessConfig;
use crate::series::{window_of, TimeSeries};
use crate::Real;

/// Source of the predictors fed to the regressor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predictors {
    /// HHT features of a CEEMD of the training window.
    Hht(FeatureSetSelector),
    /// The last `tau` raw values.
    Lags,
}

impl Predictors {
    fn validate(&self) -> Result<()> {
        match self {
            Predictors::Hht(selector) => selector.validate(),
            Predictors::Lags => Ok(()),
        }
    }

    fn needs_decomposition(&self) -> bool {
        matches!(self, Predictors::Hht(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkForwardConfig {
    /// Last index before the first test step.
    pub t1: usize,
    /// Number of test steps.
    pub t2: usize,
    /// Samples decomposed and trained on at each step.
    pub train_window: usize,
    pub tau: usize,
    pub ensemble: EnsembleConfig,
    pub lowess: LowessConfig,
    /// Refit the regressor every this many steps; `1` refits at every step.
    /// Larger values trade fidelity for speed (the decomposition is still
    /// recomputed at every step).
    pub refit_every: usize,
}

impl WalkForwardConfig {
    pub fn new(t1: usize, t2: usize, train_window: usize, tau: usize) -> Self {
        Self {
            t1,
            t2,
            train_window,
            tau,
            ensemble: EnsembleConfig::default(),
            lowess: LowessConfig::default(),
            refit_every: 1,
        }
    }

    pub fn validate(&self, series_len: usize) -> Result<()> {
        if self.tau == 0 {
            return Err(HhtError::param("forecast.tau", "must be at least 1"));
        }
        if self.t2 == 0 {
            return Err(HhtError::param("forecast.t2", "must be at least 1"));
        }
        if self.refit_every == 0 {
            return Err(HhtError::param(
                "forecast.refit_every",
                "must be at least 1",
            ));
        }
        if self.train_window < self.tau + 2 {
            return Err(HhtError::param(
                "forecast.train_window",
                format!("must be at least tau + 2 = {}", self.tau + 2),
            ));
        }
        if self.t1 < self.train_window {
            return Err(HhtError::param(
                "forecast.t1",
                format!("must be at least train_window = {}", self.train_window),
            ));
        }
        if self.t1 + self.t2 > series_len {
            return Err(HhtError::Range(format!(
                "t1 + t2 = {} exceeds series length {series_len}",
                self.t1 + self.t2
            )));
        }
        self.ensemble.validate()?;
        self.lowess.validate()
    }
}

/// Training rows and the query vector for predicting `x(t)` from
/// `past = x(1..t-1)`.
fn step_data<T: Real>(
    past: &[T],
    t: usize,
    config: &WalkForwardConfig,
    predictors: &Predictors,
) -> Result<(FeatureMatrix<T>, Vec<T>)> {
    let start = t - config.train_window;
    let end = t - 1;
    let first_row = start + config.tau - 1;
    let last_row = end - 1;
    match predictors {
        Predictors::Hht(selector) => {
            let ensemble = EnsembleConfig {
                seed: replication_seed(config.ensemble.seed, t as u64),
                ..config.ensemble
            };
            let analysis = WindowAnalysis::compute(past, start, end, &ensemble, &config.lowess)?;
            let data = analysis.dataset(past, first_row, last_row, config.tau, selector)?;
            let query = analysis.features_at(end, config.tau, selector)?;
            Ok((data, query))
        }
        Predictors::Lags => {
            let data = lag_dataset(
                &past[start - 1..],
                first_row - start + 1,
                last_row - start + 1,
                config.tau,
            )?;
            let query = window_of(past, end, config.tau)?.to_vec();
            Ok((data, query))
        }
    }
}

/// One-shot prediction of `x(t)`, computed from `x(1..t-1)` only.
pub fn walk_forward_step<T: Real, R: Regressor<T>>(
    values: &[T],
    t: usize,
    config: &WalkForwardConfig,
    predictors: &Predictors,
    regressor: &R,
) -> Result<T> {
    if t <= config.train_window || t > values.len() + 1 {
        return Err(HhtError::Range(format!(
            "step {t} needs {} prior samples",
            config.train_window
        )));
    }
    let past = &values[..t - 1];
    let (data, query) = step_data(past, t, config, predictors)?;
    let model = regressor.fit(&data)?;
    Ok(past[t - 2] + regressor.predict(&model, &query)?)
}

fn run_block<T: Real, R: Regressor<T>>(
    values: &[T],
    steps: &[usize],
    config: &WalkForwardConfig,
    predictors: &Predictors,
    regressor: &R,
) -> Result<Vec<(T, f64)>> {
    let mut out = Vec::with_capacity(steps.len());
    let mut model: Option<(R::Model, usize)> = None;
    for &t in steps {
        let clock = Instant::now();
        let wrap = |source| HhtError::Step {
            step: t,
            source: Box::new(source),
        };
        let past = &values[..t - 1];
        let (data, query) = step_data(past, t, config, predictors).map_err(wrap)?;
        if model
            .as_ref()
            .is_none_or(|(_, width)| *width != query.len())
        {
            model = Some((regressor.fit(&data).map_err(wrap)?, data.width()));
        }
        let (m, _) = model.as_ref().expect("model fitted above");
        let delta = regressor.predict(m, &query).map_err(wrap)?;
        out.push((past[t - 2] + delta, clock.elapsed().as_secs_f64()));
    }
    Ok(out)
}

/// Walk-forward extrapolating evaluation over steps `t1+1..=t1+t2`.
///
/// Each step decomposes `[t - train_window, t - 1]`, fits on the rows of
/// that window and predicts `x(t) = x(t-1) + g(features at t-1)`. Steps run
/// concurrently; results do not depend on the thread count.
pub fn walk_forward<T: Real, R: Regressor<T>>(
    series: &TimeSeries<T>,
    config: &WalkForwardConfig,
    predictors: &Predictors,
    regressor: &R,
) -> Result<ForecastReport<T>> {
    config.validate(series.len())?;
    predictors.validate()?;
    let values = series.values();
    let steps: Vec<usize> = (config.t1 + 1..=config.t1 + config.t2).collect();
    let blocks: Vec<Result<Vec<(T, f64)>>> = steps
        .par_chunks(config.refit_every)
        .map(|block| run_block(values, block, config, predictors, regressor))
        .collect();
    let mut predictions = Vec::with_capacity(steps.len());
    let mut seconds = Vec::with_capacity(steps.len());
    for block in blocks {
        for (p, s) in block? {
            predictions.push(p);
            seconds.push(s);
        }
    }
    let actuals = values[config.t1..config.t1 + config.t2].to_vec();
    let naive = naive_of(values, (config.t1 + 1, config.t1 + config.t2))?;
    Ok(ForecastReport::new(
        steps,
        predictions,
        actuals,
        naive,
        seconds,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    /// Last training index.
    pub t1: usize,
    /// Number of test points after `t1`.
    pub t2: usize,
    pub tau: usize,
    pub ensemble: EnsembleConfig,
    pub lowess: LowessConfig,
}

impl SplitConfig {
    pub fn new(t1: usize, t2: usize, tau: usize) -> Self {
        Self {
            t1,
            t2,
            tau,
            ensemble: EnsembleConfig::default(),
            lowess: LowessConfig::default(),
        }
    }

    pub fn validate(&self, series_len: usize) -> Result<()> {
        if self.tau == 0 {
            return Err(HhtError::param("forecast.tau", "must be at least 1"));
        }
        if self.t2 == 0 {
            return Err(HhtError::param("forecast.t2", "must be at least 1"));
        }
        if self.t1 < self.tau + 2 {
            return Err(HhtError::param(
                "forecast.t1",
                format!("must be at least tau + 2 = {}", self.tau + 2),
            ));
        }
        if self.t1 + self.t2 > series_len {
            return Err(HhtError::Range(format!(
                "t1 + t2 = {} exceeds series length {series_len}",
                self.t1 + self.t2
            )));
        }
        self.ensemble.validate()?;
        self.lowess.validate()
    }
}

/// In-sample/out-of-sample split with one decomposition over `[1, t1 + t2]`.
///
/// Rows `tau..t1-1` (targets up to `x(t1)`) train the regressor; rows
/// `t1..t1+t2-1` predict `x(t1+1)..x(t1+t2)`. The shared decomposition lets
/// test-period samples shape training features, so this protocol leaks;
/// [`walk_forward`] does not.
pub fn evaluate_split<T: Real, R: Regressor<T>>(
    series: &TimeSeries<T>,
    config: &SplitConfig,
    predictors: &Predictors,
    regressor: &R,
) -> Result<ForecastReport<T>> {
    config.validate(series.len())?;
    predictors.validate()?;
    let end = config.t1 + config.t2;
    let values = &series.values()[..end];
    let tau = config.tau;
    let analysis = if predictors.needs_decomposition() {
        Some(WindowAnalysis::compute(
            values,
            1,
            end,
            &config.ensemble,
            &config.lowess,
        )?)
    } else {
        None
    };
    let features = |t: usize| -> Result<Vec<T>> {
        match (predictors, &analysis) {
            (Predictors::Hht(selector), Some(a)) => a.features_at(t, tau, selector),
            _ => Ok(window_of(values, t, tau)?.to_vec()),
        }
    };
    let train = match (predictors, &analysis) {
        (Predictors::Hht(selector), Some(a)) => {
            a.dataset(values, tau, config.t1 - 1, tau, selector)?
        }
        _ => lag_dataset(values, tau, config.t1 - 1, tau)?,
    };
    let model = regressor.fit(&train)?;
    let mut predictions = Vec::with_capacity(config.t2);
    let mut seconds = Vec::with_capacity(config.t2);
    for t in config.t1..end {
        let clock = Instant::now();
        let delta = regressor.predict(&model, &features(t)?)?;
        predictions.push(values[t - 1] + delta);
        seconds.push(clock.elapsed().as_secs_f64());
    }
    let actuals = values[config.t1..end].to_vec();
    let naive = naive_of(values, (config.t1 + 1, end))?;
    Ok(ForecastReport::new(
        (config.t1 + 1..=end).collect(),
        predictions,
        actuals,
        naive,
        seconds,
    ))
}

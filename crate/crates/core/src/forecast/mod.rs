//! Regressors, in-sample/out-of-sample evaluation and the walk-forward
//! extrapolating protocol.

mod ridge;
mod walk;

use std::io::Write;

use serde::Serialize;

use crate::error::{HhtError, Result};
use crate::features::FeatureMatrix;
use crate::series::TimeSeries;
use crate::Real;

pub use ridge::{default_reg_grid, fit_ridge, fit_ridge_gcv, Regularization, RidgeModel};
pub use walk::{
    evaluate_split, walk_forward, walk_forward_step, Predictors, SplitConfig, WalkForwardConfig,
};

/// A supervised learner mapping feature vectors to next-step increments.
pub trait Regressor<T: Real>: Sync {
    type Model: Send + Sync;

    fn fit(&self, data: &FeatureMatrix<T>) -> Result<Self::Model>;

    fn predict(&self, model: &Self::Model, x: &[T]) -> Result<T>;
}

/// Ridge regression with a fixed penalty or one chosen by GCV per fit.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RidgeRegressor {
    pub regularization: Regularization,
}

impl RidgeRegressor {
    pub fn fixed(regularization: f64) -> Self {
        Self {
            regularization: Regularization::Fixed(regularization),
        }
    }

    pub fn gcv(grid: Vec<f64>) -> Self {
        Self {
            regularization: Regularization::Gcv(grid),
        }
    }
}

impl<T: Real> Regressor<T> for RidgeRegressor {
    type Model = RidgeModel<T>;

    fn fit(&self, data: &FeatureMatrix<T>) -> Result<RidgeModel<T>> {
        match &self.regularization {
            Regularization::Fixed(reg) => fit_ridge(data, *reg),
            Regularization::Gcv(grid) => fit_ridge_gcv(data, grid),
        }
    }

    fn predict(&self, model: &RidgeModel<T>, x: &[T]) -> Result<T> {
        model.predict(x)
    }
}

/// Out-of-sample predictions of `x(t)` for `t` in `times`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastReport<T> {
    pub times: Vec<usize>,
    pub predictions: Vec<T>,
    pub actuals: Vec<T>,
    pub mse: T,
    /// MSE of `x_hat(t) = x(t-1)` over the same steps.
    pub naive_mse: T,
    /// Wall-clock seconds spent on each step.
    pub step_seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastSummary {
    pub steps: usize,
    pub first_t: Option<usize>,
    pub last_t: Option<usize>,
    pub mse: f64,
    pub naive_mse: f64,
    pub mse_over_naive: Option<f64>,
}

impl<T: Real> ForecastReport<T> {
    pub(crate) fn new(
        times: Vec<usize>,
        predictions: Vec<T>,
        actuals: Vec<T>,
        naive_mse: T,
        step_seconds: Vec<f64>,
    ) -> Self {
        let mse = mean_squared_error(&predictions, &actuals);
        Self {
            times,
            predictions,
            actuals,
            mse,
            naive_mse,
            step_seconds,
        }
    }

    pub fn squared_errors(&self) -> Vec<T> {
        self.predictions
            .iter()
            .zip(&self.actuals)
            .map(|(&p, &a)| (p - a) * (p - a))
            .collect()
    }

    pub fn summary(&self) -> ForecastSummary {
        let mse = self.mse.to_f64_lossy();
        let naive = self.naive_mse.to_f64_lossy();
        ForecastSummary {
            steps: self.predictions.len(),
            first_t: self.times.first().copied(),
            last_t: self.times.last().copied(),
            mse,
            naive_mse: naive,
            mse_over_naive: (naive > 0.0).then(|| mse / naive),
        }
    }

    /// Per-step CSV with columns `t, prediction, actual, squared_error`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "prediction", "actual", "squared_error"])?;
        for ((t, p), (a, e)) in self
            .times
            .iter()
            .zip(&self.predictions)
            .zip(self.actuals.iter().zip(self.squared_errors()))
        {
            w.write_record([t.to_string(), p.to_string(), a.to_string(), e.to_string()])?;
        }
        w.flush().map_err(|source| HhtError::Io {
            path: "<writer>".into(),
            source,
        })?;
        Ok(())
    }
}

fn mean_squared_error<T: Real>(predictions: &[T], actuals: &[T]) -> T {
    if predictions.is_empty() {
        return T::zero();
    }
    let total: T = predictions
        .iter()
        .zip(actuals)
        .map(|(&p, &a)| (p - a) * (p - a))
        .sum();
    total / T::from_usize_lossy(predictions.len())
}

/// Mean of `(x(t) - x(t-1))^2` over `t` in `range` (1-based, inclusive).
pub fn naive_benchmark<T: Real>(series: &TimeSeries<T>, range: (usize, usize)) -> Result<T> {
    naive_of(series.values(), range)
}

pub(crate) fn naive_of<T: Real>(values: &[T], (a, b): (usize, usize)) -> Result<T> {
    if a < 2 {
        return Err(HhtError::Range(format!(
            "naive benchmark range must start at index >= 2, got {a}"
        )));
    }
    if b < a || b > values.len() {
        return Err(HhtError::Range(format!(
            "naive benchmark range [{a}, {b}] outside [2, {}]",
            values.len()
        )));
    }
    let prev = &values[a - 2..b - 1];
    let cur = &values[a - 1..b];
    Ok(mean_squared_error(prev, cur))
}

/// Trailing mean of squared errors over each window of `window` steps.
pub fn rolling_mse<T: Real>(report: &ForecastReport<T>, window: usize) -> Result<Vec<T>> {
    let errors = report.squared_errors();
    if window == 0 || window > errors.len() {
        return Err(HhtError::Range(format!(
            "rolling window {window} not in [1, {}]",
            errors.len()
        )));
    }
    let w = T::from_usize_lossy(window);
    Ok(errors
        .windows(window)
        .map(|chunk| chunk.iter().copied().sum::<T>() / w)
        .collect())
}

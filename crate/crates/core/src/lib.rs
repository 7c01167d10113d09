//! Complementary ensemble empirical mode decomposition and Hilbert-Huang
//! analysis for nonstationary time series, with HHT feature generation and a
//! leakage-free walk-forward forecasting harness.

pub mod ceemd;
pub mod emd;
pub mod error;
pub mod features;
pub mod filters;
pub mod forecast;
pub mod hsa;
pub mod scalar;
pub mod series;
pub mod stats;

pub use error::{HhtError, Result};
pub use scalar::Real;

pub use ceemd::{ceemd, characterize_end_effect, eemd, EndEffectErrorReport, EnsembleConfig};
pub use emd::{emd, Decomposition, Imf, SiftConfig};
pub use features::{FeatureMatrix, FeatureSetSelector, ModeSubset};
pub use forecast::{ForecastReport, RidgeModel};
pub use hsa::{AnalyticMode, LowessConfig, SpectrumPoint};
pub use series::TimeSeries;

pub type TimeSeries64 = TimeSeries<f64>;
pub type TimeSeries32 = TimeSeries<f32>;
pub type Decomposition64 = Decomposition<f64>;
pub type Decomposition32 = Decomposition<f32>;
pub type AnalyticMode64 = AnalyticMode<f64>;
pub type AnalyticMode32 = AnalyticMode<f32>;
pub type SpectrumPoint64 = SpectrumPoint<f64>;
pub type SpectrumPoint32 = SpectrumPoint<f32>;
pub type FeatureMatrix64 = FeatureMatrix<f64>;
pub type FeatureMatrix32 = FeatureMatrix<f32>;
pub type RidgeModel64 = RidgeModel<f64>;
pub type ForecastReport64 = ForecastReport<f64>;

use std::path::{Path, PathBuf};

use hht_core::emd::SiftConfig;
use hht_core::features::FeatureSetSelector;
use hht_core::forecast::default_reg_grid;
use hht_core::hsa::LowessConfig;
use hht_core::{EnsembleConfig, HhtError};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub value_column: String,
    pub timestamp_column: Option<String>,
    pub seed: Option<u64>,
    pub log_price: bool,
    pub ensemble: EnsembleSection,
    pub sift: SiftConfig,
    pub lowess: LowessConfig,
    pub features: FeatureSetSelector,
    pub forecast: ForecastSection,
    pub reconstruct: ReconstructSection,
    pub endeffect: EndEffectSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            output: None,
            value_column: "value".into(),
            timestamp_column: None,
            seed: None,
            log_price: false,
            ensemble: EnsembleSection::default(),
            sift: SiftConfig::default(),
            lowess: LowessConfig::default(),
            features: FeatureSetSelector::default(),
            forecast: ForecastSection::default(),
            reconstruct: ReconstructSection::default(),
            endeffect: EndEffectSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub trials: usize,
    pub noise_sigma: f64,
    pub target_modes: Option<usize>,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        let d = EnsembleConfig::default();
        Self {
            trials: d.trials,
            noise_sigma: d.noise_sigma,
            target_modes: d.target_modes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    WalkForward,
    Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastSection {
    pub protocol: Protocol,
    pub t1: Option<usize>,
    pub t2: Option<usize>,
    pub train_window: Option<usize>,
    pub tau: usize,
    pub reg_grid: Vec<f64>,
    /// Fixed penalty; overrides the grid when set.
    pub regularization: Option<f64>,
    pub refit_every: usize,
}

impl Default for ForecastSection {
    fn default() -> Self {
        Self {
            protocol: Protocol::WalkForward,
            t1: None,
            t2: None,
            train_window: None,
            tau: 5,
            reg_grid: default_reg_grid(),
            regularization: None,
            refit_every: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pass {
    Low,
    High,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructSection {
    pub cutoff: Option<usize>,
    pub pass: Pass,
}

impl Default for ReconstructSection {
    fn default() -> Self {
        Self {
            cutoff: None,
            pass: Pass::Low,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndEffectSection {
    /// Input columns holding the known components; empty means every
    /// column other than the timestamp column.
    pub components: Vec<String>,
    pub replications: usize,
}

impl Default for EndEffectSection {
    fn default() -> Self {
        Self {
            components: Vec::new(),
            replications: 20,
        }
    }
}

fn validation(e: HhtError) -> Failure {
    Failure::Validation(e.to_string())
}

fn invalid(field: &str, reason: &str) -> Failure {
    Failure::Validation(format!("invalid parameter `{field}`: {reason}"))
}

impl RunConfig {
    /// Builds the config from an optional TOML file plus `key=value`
    /// overrides applied in order.
    pub fn resolve(file: Option<&Path>, overrides: &[(String, Value)]) -> Result<Self, Failure> {
        let mut table = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Failure::Validation(format!("cannot read config {}: {e}", path.display()))
                })?;
                text.parse::<Table>()
                    .map_err(|e| Failure::Validation(format!("config {}: {e}", path.display())))?
            }
            None => Table::new(),
        };
        for (key, value) in overrides {
            set_dotted(&mut table, key, value.clone())?;
        }
        let text = toml::to_string(&table).map_err(|e| Failure::Validation(e.to_string()))?;
        toml::from_str(&text).map_err(|e| Failure::Validation(format!("config: {e}")))
    }

    pub fn ensemble(&self) -> Result<EnsembleConfig, Failure> {
        let seed = self
            .seed
            .ok_or_else(|| invalid("seed", "a seed is required for ensemble decompositions"))?;
        let cfg = EnsembleConfig {
            trials: self.ensemble.trials,
            noise_sigma: self.ensemble.noise_sigma,
            seed,
            sift: self.sift,
            target_modes: self.ensemble.target_modes,
        };
        cfg.validate().map_err(validation)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Failure> {
        if self.input.is_none() {
            return Err(invalid("input", "no input file given"));
        }
        if self.output.is_none() {
            return Err(invalid("output", "no output file given"));
        }
        self.ensemble()?;
        self.lowess.validate().map_err(validation)?;
        self.features.validate().map_err(validation)?;
        if self.forecast.tau == 0 {
            return Err(invalid("forecast.tau", "must be at least 1"));
        }
        if self.forecast.refit_every == 0 {
            return Err(invalid("forecast.refit_every", "must be at least 1"));
        }
        if let Some(r) = self.forecast.regularization {
            if r < 0.0 || !r.is_finite() {
                return Err(invalid(
                    "forecast.regularization",
                    "must be finite and >= 0",
                ));
            }
        }
        if self.forecast.reg_grid.is_empty()
            || self
                .forecast
                .reg_grid
                .iter()
                .any(|r| *r < 0.0 || !r.is_finite())
        {
            return Err(invalid("forecast.reg_grid", "needs finite penalties >= 0"));
        }
        if self.reconstruct.cutoff == Some(0) {
            return Err(invalid("reconstruct.cutoff", "must be at least 1"));
        }
        if self.endeffect.replications == 0 {
            return Err(invalid("endeffect.replications", "must be at least 1"));
        }
        Ok(())
    }

    /// SHA-256 of the resolved config in canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let hash = Sha256::digest(json.as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn set_dotted(table: &mut Table, key: &str, value: Value) -> Result<(), Failure> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty());
    let Some(last) = last else {
        return Err(Failure::Validation(format!("empty config key `{key}`")));
    };
    let mut node = table;
    for part in parts {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        node = match entry {
            Value::Table(t) => t,
            _ => {
                return Err(Failure::Validation(format!(
                    "config key `{key}`: `{part}` is not a table"
                )))
            }
        };
    }
    node.insert(last.to_string(), value);
    Ok(())
}

/// Parses `key=value`; the value is read as TOML, falling back to a string.
pub fn parse_assignment(text: &str) -> Result<(String, Value), String> {
    let (key, raw) = text
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got `{text}`"))?;
    Ok((key.trim().to_string(), parse_value(raw.trim())))
}

pub fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

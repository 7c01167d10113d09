//! HHT feature vectors and supervised datasets.
//!
//! A row at prediction time `t` concatenates, for each selected mode in
//! ascending order and each selected kind in the order `c, H[c], a, f`, the
//! `tau` lagged values oldest first. The end-effect factor, when selected,
//! is appended last. Targets are next-step changes `x(t+1) - x(t)`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ceemd::{ceemd_signal, EnsembleConfig};
use crate::emd::Decomposition;
use crate::error::{HhtError, Result};
use crate::hsa::{analytic_modes, AnalyticMode, LowessConfig};
use crate::series::{window_of, TimeSeries};
use crate::stats::{mean, variance};
use crate::Real;

/// Position of `t` in `[t1, t2]` mapped to `[-1, 1]`.
pub fn end_effect_factor(t: f64, t1: f64, t2: f64) -> Result<f64> {
    if t1 >= t2 || t1.is_nan() || t2.is_nan() {
        return Err(HhtError::Range(format!("degenerate interval [{t1}, {t2}]")));
    }
    if t < t1 || t > t2 {
        return Err(HhtError::Range(format!("t = {t} outside [{t1}, {t2}]")));
    }
    Ok((2.0 * t - (t1 + t2)) / (t2 - t1))
}

/// Which modes contribute features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ModeSubset {
    #[default]
    All,
    First(usize),
    Last(usize),
}

impl ModeSubset {
    /// Selected 1-based mode indices for a decomposition with `n` modes.
    pub fn select(&self, n: usize) -> Result<Vec<usize>> {
        let check = |k: usize| {
            if k < 1 || k > n {
                Err(HhtError::param(
                    "features.mode_subset",
                    format!("{k} modes requested, decomposition has {n}"),
                ))
            } else {
                Ok(k)
            }
        };
        Ok(match *self {
            ModeSubset::All => (1..=n).collect(),
            ModeSubset::First(k) => (1..=check(k)?).collect(),
            ModeSubset::Last(k) => (n - check(k)? + 1..=n).collect(),
        })
    }
}

impl fmt::Display for ModeSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeSubset::All => write!(f, "all"),
            ModeSubset::First(k) => write!(f, "first:{k}"),
            ModeSubset::Last(k) => write!(f, "last:{k}"),
        }
    }
}

impl FromStr for ModeSubset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim().to_ascii_lowercase();
        if s == "all" {
            return Ok(ModeSubset::All);
        }
        let (kind, k) = s
            .split_once([':', ' '])
            .ok_or_else(|| format!("expected `all`, `first:k` or `last:k`, got `{s}`"))?;
        let k: usize = k
            .trim()
            .parse()
            .map_err(|_| format!("bad mode count `{k}`"))?;
        match kind {
            "first" => Ok(ModeSubset::First(k)),
            "last" => Ok(ModeSubset::Last(k)),
            _ => Err(format!("unknown subset `{kind}`")),
        }
    }
}

impl TryFrom<String> for ModeSubset {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<ModeSubset> for String {
    fn from(m: ModeSubset) -> String {
        m.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Imf,
    Hilbert,
    Amplitude,
    Frequency,
}

impl FeatureKind {
    fn prefix(self) -> &'static str {
        match self {
            FeatureKind::Imf => "c",
            FeatureKind::Hilbert => "hc",
            FeatureKind::Amplitude => "a",
            FeatureKind::Frequency => "f",
        }
    }

    fn values<T>(self, m: &AnalyticMode<T>) -> &[T] {
        match self {
            FeatureKind::Imf => &m.real_part,
            FeatureKind::Hilbert => &m.imag_part,
            FeatureKind::Amplitude => &m.amplitude,
            FeatureKind::Frequency => &m.frequency,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSetSelector {
    pub include_imf: bool,
    pub include_hilbert: bool,
    pub include_amplitude: bool,
    pub include_frequency: bool,
    pub include_lambda: bool,
    pub mode_subset: ModeSubset,
}

impl Default for FeatureSetSelector {
    /// Full HHT features over all modes, with the end-effect factor.
    fn default() -> Self {
        Self {
            include_imf: true,
            include_hilbert: true,
            include_amplitude: true,
            include_frequency: true,
            include_lambda: true,
            mode_subset: ModeSubset::All,
        }
    }
}

impl FeatureSetSelector {
    /// Complex IMF features `(c, H[c])`.
    pub fn complex_imf() -> Self {
        Self {
            include_amplitude: false,
            include_frequency: false,
            ..Self::default()
        }
    }

    pub fn kinds(&self) -> Vec<FeatureKind> {
        [
            (self.include_imf, FeatureKind::Imf),
            (self.include_hilbert, FeatureKind::Hilbert),
            (self.include_amplitude, FeatureKind::Amplitude),
            (self.include_frequency, FeatureKind::Frequency),
        ]
        .into_iter()
        .filter_map(|(on, k)| on.then_some(k))
        .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.kinds().is_empty() && !self.include_lambda {
            return Err(HhtError::param("features", "no feature kind selected"));
        }
        if let ModeSubset::First(0) | ModeSubset::Last(0) = self.mode_subset {
            return Err(HhtError::param(
                "features.mode_subset",
                "mode count must be at least 1",
            ));
        }
        Ok(())
    }

    /// `#kinds * #modes * tau + [lambda]`.
    pub fn feature_len(&self, n_modes: usize, tau: usize) -> Result<usize> {
        let modes = self.selected_modes(n_modes)?;
        Ok(self.kinds().len() * modes.len() * tau + usize::from(self.include_lambda))
    }

    fn selected_modes(&self, n: usize) -> Result<Vec<usize>> {
        if n == 0 && self.mode_subset == ModeSubset::All {
            return Ok(Vec::new());
        }
        self.mode_subset.select(n)
    }

    /// Column names in feature order, e.g. `c1_lag4, ..., c1_lag0, ..., lambda`.
    pub fn column_names(&self, n_modes: usize, tau: usize) -> Result<Vec<String>> {
        let mut out = Vec::new();
        for j in self.selected_modes(n_modes)? {
            for kind in self.kinds() {
                for lag in (0..tau).rev() {
                    out.push(format!("{}{j}_lag{lag}", kind.prefix()));
                }
            }
        }
        if self.include_lambda {
            out.push("lambda".into());
        }
        Ok(out)
    }
}

/// Feature vector at decomposition-local 1-based time `t`.
///
/// The end-effect factor is taken relative to the decomposition window
/// `[1, source_length]`.
pub fn build_features<T: Real>(
    decomp: &Decomposition<T>,
    modes: &[AnalyticMode<T>],
    t: usize,
    tau: usize,
    selector: &FeatureSetSelector,
) -> Result<Vec<T>> {
    selector.validate()?;
    if modes.len() != decomp.n_modes() {
        return Err(HhtError::ModeMismatch(format!(
            "{} analytic modes for {} IMFs",
            modes.len(),
            decomp.n_modes()
        )));
    }
    let len = decomp.source_length();
    let selected = selector.selected_modes(modes.len())?;
    let kinds = selector.kinds();
    let mut out = Vec::with_capacity(kinds.len() * selected.len() * tau + 1);
    // validate the window even when no mode is selected
    window_of(decomp.residue(), t, tau)?;
    for j in selected {
        let m = &modes[j - 1];
        for &kind in &kinds {
            out.extend_from_slice(window_of(kind.values(m), t, tau)?);
        }
    }
    if selector.include_lambda {
        out.push(T::lit(end_effect_factor(t as f64, 1.0, len as f64)?));
    }
    Ok(out)
}

/// Per-column z-score parameters fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Standardization<T> {
    pub means: Vec<T>,
    /// Standard deviations; `1` for zero-variance columns, which are only centered.
    pub scales: Vec<T>,
}

impl<T: Real> Standardization<T> {
    pub fn fit(rows: &[Vec<T>], width: usize) -> Self {
        let mut means = Vec::with_capacity(width);
        let mut scales = Vec::with_capacity(width);
        for col in 0..width {
            let values: Vec<T> = rows.iter().map(|r| r[col]).collect();
            let v = variance(&values);
            means.push(mean(&values));
            scales.push(if v > T::zero() { v.sqrt() } else { T::one() });
        }
        Self { means, scales }
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .zip(self.means.iter().zip(&self.scales))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect()
    }
}

/// Lagged features aligned with next-step targets.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<T>>,
    /// `targets[k] = x(t_index[k] + 1) - x(t_index[k])`.
    pub targets: Vec<T>,
    /// Absolute 1-based time of each row.
    pub t_index: Vec<usize>,
    pub tau: usize,
    pub standardization: Standardization<T>,
}

impl<T: Real> FeatureMatrix<T> {
    pub fn new(
        columns: Vec<String>,
        rows: Vec<Vec<T>>,
        targets: Vec<T>,
        t_index: Vec<usize>,
        tau: usize,
    ) -> Result<Self> {
        let width = columns.len();
        if rows.len() != targets.len() || rows.len() != t_index.len() {
            return Err(HhtError::Range(
                "rows, targets and times differ in length".into(),
            ));
        }
        if let Some(k) = rows.iter().position(|r| r.len() != width) {
            return Err(HhtError::Range(format!(
                "row {k} has {} features, expected {width}",
                rows[k].len()
            )));
        }
        let standardization = Standardization::fit(&rows, width);
        Ok(Self {
            columns,
            rows,
            targets,
            t_index,
            tau,
            standardization,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    /// CSV with columns `t, <features...>, target`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend(self.columns.iter().cloned());
        header.push("target".into());
        w.write_record(&header)?;
        for ((t, row), y) in self.t_index.iter().zip(&self.rows).zip(&self.targets) {
            let mut rec = Vec::with_capacity(header.len());
            rec.push(t.to_string());
            rec.extend(row.iter().map(|v| v.to_string()));
            rec.push(y.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|source| HhtError::Io {
            path: "<writer>".into(),
            source,
        })?;
        Ok(())
    }
}

/// Decomposition plus Hilbert analysis of a contiguous window of a series.
#[derive(Debug, Clone)]
pub struct WindowAnalysis<T> {
    /// Absolute 1-based index of the window's first sample.
    pub start: usize,
    pub decomposition: Decomposition<T>,
    pub modes: Vec<AnalyticMode<T>>,
}

impl<T: Real> WindowAnalysis<T> {
    /// CEEMD and HSA of `values[start-1 .. end]` (1-based inclusive).
    pub fn compute(
        values: &[T],
        start: usize,
        end: usize,
        ensemble: &EnsembleConfig,
        lowess: &LowessConfig,
    ) -> Result<Self> {
        if start < 1 || end < start || end > values.len() {
            return Err(HhtError::Range(format!(
                "window [{start}, {end}] outside [1, {}]",
                values.len()
            )));
        }
        let decomposition = ceemd_signal(&values[start - 1..end], ensemble)?;
        let modes = analytic_modes(&decomposition, lowess)?;
        Ok(Self {
            start,
            decomposition,
            modes,
        })
    }

    pub fn end(&self) -> usize {
        self.start + self.decomposition.source_length() - 1
    }

    /// Features at absolute time `t`.
    pub fn features_at(
        &self,
        t: usize,
        tau: usize,
        selector: &FeatureSetSelector,
    ) -> Result<Vec<T>> {
        if t < self.start || t > self.end() {
            return Err(HhtError::Range(format!(
                "t = {t} outside analysed window [{}, {}]",
                self.start,
                self.end()
            )));
        }
        build_features(
            &self.decomposition,
            &self.modes,
            t - self.start + 1,
            tau,
            selector,
        )
    }

    /// Rows for absolute times `t_a..=t_b` with targets from `values`.
    pub fn dataset(
        &self,
        values: &[T],
        t_a: usize,
        t_b: usize,
        tau: usize,
        selector: &FeatureSetSelector,
    ) -> Result<FeatureMatrix<T>> {
        if t_b + 1 > values.len() {
            return Err(HhtError::Range(format!(
                "target x({}) beyond series end",
                t_b + 1
            )));
        }
        let columns = selector.column_names(self.modes.len(), tau)?;
        let mut rows = Vec::new();
        let mut targets = Vec::new();
        let mut t_index = Vec::new();
        for t in t_a..=t_b {
            rows.push(self.features_at(t, tau, selector)?);
            targets.push(values[t] - values[t - 1]);
            t_index.push(t);
        }
        FeatureMatrix::new(columns, rows, targets, t_index, tau)
    }
}

/// Dataset for rows `t_a..=t_b` (1-based) from one CEEMD + HSA pass over
/// `[t_a - tau + 1, t_b]`; only the targets read `x(t_b + 1)`.
pub fn build_dataset<T: Real>(
    series: &TimeSeries<T>,
    range: (usize, usize),
    tau: usize,
    selector: &FeatureSetSelector,
    ensemble: &EnsembleConfig,
    lowess: &LowessConfig,
) -> Result<FeatureMatrix<T>> {
    let (t_a, t_b) = range;
    if tau == 0 || t_a < tau || t_b < t_a {
        return Err(HhtError::Range(format!(
            "range [{t_a}, {t_b}] with tau = {tau} needs t_a >= tau and t_b >= t_a"
        )));
    }
    if t_b + 1 > series.len() {
        return Err(HhtError::Range(format!(
            "range end {t_b} leaves no target in a series of length {}",
            series.len()
        )));
    }
    selector.validate()?;
    let analysis = WindowAnalysis::compute(series.values(), t_a + 1 - tau, t_b, ensemble, lowess)?;
    analysis.dataset(series.values(), t_a, t_b, tau, selector)
}

/// Plain lagged values `x(t - tau + 1), ..., x(t)` for rows `t_a..=t_b`.
pub fn lag_dataset<T: Real>(
    values: &[T],
    t_a: usize,
    t_b: usize,
    tau: usize,
) -> Result<FeatureMatrix<T>> {
    if t_b + 1 > values.len() || t_b < t_a {
        return Err(HhtError::Range(format!("lag rows [{t_a}, {t_b}] invalid")));
    }
    let columns = (0..tau).rev().map(|lag| format!("x_lag{lag}")).collect();
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    let mut t_index = Vec::new();
    for t in t_a..=t_b {
        rows.push(window_of(values, t, tau)?.to_vec());
        targets.push(values[t] - values[t - 1]);
        t_index.push(t);
    }
    FeatureMatrix::new(columns, rows, targets, t_index, tau)
}

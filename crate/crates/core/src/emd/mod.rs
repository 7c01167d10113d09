//! Classical empirical mode decomposition.
//!
//! Sifting subtracts the mean of cubic-spline envelopes through the local
//! maxima and minima until the candidate satisfies the IMF criteria; the
//! extracted mode is removed and the process repeats on the remainder until
//! it no longer oscillates.

mod extrema;
mod spline;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use extrema::{find_extrema, Extrema};
pub use spline::NaturalSpline;

use crate::error::{HhtError, Result};
use crate::series::TimeSeries;
use crate::stats::zero_crossings;
use crate::Real;

/// Minimum series length accepted by the decomposition entry points.
pub const MIN_DECOMPOSITION_LEN: usize = 8;

/// Sifting stop rule: Cauchy-type SD criterion plus the extrema/zero-crossing check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SiftConfig {
    pub sd_threshold: f64,
    pub max_sift_iterations: usize,
    pub max_modes: Option<usize>,
}

impl Default for SiftConfig {
    fn default() -> Self {
        Self {
            sd_threshold: 0.2,
            max_sift_iterations: 100,
            max_modes: None,
        }
    }
}

impl SiftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sd_threshold <= 0.0 || !self.sd_threshold.is_finite() {
            return Err(HhtError::param(
                "sift.sd_threshold",
                "must be a positive number",
            ));
        }
        if self.max_sift_iterations < 1 {
            return Err(HhtError::param(
                "sift.max_sift_iterations",
                "must be at least 1",
            ));
        }
        if self.max_modes == Some(0) {
            return Err(HhtError::param(
                "sift.max_modes",
                "must be at least 1 when set",
            ));
        }
        Ok(())
    }

    /// The dyadic cap `floor(log2 T) - 1` on the number of modes.
    pub fn with_dyadic_cap(mut self, len: usize) -> Self {
        let log2 = usize::BITS - 1 - len.max(1).leading_zeros();
        self.max_modes = Some((log2 as usize).saturating_sub(1).max(1));
        self
    }
}

/// One intrinsic mode function `c_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Imf<T> {
    pub values: Vec<T>,
    /// 1-based mode number.
    pub mode_index: usize,
}

impl<T: Real> Imf<T> {
    /// `|#extrema - #zero crossings| <= 1`.
    pub fn satisfies_extrema_criterion(&self) -> bool {
        extrema_criterion(&self.values)
    }
}

/// IMFs ordered from highest to lowest frequency plus the residue.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition<T> {
    imfs: Vec<Imf<T>>,
    residue: Vec<T>,
}

impl<T: Real> Decomposition<T> {
    pub fn new(modes: Vec<Vec<T>>, residue: Vec<T>) -> Result<Self> {
        if residue.is_empty() {
            return Err(HhtError::EmptySeries);
        }
        if let Some(bad) = modes.iter().position(|m| m.len() != residue.len()) {
            return Err(HhtError::Range(format!(
                "mode {} has length {}, residue has {}",
                bad + 1,
                modes[bad].len(),
                residue.len()
            )));
        }
        let imfs = modes
            .into_iter()
            .enumerate()
            .map(|(i, values)| Imf {
                values,
                mode_index: i + 1,
            })
            .collect();
        Ok(Self { imfs, residue })
    }

    pub fn imfs(&self) -> &[Imf<T>] {
        &self.imfs
    }

    /// 1-based accessor.
    pub fn imf(&self, j: usize) -> Option<&[T]> {
        j.checked_sub(1)
            .and_then(|i| self.imfs.get(i))
            .map(|m| m.values.as_slice())
    }

    pub fn residue(&self) -> &[T] {
        &self.residue
    }

    pub fn n_modes(&self) -> usize {
        self.imfs.len()
    }

    pub fn source_length(&self) -> usize {
        self.residue.len()
    }

    /// `sum_j c_j + r_n`.
    pub fn reconstruct(&self) -> Vec<T> {
        let mut out = self.residue.clone();
        for imf in &self.imfs {
            for (o, &c) in out.iter_mut().zip(&imf.values) {
                *o = *o + c;
            }
        }
        out
    }

    /// CSV with columns `t, imf_1..imf_n, residue`, `t` 1-based.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.n_modes()).map(|j| format!("imf_{j}")));
        header.push("residue".into());
        w.write_record(&header)?;
        for t in 0..self.source_length() {
            let mut row = Vec::with_capacity(header.len());
            row.push((t + 1).to_string());
            row.extend(self.imfs.iter().map(|m| m.values[t].to_string()));
            row.push(self.residue[t].to_string());
            w.write_record(&row)?;
        }
        w.flush().map_err(|source| HhtError::Io {
            path: "<writer>".into(),
            source,
        })?;
        Ok(())
    }
}

/// True when the signal has at most one interior extremum.
pub fn is_residue<T: Real>(signal: &[T]) -> bool {
    extrema::scan(signal).count() <= 1
}

/// Stopping rule for the outer decomposition loop: a residue, or too few
/// maxima or minima for both envelopes to exist.
fn is_terminal<T: Real>(signal: &[T]) -> bool {
    let e = extrema::scan(signal);
    e.count() <= 1 || e.maxima.len() < 2 || e.minima.len() < 2
}

fn extrema_criterion<T: Real>(signal: &[T]) -> bool {
    let e = extrema::scan(signal).count();
    let z = zero_crossings(signal);
    e.abs_diff(z) <= 1
}

/// Knots for one envelope: the extrema plus the two nearest each end mirrored
/// across that endpoint.
fn mirrored_knots<T: Real>(signal: &[T], idx: &[usize]) -> (Vec<T>, Vec<T>) {
    let n = signal.len();
    let end = T::from_usize_lossy(n - 1);
    let k = idx.len();
    let mut xs = Vec::with_capacity(k + 4);
    let mut ys = Vec::with_capacity(k + 4);
    for &i in idx[..2].iter().rev() {
        xs.push(-T::from_usize_lossy(i));
        ys.push(signal[i]);
    }
    for &i in idx {
        xs.push(T::from_usize_lossy(i));
        ys.push(signal[i]);
    }
    for &i in idx[k - 2..].iter().rev() {
        xs.push(end + end - T::from_usize_lossy(i));
        ys.push(signal[i]);
    }
    (xs, ys)
}

/// Mean of the upper and lower natural-spline envelopes.
pub fn envelope_mean<T: Real>(signal: &[T]) -> Result<Vec<T>> {
    if signal.len() < 3 {
        return Err(HhtError::TooShort {
            needed: 3,
            got: signal.len(),
        });
    }
    let e = extrema::scan(signal);
    envelope_mean_with(signal, &e)
}

fn envelope_mean_with<T: Real>(signal: &[T], e: &Extrema) -> Result<Vec<T>> {
    if e.maxima.len() < 2 || e.minima.len() < 2 {
        return Err(HhtError::TooFewExtrema {
            maxima: e.maxima.len(),
            minima: e.minima.len(),
        });
    }
    let n = signal.len();
    let (ux, uy) = mirrored_knots(signal, &e.maxima);
    let (lx, ly) = mirrored_knots(signal, &e.minima);
    let upper = NaturalSpline::new(ux, uy).sample_grid(n);
    let lower = NaturalSpline::new(lx, ly).sample_grid(n);
    let half = T::lit(0.5);
    Ok(upper
        .iter()
        .zip(&lower)
        .map(|(&u, &l)| (u + l) * half)
        .collect())
}

/// Result of one sifting run.
#[derive(Debug, Clone, PartialEq)]
pub struct SiftOutcome<T> {
    pub imf: Vec<T>,
    pub iterations: usize,
    /// False when the iteration cap was hit or the envelopes vanished before
    /// the stop rule was met.
    pub converged: bool,
}

/// Extracts the finest-scale oscillation from `signal`.
pub fn sift<T: Real>(signal: &[T], config: &SiftConfig) -> Result<SiftOutcome<T>> {
    config.validate()?;
    let e = extrema::scan(signal);
    if e.count() <= 1 || e.maxima.len() < 2 || e.minima.len() < 2 {
        return Err(HhtError::TooFewExtrema {
            maxima: e.maxima.len(),
            minima: e.minima.len(),
        });
    }
    let threshold = T::lit(config.sd_threshold);
    let mut current = signal.to_vec();
    let mut extrema = e;
    for iteration in 1..=config.max_sift_iterations {
        let mean = match envelope_mean_with(&current, &extrema) {
            Ok(m) => m,
            Err(_) => {
                return Ok(SiftOutcome {
                    imf: current,
                    iterations: iteration - 1,
                    converged: false,
                })
            }
        };
        let mut num = T::zero();
        let mut den = T::zero();
        for (c, &m) in current.iter_mut().zip(&mean) {
            num = num + m * m;
            den = den + *c * *c;
            *c = *c - m;
        }
        let sd = if den > T::zero() {
            num / den
        } else {
            T::zero()
        };
        extrema = extrema::scan(&current);
        let crossings = zero_crossings(&current);
        if sd < threshold && extrema.count().abs_diff(crossings) <= 1 {
            return Ok(SiftOutcome {
                imf: current,
                iterations: iteration,
                converged: true,
            });
        }
    }
    Ok(SiftOutcome {
        imf: current,
        iterations: config.max_sift_iterations,
        converged: false,
    })
}

/// Decomposes a raw signal. See [`emd`].
pub fn emd_signal<T: Real>(signal: &[T], config: &SiftConfig) -> Result<Decomposition<T>> {
    config.validate()?;
    if signal.len() < MIN_DECOMPOSITION_LEN {
        return Err(HhtError::TooShort {
            needed: MIN_DECOMPOSITION_LEN,
            got: signal.len(),
        });
    }
    let cap = config.max_modes.unwrap_or(usize::MAX);
    let mut residue = signal.to_vec();
    let mut modes = Vec::new();
    while modes.len() < cap && !is_terminal(&residue) {
        let outcome = sift(&residue, config)?;
        for (r, &c) in residue.iter_mut().zip(&outcome.imf) {
            *r = *r - c;
        }
        modes.push(outcome.imf);
    }
    Decomposition::new(modes, residue)
}

/// Empirical mode decomposition `x = sum_j c_j + r_n`.
pub fn emd<T: Real>(series: &TimeSeries<T>, config: &SiftConfig) -> Result<Decomposition<T>> {
    emd_signal(series.values(), config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{correlation, interior, max_abs};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn tone(freq: f64, amp: f64, len: usize, start: usize) -> Vec<f64> {
        (start..start + len)
            .map(|t| amp * (2.0 * PI * freq * t as f64).sin())
            .collect()
    }

    fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + y).collect()
    }

    fn interior_corr(a: &[f64], b: &[f64]) -> f64 {
        let r = interior(a.len());
        correlation(&a[r.clone()], &b[r])
    }

    fn random_walk(seed: u64, len: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = 0.0;
        (0..len)
            .map(|_| {
                x += rng.random_range(-1.0..1.0);
                x
            })
            .collect()
    }

    #[test]
    fn envelope_mean_of_sine_is_small() {
        let x = tone(0.02, 1.0, 1000, 0);
        let m = envelope_mean(&x).unwrap();
        assert_eq!(m.len(), x.len());
        assert!(max_abs(&m[interior(1000)]) < 0.05);
    }

    #[test]
    fn envelope_mean_tracks_offset() {
        let x: Vec<f64> = tone(0.02, 1.0, 1000, 0).iter().map(|v| v + 5.0).collect();
        let m = envelope_mean(&x).unwrap();
        for &v in &m[interior(1000)] {
            assert!((v - 5.0).abs() < 0.05, "{v}");
        }
    }

    #[test]
    fn envelope_needs_two_maxima() {
        let x = [0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0];
        assert!(matches!(
            envelope_mean(&x),
            Err(HhtError::TooFewExtrema { maxima: 1, .. })
        ));
    }

    #[test]
    fn sift_keeps_a_sine() {
        let x = tone(0.02, 1.0, 1000, 1);
        let out = sift(&x, &SiftConfig::default()).unwrap();
        assert!(correlation(&out.imf, &x) >= 0.99);
    }

    #[test]
    fn sift_extracts_fast_tone_first() {
        let fast = tone(0.2, 1.0, 1000, 1);
        let slow = tone(0.02, 1.0, 1000, 1);
        let out = sift(&add(&fast, &slow), &SiftConfig::default()).unwrap();
        assert!(interior_corr(&out.imf, &fast) >= 0.95);
    }

    #[test]
    fn sift_rejects_constant() {
        assert!(sift(&[3.0; 20], &SiftConfig::default()).is_err());
    }

    #[test]
    fn ramp_has_no_modes() {
        let x: Vec<f64> = (1..=100).map(f64::from).collect();
        let d = emd_signal(&x, &SiftConfig::default()).unwrap();
        assert_eq!(d.n_modes(), 0);
        assert_eq!(d.residue(), x.as_slice());
    }

    #[test]
    fn two_tone_separates() {
        let fast = tone(0.2, 1.0, 1000, 1);
        let slow = tone(0.02, 1.0, 1000, 1);
        let d = emd_signal(&add(&fast, &slow), &SiftConfig::default()).unwrap();
        assert!(d.n_modes() >= 2);
        assert!(interior_corr(d.imf(1).unwrap(), &fast) >= 0.95);
        assert!(interior_corr(d.imf(2).unwrap(), &slow) >= 0.95);
    }

    #[test]
    fn too_short_series() {
        assert!(matches!(
            emd_signal(&[1.0, 2.0, 1.0], &SiftConfig::default()),
            Err(HhtError::TooShort { .. })
        ));
    }

    #[test]
    fn residue_examples() {
        let ramp: Vec<f64> = (0..50).map(f64::from).collect();
        assert!(is_residue(&ramp));
        let hump: Vec<f64> = (0..50).map(|t| -((t as f64 - 25.0).powi(2))).collect();
        assert!(is_residue(&hump));
        assert!(!is_residue(&tone(1.0 / 30.0, 1.0, 90, 0)));
    }

    #[test]
    fn dyadic_cap() {
        assert_eq!(
            SiftConfig::default().with_dyadic_cap(1024).max_modes,
            Some(9)
        );
        assert_eq!(
            SiftConfig::default().with_dyadic_cap(1000).max_modes,
            Some(8)
        );
    }

    #[test]
    fn max_modes_is_respected() {
        let x = random_walk(3, 512);
        let cfg = SiftConfig {
            max_modes: Some(2),
            ..SiftConfig::default()
        };
        let d = emd_signal(&x, &cfg).unwrap();
        assert_eq!(d.n_modes(), 2);
        let rec = d.reconstruct();
        assert!(max_abs(&add(&rec, &x.iter().map(|v| -v).collect::<Vec<_>>())) < 1e-12);
    }

    #[test]
    fn config_validation() {
        let bad = SiftConfig {
            sd_threshold: 0.0,
            ..SiftConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SiftConfig {
            max_sift_iterations: 0,
            ..SiftConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let x: Vec<f32> = tone(0.05, 1.0, 400, 0).iter().map(|&v| v as f32).collect();
        let d = emd_signal(&x, &SiftConfig::default()).unwrap();
        assert!(d.n_modes() >= 1);
        let err = d
            .reconstruct()
            .iter()
            .zip(&x)
            .fold(0f32, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn reconstruction_identity(seed in any::<u64>()) {
            let x = random_walk(seed, 256);
            let d = emd_signal(&x, &SiftConfig::default()).unwrap();
            let rec = d.reconstruct();
            let err = rec.iter().zip(&x).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            prop_assert!(err < 1e-8 * max_abs(&x));
        }

        #[test]
        fn modes_meet_criterion_and_order(seed in any::<u64>()) {
            let x = random_walk(seed, 256);
            let d = emd_signal(&x, &SiftConfig::default()).unwrap();
            let mut remainder = x.clone();
            for imf in d.imfs() {
                let out = sift(&remainder, &SiftConfig::default()).unwrap();
                prop_assert_eq!(&out.imf, &imf.values);
                prop_assert!(
                    !out.converged || imf.satisfies_extrema_criterion(),
                    "mode {}",
                    imf.mode_index
                );
                for (r, v) in remainder.iter_mut().zip(&imf.values) {
                    *r -= *v;
                }
            }
            let rates: Vec<usize> = d.imfs().iter().map(|m| zero_crossings(&m.values)).collect();
            for w in rates.windows(2) {
                prop_assert!(w[1] <= w[0], "zero-crossing counts {:?}", rates);
            }
            prop_assert!(!is_residue(&x) || d.n_modes() == 0);
        }

        #[test]
        fn deterministic(seed in any::<u64>()) {
            let x = random_walk(seed, 128);
            let a = emd_signal(&x, &SiftConfig::default()).unwrap();
            let b = emd_signal(&x, &SiftConfig::default()).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}

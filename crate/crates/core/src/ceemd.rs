//! Noise-assisted ensemble decompositions.
//!
//! EEMD averages the decompositions of `x + w_i` over independent white-noise
//! realizations. CEEMD pairs every realization with its negation so the noise
//! cancels exactly in the ensemble mean, making `sum_j c_j + r = x` hold for
//! any ensemble size.
//!
//! Each noise vector comes from its own ChaCha stream keyed by
//! `(seed, realization index)`, trials run in parallel, and per-trial results
//! are reduced in index order, so output is independent of scheduling.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::emd::{emd_signal, Decomposition, SiftConfig, MIN_DECOMPOSITION_LEN};
use crate::error::{HhtError, Result};
use crate::features::end_effect_factor;
use crate::series::TimeSeries;
use crate::stats::{correlation, std_dev};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    /// `N`: noise realizations (CEEMD runs `2N` trials).
    pub trials: usize,
    /// Noise standard deviation as a fraction of the input's sample standard deviation.
    pub noise_sigma: f64,
    pub seed: u64,
    pub sift: SiftConfig,
    /// Modes kept per trial. `None` uses the mode count of a pilot EMD of the input.
    pub target_modes: Option<usize>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            trials: 100,
            noise_sigma: 0.2,
            seed: 0,
            sift: SiftConfig::default(),
            target_modes: None,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(HhtError::param("ensemble.trials", "must be at least 1"));
        }
        if self.noise_sigma <= 0.0 || !self.noise_sigma.is_finite() {
            return Err(HhtError::param(
                "ensemble.noise_sigma",
                "must be a positive number",
            ));
        }
        if self.target_modes == Some(0) {
            return Err(HhtError::param(
                "ensemble.target_modes",
                "must be at least 1 when set",
            ));
        }
        self.sift.validate()
    }
}

/// Noise vector of realization `index`: `scale * N(0, 1)` samples.
pub fn noise_realization<T: Real>(seed: u64, index: u64, len: usize, scale: T) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    (0..len)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            T::lit(z) * scale
        })
        .collect()
}

fn noise_scale<T: Real>(signal: &[T], sigma: f64) -> T {
    T::lit(sigma) * std_dev(signal)
}

fn resolve_target<T: Real>(signal: &[T], config: &EnsembleConfig) -> Result<usize> {
    match config.target_modes {
        Some(n) => Ok(n),
        None => Ok(emd_signal(signal, &config.sift)?.n_modes().max(1)),
    }
}

/// Decomposes one trial signal into exactly `target` modes: missing modes are
/// zero, modes past `target` are left in the residue.
fn padded_trial<T: Real>(signal: &[T], sift: &SiftConfig, target: usize) -> Result<Vec<Vec<T>>> {
    let cfg = SiftConfig {
        max_modes: Some(sift.max_modes.map_or(target, |m| m.min(target))),
        ..*sift
    };
    let d = emd_signal(signal, &cfg)?;
    let len = signal.len();
    let mut out: Vec<Vec<T>> = d.imfs().iter().map(|m| m.values.clone()).collect();
    out.resize(target, vec![T::zero(); len]);
    out.push(d.residue().to_vec());
    Ok(out)
}

fn accumulate<T: Real>(acc: &mut [Vec<T>], part: &[Vec<T>]) {
    for (a, p) in acc.iter_mut().zip(part) {
        for (x, &y) in a.iter_mut().zip(p) {
            *x = *x + y;
        }
    }
}

fn finish<T: Real>(mut sums: Vec<Vec<T>>, count: usize) -> Result<Decomposition<T>> {
    let inv = T::one() / T::from_usize_lossy(count);
    for row in sums.iter_mut() {
        for v in row.iter_mut() {
            *v = *v * inv;
        }
    }
    let residue = sums.pop().expect("residue row");
    Decomposition::new(sums, residue)
}

fn check_len<T>(signal: &[T]) -> Result<()> {
    if signal.len() < MIN_DECOMPOSITION_LEN {
        return Err(HhtError::TooShort {
            needed: MIN_DECOMPOSITION_LEN,
            got: signal.len(),
        });
    }
    Ok(())
}

/// Ensemble EMD over `N` noisy copies `x + w_i`.
pub fn eemd_signal<T: Real>(signal: &[T], config: &EnsembleConfig) -> Result<Decomposition<T>> {
    config.validate()?;
    check_len(signal)?;
    let target = resolve_target(signal, config)?;
    let scale = noise_scale(signal, config.noise_sigma);
    let trials: Vec<Vec<Vec<T>>> = (0..config.trials as u64)
        .into_par_iter()
        .map(|i| {
            let w = noise_realization(config.seed, i, signal.len(), scale);
            let noisy: Vec<T> = signal.iter().zip(&w).map(|(&x, &n)| x + n).collect();
            padded_trial(&noisy, &config.sift, target)
        })
        .collect::<Result<_>>()?;
    let mut sums = vec![vec![T::zero(); signal.len()]; target + 1];
    for t in &trials {
        accumulate(&mut sums, t);
    }
    finish(sums, config.trials)
}

pub fn eemd<T: Real>(series: &TimeSeries<T>, config: &EnsembleConfig) -> Result<Decomposition<T>> {
    eemd_signal(series.values(), config)
}

/// The `2N` trial inputs in order: trial `2i-1` is `x + w_i`, trial `2i` is `x - w_i`.
pub fn ceemd_trial_inputs<T: Real>(signal: &[T], config: &EnsembleConfig) -> Vec<Vec<T>> {
    let scale = noise_scale(signal, config.noise_sigma);
    (0..config.trials as u64)
        .flat_map(|i| {
            let w = noise_realization(config.seed, i, signal.len(), scale);
            let plus = signal.iter().zip(&w).map(|(&x, &n)| x + n).collect();
            let minus = signal.iter().zip(&w).map(|(&x, &n)| x - n).collect();
            [plus, minus]
        })
        .collect()
}

/// Complementary ensemble EMD over `N` pairs `x + w_i`, `x - w_i`.
pub fn ceemd_signal<T: Real>(signal: &[T], config: &EnsembleConfig) -> Result<Decomposition<T>> {
    config.validate()?;
    check_len(signal)?;
    let target = resolve_target(signal, config)?;
    let scale = noise_scale(signal, config.noise_sigma);
    let pairs: Vec<Vec<Vec<T>>> = (0..config.trials as u64)
        .into_par_iter()
        .map(|i| {
            let w = noise_realization(config.seed, i, signal.len(), scale);
            let plus: Vec<T> = signal.iter().zip(&w).map(|(&x, &n)| x + n).collect();
            let minus: Vec<T> = signal.iter().zip(&w).map(|(&x, &n)| x - n).collect();
            let mut pair = padded_trial(&plus, &config.sift, target)?;
            accumulate(&mut pair, &padded_trial(&minus, &config.sift, target)?);
            Ok(pair)
        })
        .collect::<Result<_>>()?;
    let mut sums = vec![vec![T::zero(); signal.len()]; target + 1];
    for p in &pairs {
        accumulate(&mut sums, p);
    }
    finish(sums, 2 * config.trials)
}

pub fn ceemd<T: Real>(series: &TimeSeries<T>, config: &EnsembleConfig) -> Result<Decomposition<T>> {
    ceemd_signal(series.values(), config)
}

/// Decomposition error binned by distance from the window center.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndEffectErrorReport<T> {
    /// Decile edges of `|lambda|`: `0.0, 0.1, ..., 1.0`.
    pub lambda_bins: Vec<f64>,
    /// `rmse_per_bin_per_mode[j][b]` for truth mode `j + 1` and bin `b`.
    pub rmse_per_bin_per_mode: Vec<Vec<T>>,
    /// Same binning for the residue error (decomposed residue plus unmatched modes).
    pub residue_rmse_per_bin: Vec<T>,
    /// Largest `|sum_j E_j(t)|` over all samples and replications.
    pub max_abs_error_sum: T,
    pub replications: usize,
}

impl<T: Real> EndEffectErrorReport<T> {
    /// CSV `mode,bin_low,bin_high,rmse`; the residue row uses mode `n + 1`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["mode", "bin_low", "bin_high", "rmse"])?;
        let rows = self
            .rmse_per_bin_per_mode
            .iter()
            .chain(std::iter::once(&self.residue_rmse_per_bin));
        for (j, row) in rows.enumerate() {
            for (b, v) in row.iter().enumerate() {
                w.write_record([
                    (j + 1).to_string(),
                    self.lambda_bins[b].to_string(),
                    self.lambda_bins[b + 1].to_string(),
                    v.to_string(),
                ])?;
            }
        }
        w.flush().map_err(|source| HhtError::Io {
            path: "<writer>".into(),
            source,
        })?;
        Ok(())
    }
}

const LAMBDA_BINS: usize = 10;

/// Seed of replication `r`, decorrelated from neighbouring seeds.
pub fn replication_seed(seed: u64, r: u64) -> u64 {
    let mut z = seed ^ r.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-sample decomposition errors for one replication, aligned to the truth.
///
/// Returns one error row per truth mode followed by the residue error row.
pub fn aligned_errors<T: Real>(truth: &[Vec<T>], decomp: &Decomposition<T>) -> Result<Vec<Vec<T>>> {
    let n = truth.len();
    let len = decomp.source_length();
    let mut assigned: Vec<Option<usize>> = vec![None; decomp.n_modes()];
    let mut mapping = Vec::with_capacity(n);
    for (k, c_true) in truth.iter().enumerate() {
        let (best, _) = decomp
            .imfs()
            .iter()
            .enumerate()
            .map(|(j, m)| (j, correlation(&m.values, c_true)))
            .fold((usize::MAX, T::neg_infinity()), |acc, cur| {
                if cur.1 > acc.1 {
                    cur
                } else {
                    acc
                }
            });
        if best == usize::MAX {
            return Err(HhtError::ModeMismatch("decomposition has no modes".into()));
        }
        if let Some(other) = assigned[best] {
            return Err(HhtError::ModeMismatch(format!(
                "truth modes {} and {} both align with decomposed mode {}",
                other + 1,
                k + 1,
                best + 1
            )));
        }
        assigned[best] = Some(k);
        mapping.push(best);
    }
    let mut errors: Vec<Vec<T>> = mapping
        .iter()
        .zip(truth)
        .map(|(&j, c_true)| {
            decomp.imfs()[j]
                .values
                .iter()
                .zip(c_true)
                .map(|(&c, &s)| c - s)
                .collect()
        })
        .collect();
    let mut residue = decomp.residue().to_vec();
    for (j, owner) in assigned.iter().enumerate() {
        if owner.is_none() {
            for (r, &c) in residue.iter_mut().zip(&decomp.imfs()[j].values) {
                *r = *r + c;
            }
        }
    }
    debug_assert_eq!(residue.len(), len);
    errors.push(residue);
    Ok(errors)
}

/// Runs CEEMD on `sum(truth)` across replications and bins the per-sample
/// errors `c_j(t) - c*_j(t)` by `|lambda(t)|` over the full window.
pub fn characterize_end_effect<T: Real>(
    truth: &[Vec<T>],
    config: &EnsembleConfig,
    replications: usize,
) -> Result<EndEffectErrorReport<T>> {
    config.validate()?;
    if truth.is_empty() {
        return Err(HhtError::param("truth", "at least one component required"));
    }
    if replications < 1 {
        return Err(HhtError::param("replications", "must be at least 1"));
    }
    let len = truth[0].len();
    if truth.iter().any(|c| c.len() != len) {
        return Err(HhtError::Range("truth components differ in length".into()));
    }
    check_len(&truth[0])?;
    let n = truth.len();
    let signal: Vec<T> = (0..len).map(|t| truth.iter().map(|c| c[t]).sum()).collect();
    let bins: Vec<usize> = (0..len)
        .map(|t| {
            let lambda = end_effect_factor(t as f64, 0.0, (len - 1) as f64)
                .expect("t inside window")
                .abs();
            ((lambda * LAMBDA_BINS as f64) as usize).min(LAMBDA_BINS - 1)
        })
        .collect();
    let mut sq = vec![vec![T::zero(); LAMBDA_BINS]; n + 1];
    let mut counts = [0usize; LAMBDA_BINS];
    let mut max_sum = T::zero();
    for r in 0..replications {
        let cfg = EnsembleConfig {
            seed: replication_seed(config.seed, r as u64),
            target_modes: Some(n),
            ..*config
        };
        let decomp = ceemd_signal(&signal, &cfg)?;
        let errors = aligned_errors(truth, &decomp)?;
        for t in 0..len {
            let b = bins[t];
            counts[b] += 1;
            let mut total = T::zero();
            for (row, e) in sq.iter_mut().zip(&errors) {
                row[b] = row[b] + e[t] * e[t];
                total = total + e[t];
            }
            max_sum = max_sum.max(total.abs());
        }
    }
    let rmse: Vec<Vec<T>> = sq
        .into_iter()
        .map(|row| {
            row.into_iter()
                .zip(counts)
                .map(|(s, c)| {
                    if c == 0 {
                        T::zero()
                    } else {
                        (s / T::from_usize_lossy(c)).sqrt()
                    }
                })
                .collect()
        })
        .collect();
    let mut rmse = rmse;
    let residue_rmse_per_bin = rmse.pop().expect("residue row");
    Ok(EndEffectErrorReport {
        lambda_bins: (0..=LAMBDA_BINS)
            .map(|b| b as f64 / LAMBDA_BINS as f64)
            .collect(),
        rmse_per_bin_per_mode: rmse,
        residue_rmse_per_bin,
        max_abs_error_sum: max_sum,
        replications,
    })
}

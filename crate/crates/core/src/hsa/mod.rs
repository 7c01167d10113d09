//! Hilbert spectral analysis of decomposed modes.

mod hilbert;
mod lowess;

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

pub use hilbert::{analytic_signal, hilbert};
pub use lowess::{robust_lowess, LowessConfig};

use crate::emd::{Decomposition, Imf};
use crate::error::{HhtError, Result};
use crate::stats::interior;
use crate::Real;

/// One complex IMF `c_j + i H[c_j] = a_j exp(i theta_j)` with its
/// instantaneous amplitude, unwrapped phase and frequency (cycles/sample).
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticMode<T> {
    pub mode_index: usize,
    pub real_part: Vec<T>,
    pub imag_part: Vec<T>,
    pub amplitude: Vec<T>,
    pub phase: Vec<T>,
    pub frequency: Vec<T>,
}

impl<T: Real> AnalyticMode<T> {
    pub fn len(&self) -> usize {
        self.real_part.len()
    }

    pub fn is_empty(&self) -> bool {
        self.real_part.is_empty()
    }

    /// `a(t) cos(theta(t))`, which recovers the real part.
    pub fn polar_real(&self) -> Vec<T> {
        self.amplitude
            .iter()
            .zip(&self.phase)
            .map(|(&a, &th)| a * th.cos())
            .collect()
    }
}

/// Unwraps phases by adding multiples of `2 pi` whenever consecutive samples
/// jump by more than `pi`.
pub fn unwrap_phase<T: Real>(raw: &[T]) -> Vec<T> {
    let pi = T::PI();
    let two_pi = pi + pi;
    let mut out = Vec::with_capacity(raw.len());
    let mut offset = T::zero();
    for (i, &p) in raw.iter().enumerate() {
        if i > 0 {
            let d = p - raw[i - 1];
            if d > pi {
                offset = offset - two_pi;
            } else if d < -pi {
                offset = offset + two_pi;
            }
        }
        out.push(p + offset);
    }
    out
}

/// Centered phase difference over `4 pi` (one-sided at the ends), then robust LOWESS.
pub fn instantaneous_frequency<T: Real>(phase: &[T], lowess: &LowessConfig) -> Result<Vec<T>> {
    let n = phase.len();
    if n < 3 {
        return Err(HhtError::TooShort { needed: 3, got: n });
    }
    let two_pi = T::PI() + T::PI();
    let four_pi = two_pi + two_pi;
    let mut raw = Vec::with_capacity(n);
    raw.push((phase[1] - phase[0]) / two_pi);
    for t in 1..n - 1 {
        raw.push((phase[t + 1] - phase[t - 1]) / four_pi);
    }
    raw.push((phase[n - 1] - phase[n - 2]) / two_pi);
    robust_lowess(&raw, lowess)
}

/// Builds the analytic representation of one mode.
pub fn analytic_values<T: Real>(
    values: &[T],
    mode_index: usize,
    lowess: &LowessConfig,
) -> Result<AnalyticMode<T>> {
    let z = analytic_signal(values)?;
    let imag_part: Vec<T> = z.iter().map(|c| c.im).collect();
    let amplitude: Vec<T> = values
        .iter()
        .zip(&imag_part)
        .map(|(&re, &im)| (re * re + im * im).sqrt())
        .collect();
    let raw: Vec<T> = values
        .iter()
        .zip(&imag_part)
        .map(|(&re, &im)| im.atan2(re))
        .collect();
    let phase = unwrap_phase(&raw);
    let frequency = instantaneous_frequency(&phase, lowess)?;
    Ok(AnalyticMode {
        mode_index,
        real_part: values.to_vec(),
        imag_part,
        amplitude,
        phase,
        frequency,
    })
}

pub fn analytic_mode<T: Real>(imf: &Imf<T>, lowess: &LowessConfig) -> Result<AnalyticMode<T>> {
    analytic_values(&imf.values, imf.mode_index, lowess)
}

/// Analytic modes for every IMF of a decomposition, in mode order.
pub fn analytic_modes<T: Real>(
    decomp: &Decomposition<T>,
    lowess: &LowessConfig,
) -> Result<Vec<AnalyticMode<T>>> {
    lowess.validate()?;
    decomp
        .imfs()
        .par_iter()
        .map(|imf| analytic_mode(imf, lowess))
        .collect()
}

/// A support point `(j, t, f_j(t), E_j(t))` of the Hilbert spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumPoint<T> {
    pub mode_index: usize,
    /// 1-based sample index.
    pub time: usize,
    pub frequency: T,
    /// `a_j(t)^2`.
    pub energy: T,
    pub amplitude: T,
}

/// Sparse Hilbert spectrum: `n * T` points, mode-major then time.
pub fn spectrum_points<T: Real>(modes: &[AnalyticMode<T>]) -> Vec<SpectrumPoint<T>> {
    modes
        .iter()
        .flat_map(|m| {
            m.frequency
                .iter()
                .zip(&m.amplitude)
                .enumerate()
                .map(move |(t, (&f, &a))| SpectrumPoint {
                    mode_index: m.mode_index,
                    time: t + 1,
                    frequency: f,
                    energy: a * a,
                    amplitude: a,
                })
        })
        .collect()
}

pub fn hilbert_spectrum<T: Real>(
    decomp: &Decomposition<T>,
    lowess: &LowessConfig,
) -> Result<Vec<SpectrumPoint<T>>> {
    Ok(spectrum_points(&analytic_modes(decomp, lowess)?))
}

/// Per-mode means over the interior 80% of each mode's samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeSpectrumMean<T> {
    pub mode_index: usize,
    pub mean_frequency: T,
    pub mean_energy: T,
}

pub fn mode_spectrum_means<T: Real>(
    points: &[SpectrumPoint<T>],
) -> Result<Vec<ModeSpectrumMean<T>>> {
    if points.is_empty() {
        return Err(HhtError::Range("empty spectrum".into()));
    }
    let mut by_mode: Vec<(usize, Vec<&SpectrumPoint<T>>)> = Vec::new();
    for p in points {
        match by_mode.iter_mut().find(|(j, _)| *j == p.mode_index) {
            Some((_, v)) => v.push(p),
            None => by_mode.push((p.mode_index, vec![p])),
        }
    }
    by_mode.sort_by_key(|(j, _)| *j);
    Ok(by_mode
        .into_iter()
        .map(|(j, mut pts)| {
            pts.sort_by_key(|p| p.time);
            let kept = &pts[interior(pts.len())];
            let n = T::from_usize_lossy(kept.len());
            ModeSpectrumMean {
                mode_index: j,
                mean_frequency: kept.iter().map(|p| p.frequency).sum::<T>() / n,
                mean_energy: kept.iter().map(|p| p.energy).sum::<T>() / n,
            }
        })
        .collect())
}

/// CSV `mode,t,frequency,energy,amplitude`.
pub fn write_spectrum_csv<T: Real, W: Write>(points: &[SpectrumPoint<T>], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["mode", "t", "frequency", "energy", "amplitude"])?;
    for p in points {
        w.write_record([
            p.mode_index.to_string(),
            p.time.to_string(),
            p.frequency.to_string(),
            p.energy.to_string(),
            p.amplitude.to_string(),
        ])?;
    }
    w.flush().map_err(|source| HhtError::Io {
        path: "<writer>".into(),
        source,
    })?;
    Ok(())
}

/// CSV `mode,mean_frequency,mean_energy`.
pub fn write_means_csv<T: Real, W: Write>(means: &[ModeSpectrumMean<T>], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["mode", "mean_frequency", "mean_energy"])?;
    for m in means {
        w.write_record([
            m.mode_index.to_string(),
            m.mean_frequency.to_string(),
            m.mean_energy.to_string(),
        ])?;
    }
    w.flush().map_err(|source| HhtError::Io {
        path: "<writer>".into(),
        source,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emd::emd_signal;
    use crate::emd::SiftConfig;
    use crate::stats::{max_abs, median};
    use std::f64::consts::PI;

    fn cosine(freq: f64, amp: f64, len: usize) -> Vec<f64> {
        (0..len)
            .map(|t| amp * (2.0 * PI * freq * t as f64).cos())
            .collect()
    }

    #[test]
    fn pure_tone_amplitude_and_phase() {
        let x = cosine(0.05, 2.0, 2000);
        let m = analytic_values(&x, 1, &LowessConfig::default()).unwrap();
        let r = interior(2000);
        assert!((median(&m.amplitude[r.clone()]) - 2.0).abs() < 0.04);
        for w in m.phase[r.clone()].windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert!((median(&m.frequency[r]) - 0.05).abs() < 0.001);
        for t in 0..x.len() {
            let lhs = m.amplitude[t] * m.amplitude[t];
            let rhs = m.real_part[t] * m.real_part[t] + m.imag_part[t] * m.imag_part[t];
            assert!((lhs - rhs).abs() <= 8.0 * f64::EPSILON * rhs.max(1.0));
        }
    }

    #[test]
    fn linear_phase_gives_constant_frequency() {
        let phase: Vec<f64> = (0..500).map(|t| 2.0 * PI * 0.05 * t as f64).collect();
        let f = instantaneous_frequency(&phase, &LowessConfig::default()).unwrap();
        for v in f {
            assert!((v - 0.05).abs() < 1e-8);
        }
    }

    #[test]
    fn chirp_frequency_is_tracked() {
        let x: Vec<f64> = (0..1000)
            .map(|t| {
                let t = t as f64;
                (2.0 * PI * (0.01 * t + 0.00005 * t * t)).cos()
            })
            .collect();
        let m = analytic_values(&x, 1, &LowessConfig::default()).unwrap();
        let want = 0.01 + 0.0001 * 500.0;
        assert!(
            ((m.frequency[500] - want) / want).abs() < 0.1,
            "{}",
            m.frequency[500]
        );
    }

    #[test]
    fn unwrap_removes_jumps() {
        let raw = [3.0f64, -3.1, -2.9, 3.0];
        let u = unwrap_phase(&raw);
        for w in u.windows(2) {
            assert!((w[1] - w[0]).abs() <= PI);
        }
    }

    #[test]
    fn spectrum_of_single_tone() {
        let x = cosine(0.05, 2.0, 1000);
        let d = Decomposition::new(vec![x], vec![0.0; 1000]).unwrap();
        let pts = hilbert_spectrum(&d, &LowessConfig::default()).unwrap();
        assert_eq!(pts.len(), 1000);
        for p in &pts[interior(1000)] {
            assert!((p.energy - 4.0).abs() < 0.2);
        }
    }

    #[test]
    fn empty_decomposition_gives_empty_spectrum() {
        let ramp: Vec<f64> = (0..100).map(f64::from).collect();
        let d = emd_signal(&ramp, &SiftConfig::default()).unwrap();
        assert!(hilbert_spectrum(&d, &LowessConfig::default())
            .unwrap()
            .is_empty());
        assert!(mode_spectrum_means::<f64>(&[]).is_err());
    }

    #[test]
    fn two_tone_mode_means() {
        let x: Vec<f64> = (1..=1000)
            .map(|t| {
                let t = t as f64;
                (2.0 * PI * 0.2 * t).sin() + (2.0 * PI * 0.02 * t).sin()
            })
            .collect();
        let d = emd_signal(&x, &SiftConfig::default()).unwrap();
        let pts = hilbert_spectrum(&d, &LowessConfig::default()).unwrap();
        assert_eq!(pts.len(), d.n_modes() * 1000);
        let means = mode_spectrum_means(&pts).unwrap();
        assert!((means[0].mean_frequency - 0.2).abs() < 0.02);
        assert!((means[1].mean_frequency - 0.02).abs() < 0.002);
        assert!(means[0].mean_frequency > means[1].mean_frequency);
    }

    #[test]
    fn polar_form_reconstructs_the_series() {
        let x: Vec<f64> = (0..600)
            .map(|t| {
                let t = t as f64;
                (2.0 * PI * 0.13 * t).sin() + 0.5 * (2.0 * PI * 0.011 * t).cos() + 0.001 * t
            })
            .collect();
        let d = emd_signal(&x, &SiftConfig::default()).unwrap();
        let modes = analytic_modes(&d, &LowessConfig::default()).unwrap();
        let mut rec = d.residue().to_vec();
        for m in &modes {
            for (r, v) in rec.iter_mut().zip(m.polar_real()) {
                *r += v;
            }
        }
        let diff: Vec<f64> = rec.iter().zip(&x).map(|(a, b)| a - b).collect();
        assert!(max_abs(&diff) < 1e-9);
    }
}

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{HhtError, Result};
use crate::Real;

/// Discrete analytic signal `x + i H[x]`.
///
/// Forward FFT, zero the negative-frequency bins, double the positive ones
/// (DC and, for even lengths, Nyquist unscaled), inverse FFT.
pub fn analytic_signal<T: Real>(signal: &[T]) -> Result<Vec<Complex<T>>> {
    let n = signal.len();
    if n < 4 {
        return Err(HhtError::TooShort { needed: 4, got: n });
    }
    let mut planner = FftPlanner::<T>::new();
    let mut buf: Vec<Complex<T>> = signal.iter().map(|&x| Complex::new(x, T::zero())).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    let two = T::lit(2.0);
    let positive_end = n.div_ceil(2); // exclusive; excludes Nyquist for even n
    for c in &mut buf[1..positive_end] {
        *c = *c * two;
    }
    let negative_start = n / 2 + 1;
    for c in &mut buf[negative_start..] {
        *c = Complex::new(T::zero(), T::zero());
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let inv = T::one() / T::from_usize_lossy(n);
    for c in &mut buf {
        *c = *c * inv;
    }
    Ok(buf)
}

/// Discrete Hilbert transform: the imaginary part of [`analytic_signal`].
pub fn hilbert<T: Real>(signal: &[T]) -> Result<Vec<T>> {
    Ok(analytic_signal(signal)?.into_iter().map(|c| c.im).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{interior, mean};
    use std::f64::consts::PI;

    /// O(n^2) DFT-based reference transform.
    fn hilbert_by_dft(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let spectrum: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                x.iter().enumerate().fold((0.0, 0.0), |(re, im), (t, &v)| {
                    let a = -2.0 * PI * (k * t) as f64 / n as f64;
                    (re + v * a.cos(), im + v * a.sin())
                })
            })
            .collect();
        (0..n)
            .map(|t| {
                let mut acc = 0.0;
                for (k, &(re, im)) in spectrum.iter().enumerate() {
                    // multiply by -i sign(k) and keep the real part of the inverse
                    let sign = if k == 0 || 2 * k == n {
                        0.0
                    } else if 2 * k < n {
                        1.0
                    } else {
                        -1.0
                    };
                    let (hr, hi) = (sign * im, -sign * re);
                    let a = 2.0 * PI * (k * t) as f64 / n as f64;
                    acc += hr * a.cos() - hi * a.sin();
                }
                acc / n as f64
            })
            .collect()
    }

    #[test]
    fn cosine_maps_to_sine() {
        let x: Vec<f64> = (0..2000)
            .map(|t| (2.0 * PI * 0.05 * t as f64).cos())
            .collect();
        let h = hilbert(&x).unwrap();
        for t in interior(2000) {
            assert!((h[t] - (2.0 * PI * 0.05 * t as f64).sin()).abs() < 0.02);
        }
    }

    #[test]
    fn constant_has_no_quadrature() {
        let h = hilbert(&[3.5f64; 16]).unwrap();
        assert!(h.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn double_transform_negates_zero_mean_part() {
        let x: Vec<f64> = (0..1000)
            .map(|t| {
                let t = t as f64;
                (2.0 * PI * 0.03 * t).sin() + 0.5 * (2.0 * PI * 0.11 * t).cos() + 2.0
            })
            .collect();
        let hh = hilbert(&hilbert(&x).unwrap()).unwrap();
        let m = mean(&x);
        let scale = x.iter().map(|v| (v - m).abs()).fold(0.0, f64::max);
        for t in interior(1000) {
            assert!((hh[t] + (x[t] - m)).abs() < 0.02 * scale);
        }
    }

    #[test]
    fn matches_direct_dft_for_odd_and_even_lengths() {
        for n in [9usize, 16, 31] {
            let x: Vec<f64> = (0..n).map(|t| ((t * t) % 7) as f64 - 2.5).collect();
            let fast = hilbert(&x).unwrap();
            let slow = hilbert_by_dft(&x);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-9, "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn parseval_bound() {
        let x: Vec<f64> = (0..256).map(|t| ((t * 37) % 11) as f64).collect();
        let m = mean(&x);
        let h = hilbert(&x).unwrap();
        let e_real: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
        let e_imag: f64 = h.iter().map(|v| v * v).sum();
        assert!(e_imag <= e_real * (1.0 + 1e-12));
    }

    #[test]
    fn too_short() {
        assert!(hilbert(&[1.0, 2.0, 3.0]).is_err());
    }
}

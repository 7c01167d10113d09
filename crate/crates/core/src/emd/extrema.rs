use crate::error::{HhtError, Result};
use crate::Real;

/// Interior local extrema as 0-based indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Extrema {
    pub maxima: Vec<usize>,
    pub minima: Vec<usize>,
}

impl Extrema {
    pub fn count(&self) -> usize {
        self.maxima.len() + self.minima.len()
    }
}

/// Strict interior maxima and minima in increasing index order.
///
/// A flat run bounded on both sides by lower (higher) samples is one maximum
/// (minimum) located at the floor midpoint of the run. Runs touching either
/// end of the signal are never extrema.
pub fn find_extrema<T: Real>(signal: &[T]) -> Result<Extrema> {
    if signal.len() < 3 {
        return Err(HhtError::TooShort {
            needed: 3,
            got: signal.len(),
        });
    }
    Ok(scan(signal))
}

pub(crate) fn scan<T: Real>(signal: &[T]) -> Extrema {
    let n = signal.len();
    let mut out = Extrema::default();
    if n < 3 {
        return out;
    }
    let mut start = 1;
    while start < n - 1 {
        let v = signal[start];
        let mut end = start;
        while end + 1 < n && signal[end + 1] == v {
            end += 1;
        }
        if end < n - 1 {
            let prev = signal[start - 1];
            let next = signal[end + 1];
            let mid = (start + end) / 2;
            if prev < v && next < v {
                out.maxima.push(mid);
            } else if prev > v && next > v {
                out.minima.push(mid);
            }
        }
        start = end + 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn one_based(v: &[usize]) -> Vec<usize> {
        v.iter().map(|i| i + 1).collect()
    }

    #[test]
    fn single_peak_and_trough() {
        let e = find_extrema(&[0.0, 1.0, 0.0, -1.0, 0.0]).unwrap();
        assert_eq!(one_based(&e.maxima), vec![2]);
        assert_eq!(one_based(&e.minima), vec![4]);
    }

    #[test]
    fn plateau_uses_floor_midpoint() {
        let e = find_extrema(&[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(one_based(&e.maxima), vec![2]);
        assert!(e.minima.is_empty());
        // a step is not an extremum
        let e = find_extrema(&[0.0, 1.0, 1.0, 2.0]).unwrap();
        assert_eq!(e.count(), 0);
    }

    #[test]
    fn sine_with_period_100_has_four_of_each() {
        let x: Vec<f64> = (0..400)
            .map(|k| (2.0 * PI * k as f64 / 100.0).sin())
            .collect();
        let e = find_extrema(&x).unwrap();
        assert_eq!(e.maxima.len(), 4);
        assert_eq!(e.minima.len(), 4);
        for (mx, mn) in e.maxima.iter().zip(&e.minima) {
            assert!(mx < mn);
        }
        for w in e.maxima.windows(2) {
            assert_eq!(w[1] - w[0], 100);
        }
    }

    #[test]
    fn too_short() {
        assert!(find_extrema(&[1.0, 2.0]).is_err());
    }
}

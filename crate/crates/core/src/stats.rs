//! Small descriptive statistics used across modules and by test harnesses.

use std::ops::Range;

use crate::Real;

pub fn mean<T: Real>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::zero();
    }
    xs.iter().copied().sum::<T>() / T::from_usize_lossy(xs.len())
}

/// Sample standard deviation (n - 1 denominator); zero for fewer than two values.
pub fn std_dev<T: Real>(xs: &[T]) -> T {
    if xs.len() < 2 {
        return T::zero();
    }
    let m = mean(xs);
    let ss: T = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    (ss / T::from_usize_lossy(xs.len() - 1)).sqrt()
}

/// Population variance (n denominator).
pub fn variance<T: Real>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::zero();
    }
    let m = mean(xs);
    xs.iter().map(|&x| (x - m) * (x - m)).sum::<T>() / T::from_usize_lossy(xs.len())
}

/// Pearson correlation; zero when either side has no variance.
pub fn correlation<T: Real>(a: &[T], b: &[T]) -> T {
    assert_eq!(a.len(), b.len(), "correlation needs equal lengths");
    let ma = mean(a);
    let mb = mean(b);
    let mut sab = T::zero();
    let mut saa = T::zero();
    let mut sbb = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        sab = sab + (x - ma) * (y - mb);
        saa = saa + (x - ma) * (x - ma);
        sbb = sbb + (y - mb) * (y - mb);
    }
    if saa <= T::zero() || sbb <= T::zero() {
        return T::zero();
    }
    sab / (saa * sbb).sqrt()
}

pub fn median<T: Real>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::nan();
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("median of NaN"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / T::lit(2.0)
    }
}

pub fn max_abs<T: Real>(xs: &[T]) -> T {
    xs.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
}

/// Index range dropping the first and last 10% of `len` samples.
pub fn interior(len: usize) -> Range<usize> {
    let trim = len / 10;
    trim..len - trim
}

/// Number of sign changes, treating exact zeros as belonging to neither side.
pub fn zero_crossings<T: Real>(xs: &[T]) -> usize {
    let mut count = 0;
    let mut last_sign = 0i8;
    for &x in xs {
        let s = if x > T::zero() {
            1
        } else if x < T::zero() {
            -1
        } else {
            0
        };
        if s != 0 {
            if last_sign != 0 && s != last_sign {
                count += 1;
            }
            last_sign = s;
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_trims_ten_percent() {
        assert_eq!(interior(1000), 100..900);
        assert_eq!(interior(5), 0..5);
    }

    #[test]
    fn correlation_of_scaled_copy_is_one() {
        let a = [1.0, 2.0, 4.0, 3.0];
        let b: Vec<f64> = a.iter().map(|x| 3.0 * x - 1.0).collect();
        assert!((correlation(&a, &b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_crossings_skip_exact_zeros() {
        assert_eq!(zero_crossings(&[1.0, 0.0, -1.0, 0.0, 0.0, 2.0]), 2);
        assert_eq!(zero_crossings(&[0.0, 0.0]), 0);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}

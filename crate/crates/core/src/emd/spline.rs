use crate::Real;

/// Natural cubic spline through strictly increasing knots.
#[derive(Debug, Clone)]
pub struct NaturalSpline<T> {
    knots: Vec<T>,
    values: Vec<T>,
    second: Vec<T>,
}

impl<T: Real> NaturalSpline<T> {
    /// Panics when fewer than two knots are given or knots are not increasing.
    pub fn new(knots: Vec<T>, values: Vec<T>) -> Self {
        let n = knots.len();
        assert!(n >= 2 && values.len() == n, "spline needs >= 2 knots");
        debug_assert!(knots.windows(2).all(|w| w[0] < w[1]));
        let mut second = vec![T::zero(); n];
        if n > 2 {
            // Thomas algorithm on the interior second-derivative system.
            let two = T::lit(2.0);
            let six = T::lit(6.0);
            let m = n - 2;
            let mut diag = vec![T::zero(); m];
            let mut rhs = vec![T::zero(); m];
            let mut upper = vec![T::zero(); m];
            for i in 0..m {
                let h0 = knots[i + 1] - knots[i];
                let h1 = knots[i + 2] - knots[i + 1];
                diag[i] = two * (h0 + h1);
                upper[i] = h1;
                rhs[i] =
                    six * ((values[i + 2] - values[i + 1]) / h1 - (values[i + 1] - values[i]) / h0);
            }
            for i in 1..m {
                let lower = knots[i + 1] - knots[i];
                let w = lower / diag[i - 1];
                diag[i] = diag[i] - w * upper[i - 1];
                rhs[i] = rhs[i] - w * rhs[i - 1];
            }
            second[m] = rhs[m - 1] / diag[m - 1];
            for i in (0..m - 1).rev() {
                second[i + 1] = (rhs[i] - upper[i] * second[i + 2]) / diag[i];
            }
        }
        Self {
            knots,
            values,
            second,
        }
    }

    fn eval_segment(&self, i: usize, x: T) -> T {
        let six = T::lit(6.0);
        let h = self.knots[i + 1] - self.knots[i];
        let a = (self.knots[i + 1] - x) / h;
        let b = (x - self.knots[i]) / h;
        a * self.values[i]
            + b * self.values[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h * h
                / six
    }

    pub fn eval(&self, x: T) -> T {
        let last = self.knots.len() - 2;
        let i = match self.knots.partition_point(|&k| k <= x) {
            0 => 0,
            p => (p - 1).min(last),
        };
        self.eval_segment(i, x)
    }

    /// Evaluates at `0, 1, ..., len - 1` with a single forward sweep.
    pub fn sample_grid(&self, len: usize) -> Vec<T> {
        let last = self.knots.len() - 2;
        let mut seg = 0;
        (0..len)
            .map(|k| {
                let x = T::from_usize_lossy(k);
                while seg < last && self.knots[seg + 1] <= x {
                    seg += 1;
                }
                self.eval_segment(seg, x)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_linear_data() {
        let knots = vec![-3.0, 0.5, 2.0, 7.0, 9.0];
        let values: Vec<f64> = knots.iter().map(|x| 2.0 * x - 1.0).collect();
        let s = NaturalSpline::new(knots, values);
        for k in 0..10 {
            let x = k as f64;
            assert!((s.eval(x) - (2.0 * x - 1.0)).abs() < 1e-12);
        }
        let grid = s.sample_grid(10);
        for (k, g) in grid.iter().enumerate() {
            assert!((g - (2.0 * k as f64 - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolates_knots_with_zero_end_curvature() {
        let knots = vec![0.0f64, 1.0, 2.5, 4.0];
        let values = vec![1.0, -2.0, 0.5, 3.0];
        let s = NaturalSpline::new(knots.clone(), values.clone());
        for (k, v) in knots.iter().zip(&values) {
            assert!((s.eval(*k) - v).abs() < 1e-12);
        }
        assert_eq!(s.second[0], 0.0);
        assert_eq!(s.second[3], 0.0);
        // C2 continuity at an interior knot via finite differences
        let d2 = |x: f64| (s.eval(x + 1e-4) - 2.0 * s.eval(x) + s.eval(x - 1e-4)) / 1e-8;
        assert!((d2(1.0 + 1e-3) - d2(1.0 - 1e-3)).abs() < 1e-2);
    }
}

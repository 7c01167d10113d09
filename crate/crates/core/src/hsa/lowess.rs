use serde::{Deserialize, Serialize};

use crate::error::{HhtError, Result};
use crate::stats::median;
use crate::Real;

/// Robust LOWESS on a unit-spaced abscissa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LowessConfig {
    /// Fraction of the samples in each local window.
    pub span: f64,
    pub robust_iterations: usize,
}

impl Default for LowessConfig {
    fn default() -> Self {
        Self {
            span: 0.05,
            robust_iterations: 5,
        }
    }
}

impl LowessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.span > 0.0 && self.span <= 1.0) {
            return Err(HhtError::param(
                "lowess.span",
                format!("{} is outside (0, 1]", self.span),
            ));
        }
        Ok(())
    }

    /// Points in each local window for a sequence of length `len`.
    pub fn window_points(&self, len: usize) -> usize {
        ((self.span * len as f64 - 1e-9).ceil() as usize).min(len)
    }
}

fn tricube<T: Real>(u: T) -> T {
    if u >= T::one() {
        T::zero()
    } else {
        let v = T::one() - u * u * u;
        v * v * v
    }
}

fn bisquare<T: Real>(u: T) -> T {
    if u >= T::one() {
        T::zero()
    } else {
        let v = T::one() - u * u;
        v * v
    }
}

/// Weighted least-squares line through `(j, y_j)` for `j` in `lo..hi`,
/// evaluated at `i`. `None` when every weight vanishes.
fn local_fit<T: Real>(y: &[T], robust: &[T], i: usize, lo: usize, hi: usize) -> Option<T> {
    let max_dist = (i - lo).max(hi - 1 - i);
    // inflate slightly so the farthest neighbour keeps a positive weight
    let h = T::from_usize_lossy(max_dist.max(1)) * T::lit(1.001);
    let xi = T::from_usize_lossy(i);
    let mut sw = T::zero();
    let mut sx = T::zero();
    let mut sy = T::zero();
    let mut weights = Vec::with_capacity(hi - lo);
    for j in lo..hi {
        let xj = T::from_usize_lossy(j);
        let w = tricube((xj - xi).abs() / h) * robust[j];
        weights.push(w);
        sw = sw + w;
        sx = sx + w * xj;
        sy = sy + w * y[j];
    }
    if sw <= T::zero() {
        return None;
    }
    let xbar = sx / sw;
    let ybar = sy / sw;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for (j, &w) in (lo..hi).zip(&weights) {
        let dx = T::from_usize_lossy(j) - xbar;
        sxx = sxx + w * dx * dx;
        sxy = sxy + w * dx * (y[j] - ybar);
    }
    let tiny = T::epsilon() * sw * h * h;
    if sxx <= tiny {
        Some(ybar)
    } else {
        Some(ybar + sxy / sxx * (xi - xbar))
    }
}

/// Locally weighted linear regression with tricube weights, followed by
/// `robust_iterations` rounds of bisquare reweighting on the residuals.
pub fn robust_lowess<T: Real>(y: &[T], config: &LowessConfig) -> Result<Vec<T>> {
    config.validate()?;
    let n = y.len();
    let k = config.window_points(n);
    if n < 4 || n < k {
        return Err(HhtError::TooShort {
            needed: k.max(4),
            got: n,
        });
    }
    if k < 2 {
        return Err(HhtError::param(
            "lowess.span",
            format!("window of {k} point(s) for {n} samples; need at least 2"),
        ));
    }
    let scale = y.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    let floor = T::lit(1e-12) * scale.max(T::min_positive_value());
    let mut robust = vec![T::one(); n];
    let mut fit = vec![T::zero(); n];
    for iteration in 0..=config.robust_iterations {
        for i in 0..n {
            let lo = i.saturating_sub((k - 1) / 2).min(n - k);
            let hi = lo + k;
            // keep the previous pass when every neighbour has been rejected
            let fallback = if iteration == 0 { y[i] } else { fit[i] };
            fit[i] = local_fit(y, &robust, i, lo, hi).unwrap_or(fallback);
        }
        if iteration == config.robust_iterations {
            break;
        }
        let residuals: Vec<T> = y.iter().zip(&fit).map(|(&a, &b)| (a - b).abs()).collect();
        let cmad = T::lit(6.0) * median(&residuals).max(floor);
        for (r, &res) in robust.iter_mut().zip(&residuals) {
            *r = bisquare(res / cmad);
        }
    }
    Ok(fit)
}

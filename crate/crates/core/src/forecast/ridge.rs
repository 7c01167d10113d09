use serde::{Deserialize, Serialize};

use crate::error::{HhtError, Result};
use crate::features::{FeatureMatrix, Standardization};
use crate::Real;

/// Linear model in original feature units: `y = intercept + weights . x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RidgeModel<T> {
    pub weights: Vec<T>,
    pub intercept: T,
    pub regularization: f64,
    pub standardization: Standardization<T>,
}

impl<T: Real> RidgeModel<T> {
    pub fn predict(&self, x: &[T]) -> Result<T> {
        if x.len() != self.weights.len() {
            return Err(HhtError::Range(format!(
                "feature vector has {} entries, model expects {}",
                x.len(),
                self.weights.len()
            )));
        }
        Ok(self
            .weights
            .iter()
            .zip(x)
            .fold(self.intercept, |acc, (&w, &v)| acc + w * v))
    }
}

/// In-place Cholesky factorisation of a symmetric positive definite matrix
/// (row-major `p x p`); the lower triangle receives `L`.
fn cholesky<T: Real>(a: &mut [T], p: usize) -> Result<()> {
    for j in 0..p {
        let mut d = a[j * p + j];
        for k in 0..j {
            d = d - a[j * p + k] * a[j * p + k];
        }
        if d <= T::zero() || d.is_nan() {
            return Err(HhtError::Singular("ridge normal equations"));
        }
        let d = d.sqrt();
        a[j * p + j] = d;
        for i in j + 1..p {
            let mut s = a[i * p + j];
            for k in 0..j {
                s = s - a[i * p + k] * a[j * p + k];
            }
            a[i * p + j] = s / d;
        }
    }
    Ok(())
}

fn cholesky_solve<T: Real>(l: &[T], p: usize, b: &mut [T]) {
    for i in 0..p {
        let mut s = b[i];
        for k in 0..i {
            s = s - l[i * p + k] * b[k];
        }
        b[i] = s / l[i * p + i];
    }
    for i in (0..p).rev() {
        let mut s = b[i];
        for k in i + 1..p {
            s = s - l[k * p + i] * b[k];
        }
        b[i] = s / l[i * p + i];
    }
}

/// Standardized design restricted to columns with nonzero variance.
struct Design<T> {
    z: Vec<Vec<T>>,
    active: Vec<usize>,
    y_centered: Vec<T>,
    y_mean: T,
    gram: Vec<T>,
    rhs: Vec<T>,
}

impl<T: Real> Design<T> {
    fn new(data: &FeatureMatrix<T>) -> Result<Self> {
        if data.n_rows() < 2 {
            return Err(HhtError::Range(format!(
                "ridge needs at least 2 rows, got {}",
                data.n_rows()
            )));
        }
        let st = &data.standardization;
        let z_full: Vec<Vec<T>> = data.rows.iter().map(|r| st.apply(r)).collect();
        let active: Vec<usize> = (0..data.width())
            .filter(|&c| z_full.iter().any(|r| r[c] != T::zero()))
            .collect();
        let z: Vec<Vec<T>> = z_full
            .iter()
            .map(|r| active.iter().map(|&c| r[c]).collect())
            .collect();
        let y_mean = crate::stats::mean(&data.targets);
        let y_centered: Vec<T> = data.targets.iter().map(|&y| y - y_mean).collect();
        let p = active.len();
        let mut gram = vec![T::zero(); p * p];
        let mut rhs = vec![T::zero(); p];
        for (row, &y) in z.iter().zip(&y_centered) {
            for i in 0..p {
                rhs[i] = rhs[i] + row[i] * y;
                for j in 0..=i {
                    gram[i * p + j] = gram[i * p + j] + row[i] * row[j];
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                gram[j * p + i] = gram[i * p + j];
            }
        }
        Ok(Self {
            z,
            active,
            y_centered,
            y_mean,
            gram,
            rhs,
        })
    }

    fn p(&self) -> usize {
        self.active.len()
    }

    fn factor(&self, reg: f64) -> Result<Vec<T>> {
        let p = self.p();
        let mut a = self.gram.clone();
        let r = T::lit(reg);
        for i in 0..p {
            a[i * p + i] = a[i * p + i] + r;
        }
        cholesky(&mut a, p)?;
        Ok(a)
    }

    fn solve(&self, reg: f64) -> Result<Vec<T>> {
        let p = self.p();
        let l = self.factor(reg)?;
        let mut w = self.rhs.clone();
        cholesky_solve(&l, p, &mut w);
        Ok(w)
    }

    /// Generalized cross-validation score `n RSS / (n - df)^2`, with the
    /// intercept counted as one degree of freedom.
    fn gcv(&self, reg: f64) -> Result<f64> {
        let p = self.p();
        let n = self.z.len();
        let l = self.factor(reg)?;
        let mut w = self.rhs.clone();
        cholesky_solve(&l, p, &mut w);
        let rss: T = self
            .z
            .iter()
            .zip(&self.y_centered)
            .map(|(row, &y)| {
                let fit = row.iter().zip(&w).fold(T::zero(), |a, (&x, &b)| a + x * b);
                (y - fit) * (y - fit)
            })
            .sum();
        // trace of (G + reg I)^{-1} G, column by column
        let mut df = 1.0;
        for c in 0..p {
            let mut col: Vec<T> = (0..p).map(|r| self.gram[r * p + c]).collect();
            cholesky_solve(&l, p, &mut col);
            df += col[c].to_f64_lossy();
        }
        let dof = n as f64 - df;
        if dof <= 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(n as f64 * rss.to_f64_lossy() / (dof * dof))
    }

    fn into_model(self, w_std: Vec<T>, reg: f64, data: &FeatureMatrix<T>) -> RidgeModel<T> {
        let st = &data.standardization;
        let mut weights = vec![T::zero(); data.width()];
        let mut intercept = self.y_mean;
        for (&c, &w) in self.active.iter().zip(&w_std) {
            let orig = w / st.scales[c];
            weights[c] = orig;
            intercept = intercept - orig * st.means[c];
        }
        RidgeModel {
            weights,
            intercept,
            regularization: reg,
            standardization: st.clone(),
        }
    }
}

/// Minimizes `sum (y - w.x - b)^2 + reg |w|^2` over standardized features
/// with an unpenalized intercept. Zero-variance columns get zero weight.
pub fn fit_ridge<T: Real>(
    dataset: &FeatureMatrix<T>,
    regularization: f64,
) -> Result<RidgeModel<T>> {
    if regularization < 0.0 || !regularization.is_finite() {
        return Err(HhtError::param(
            "forecast.regularization",
            "must be finite and >= 0",
        ));
    }
    let design = Design::new(dataset)?;
    let w = design.solve(regularization)?;
    Ok(design.into_model(w, regularization, dataset))
}

/// Ridge fit with the penalty picked by generalized cross-validation.
pub fn fit_ridge_gcv<T: Real>(dataset: &FeatureMatrix<T>, grid: &[f64]) -> Result<RidgeModel<T>> {
    if grid.is_empty() {
        return Err(HhtError::param("forecast.reg_grid", "empty grid"));
    }
    if let Some(bad) = grid.iter().find(|r| **r < 0.0 || !r.is_finite()) {
        return Err(HhtError::param(
            "forecast.reg_grid",
            format!("bad penalty {bad}"),
        ));
    }
    let design = Design::new(dataset)?;
    let mut best: Option<(f64, f64)> = None;
    for &reg in grid {
        let score = match design.gcv(reg) {
            Ok(s) => s,
            Err(HhtError::Singular(_)) => continue,
            Err(e) => return Err(e),
        };
        if best.is_none_or(|(_, s)| score < s) {
            best = Some((reg, score));
        }
    }
    let (reg, _) = best.ok_or(HhtError::Singular("every grid penalty"))?;
    let w = design.solve(reg)?;
    Ok(design.into_model(w, reg, dataset))
}

/// Default GCV grid: `1e-4, 1e-3, ..., 1e2`.
pub fn default_reg_grid() -> Vec<f64> {
    (-4..=2).map(|e| 10f64.powi(e)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularization {
    Fixed(f64),
    Gcv(Vec<f64>),
}

impl Default for Regularization {
    fn default() -> Self {
        Regularization::Gcv(default_reg_grid())
    }
}

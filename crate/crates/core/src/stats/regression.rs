use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// Relative size below which a diagonal entry of R counts as zero.
const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub intercept: f64,
    /// One coefficient per feature column.
    pub coefficients: Vec<f64>,
    pub fitted: Vec<f64>,
}

impl OlsFit {
    pub fn residuals(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.fitted).map(|(a, b)| a - b).collect()
    }
}

/// Least squares with an intercept, via Householder QR of the augmented
/// design matrix. `features` holds one row per observation.
pub fn ols_fit(features: &[Vec<f64>], y: &[f64]) -> Result<OlsFit> {
    let k = y.len();
    if features.len() != k {
        return Err(Error::Stats(format!(
            "{} feature rows for {k} observations",
            features.len()
        )));
    }
    let f = features.first().map(Vec::len).unwrap_or(0);
    if features.iter().any(|r| r.len() != f) {
        return Err(Error::Stats("ragged feature matrix".into()));
    }
    if k <= f + 1 {
        return Err(Error::Stats(format!(
            "need more than {} observations for {f} features, got {k}",
            f + 1
        )));
    }
    let p = f + 1;
    let x = DMatrix::from_fn(k, p, |i, j| if j == 0 { 1.0 } else { features[i][j - 1] });
    let yv = DVector::from_column_slice(y);

    let qr = x.clone().qr();
    let r = qr.r();
    let scale = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if scale == 0.0 || (0..p).any(|i| r[(i, i)].abs() <= RANK_TOLERANCE * scale) {
        return Err(Error::Stats("feature matrix is rank deficient".into()));
    }
    let qty = qr.q().transpose() * &yv;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Stats("feature matrix is rank deficient".into()))?;
    let fitted = &x * &beta;

    Ok(OlsFit {
        intercept: beta[0],
        coefficients: beta.iter().skip(1).copied().collect(),
        fitted: fitted.iter().copied().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_linear_data_has_zero_residuals() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, ((i * i) % 5) as f64]).collect();
        let y: Vec<f64> = x.iter().map(|r| 3.0 - 2.0 * r[0] + 0.5 * r[1]).collect();
        let fit = ols_fit(&x, &y).unwrap();
        assert!(fit.residuals(&y).iter().all(|e| e.abs() < 1e-10));
        assert!((fit.intercept - 3.0).abs() < 1e-10);
        assert!((fit.coefficients[0] + 2.0).abs() < 1e-10);
        assert!((fit.coefficients[1] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn feature_equal_to_target() {
        let y = [1.0, 4.0, 2.0, 8.0, 5.0];
        let x: Vec<Vec<f64>> = y.iter().map(|&v| vec![v]).collect();
        let fit = ols_fit(&x, &y).unwrap();
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-12);
        assert!(fit.intercept.abs() < 1e-12);
    }

    #[test]
    fn rank_deficiency_and_shape_errors() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let y = [1.0, 2.0, 3.0, 5.0, 8.0, 13.0];
        assert!(ols_fit(&x, &y).is_err());
        let constant: Vec<Vec<f64>> = (0..6).map(|_| vec![4.0]).collect();
        assert!(ols_fit(&constant, &y).is_err());
        assert!(ols_fit(&x[..2], &y[..2]).is_err());
        assert!(ols_fit(&x, &y[..3]).is_err());
    }
}

//! Least-squares polynomial regression with an overall F test.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    /// Intercept first, then ascending powers of x.
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
    pub f_statistic: f64,
    pub f_p_value: f64,
    /// Model and residual degrees of freedom.
    pub df: (usize, usize),
    pub residuals: Vec<f64>,
}

impl RegressionResult {
    pub fn predict(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

/// Fits `y = b0 + b1 x (+ b2 x^2)`.
pub fn fit_ols(x: &[f64], y: &[f64], degree: usize) -> Result<RegressionResult> {
    if !(1..=2).contains(&degree) {
        return Err(Error::InvalidParameter(format!("degree {degree} not in 1..=2")));
    }
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    let p = degree + 1;
    if n < degree + 2 {
        return Err(Error::TooFewSamples { needed: degree + 2, got: n });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("x and y must be finite".into()));
    }
    let design = DMatrix::from_fn(n, p, |i, j| x[i].powi(j as i32));
    let target = DVector::from_column_slice(y);

    let qr = design.clone().qr();
    let r = qr.r();
    let scale = r.diagonal().amax();
    if scale == 0.0 || r.diagonal().iter().any(|d| d.abs() <= scale * 1e-12) {
        return Err(Error::SingularDesign);
    }
    let qty = qr.q().transpose() * &target;
    let beta = r.solve_upper_triangular(&qty).ok_or(Error::SingularDesign)?;

    let fitted = &design * &beta;
    let residuals: Vec<f64> = target.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();
    let mean_y = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean_y).powi(2)).sum();
    let sse: f64 = residuals.iter().map(|r| r * r).sum();
    let df_model = degree;
    let df_resid = n - p;
    let r_squared = if sst > 0.0 { (1.0 - sse / sst).clamp(0.0, 1.0) } else { 1.0 };
    let (f_statistic, f_p_value) = if sse <= sst * 1e-28 {
        (f64::INFINITY, 0.0)
    } else {
        let f = ((sst - sse) / df_model as f64) / (sse / df_resid as f64);
        let dist = FisherSnedecor::new(df_model as f64, df_resid as f64).expect("positive degrees of freedom");
        (f, dist.sf(f.max(0.0)))
    };
    Ok(RegressionResult {
        coefficients: beta.iter().copied().collect(),
        r_squared,
        f_statistic,
        f_p_value,
        df: (df_model, df_resid),
        residuals,
    })
}

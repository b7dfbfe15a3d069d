//! Ordinary least-squares helpers.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// `y_i - (intercept + slope x_i)`
    pub residuals: Vec<f64>,
}

/// Fits `y = intercept + slope * x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::DegenerateFit(format!("need at least 2 points, got {n}")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateFit("non-finite input".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| yi - (intercept + slope * xi))
        .collect();
    Ok(LineFit {
        slope,
        intercept,
        residuals,
    })
}

/// Number of sign runs in a residual sequence (zeros skipped).
///
/// Too few runs relative to the point count indicates a systematic trend left
/// in the residuals.
pub fn sign_runs(residuals: &[f64]) -> usize {
    let mut runs = 0;
    let mut last = 0.0f64;
    for &r in residuals {
        if r == 0.0 {
            continue;
        }
        if last == 0.0 || r.signum() != last.signum() {
            runs += 1;
        }
        last = r;
    }
    runs
}

/// Durbin-Watson statistic `sum (e_i - e_{i-1})^2 / sum e_i^2`. Values near 2
/// mean uncorrelated residuals, values near 0 a smooth trend.
pub fn durbin_watson(residuals: &[f64]) -> f64 {
    let ss: f64 = residuals.iter().map(|e| e * e).sum();
    if ss == 0.0 {
        return 2.0;
    }
    let diff: f64 = residuals.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    diff / ss
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One `(n, error, stderr)` observation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: f64,
    pub error: f64,
    pub stderr: f64,
}

impl RatePoint {
    pub fn new(n: f64, error: f64, stderr: f64) -> Self {
        Self { n, error, stderr }
    }

    /// Above the noise floor `error > 3·stderr`.
    pub fn usable(&self) -> bool {
        self.error > 0.0 && self.error > 3.0 * self.stderr && self.n > 0.0
    }
}

/// `log error ≈ intercept − exponent · log n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub exponent: f64,
    pub exponent_stderr: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Points that entered the fit.
    pub points: Vec<RatePoint>,
    /// Points dropped at the noise floor.
    pub excluded: Vec<RatePoint>,
}

impl RateFit {
    /// Predicted error at `n`.
    pub fn predict(&self, n: f64) -> f64 {
        (self.intercept - self.exponent * n.ln()).exp()
    }

    /// `|exponent − target| ≤ k · exponent_stderr`
    pub fn covers(&self, target: f64, k: f64) -> bool {
        (self.exponent - target).abs() <= k * self.exponent_stderr
    }
}

/// Weighted straight-line fit `y ≈ intercept + slope · x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// `sqrt(s² / S_xx)` from the weighted residual scatter.
    pub slope_stderr: f64,
    /// `sqrt(1 / S_xx)`, valid when the weights are inverse variances.
    pub slope_stderr_weights: f64,
    pub r_squared: f64,
}

/// Weighted least squares with weights `w` (inverse variances of `y`).
pub fn weighted_line_fit(x: &[f64], y: &[f64], w: &[f64]) -> Result<LineFit> {
    let k = x.len();
    if y.len() != k || w.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: y.len().min(w.len()),
        });
    }
    if k < 2 {
        return Err(Error::InsufficientPoints { usable: k });
    }
    if w.iter().chain(x).chain(y).any(|v| !v.is_finite()) || w.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidParameter("fit inputs must be finite with positive weights".into()));
    }
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for i in 0..k {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxx += w[i] * dx * dx;
        sxy += w[i] * dx * dy;
        syy += w[i] * dy * dy;
    }
    if !(sxx > 0.0) {
        return Err(Error::InvalidParameter("fit abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = (0..k)
        .map(|i| w[i] * (y[i] - intercept - slope * x[i]).powi(2))
        .sum();
    let s2 = if k > 2 { rss / (k - 2) as f64 } else { 0.0 };
    let r_squared = if syy > 0.0 { 1.0 - rss / syy } else { 1.0 };
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr: (s2 / sxx).sqrt(),
        slope_stderr_weights: (1.0 / sxx).sqrt(),
        r_squared,
    })
}

/// Fits `error ≈ C n^{-exponent}` by weighted least squares on logs.
///
/// Points with `error ≤ 3·stderr` sit at the noise floor and are dropped.
/// The variance of `log error` is taken as `(stderr/error)²`, floored at
/// `1e-16` so exact points fit with equal weights. The exponent's standard
/// error is the larger of the scatter-based and weight-propagated values.
pub fn fit_rate(points: &[RatePoint]) -> Result<RateFit> {
    let (used, excluded): (Vec<RatePoint>, Vec<RatePoint>) =
        points.iter().partition(|p| p.usable());
    if used.len() < 3 {
        return Err(Error::InsufficientPoints { usable: used.len() });
    }
    let x: Vec<f64> = used.iter().map(|p| p.n.ln()).collect();
    let y: Vec<f64> = used.iter().map(|p| p.error.ln()).collect();
    let w: Vec<f64> = used
        .iter()
        .map(|p| 1.0 / (p.stderr / p.error).powi(2).max(1e-16))
        .collect();
    let fit = weighted_line_fit(&x, &y, &w)?;
    Ok(RateFit {
        exponent: -fit.slope,
        exponent_stderr: fit.slope_stderr.max(fit.slope_stderr_weights),
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        points: used,
        excluded,
    })
}

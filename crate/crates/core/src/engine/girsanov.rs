use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientField;
use crate::engine::{GridScheme, IncrementTable};
use crate::error::{Error, Result};

/// `log ρ` accumulated over `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GirsanovWeight {
    pub log_weight: f64,
}

impl GirsanovWeight {
    pub fn weight(&self) -> f64 {
        self.log_weight.exp()
    }

    pub fn inverse_weight(&self) -> f64 {
        (-self.log_weight).exp()
    }
}

/// `θ = σ⁻¹b` at `x`.
fn theta(drift: &CoefficientField, sigma: &CoefficientField, x: &[f64]) -> Result<Vec<f64>> {
    let d = x.len();
    if d == 1 {
        let s = sigma.eval_1d(x[0]);
        if s == 0.0 || !s.is_finite() {
            return Err(Error::SingularDiffusion);
        }
        return Ok(vec![drift.eval_1d(x[0]) / s]);
    }
    let mut b = vec![0.0; d];
    let mut s = vec![0.0; d * d];
    drift.eval(x, &mut b);
    sigma.eval(x, &mut s);
    DMatrix::from_row_slice(d, d, &s)
        .lu()
        .solve(&DVector::from_vec(b))
        .map(|v| v.as_slice().to_vec())
        .ok_or(Error::SingularDiffusion)
}

/// `sign·Σ_k ⟨θ(X_k), ΔW_k⟩ − ½ Σ_k |θ(X_k)|² h`
fn exponent(
    path: &[Vec<f64>],
    drift: &CoefficientField,
    sigma: &CoefficientField,
    scheme: &GridScheme,
    table: &IncrementTable,
    sign: f64,
) -> Result<f64> {
    let n = scheme.n();
    if path.len() != n + 1 {
        return Err(Error::InvalidParameter(format!(
            "path has {} points, scheme needs {}",
            path.len(),
            n + 1
        )));
    }
    let ratio = table.ratio_for(n)?;
    let h = scheme.step();
    let d = table.dim();
    let mut dw = vec![0.0; d];
    let mut stoch = 0.0;
    let mut quad = 0.0;
    for (k, x) in path[..n].iter().enumerate() {
        let th = theta(drift, sigma, x)?;
        table.aggregate(k, ratio, &mut dw);
        stoch += th.iter().zip(&dw).map(|(a, b)| a * b).sum::<f64>();
        quad += th.iter().map(|a| a * a).sum::<f64>() * h;
    }
    Ok(sign * stoch - 0.5 * quad)
}

/// `ρ = exp(−Σ⟨(σ⁻¹b)(X_k), ΔW_k⟩ − ½Σ|(σ⁻¹b)(X_k)|² h)` along a drifted
/// scheme path. Under `ρ·P` the drifted scheme has the law of the driftless
/// one.
pub fn girsanov_weight(
    path: &[Vec<f64>],
    drift: &CoefficientField,
    sigma: &CoefficientField,
    scheme: &GridScheme,
    table: &IncrementTable,
) -> Result<GirsanovWeight> {
    Ok(GirsanovWeight {
        log_weight: exponent(path, drift, sigma, scheme, table, -1.0)?,
    })
}

/// Likelihood ratio of the drifted scheme against the driftless one,
/// evaluated along a driftless path:
/// `exp(Σ⟨(σ⁻¹b)(X̄_k), ΔW_k⟩ − ½Σ|(σ⁻¹b)(X̄_k)|² h)`.
///
/// This is `ρ⁻¹` transported to the driftless ensemble, so
/// `E[g(X̄) w] = E[g(Xⁿ)]`.
pub fn driftless_importance_weight(
    path: &[Vec<f64>],
    drift: &CoefficientField,
    sigma: &CoefficientField,
    scheme: &GridScheme,
    table: &IncrementTable,
) -> Result<GirsanovWeight> {
    Ok(GirsanovWeight {
        log_weight: exponent(path, drift, sigma, scheme, table, 1.0)?,
    })
}

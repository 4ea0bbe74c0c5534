//! Gaussian densities `p_M`, the heat kernel `p_t`, and sampled checks of
//! the Gaussian moment identities used by the quadrature bounds.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::stats::Welford;

/// A centred Gaussian given either by a full covariance or by a scalar
/// bandwidth `t` (covariance `t·I`).
#[derive(Clone, Debug, PartialEq)]
pub enum GaussianKernel {
    Isotropic { dim: usize, t: f64 },
    Covariance(DMatrix<f64>),
}

impl GaussianKernel {
    pub fn density(&self, x: &[f64]) -> Result<f64> {
        match self {
            GaussianKernel::Isotropic { dim, t } => {
                if x.len() != *dim {
                    return Err(Error::DimensionMismatch {
                        expected: *dim,
                        got: x.len(),
                    });
                }
                heat_kernel(*t, x)
            }
            GaussianKernel::Covariance(m) => gaussian_density(m, x),
        }
    }
}

/// `p_t(x) = (2πt)^{-d/2} exp(-|x|²/2t)` for `t > 0`.
pub fn heat_kernel(t: f64, x: &[f64]) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::DegenerateCovariance(format!("bandwidth t = {t}")));
    }
    let r2: f64 = x.iter().map(|v| v * v).sum();
    Ok((2.0 * PI * t).powf(-(x.len() as f64) / 2.0) * (-r2 / (2.0 * t)).exp())
}

/// `p_M(x) = det(2πM)^{-1/2} exp(-½ xᵀM⁻¹x)`.
pub fn gaussian_density(m: &DMatrix<f64>, x: &[f64]) -> Result<f64> {
    let d = m.nrows();
    if m.ncols() != d || x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::DegenerateCovariance("covariance is not positive definite".into()))?;
    let l = chol.l();
    let log_det: f64 = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let y = chol.solve(&DVector::from_column_slice(x));
    let quad = y.dot(&DVector::from_column_slice(x));
    Ok((-0.5 * (d as f64 * (2.0 * PI).ln() + log_det) - 0.5 * quad).exp())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedMoment {
    pub indices: (usize, usize, usize),
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    /// Sampled `E[Y_j Y_k Y_l]` for `Y ~ N(0, M)` and all `j ≤ k ≤ l`.
    pub third_moments: Vec<MixedMoment>,
    /// Sampled `E|Z|^{1+α} / δ^{(1+α)/2}` for `Z ~ N(0, δM)`.
    pub scaled_abs_moment: f64,
    pub scaled_abs_moment_stderr: f64,
    pub samples: usize,
}

/// Samples the odd mixed moments and the scaled absolute moment of a
/// centred Gaussian.
pub fn gaussian_moment_checks(
    m: &DMatrix<f64>,
    delta: f64,
    alpha: f64,
    samples: usize,
    seed: u64,
) -> Result<MomentReport> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta = {delta} must be positive")));
    }
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    let d = m.nrows();
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::DegenerateCovariance("covariance is not positive definite".into()))?;
    let l = chol.l();
    let mut triples = Vec::new();
    for j in 0..d {
        for k in j..d {
            for q in k..d {
                triples.push((j, k, q));
            }
        }
    }
    let mut acc = vec![Welford::default(); triples.len()];
    let mut abs_acc = Welford::default();
    let mut rng = stream_rng(seed, 0);
    let mut xi = DVector::zeros(d);
    let p = 1.0 + alpha;
    let scale = delta.powf(p / 2.0);
    for _ in 0..samples {
        for v in xi.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let y = &l * &xi;
        for (t, a) in triples.iter().zip(acc.iter_mut()) {
            a.push(y[t.0] * y[t.1] * y[t.2]);
        }
        // Z = √δ Y
        let z_norm = delta.sqrt() * y.norm();
        abs_acc.push(z_norm.powf(p) / scale);
    }
    Ok(MomentReport {
        third_moments: triples
            .into_iter()
            .zip(acc)
            .map(|(indices, a)| MixedMoment {
                indices,
                mean: a.mean(),
                stderr: a.stderr(),
            })
            .collect(),
        scaled_abs_moment: abs_acc.mean(),
        scaled_abs_moment_stderr: abs_acc.stderr(),
        samples,
    })
}

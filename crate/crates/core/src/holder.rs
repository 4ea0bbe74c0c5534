//! Discrete Hölder norms on uniform grids, including the negative-order norm
//! `sup_ε ε^{-α/2} ‖𝒫_ε f‖_∞` built from heat smoothing.
//!
//! Smoothing acts on periodic samples through the Fourier multiplier
//! `exp(−ω²ε/2)` of the wrapped heat kernel.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Samples on a uniform grid `x_i = x0 + i·dx`. A periodic function covers
/// one period cell of length `len·dx`.
#[derive(Clone, Debug, PartialEq)]
pub struct GriddedFunction {
    x0: f64,
    dx: f64,
    values: Vec<f64>,
    periodic: bool,
}

impl GriddedFunction {
    pub fn new(x0: f64, dx: f64, values: Vec<f64>, periodic: bool) -> Result<Self> {
        if !(dx > 0.0) || !dx.is_finite() || !x0.is_finite() {
            return Err(Error::InvalidParameter(format!("grid spacing {dx} must be positive")));
        }
        if values.len() < 3 {
            return Err(Error::InvalidParameter("grid needs at least three samples".into()));
        }
        Ok(Self {
            x0,
            dx,
            values,
            periodic,
        })
    }

    /// Samples `f` on `m` points of the period cell `[x0, x0 + period)`.
    pub fn periodic_sample(x0: f64, period: f64, m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let dx = period / m as f64;
        let values = (0..m).map(|i| f(x0 + i as f64 * dx)).collect();
        Self::new(x0, dx, values, true)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x0 + i as f64 * self.dx).collect()
    }

    pub fn sup(&self) -> f64 {
        sup_abs(&self.values)
    }

    /// Same grid, values mapped pointwise.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    /// Pointwise `self + c·other` on a shared grid.
    pub fn axpy(&self, c: f64, other: &Self) -> Result<Self> {
        if self.len() != other.len() || self.dx != other.dx {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
            ..self.clone()
        })
    }

    fn require_periodic(&self) -> Result<()> {
        if !self.periodic {
            return Err(Error::InvalidParameter(
                "heat smoothing needs a periodic sample".into(),
            ));
        }
        Ok(())
    }
}

fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

/// Forward transform of a periodic sample, reusable across bandwidths.
struct Spectrum {
    mean: f64,
    coeffs: Vec<Complex<f64>>,
    omega_sq: Vec<f64>,
    constant: bool,
}

impl Spectrum {
    fn new(f: &GriddedFunction) -> Self {
        let m = f.len();
        let first = f.values[0];
        let constant = f.values.iter().all(|&v| v == first);
        let mean = f.values.iter().sum::<f64>() / m as f64;
        let mut coeffs: Vec<Complex<f64>> =
            f.values.iter().map(|&v| Complex::new(v - mean, 0.0)).collect();
        if !constant {
            FftPlanner::new().plan_fft_forward(m).process(&mut coeffs);
        }
        let period = m as f64 * f.dx;
        let omega_sq = (0..m)
            .map(|k| {
                let kk = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
                let w = 2.0 * std::f64::consts::PI * kk / period;
                w * w
            })
            .collect();
        Self {
            mean: if constant { first } else { mean },
            coeffs,
            omega_sq,
            constant,
        }
    }

    /// Applies the multiplier `mult(ω²)` to the mean-free part and returns
    /// the real samples; the mean is scaled by `mult(0)`.
    fn apply(&self, mult: impl Fn(f64) -> f64) -> Vec<f64> {
        let m = self.coeffs.len();
        let mean = self.mean * mult(0.0);
        if self.constant {
            return vec![mean; m];
        }
        let mut buf: Vec<Complex<f64>> = self
            .coeffs
            .iter()
            .zip(&self.omega_sq)
            .map(|(c, &w2)| c * mult(w2))
            .collect();
        FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
        let scale = 1.0 / m as f64;
        buf.iter().map(|c| c.re * scale + mean).collect()
    }
}

/// Circular convolution with the heat kernel of variance `eps`.
pub fn heat_smooth(f: &GriddedFunction, eps: f64) -> Result<GriddedFunction> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("bandwidth {eps} must be positive")));
    }
    f.require_periodic()?;
    let spec = Spectrum::new(f);
    Ok(GriddedFunction {
        values: spec.apply(|w2| (-0.5 * w2 * eps).exp()),
        ..f.clone()
    })
}

/// `count` geometric points from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![hi];
    }
    let r = (hi / lo).ln() / (count - 1) as f64;
    (0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                lo * (r * i as f64).exp()
            }
        })
        .collect()
}

/// 61 geometric bandwidths spanning `[10⁻⁶, 1]`.
pub fn default_eps_grid() -> Vec<f64> {
    geometric_grid(1e-6, 1.0, 61)
}

/// `(ε, ‖𝒫_ε f‖_∞)` for every bandwidth in `eps_grid`.
pub fn smoothing_profile(f: &GriddedFunction, eps_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    f.require_periodic()?;
    if eps_grid.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidParameter("bandwidths must be positive".into()));
    }
    let spec = Spectrum::new(f);
    Ok(eps_grid
        .iter()
        .map(|&eps| (eps, sup_abs(&spec.apply(|w2| (-0.5 * w2 * eps).exp()))))
        .collect())
}

/// `max_ε ε^{-α/2} ‖𝒫_ε f‖_∞` over `eps_grid`, for `α < 0`. A lower bound
/// for the supremum over `(0, 1]`.
pub fn negative_holder_norm(f: &GriddedFunction, alpha: f64, eps_grid: &[f64]) -> Result<f64> {
    if !(alpha < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "negative Hölder norm needs α < 0, got {alpha}"
        )));
    }
    Ok(smoothing_profile(f, eps_grid)?
        .into_iter()
        .map(|(eps, s)| eps.powf(-alpha / 2.0) * s)
        .fold(0.0, f64::max))
}

/// Centred first and second differences; one-sided rows are dropped when
/// the sample is not periodic.
fn differences(f: &GriddedFunction, order: u32) -> Vec<f64> {
    let v = &f.values;
    let m = v.len();
    let h = f.dx;
    let at = |i: isize| v[i.rem_euclid(m as isize) as usize];
    let range: Box<dyn Iterator<Item = usize>> = if f.periodic {
        Box::new(0..m)
    } else {
        Box::new(1..m - 1)
    };
    range
        .map(|i| {
            let i = i as isize;
            match order {
                1 => (at(i + 1) - at(i - 1)) / (2.0 * h),
                _ => (at(i + 1) - 2.0 * at(i) + at(i - 1)) / (h * h),
            }
        })
        .collect()
}

/// Largest `|v_i − v_j| / dist(i,j)^α` over all pairs of grid points.
fn holder_quotient(v: &[f64], dx: f64, alpha: f64, periodic: bool) -> f64 {
    let m = v.len();
    let mut best = 0.0f64;
    for i in 0..m {
        for j in i + 1..m {
            let mut k = j - i;
            if periodic {
                k = k.min(m - k);
            }
            let q = (v[i] - v[j]).abs() / (k as f64 * dx).powf(alpha);
            best = best.max(q);
        }
    }
    best
}

/// Discrete `C^{order + alpha_frac}` norm: sup norms of the function and its
/// differences up to `order`, plus the grid Hölder quotient of the highest
/// one when `alpha_frac` is given.
pub fn discrete_c_norms(f: &GriddedFunction, order: u32, alpha_frac: Option<f64>) -> Result<f64> {
    if order > 2 {
        return Err(Error::InvalidParameter(format!(
            "discrete norms support order ≤ 2, got {order}"
        )));
    }
    if let Some(a) = alpha_frac {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "fractional exponent {a} must lie in (0, 1)"
            )));
        }
    }
    let mut total = f.sup();
    let mut top = f.values.clone();
    for l in 1..=order {
        top = differences(f, l);
        total += sup_abs(&top);
    }
    if let Some(a) = alpha_frac {
        total += holder_quotient(&top, f.dx, a, f.periodic);
    }
    Ok(total)
}

/// `g̃ = 𝒫_{σ²δ} f − f`, the mean one-step change of `f` under additive
/// noise of variance `σ²δ`.
pub fn noise_increment(f: &GriddedFunction, sigma: f64, delta: f64) -> Result<GriddedFunction> {
    if !(delta > 0.0) || !sigma.is_finite() || sigma == 0.0 {
        return Err(Error::InvalidParameter(
            "noise increment needs δ > 0 and σ ≠ 0".into(),
        ));
    }
    f.require_periodic()?;
    let spec = Spectrum::new(f);
    let var = sigma * sigma * delta;
    Ok(GriddedFunction {
        values: spec.apply(|w2| (-0.5 * w2 * var).exp_m1()),
        ..f.clone()
    })
}

/// `(ε, ‖𝒫_ε g̃‖_∞)` with `g̃ = 𝒫_{σ²δ} f − f`.
pub fn smoothing_gain_profile(
    f: &GriddedFunction,
    sigma: f64,
    delta: f64,
    eps_grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    smoothing_profile(&noise_increment(f, sigma, delta)?, eps_grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::WeierstrassSeries;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn cosine(omega: f64, m: usize) -> GriddedFunction {
        GriddedFunction::periodic_sample(0.0, 2.0 * PI, m, |x| (omega * x).cos()).unwrap()
    }

    #[test]
    fn constants_are_fixed_exactly() {
        let f = GriddedFunction::new(0.0, 0.1, vec![0.3; 64], true).unwrap();
        for eps in [1e-6, 0.01, 1.0] {
            assert_eq!(heat_smooth(&f, eps).unwrap().values(), f.values());
        }
        assert!(heat_smooth(&f, 0.0).is_err());
        assert!(heat_smooth(&f, -1.0).is_err());
        assert_eq!(discrete_c_norms(&f, 0, None).unwrap(), 0.3);
        assert_eq!(discrete_c_norms(&f, 1, None).unwrap(), 0.3);
        assert_eq!(discrete_c_norms(&f, 2, Some(0.5)).unwrap(), 0.3);
    }

    #[test]
    fn cosine_multiplier() {
        for omega in [1.0, 3.0, 7.0] {
            let f = cosine(omega, 256);
            for eps in [1e-3, 0.1, 0.5] {
                let g = heat_smooth(&f, eps).unwrap();
                let k = (-omega * omega * eps / 2.0).exp();
                for (x, v) in f.grid().iter().zip(g.values()) {
                    assert!((v - k * (omega * x).cos()).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn approximate_identity() {
        let f = GriddedFunction::periodic_sample(0.0, 2.0 * PI, 1024, |x| x.sin().abs()).unwrap();
        let gap = |eps| {
            let g = heat_smooth(&f, eps).unwrap();
            f.axpy(-1.0, &g).unwrap().sup()
        };
        assert!(gap(1e-6) < gap(1e-4));
        assert!(gap(1e-6) < 2e-3);
    }

    #[test]
    fn negative_norm_of_constant() {
        let f = GriddedFunction::new(0.0, 0.1, vec![1.0; 32], true).unwrap();
        let n = negative_holder_norm(&f, -0.5, &default_eps_grid()).unwrap();
        assert!((n - 1.0).abs() < 1e-15);
        assert!(negative_holder_norm(&f, 0.5, &default_eps_grid()).is_err());
    }

    #[test]
    fn negative_norm_of_cosine() {
        let grid = geometric_grid(1e-6, 1.0, 2001);
        for omega in [1.0, 4.0, 16.0] {
            let n = negative_holder_norm(&cosine(omega, 512), -1.0, &grid).unwrap();
            let exact = (1.0 / (omega * omega * std::f64::consts::E)).sqrt();
            assert!(n <= exact * (1.0 + 1e-12));
            assert!(n > exact * 0.999, "{n} vs {exact}");
            // the coarse grid is a lower bound within the grid ratio
            let coarse = negative_holder_norm(&cosine(omega, 512), -1.0, &default_eps_grid()).unwrap();
            assert!(coarse <= n * (1.0 + 1e-12) && coarse > 0.97 * exact);
        }
    }

    #[test]
    fn sine_c1_norm() {
        let f = GriddedFunction::periodic_sample(0.0, 2.0 * PI, 4096, f64::sin).unwrap();
        let c0 = discrete_c_norms(&f, 0, None).unwrap();
        let c1 = discrete_c_norms(&f, 1, None).unwrap();
        assert!((c1 - 2.0).abs() < 1e-5);
        assert!(c0 <= c1);
        let c2 = discrete_c_norms(&f, 2, None).unwrap();
        assert!((c2 - 3.0).abs() < 1e-5);
        assert!(discrete_c_norms(&f, 3, None).is_err());
    }

    #[test]
    fn fractional_quotient_of_square_root() {
        let f = GriddedFunction::periodic_sample(0.0, 2.0 * PI, 512, |x| x.sin().abs().sqrt()).unwrap();
        let half = discrete_c_norms(&f, 0, Some(0.5)).unwrap() - 1.0;
        assert!(half > 0.9 && half <= 1.0 + 1e-9, "{half}");
        assert!(discrete_c_norms(&f, 0, Some(0.75)).unwrap() > 1.0 + half);
    }

    #[test]
    fn gain_envelope_for_weierstrass_drift() {
        // ‖𝒫_ε g̃‖ ≲ min(δ^{α/2}, ε^{-1/2} δ^{(1+α)/2})
        let alpha = 0.5;
        let w = WeierstrassSeries::new(1.0, alpha, 2, 12, &[]).unwrap();
        let f = GriddedFunction::periodic_sample(0.0, 2.0 * PI, 1 << 15, |x| w.value(x)).unwrap();
        let eps_grid = default_eps_grid();
        let mut ratios = Vec::new();
        let mut logs = Vec::new();
        for j in 4..=14 {
            let delta = 2f64.powi(-j);
            let prof = smoothing_gain_profile(&f, 1.0, delta, &eps_grid).unwrap();
            for &(eps, s) in &prof {
                let env = delta.powf(alpha / 2.0).min(eps.powf(-0.5) * delta.powf((1.0 + alpha) / 2.0));
                ratios.push(s / env);
            }
            let neg = prof.iter().map(|(e, s)| e.sqrt() * s).fold(0.0, f64::max);
            logs.push((delta.ln(), neg.ln()));
        }
        let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(max_ratio < 10.0, "{max_ratio}");
        let n = logs.len() as f64;
        let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
        let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
        let slope = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / logs.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!((slope - 0.75).abs() < 0.1, "{slope}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn norms_are_homogeneous_and_subadditive(
            a in proptest::collection::vec(-1.0f64..1.0, 64),
            b in proptest::collection::vec(-1.0f64..1.0, 64),
            c in -3.0f64..3.0,
        ) {
            let f = GriddedFunction::new(0.0, 0.1, a, true).unwrap();
            let g = GriddedFunction::new(0.0, 0.1, b, true).unwrap();
            let grid = geometric_grid(1e-4, 1.0, 21);
            let cf = f.map(|v| c * v);
            let sum = f.axpy(1.0, &g).unwrap();
            let tol = 1e-9;
            for order in 0..=2 {
                for frac in [None, Some(0.5)] {
                    let nf = discrete_c_norms(&f, order, frac).unwrap();
                    let ng = discrete_c_norms(&g, order, frac).unwrap();
                    let ncf = discrete_c_norms(&cf, order, frac).unwrap();
                    prop_assert!((ncf - c.abs() * nf).abs() <= tol * (1.0 + nf));
                    prop_assert!(discrete_c_norms(&sum, order, frac).unwrap() <= nf + ng + tol * (1.0 + nf + ng));
                }
            }
            let nf = negative_holder_norm(&f, -0.5, &grid).unwrap();
            let ng = negative_holder_norm(&g, -0.5, &grid).unwrap();
            let ncf = negative_holder_norm(&cf, -0.5, &grid).unwrap();
            prop_assert!((ncf - c.abs() * nf).abs() <= tol * (1.0 + nf));
            prop_assert!(negative_holder_norm(&sum, -0.5, &grid).unwrap() <= nf + ng + tol * (1.0 + nf + ng));
        }
    }
}

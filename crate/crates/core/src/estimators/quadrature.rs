use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{em_step_1d, GridScheme, IncrementTable};
use crate::error::{Error, Result};
use crate::parallel::map_batches;
use crate::pde::{Field, PdeSolution};
use crate::problem::SdeProblem;
use crate::rng::{derive_seed, stream_rng};
use crate::stats::{CIEstimate, Welford};

const BOOTSTRAP_TAG: u64 = 0x4C50_4E4F;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureOptions {
    /// Sub-steps per scheme step for the composite trapezoid rule.
    pub sub_steps: usize,
    /// Bootstrap resamples for the `L_p` standard error.
    pub resamples: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            sub_steps: 16,
            resamples: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureEstimate {
    pub n: usize,
    pub estimate: CIEstimate,
    /// Paths dropped because they left the PDE grid.
    pub excluded: u64,
    pub exclusion_fraction: f64,
}

/// `∫₀¹ (c(X_r) − c(X_κ)) φ(r, X_r) dr` along one scheme path, with
/// `φ` read from the PDE solution, by the trapezoid rule on `m` sub-steps
/// per scheme step. The endpoint of each step uses the full scheme step, so
/// `X_{k+1}` matches [`crate::engine::simulate_em`] bit for bit. `None` if
/// the path leaves the grid.
fn path_integral(
    problem: &SdeProblem,
    pde: &PdeSolution,
    field: Field,
    coeff: &impl Fn(f64) -> f64,
    n: usize,
    m: usize,
    table: &IncrementTable,
) -> Option<f64> {
    let h = 1.0 / n as f64;
    let sub = h / m as f64;
    let fine = (n * m) as f64;
    let inc = table.increments();
    let mut x = problem.start()[0];
    let mut total = 0.0;
    for k in 0..n {
        let b = problem.drift().eval_1d(x);
        let s = problem.diffusion().eval_1d(x);
        let ck = coeff(x);
        let mut dw = 0.0;
        let mut acc = 0.0;
        let mut xr = x;
        for j in 1..=m {
            dw += inc[k * m + j - 1];
            xr = if j == m {
                em_step_1d(x, b, s, h, dw)
            } else {
                em_step_1d(x, b, s, j as f64 * sub, dw)
            };
            let r = (k * m + j) as f64 / fine;
            let phi = pde.try_eval(field, r, xr)?;
            let w = if j == m { 0.5 } else { 1.0 };
            acc += w * (coeff(xr) - ck) * phi;
        }
        total += acc * sub;
        x = xr;
    }
    Some(total)
}

/// Per-path integrals in path order, and the number of excluded paths.
#[allow(clippy::too_many_arguments)]
fn collect_integrals(
    problem: &SdeProblem,
    pde: &PdeSolution,
    field: Field,
    coeff: impl Fn(f64) -> f64 + Sync,
    n: usize,
    m: usize,
    paths: u64,
    master_seed: u64,
) -> Result<(Vec<f64>, u64)> {
    if problem.dim() != 1 {
        return Err(Error::InvalidParameter(
            "quadrature functionals need the one-dimensional PDE solution".into(),
        ));
    }
    if m < 8 {
        return Err(Error::InvalidParameter(format!(
            "sub-step resolution {m} is below 8"
        )));
    }
    if n == 0 || paths == 0 {
        return Err(Error::InvalidParameter("need n ≥ 1 and at least one path".into()));
    }
    GridScheme::new(n)?;
    let batches = map_batches(paths, |range| -> Result<(Vec<f64>, u64)> {
        let mut vals = Vec::with_capacity((range.end - range.start) as usize);
        let mut excluded = 0;
        let mut table = IncrementTable::generate(master_seed, range.start, n * m, 1)?;
        for path in range {
            table.regenerate(master_seed, path);
            match path_integral(problem, pde, field, &coeff, n, m, &table) {
                Some(v) if v.is_finite() => vals.push(v),
                Some(_) => return Err(Error::NonFinite { path, step: n }),
                None => excluded += 1,
            }
        }
        Ok((vals, excluded))
    });
    let mut vals = Vec::with_capacity(paths as usize);
    let mut excluded = 0;
    for b in batches {
        let (v, e) = b?;
        vals.extend(v);
        excluded += e;
    }
    if excluded * 1000 >= paths {
        return Err(Error::ExcessiveExclusion { excluded, paths });
    }
    Ok((vals, excluded))
}

/// Bootstrap standard error of `(mean v)^{1/p}`.
fn bootstrap_lp(values: &[f64], p: f64, resamples: usize, seed: u64) -> f64 {
    let m = values.len();
    if m == 0 || resamples < 2 {
        return 0.0;
    }
    let draws: Vec<f64> = (0..resamples as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r);
            let mut s = 0.0;
            for _ in 0..m {
                s += values[rng.random_range(0..m)];
            }
            (s / m as f64).powf(1.0 / p)
        })
        .collect();
    let mut acc = Welford::default();
    draws.iter().for_each(|&d| acc.push(d));
    acc.variance().sqrt()
}

/// `‖∫₀¹ (b_i(X_r) − b_i(X_{κ_n(r)})) ∂ₓu(r, X_r) dr‖_{L_p}` with a
/// bootstrap standard error.
#[allow(clippy::too_many_arguments)]
pub fn drift_quadrature(
    problem: &SdeProblem,
    pde: &PdeSolution,
    n: usize,
    coordinate: usize,
    p: f64,
    paths: u64,
    master_seed: u64,
    options: QuadratureOptions,
) -> Result<QuadratureEstimate> {
    if coordinate >= problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            got: coordinate + 1,
        });
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("moment order {p} is below 1")));
    }
    let drift = problem.drift();
    let (vals, excluded) = collect_integrals(
        problem,
        pde,
        Field::Du,
        |x| drift.eval_1d(x),
        n,
        options.sub_steps,
        paths,
        master_seed,
    )?;
    let moments: Vec<f64> = vals.iter().map(|v| v.abs().powf(p)).collect();
    let mean = moments.iter().sum::<f64>() / moments.len().max(1) as f64;
    let stderr = bootstrap_lp(
        &moments,
        p,
        options.resamples,
        derive_seed(master_seed, BOOTSTRAP_TAG),
    );
    Ok(QuadratureEstimate {
        n,
        estimate: CIEstimate {
            mean: mean.powf(1.0 / p),
            stderr,
            paths: moments.len() as u64,
        },
        excluded,
        exclusion_fraction: excluded as f64 / paths as f64,
    })
}

/// `|E ∫₀¹ (h(X_r) − h(X_{κ_n(r)})) ∂ₓₓu(r, X_r) dr|` with
/// `h = (σσᵀ)_{ij}`.
pub fn diffusion_quadrature(
    problem: &SdeProblem,
    pde: &PdeSolution,
    n: usize,
    coordinates: (usize, usize),
    paths: u64,
    master_seed: u64,
    sub_steps: usize,
) -> Result<QuadratureEstimate> {
    let d = problem.dim();
    if coordinates.0 >= d || coordinates.1 >= d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: coordinates.0.max(coordinates.1) + 1,
        });
    }
    let sigma = problem.diffusion();
    let (vals, excluded) = collect_integrals(
        problem,
        pde,
        Field::D2u,
        |x| sigma.eval_1d(x).powi(2),
        n,
        sub_steps,
        paths,
        master_seed,
    )?;
    let mut acc = Welford::default();
    vals.iter().for_each(|&v| acc.push(v));
    let est = acc.estimate();
    Ok(QuadratureEstimate {
        n,
        estimate: CIEstimate {
            mean: est.mean.abs(),
            ..est
        },
        excluded,
        exclusion_fraction: excluded as f64 / paths as f64,
    })
}

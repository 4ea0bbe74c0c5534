use serde::{Deserialize, Serialize};

use crate::engine::{
    driftless_importance_weight, girsanov_weight, march_driftless, simulate_em_path, GridScheme,
    IncrementTable,
};
use crate::error::{Error, Result};
use crate::parallel::map_batches;
use crate::problem::SdeProblem;
use crate::rng::derive_seed;
use crate::stats::{CIEstimate, Welford};

/// Monte Carlo checks of the discrete change of measure between the
/// drifted and the driftless scheme.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GirsanovReport {
    pub n: usize,
    /// `E ρ` over drifted paths; equals 1.
    pub mean_rho: CIEstimate,
    /// `E g(Xⁿ)` on drifted paths.
    pub drifted: CIEstimate,
    /// `E[g(X̄ⁿ) w]` on driftless paths with the inverse weight.
    pub reweighted: CIEstimate,
    /// `E g(X̄ⁿ)` on driftless paths.
    pub driftless: CIEstimate,
    /// `E[g(Xⁿ) ρ]` on drifted paths.
    pub rho_weighted: CIEstimate,
}

impl GirsanovReport {
    /// `|reweighted − drifted|` and `|rho_weighted − driftless|` in units of
    /// their joint standard errors.
    pub fn discrepancies(&self) -> (f64, f64) {
        let z = |a: &CIEstimate, b: &CIEstimate| {
            let joint = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
            (a.mean - b.mean).abs() / joint
        };
        (
            z(&self.reweighted, &self.drifted),
            z(&self.rho_weighted, &self.driftless),
        )
    }
}

fn payoff(problem: &SdeProblem, x: &[f64]) -> f64 {
    if x.len() == 1 {
        problem.terminal().eval_1d(x[0])
    } else {
        problem.terminal().scalar(x)
    }
}

/// Drifted and driftless ensembles use independent seeds, so their joint
/// standard error is the root sum of squares.
pub fn girsanov_check(problem: &SdeProblem, n: usize, paths: u64, master_seed: u64) -> Result<GirsanovReport> {
    if paths < 2 {
        return Err(Error::InvalidParameter("need at least two paths".into()));
    }
    let d = problem.dim();
    let scheme = GridScheme::new(n)?;
    let seed_a = derive_seed(master_seed, 1);
    let seed_b = derive_seed(master_seed, 2);

    let drifted = map_batches(paths, |range| -> Result<[Welford; 3]> {
        let mut acc = [Welford::default(), Welford::default(), Welford::default()];
        let mut table = IncrementTable::generate(seed_a, range.start, n, d)?;
        for path in range {
            table.regenerate(seed_a, path);
            let xs = simulate_em_path(problem, &scheme, &table)?;
            let rho = girsanov_weight(&xs, problem.drift(), problem.diffusion(), &scheme, &table)?.weight();
            let g = payoff(problem, &xs[n]);
            acc[0].push(rho);
            acc[1].push(g);
            acc[2].push(g * rho);
        }
        Ok(acc)
    });
    let driftless = map_batches(paths, |range| -> Result<[Welford; 2]> {
        let mut acc = [Welford::default(), Welford::default()];
        let mut table = IncrementTable::generate(seed_b, range.start, n, d)?;
        let mut xs: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        for path in range {
            table.regenerate(seed_b, path);
            xs.clear();
            march_driftless(problem.diffusion(), problem.start(), &scheme, &table, |_, x| {
                xs.push(x.to_vec())
            })?;
            let w = driftless_importance_weight(&xs, problem.drift(), problem.diffusion(), &scheme, &table)?
                .weight();
            let g = payoff(problem, &xs[n]);
            acc[0].push(g);
            acc[1].push(g * w);
        }
        Ok(acc)
    });

    let mut a = [Welford::default(), Welford::default(), Welford::default()];
    for b in drifted {
        for (t, s) in a.iter_mut().zip(b?.iter()) {
            t.merge(s);
        }
    }
    let mut b = [Welford::default(), Welford::default()];
    for batch in driftless {
        for (t, s) in b.iter_mut().zip(batch?.iter()) {
            t.merge(s);
        }
    }
    Ok(GirsanovReport {
        n,
        mean_rho: a[0].estimate(),
        drifted: a[1].estimate(),
        rho_weighted: a[2].estimate(),
        driftless: b[0].estimate(),
        reweighted: b[1].estimate(),
    })
}

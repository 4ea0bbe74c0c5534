use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{simulate_em, GridScheme, IncrementTable};
use crate::error::{Error, Result};
use crate::parallel::map_batches;
use crate::problem::SdeProblem;
use crate::rng::{derive_seed, stream_rng};
use crate::stats::{CIEstimate, Welford};

const BOOTSTRAP_TAG: u64 = 0x5741_5353;

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    if !s.is_sorted() {
        s.sort_by(f64::total_cmp);
    }
    s
}

/// Empirical `W₁` between two samples of equal size: the mean absolute gap
/// between matched order statistics. Unsorted inputs are sorted first.
pub fn wasserstein_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::InvalidParameter("empty samples".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("samples contain NaN".into()));
    }
    let (a, b) = (sorted(a), sorted(b));
    let total: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
    Ok(total / a.len() as f64)
}

/// `W₁` with a paired bootstrap standard error: each resample draws path
/// indices and keeps both coordinates of a pair together.
pub fn wasserstein_bootstrap(a: &[f64], b: &[f64], resamples: usize, seed: u64) -> Result<CIEstimate> {
    let point = wasserstein_1d(a, b)?;
    let m = a.len();
    let boot_seed = derive_seed(seed, BOOTSTRAP_TAG);
    let draws: Vec<f64> = (0..resamples as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(boot_seed, r);
            let mut ra = Vec::with_capacity(m);
            let mut rb = Vec::with_capacity(m);
            for _ in 0..m {
                let i = rng.random_range(0..m);
                ra.push(a[i]);
                rb.push(b[i]);
            }
            ra.sort_by(f64::total_cmp);
            rb.sort_by(f64::total_cmp);
            ra.iter().zip(&rb).map(|(x, y)| (x - y).abs()).sum::<f64>() / m as f64
        })
        .collect();
    let mut acc = Welford::default();
    draws.iter().for_each(|&d| acc.push(d));
    Ok(CIEstimate {
        mean: point,
        stderr: acc.variance().sqrt(),
        paths: m as u64,
    })
}

/// Terminal values of the schemes at every `n` and at `fine_n`, all driven
/// by one increment table per path.
#[derive(Clone, Debug)]
pub struct CoupledEnsembles {
    pub fine: Vec<f64>,
    pub coarse: Vec<Vec<f64>>,
}

pub fn coupled_terminal_ensembles(
    problem: &SdeProblem,
    ns: &[usize],
    fine_n: usize,
    paths: u64,
    master_seed: u64,
) -> Result<CoupledEnsembles> {
    if problem.dim() != 1 {
        return Err(Error::InvalidParameter("W₁ ensembles are one-dimensional".into()));
    }
    for &n in ns {
        if n == 0 || !fine_n.is_multiple_of(n) {
            return Err(Error::NotADivisor { fine: fine_n, coarse: n });
        }
    }
    let fine = GridScheme::new(fine_n)?;
    let schemes = ns.iter().map(|&n| GridScheme::new(n)).collect::<Result<Vec<_>>>()?;
    let batches = map_batches(paths, |range| -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let len = (range.end - range.start) as usize;
        let mut f = Vec::with_capacity(len);
        let mut c = vec![Vec::with_capacity(len); schemes.len()];
        let mut table = IncrementTable::generate(master_seed, range.start, fine_n, 1)?;
        for path in range {
            table.regenerate(master_seed, path);
            f.push(simulate_em(problem, &fine, &table)?[0]);
            for (out, s) in c.iter_mut().zip(&schemes) {
                out.push(simulate_em(problem, s, &table)?[0]);
            }
        }
        Ok((f, c))
    });
    let mut out = CoupledEnsembles {
        fine: Vec::with_capacity(paths as usize),
        coarse: vec![Vec::with_capacity(paths as usize); ns.len()],
    };
    for b in batches {
        let (f, c) = b?;
        out.fine.extend(f);
        for (o, v) in out.coarse.iter_mut().zip(c) {
            o.extend(v);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WassersteinPoint {
    pub n: usize,
    pub estimate: CIEstimate,
    /// `E|X₁ⁿ − X₁^N|` over the coupled pairs; an upper bound for the
    /// distributional `W₁` between the two schemes.
    pub coupling_bound: f64,
}

/// `W₁(law X₁ⁿ, law X₁^N)` for every `n` on coupled ensembles.
pub fn wasserstein_sweep(
    problem: &SdeProblem,
    ns: &[usize],
    fine_n: usize,
    paths: u64,
    master_seed: u64,
    resamples: usize,
) -> Result<Vec<WassersteinPoint>> {
    let ens = coupled_terminal_ensembles(problem, ns, fine_n, paths, master_seed)?;
    ns.iter()
        .zip(&ens.coarse)
        .enumerate()
        .map(|(i, (&n, xs))| {
            let estimate =
                wasserstein_bootstrap(xs, &ens.fine, resamples, derive_seed(master_seed, i as u64))?;
            let coupling_bound =
                xs.iter().zip(&ens.fine).map(|(a, b)| (a - b).abs()).sum::<f64>() / xs.len() as f64;
            Ok(WassersteinPoint {
                n,
                estimate,
                coupling_bound,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{CoefficientField, Profile};
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn identical_and_shifted_samples() {
        let mut rng = stream_rng(1, 0);
        let a: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert_eq!(wasserstein_1d(&a, &a).unwrap(), 0.0);
        let b: Vec<f64> = a.iter().map(|x| x + 0.25).collect();
        assert!((wasserstein_1d(&a, &b).unwrap() - 0.25).abs() < 1e-12);
        assert!(wasserstein_1d(&a, &b[..10]).is_err());
    }

    #[test]
    fn gaussian_shift_benchmark() {
        let mut ra = stream_rng(11, 0);
        let mut rb = stream_rng(11, 1);
        let a: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut ra)).collect();
        let b: Vec<f64> = (0..100_000)
            .map(|_| 0.5 + Distribution::<f64>::sample(&StandardNormal, &mut rb))
            .collect();
        let est = wasserstein_bootstrap(&a, &b, 50, 3).unwrap();
        assert!((est.mean - 0.5).abs() < 0.02);
        assert!(est.stderr > 0.0 && est.stderr < 0.01);
    }

    #[test]
    fn constant_drift_shift_is_deterministic() {
        let mk = |c: f64| {
            SdeProblem::new(
                CoefficientField::componentwise(1, Profile::Constant(c)).unwrap(),
                CoefficientField::constant_diffusion(1, 1.0).unwrap(),
                vec![0.0],
                CoefficientField::summed(1, Profile::Linear(1.0)).unwrap(),
            )
            .unwrap()
        };
        let a = coupled_terminal_ensembles(&mk(0.7), &[8], 8, 3000, 5).unwrap();
        let b = coupled_terminal_ensembles(&mk(0.0), &[8], 8, 3000, 5).unwrap();
        assert!((wasserstein_1d(&a.fine, &b.fine).unwrap() - 0.7).abs() < 1e-10);
        let sweep = wasserstein_sweep(&mk(0.7), &[4, 8], 8, 2000, 5, 20).unwrap();
        assert!(sweep[1].estimate.mean == 0.0 && sweep[1].coupling_bound == 0.0);
        // constant drift: every scheme is exact in law
        assert!(sweep[0].estimate.mean < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn metric_axioms(
            a in proptest::collection::vec(-5.0f64..5.0, 20),
            b in proptest::collection::vec(-5.0f64..5.0, 20),
            c in proptest::collection::vec(-5.0f64..5.0, 20),
            shift in -3.0f64..3.0,
        ) {
            let ab = wasserstein_1d(&a, &b).unwrap();
            prop_assert_eq!(ab, wasserstein_1d(&b, &a).unwrap());
            prop_assert!(ab >= 0.0);
            let ac = wasserstein_1d(&a, &c).unwrap();
            let bc = wasserstein_1d(&b, &c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-12);
            let sa: Vec<f64> = a.iter().map(|x| x + shift).collect();
            let sb: Vec<f64> = b.iter().map(|x| x + shift).collect();
            prop_assert!((wasserstein_1d(&sa, &sb).unwrap() - ab).abs() < 1e-9);
            let mut perm = a.clone();
            perm.reverse();
            prop_assert_eq!(wasserstein_1d(&a, &perm).unwrap(), 0.0);
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::coefficients::{CoefficientField, Profile, TrigTerm};
use crate::engine::{march_driftless, GridScheme, IncrementTable};
use crate::error::{Error, Result};
use crate::parallel::map_batches;
use crate::rng::derive_seed;
use crate::stats::{CIEstimate, Welford};

/// `E G'(X̄_t)` at one grid time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbePoint {
    pub t: f64,
    pub estimate: CIEstimate,
}

/// `E G'(X̄_tⁿ)` at every grid time `t = 1/n, …, 1` of the driftless scheme
/// started at `start`.
pub fn smoothing_probe(
    sigma: &CoefficientField,
    g: &Profile,
    start: f64,
    n: usize,
    paths: u64,
    master_seed: u64,
) -> Result<Vec<ProbePoint>> {
    if sigma.dim() != 1 {
        return Err(Error::InvalidParameter("the probe is one-dimensional".into()));
    }
    if g.derivative(start).is_none() {
        return Err(Error::InvalidParameter("test function has no derivative".into()));
    }
    let scheme = GridScheme::new(n)?;
    let batches = map_batches(paths, |range| -> Result<Vec<Welford>> {
        let mut accs = vec![Welford::default(); n];
        let mut table = IncrementTable::generate(master_seed, range.start, n, 1)?;
        for path in range {
            table.regenerate(master_seed, path);
            march_driftless(sigma, &[start], &scheme, &table, |k, x| {
                if k > 0 {
                    accs[k - 1].push(g.derivative(x[0]).unwrap_or(0.0));
                }
            })?;
        }
        Ok(accs)
    });
    let mut total = vec![Welford::default(); n];
    for b in batches {
        for (t, a) in total.iter_mut().zip(b?) {
            t.merge(&a);
        }
    }
    Ok(total
        .iter()
        .enumerate()
        .map(|(k, acc)| ProbePoint {
            t: scheme.time(k + 1),
            estimate: acc.estimate(),
        })
        .collect())
}

/// `max_y |E G'(X̄_t)|` at one grid time with the maximising start point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupProbePoint {
    pub t: f64,
    pub value: f64,
    pub stderr: f64,
    pub argmax: f64,
}

/// Runs the probe from each start point and keeps the largest magnitude
/// per time. Start points use independent seeds.
pub fn smoothing_sup_profile(
    sigma: &CoefficientField,
    g: &Profile,
    starts: &[f64],
    n: usize,
    paths: u64,
    master_seed: u64,
) -> Result<Vec<SupProbePoint>> {
    let mut best: Vec<Option<SupProbePoint>> = vec![None; n];
    for (i, &y) in starts.iter().enumerate() {
        let probe = smoothing_probe(sigma, g, y, n, paths, derive_seed(master_seed, i as u64))?;
        for (slot, p) in best.iter_mut().zip(probe) {
            let v = p.estimate.mean.abs();
            if slot.is_none_or(|b| v > b.value) {
                *slot = Some(SupProbePoint {
                    t: p.t,
                    value: v,
                    stderr: p.estimate.stderr,
                    argmax: y,
                });
            }
        }
    }
    best.into_iter()
        .map(|b| b.ok_or_else(|| Error::InvalidParameter("no start points given".into())))
        .collect()
}

/// `G(x) = Σ_j c cos(2^j x + φ_j)` over `j ∈ [lo, hi]` with equal
/// amplitudes `c = 1/(hi − lo + 1)`, so `‖G‖_{C⁰} ≤ 1`.
pub fn lacunary_test_function(lo: i32, hi: i32, phases: &[f64]) -> Result<Profile> {
    if hi < lo {
        return Err(Error::InvalidParameter("empty frequency band".into()));
    }
    let count = (hi - lo + 1) as usize;
    let c = 1.0 / count as f64;
    Ok(Profile::Trig(
        (lo..=hi)
            .enumerate()
            .map(|(i, j)| TrigTerm {
                amplitude: c,
                frequency: 2f64.powi(j),
                phase: phases.get(i).copied().unwrap_or(0.0),
            })
            .collect(),
    ))
}

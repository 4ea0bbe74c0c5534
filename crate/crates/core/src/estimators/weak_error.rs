use serde::{Deserialize, Serialize};

use crate::engine::{march_em, simulate_em, GridScheme, IncrementTable};
use crate::error::{Error, Result};
use crate::parallel::map_batches;
use crate::pde::{Field, PdeSolution};
use crate::problem::SdeProblem;
use crate::rng::derive_seed;
use crate::stats::{CIEstimate, Welford};

/// A reference value for `E g(X₁)` with its own error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceValue {
    pub value: f64,
    pub error_estimate: f64,
}

impl ReferenceValue {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            error_estimate: 0.0,
        }
    }
}

/// How the schemes at different `n` share randomness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Coupling {
    /// Fresh increments for every `n`.
    Independent,
    /// One increment table per path at resolution `fine_n`, aggregated for
    /// every `n`.
    Shared { fine_n: usize },
}

/// Weak-error estimate at one resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakErrorPoint {
    pub n: usize,
    /// Signed estimate of `E g(X₁ⁿ) − E g(X₁)`.
    pub estimate: CIEstimate,
    pub warning: Option<String>,
}

/// A sweep of weak errors over several resolutions.
///
/// In shared mode each path contributes, for every `n`,
/// `[g(Xⁿ) − g(X^N)] + [g(X^N) − M^N − ref]` where
/// `M^N = Σ_k ∂ₓu(t_k, X_k^N) σ(X_k^N) ΔW_k` is a mean-zero martingale
/// built from the PDE solution (`0` where the grid does not reach). With no
/// reference value the second bracket is dropped and the fine scheme
/// itself is the reference.
#[derive(Clone, Copy)]
pub struct WeakErrorStudy<'a> {
    pub problem: &'a SdeProblem,
    pub ns: &'a [usize],
    pub paths: u64,
    pub master_seed: u64,
    pub coupling: Coupling,
    pub reference: Option<ReferenceValue>,
    pub control: Option<&'a PdeSolution>,
}

fn payoff(problem: &SdeProblem, x: &[f64]) -> f64 {
    if x.len() == 1 {
        problem.terminal().eval_1d(x[0])
    } else {
        problem.terminal().scalar(x)
    }
}

impl WeakErrorStudy<'_> {
    fn validate(&self) -> Result<()> {
        if self.ns.is_empty() || self.ns.contains(&0) {
            return Err(Error::InvalidParameter("need at least one positive n".into()));
        }
        if self.paths < 1000 {
            return Err(Error::InvalidParameter(format!(
                "weak-error estimates need at least 1000 paths, got {}",
                self.paths
            )));
        }
        match self.coupling {
            Coupling::Independent if self.reference.is_none() => Err(Error::InvalidParameter(
                "independent sampling needs a reference value".into(),
            )),
            Coupling::Shared { fine_n } => {
                for &n in self.ns {
                    if fine_n % n != 0 {
                        return Err(Error::NotADivisor { fine: fine_n, coarse: n });
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn run(&self) -> Result<Vec<WeakErrorPoint>> {
        self.validate()?;
        let accs = match self.coupling {
            Coupling::Independent => self.run_independent()?,
            Coupling::Shared { fine_n } => self.run_shared(fine_n)?,
        };
        Ok(self
            .ns
            .iter()
            .zip(accs)
            .map(|(&n, acc)| {
                let estimate = acc.estimate();
                let warning = self.reference.and_then(|r| {
                    (r.error_estimate > 3.0 * estimate.stderr).then(|| {
                        format!(
                            "reference error estimate {:.3e} exceeds the Monte Carlo radius {:.3e}",
                            r.error_estimate,
                            3.0 * estimate.stderr
                        )
                    })
                });
                WeakErrorPoint {
                    n,
                    estimate,
                    warning,
                }
            })
            .collect())
    }

    fn run_independent(&self) -> Result<Vec<Welford>> {
        let reference = self.reference.map_or(0.0, |r| r.value);
        let d = self.problem.dim();
        self.ns
            .iter()
            .map(|&n| {
                let seed = derive_seed(self.master_seed, n as u64);
                let scheme = GridScheme::new(n)?;
                let batches = map_batches(self.paths, |range| -> Result<Welford> {
                    let mut acc = Welford::default();
                    let mut table = IncrementTable::generate(seed, range.start, n, d)?;
                    for path in range {
                        table.regenerate(seed, path);
                        let x = simulate_em(self.problem, &scheme, &table)?;
                        acc.push(payoff(self.problem, &x) - reference);
                    }
                    Ok(acc)
                });
                merge(batches)
            })
            .collect()
    }

    fn run_shared(&self, fine_n: usize) -> Result<Vec<Welford>> {
        let d = self.problem.dim();
        let fine = GridScheme::new(fine_n)?;
        let schemes = self
            .ns
            .iter()
            .map(|&n| GridScheme::new(n))
            .collect::<Result<Vec<_>>>()?;
        let control = if d == 1 { self.control } else { None };
        let sigma = self.problem.diffusion();
        let batches = map_batches(self.paths, |range| -> Result<Vec<Welford>> {
            let mut accs = vec![Welford::default(); schemes.len()];
            let mut table = IncrementTable::generate(self.master_seed, range.start, fine_n, d)?;
            for path in range {
                table.regenerate(self.master_seed, path);
                let mut martingale = 0.0;
                let xf = march_em(self.problem, &fine, &table, |k, x| {
                    if let (Some(pde), true) = (control, k < fine_n) {
                        let t = fine.time(k);
                        if let Some(ux) = pde.try_eval(Field::Du, t, x[0]) {
                            martingale += ux * sigma.eval_1d(x[0]) * table.aggregate_1d(k, 1);
                        }
                    }
                })?;
                let gf = payoff(self.problem, &xf);
                let base = match self.reference {
                    Some(r) => gf - martingale - r.value,
                    None => 0.0,
                };
                for (acc, scheme) in accs.iter_mut().zip(&schemes) {
                    let y = if scheme.n() == fine_n {
                        base
                    } else {
                        let x = simulate_em(self.problem, scheme, &table)?;
                        payoff(self.problem, &x) - gf + base
                    };
                    acc.push(y);
                }
            }
            Ok(accs)
        });
        let mut total = vec![Welford::default(); schemes.len()];
        for batch in batches {
            for (t, b) in total.iter_mut().zip(batch?) {
                t.merge(&b);
            }
        }
        Ok(total)
    }
}

fn merge(batches: Vec<Result<Welford>>) -> Result<Welford> {
    let mut total = Welford::default();
    for b in batches {
        total.merge(&b?);
    }
    Ok(total)
}

/// Signed weak error `E g(X₁ⁿ) − reference` at one resolution. With
/// `coupled` the increments are drawn on the grid of `n` itself and no
/// control variate is used.
pub fn weak_error(
    problem: &SdeProblem,
    n: usize,
    reference: f64,
    paths: u64,
    master_seed: u64,
    coupled: bool,
) -> Result<CIEstimate> {
    let ns = [n];
    let study = WeakErrorStudy {
        problem,
        ns: &ns,
        paths,
        master_seed,
        coupling: if coupled {
            Coupling::Shared { fine_n: n }
        } else {
            Coupling::Independent
        },
        reference: Some(ReferenceValue::exact(reference)),
        control: None,
    };
    Ok(study.run()?.remove(0).estimate)
}

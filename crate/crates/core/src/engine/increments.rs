use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Brownian increments of one path on a grid of `fine_n` steps.
///
/// Row `k` holds the `d` coordinates of `W_{(k+1)/fine_n} − W_{k/fine_n}`.
/// The table is a pure function of `(master_seed, seed, fine_n, d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct IncrementTable {
    fine_n: usize,
    dim: usize,
    increments: Vec<f64>,
    master_seed: u64,
    seed: u64,
}

impl IncrementTable {
    /// Draws the increments of path `seed` under `master_seed`.
    pub fn generate(master_seed: u64, seed: u64, fine_n: usize, dim: usize) -> Result<Self> {
        if fine_n == 0 || dim == 0 {
            return Err(Error::InvalidParameter(
                "increment table needs positive resolution and dimension".into(),
            ));
        }
        let mut t = Self {
            fine_n,
            dim,
            increments: vec![0.0; fine_n * dim],
            master_seed,
            seed,
        };
        t.regenerate(master_seed, seed);
        Ok(t)
    }

    /// Refills the table in place for another path.
    pub fn regenerate(&mut self, master_seed: u64, seed: u64) {
        let mut rng = stream_rng(master_seed, seed);
        let scale = (1.0 / self.fine_n as f64).sqrt();
        for v in self.increments.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v = scale * z;
        }
        self.master_seed = master_seed;
        self.seed = seed;
    }

    /// Wraps explicit increments (row-major, `fine_n × dim`).
    pub fn from_increments(fine_n: usize, dim: usize, increments: Vec<f64>) -> Result<Self> {
        if fine_n == 0 || dim == 0 || increments.len() != fine_n * dim {
            return Err(Error::InvalidParameter(format!(
                "expected {} increments for {fine_n} steps in dimension {dim}",
                fine_n * dim
            )));
        }
        Ok(Self {
            fine_n,
            dim,
            increments,
            master_seed: 0,
            seed: 0,
        })
    }

    pub fn fine_n(&self) -> usize {
        self.fine_n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.increments[j * self.dim..(j + 1) * self.dim]
    }

    /// Ratio `fine_n / n`, or an error if `n` does not divide `fine_n`.
    pub fn ratio_for(&self, n: usize) -> Result<usize> {
        if n == 0 || !self.fine_n.is_multiple_of(n) {
            return Err(Error::NotADivisor {
                fine: self.fine_n,
                coarse: n,
            });
        }
        Ok(self.fine_n / n)
    }

    /// Sum of fine rows `[from, to)` in coordinate `i`, accumulated left to
    /// right from zero. Every consumer aggregates through this so coarse
    /// steps are bit-identical across call sites.
    #[inline]
    pub fn partial_sum(&self, from: usize, to: usize, i: usize) -> f64 {
        let mut s = 0.0;
        let mut idx = from * self.dim + i;
        for _ in from..to {
            s += self.increments[idx];
            idx += self.dim;
        }
        s
    }

    /// Increment of coarse step `k` when each coarse step spans `ratio` rows.
    #[inline]
    pub fn aggregate(&self, k: usize, ratio: usize, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.partial_sum(k * ratio, (k + 1) * ratio, i);
        }
    }

    #[inline]
    pub fn aggregate_1d(&self, k: usize, ratio: usize) -> f64 {
        self.partial_sum(k * ratio, (k + 1) * ratio, 0)
    }

    /// Same Brownian path sampled on `coarse_n` steps.
    pub fn coarsen(&self, coarse_n: usize) -> Result<IncrementTable> {
        let ratio = self.ratio_for(coarse_n)?;
        let mut increments = vec![0.0; coarse_n * self.dim];
        for (k, row) in increments.chunks_mut(self.dim).enumerate() {
            self.aggregate(k, ratio, row);
        }
        Ok(Self {
            fine_n: coarse_n,
            dim: self.dim,
            increments,
            master_seed: self.master_seed,
            seed: self.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::Welford;

    #[test]
    fn coarsen_identity_and_pairs() {
        let t = IncrementTable::from_increments(4, 1, vec![0.1, -0.2, 0.4, 0.05]).unwrap();
        assert_eq!(t.coarsen(4).unwrap(), t);
        let c = t.coarsen(2).unwrap();
        assert_eq!(c.increments(), &[0.1 + -0.2, 0.4 + 0.05]);
        assert!(matches!(t.coarsen(3), Err(Error::NotADivisor { .. })));
    }

    #[test]
    fn regeneration_is_bit_exact() {
        let a = IncrementTable::generate(11, 5, 64, 2).unwrap();
        let b = IncrementTable::generate(11, 5, 64, 2).unwrap();
        assert_eq!(a, b);
        let c = IncrementTable::generate(11, 6, 64, 2).unwrap();
        assert_ne!(a.increments(), c.increments());
    }

    #[test]
    fn coarse_variance_matches_step() {
        let mut fine_var = Welford::default();
        let mut coarse_var = Welford::default();
        let mut t = IncrementTable::generate(3, 0, 16, 1).unwrap();
        for path in 0..12_500u64 {
            t.regenerate(3, path);
            t.increments().iter().for_each(|v| fine_var.push(*v));
            t.coarsen(2).unwrap().increments().iter().for_each(|v| coarse_var.push(*v));
        }
        // 2·10⁵ fine draws, 2.5·10⁴ coarse draws; variance stderr ≈ var·√(2/N)
        let f = fine_var.variance();
        assert!((f - 1.0 / 16.0).abs() < 4.0 * (1.0 / 16.0) * (2.0 / 2e5f64).sqrt());
        let c = coarse_var.variance();
        assert!((c - 0.5).abs() < 4.0 * 0.5 * (2.0 / 2.5e4f64).sqrt());
        assert!(fine_var.mean().abs() < 4.0 * fine_var.stderr());
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform time grid with `n` steps on `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridScheme {
    n: usize,
}

impl GridScheme {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("step count must be positive".into()));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn step(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// `κ_n(t) = ⌊nt⌋/n`
    pub fn kappa(&self, t: f64) -> f64 {
        (self.n as f64 * t).floor() / self.n as f64
    }

    /// Index of the grid step containing `t`.
    pub fn step_index(&self, t: f64) -> usize {
        (self.n as f64 * t).floor() as usize
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 / self.n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn projection_brackets_time(n in 1usize..5000, frac in 0.0f64..1.0) {
            let g = GridScheme::new(n).unwrap();
            let k = g.kappa(frac);
            prop_assert!(k <= frac);
            prop_assert!(frac < k + g.step() + 1e-15);
        }

        #[test]
        fn projection_on_fine_grid(n_pow in 0u32..10, ratio_pow in 0u32..6, j in 0usize..1_000_000) {
            let n = 1usize << n_pow;
            let fine = n << ratio_pow;
            let j = j % fine;
            let t = j as f64 / fine as f64;
            let g = GridScheme::new(n).unwrap();
            let k = g.kappa(t);
            prop_assert!(k <= t);
            prop_assert!(n as f64 * (t - k) < 1.0);
        }
    }

    #[test]
    fn rejects_zero_steps() {
        assert!(GridScheme::new(0).is_err());
    }
}

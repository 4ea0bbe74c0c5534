//! Brownian increments, the Euler–Maruyama scheme and its driftless
//! variant, sub-step interpolation and Girsanov weights.

mod em;
mod girsanov;
mod grid;
mod increments;

pub use em::{
    em_step_1d, simulate_driftless, simulate_em, simulate_em_path, sub_step_position, PathState,
};
pub(crate) use em::{march_driftless, march_em};
pub use girsanov::{driftless_importance_weight, girsanov_weight, GirsanovWeight};
pub use grid::GridScheme;
pub use increments::IncrementTable;

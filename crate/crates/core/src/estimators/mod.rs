//! Monte Carlo estimators: weak error, Wasserstein distance, quadrature
//! functionals along scheme paths, the smoothing probe, change-of-measure
//! checks, and log-log rate fitting.

mod change_of_measure;
mod quadrature;
mod rate;
mod smoothing;
mod wasserstein;
mod weak_error;

pub use crate::stats::CIEstimate;
pub use change_of_measure::{girsanov_check, GirsanovReport};
pub use quadrature::{diffusion_quadrature, drift_quadrature, QuadratureEstimate, QuadratureOptions};
pub use rate::{fit_rate, weighted_line_fit, LineFit, RateFit, RatePoint};
pub use smoothing::{
    lacunary_test_function, smoothing_probe, smoothing_sup_profile, ProbePoint, SupProbePoint,
};
pub use wasserstein::{
    coupled_terminal_ensembles, wasserstein_1d, wasserstein_bootstrap, wasserstein_sweep,
    CoupledEnsembles, WassersteinPoint,
};
pub use weak_error::{weak_error, Coupling, ReferenceValue, WeakErrorPoint, WeakErrorStudy};

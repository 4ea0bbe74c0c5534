//! Experiment configuration: one TOML file per study.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use weak_euler::coefficients::{
    make_elliptic_diffusion, make_weierstrass_drift, CoefficientField, Modulation, Profile, WeierstrassSeries,
};
use weak_euler::estimators::lacunary_test_function;
use weak_euler::pde::{Boundary, PdeGrid};
use weak_euler::SdeProblem;

use crate::error::CliError;

fn one() -> f64 {
    1.0
}

fn default_base() -> u32 {
    2
}

fn default_levels() -> u32 {
    12
}

fn default_dim() -> usize {
    1
}

/// A one-dimensional building block, selected by `family`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileSpec {
    Zero,
    Constant {
        value: f64,
    },
    Linear {
        slope: f64,
    },
    Sine {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    Cosine {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    SqrtAbsSine,
    Weierstrass {
        alpha: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "default_base")]
        base: u32,
        #[serde(default = "default_levels")]
        levels: u32,
        #[serde(default)]
        phases: Vec<f64>,
    },
    /// Equal-amplitude cosines at frequencies `2^lo, …, 2^hi`, normalised
    /// to sup norm 1.
    Lacunary {
        lo: i32,
        hi: i32,
        #[serde(default)]
        phases: Vec<f64>,
    },
}

impl ProfileSpec {
    pub fn build(&self) -> weak_euler::Result<Profile> {
        Ok(match self {
            ProfileSpec::Zero => Profile::Zero,
            ProfileSpec::Constant { value } => Profile::Constant(*value),
            ProfileSpec::Linear { slope } => Profile::Linear(*slope),
            ProfileSpec::Sine {
                amplitude,
                frequency,
                phase,
            } => Profile::Sine {
                amplitude: *amplitude,
                frequency: *frequency,
                phase: *phase,
            },
            ProfileSpec::Cosine {
                amplitude,
                frequency,
                phase,
            } => Profile::Cosine {
                amplitude: *amplitude,
                frequency: *frequency,
                phase: *phase,
            },
            ProfileSpec::SqrtAbsSine => Profile::SqrtAbsSine,
            ProfileSpec::Weierstrass {
                alpha,
                amplitude,
                base,
                levels,
                phases,
            } => Profile::Weierstrass(WeierstrassSeries::new(*amplitude, *alpha, *base, *levels, phases)?),
            ProfileSpec::Lacunary { lo, hi, phases } => lacunary_test_function(*lo, *hi, phases)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DiffusionSpec {
    /// `σ ≡ value·I`
    Constant { value: f64 },
    /// `σ(x) = mu·I + eps·diag(S(x_i))`
    Elliptic {
        mu: f64,
        eps: f64,
        modulation: ProfileSpec,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub x0: Vec<f64>,
    /// Applied to every coordinate.
    pub drift: ProfileSpec,
    pub diffusion: DiffusionSpec,
    /// `g(x) = Σ_i φ(x_i)`
    pub terminal: ProfileSpec,
}

impl ProblemSpec {
    pub fn build(&self) -> weak_euler::Result<SdeProblem> {
        let drift = match &self.drift {
            ProfileSpec::Weierstrass {
                alpha,
                amplitude,
                base,
                levels,
                phases,
            } => make_weierstrass_drift(self.dim, *alpha, *amplitude, *base, *levels, phases)?,
            other => CoefficientField::componentwise(self.dim, other.build()?)?,
        };
        let terminal = CoefficientField::summed(self.dim, self.terminal.build()?)?;
        match &self.diffusion {
            DiffusionSpec::Constant { value } => SdeProblem::new(
                drift,
                CoefficientField::constant_diffusion(self.dim, *value)?,
                self.x0.clone(),
                terminal,
            ),
            DiffusionSpec::Elliptic { mu, eps, modulation } => {
                let (sigma, cert) =
                    make_elliptic_diffusion(self.dim, *mu, *eps, Modulation::Diagonal(modulation.build()?))?;
                Ok(SdeProblem::new(drift, sigma, self.x0.clone(), terminal)?.with_ellipticity(cert))
            }
        }
    }
}

fn default_target() -> f64 {
    1e-5
}

fn default_refinements() -> usize {
    2
}

fn yes() -> bool {
    true
}

/// Where the value of `E g(X₁)` comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReferencePolicy {
    /// Richardson-extrapolated Feynman–Kac solve on the `[pde]` grid,
    /// refined until two resolutions agree within `target`.
    Pde {
        #[serde(default = "default_target")]
        target: f64,
        #[serde(default = "default_refinements")]
        max_refinements: usize,
        /// Subtract the PDE martingale from every fine path.
        #[serde(default = "yes")]
        control_variate: bool,
    },
    /// The scheme at `fine_n` steps on the shared increments.
    FineEm,
    /// A known closed form.
    Exact { value: f64 },
}

fn default_m_x() -> usize {
    20_001
}

fn default_m_t() -> usize {
    100
}

fn default_geometric_levels() -> u32 {
    10
}

fn default_stride() -> usize {
    1
}

fn default_boundary() -> Boundary {
    Boundary::Neumann
}

/// Grid for the backward Kolmogorov solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeSpec {
    #[serde(default = "default_m_x")]
    pub m_x: usize,
    #[serde(default = "default_m_t")]
    pub m_t: usize,
    /// Half-width of the domain around `x₀`; derived from the coefficient
    /// bounds when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default = "default_geometric_levels")]
    pub geometric_levels: u32,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
    /// Stored spatial window; the full grid when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    #[serde(default = "default_stride")]
    pub x_stride: usize,
    #[serde(default = "default_stride")]
    pub t_stride: usize,
}

impl Default for PdeSpec {
    fn default() -> Self {
        Self {
            m_x: default_m_x(),
            m_t: default_m_t(),
            radius: None,
            geometric_levels: default_geometric_levels(),
            boundary: default_boundary(),
            window: None,
            x_stride: 1,
            t_stride: 1,
        }
    }
}

impl PdeSpec {
    pub fn grid(&self, problem: &SdeProblem) -> weak_euler::Result<PdeGrid> {
        let mut grid = match self.radius {
            Some(r) => {
                let x0 = problem.start()[0];
                PdeGrid::new(x0 - r, x0 + r, self.m_x, self.m_t)
            }
            None => PdeGrid::around(problem, self.m_x, self.m_t)?,
        };
        grid = grid
            .with_geometric_levels(self.geometric_levels)
            .with_boundary(self.boundary)
            .with_strides(self.x_stride, self.t_stride);
        if let Some([lo, hi]) = self.window {
            grid = grid.with_window(lo, hi);
        }
        Ok(grid)
    }
}

fn default_resamples() -> usize {
    200
}

fn default_quadrature_resamples() -> usize {
    1000
}

fn default_sub_steps() -> usize {
    16
}

fn default_p() -> f64 {
    2.0
}

fn default_probe_steps() -> usize {
    64
}

fn default_start_count() -> usize {
    16
}

fn default_gamma() -> u32 {
    1
}

fn default_tau_min() -> f64 {
    1e-3
}

fn default_tau_max() -> f64 {
    0.1
}

fn default_probe_function() -> ProfileSpec {
    ProfileSpec::Lacunary {
        lo: -1,
        hi: 5,
        phases: Vec::new(),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingMode {
    #[default]
    Shared,
    Independent,
}

/// Which estimator a study runs, with its own knobs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EstimatorSpec {
    WeakError {
        #[serde(default)]
        coupling: CouplingMode,
    },
    Wasserstein {
        #[serde(default = "default_resamples")]
        resamples: usize,
    },
    DriftQuadrature {
        #[serde(default)]
        coordinate: usize,
        #[serde(default = "default_p")]
        p: f64,
        #[serde(default = "default_sub_steps")]
        sub_steps: usize,
        #[serde(default = "default_quadrature_resamples")]
        resamples: usize,
    },
    DiffusionQuadrature {
        #[serde(default)]
        i: usize,
        #[serde(default)]
        j: usize,
        #[serde(default = "default_sub_steps")]
        sub_steps: usize,
    },
    SmoothingProbe {
        #[serde(default = "default_probe_function")]
        test_function: ProfileSpec,
        #[serde(default = "default_probe_steps")]
        steps: usize,
        /// Start points; `start_count` points spread over one period of
        /// `2π` when empty.
        #[serde(default)]
        starts: Vec<f64>,
        #[serde(default = "default_start_count")]
        start_count: usize,
    },
    Schauder {
        #[serde(default = "default_gamma")]
        gamma: u32,
        /// Regularity of `g`; read from its certificate when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<f64>,
        #[serde(default = "default_tau_min")]
        tau_min: f64,
        #[serde(default = "default_tau_max")]
        tau_max: f64,
    },
}

impl EstimatorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorSpec::WeakError { .. } => "weak-error",
            EstimatorSpec::Wasserstein { .. } => "wasserstein",
            EstimatorSpec::DriftQuadrature { .. } => "drift-quadrature",
            EstimatorSpec::DiffusionQuadrature { .. } => "diffusion-quadrature",
            EstimatorSpec::SmoothingProbe { .. } => "smoothing-probe",
            EstimatorSpec::Schauder { .. } => "schauder",
        }
    }
}

/// Pass/fail conditions on the fitted quantity. Every present condition
/// must hold.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    /// `|fit − target| ≤ tolerance`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// `|fit − target| ≤ band_sigmas · stderr`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band_sigmas: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

/// One experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub master_seed: u64,
    pub paths: u64,
    /// Scheme resolutions, strictly increasing powers of two.
    #[serde(default)]
    pub ns: Vec<usize>,
    /// Resolution of the shared increment table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fine_n: Option<usize>,
    pub output_dir: PathBuf,
    pub problem: ProblemSpec,
    pub reference: ReferencePolicy,
    pub estimator: EstimatorSpec,
    #[serde(default)]
    pub pde: PdeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<CheckSpec>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.paths == 0 {
            return bad("paths must be positive".into());
        }
        if self.problem.x0.len() != self.problem.dim {
            return bad(format!(
                "x0 has {} coordinates but dim is {}",
                self.problem.x0.len(),
                self.problem.dim
            ));
        }
        for w in self.ns.windows(2) {
            if w[1] <= w[0] {
                return bad(format!("ns must be strictly increasing, got {} then {}", w[0], w[1]));
            }
        }
        if let Some(&n) = self.ns.iter().find(|n| !n.is_power_of_two()) {
            return bad(format!("n = {n} is not a power of two"));
        }
        if let Some(fine) = self.fine_n {
            if let Some(&n) = self.ns.iter().find(|&&n| fine % n != 0) {
                return bad(format!("fine_n = {fine} is not divisible by n = {n}"));
            }
        }
        if let Some([lo, hi]) = self.pde.window {
            if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
                return bad(format!("pde window [{lo}, {hi}] is empty"));
            }
        }
        Ok(())
    }

    /// Copy with the seed replaced.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    /// SHA-256 of the canonical JSON encoding, with the output directory
    /// blanked so relocated runs hash alike.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&canonical).unwrap_or_default();
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn fine_n_or(&self, default: usize) -> usize {
        self.fine_n.unwrap_or(default)
    }

    pub fn max_n(&self) -> Option<usize> {
        self.ns.last().copied()
    }
}

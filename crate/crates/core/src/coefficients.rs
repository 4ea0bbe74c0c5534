//! Drift, diffusion and terminal functions with recorded regularity.
//!
//! Every field is built from one-dimensional profiles laid out across the
//! coordinates of `R^d`:
//!
//! * vector fields (drifts) apply a profile componentwise, `b_i(x) = φ(x_i)`;
//! * scalar fields (terminal functionals) sum a profile over coordinates,
//!   `g(x) = Σ_i φ(x_i)`;
//! * matrix fields (diffusions) are `σ(x) = μ·I + ε·S(x)` for a bounded
//!   modulation `S`.
//!
//! Closures can be wrapped for ad-hoc fields; their regularity is whatever
//! the caller declares.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hölder exponent together with analytic bounds on the sup norm and the
/// Hölder seminorm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityTag {
    pub alpha: f64,
    pub sup_bound: f64,
    pub holder_seminorm_bound: f64,
}

impl RegularityTag {
    pub fn new(alpha: f64, sup_bound: f64, holder_seminorm_bound: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Hölder exponent {alpha} outside (0, 1]"
            )));
        }
        if !(sup_bound >= 0.0) || !(holder_seminorm_bound >= 0.0) {
            return Err(Error::InvalidParameter(
                "regularity bounds must be nonnegative".into(),
            ));
        }
        Ok(Self {
            alpha,
            sup_bound,
            holder_seminorm_bound,
        })
    }
}

/// Sup bounds on a C² field and its first two derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct C2Bounds {
    pub sup: f64,
    pub first: f64,
    pub second: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Certificate {
    Holder(RegularityTag),
    C2(C2Bounds),
    /// Test-only fields such as the linear drift of the Ornstein–Uhlenbeck
    /// oracle, which are not bounded.
    Uncertified,
}

/// Lower bound `λ` on the eigenvalues of `σσᵀ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticityCert {
    pub lambda: f64,
}

impl EllipticityCert {
    /// Smallest eigenvalue of `σ(x)σ(x)ᵀ` over the sampled points.
    pub fn sampled_min_eigenvalue(sigma: &CoefficientField, points: &[Vec<f64>]) -> f64 {
        let d = sigma.dim();
        let mut buf = vec![0.0; d * d];
        let mut min = f64::INFINITY;
        for x in points {
            sigma.eval(x, &mut buf);
            let s = DMatrix::from_row_slice(d, d, &buf);
            let a = &s * s.transpose();
            let eig = a.symmetric_eigenvalues();
            min = min.min(eig.min());
        }
        min
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldShape {
    Scalar,
    Vector,
    Matrix,
}

/// Truncated lacunary series `A Σ_{k=0}^{L} B^{-αk} cos(B^k x + φ_k)`.
///
/// Evaluation walks the powers `e^{i B^k x}` by repeated complex
/// exponentiation, so a full series costs one `sin_cos` plus a few
/// multiplications per level.
#[derive(Clone, Debug, PartialEq)]
pub struct WeierstrassSeries {
    amplitude: f64,
    alpha: f64,
    base: u32,
    levels: u32,
    phases: Vec<f64>,
    weights: Vec<f64>,
    rotations: Vec<(f64, f64)>,
}

impl WeierstrassSeries {
    pub fn new(amplitude: f64, alpha: f64, base: u32, levels: u32, phases: &[f64]) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Weierstrass exponent {alpha} outside (0, 1)"
            )));
        }
        if !amplitude.is_finite() || amplitude < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "amplitude {amplitude} must be finite and nonnegative"
            )));
        }
        if base < 2 {
            return Err(Error::InvalidParameter("base must be at least 2".into()));
        }
        if levels < 1 {
            return Err(Error::InvalidParameter("levels must be at least 1".into()));
        }
        // Frequencies must stay exactly representable.
        match (base as u64).checked_pow(levels) {
            Some(top) if top <= (1u64 << 53) => {}
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "base^levels = {base}^{levels} overflows"
                )))
            }
        }
        let count = levels as usize + 1;
        let phases = if phases.is_empty() {
            vec![0.0; count]
        } else if phases.len() == count {
            phases.to_vec()
        } else {
            return Err(Error::InvalidParameter(format!(
                "expected {count} phases, got {}",
                phases.len()
            )));
        };
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter("phases must be finite".into()));
        }
        let weights = (0..count)
            .map(|k| amplitude * (base as f64).powf(-alpha * k as f64))
            .collect();
        let rotations = phases.iter().map(|p| (p.cos(), p.sin())).collect();
        Ok(Self {
            amplitude,
            alpha,
            base,
            levels,
            phases,
            weights,
            rotations,
        })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn frequency(&self, k: usize) -> f64 {
        (self.base as f64).powi(k as i32)
    }

    /// Coefficient of level `k`, `A B^{-αk}`.
    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }

    pub fn sup_bound(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Analytic bound on the α-Hölder seminorm.
    ///
    /// Two bounds are available and the smaller one is returned: the
    /// level-by-level estimate `|cos a − cos b| ≤ 2^{1−α}|a−b|^α`, which grows
    /// with the number of levels, and the uniform split at `B^k|x−y| = 1`
    /// which gives `A (1/(1−B^{α−1}) + 2/(1−B^{−α}))`.
    pub fn holder_seminorm_bound(&self) -> f64 {
        let b = self.base as f64;
        let a = self.alpha;
        let per_level = self.amplitude * (self.levels as f64 + 1.0) * 2f64.powf(1.0 - a);
        let uniform = self.amplitude * (1.0 / (1.0 - b.powf(a - 1.0)) + 2.0 / (1.0 - b.powf(-a)));
        per_level.min(uniform)
    }

    /// Sup of the derivative, `A Σ B^{(1−α)k}`.
    pub fn lipschitz_bound(&self) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(k, w)| w * self.frequency(k))
            .sum()
    }

    #[inline]
    fn power(&self, z: (f64, f64)) -> (f64, f64) {
        if self.base == 2 {
            (z.0 * z.0 - z.1 * z.1, 2.0 * z.0 * z.1)
        } else {
            let mut acc = z;
            for _ in 1..self.base {
                acc = (acc.0 * z.0 - acc.1 * z.1, acc.0 * z.1 + acc.1 * z.0);
            }
            acc
        }
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        let (s, c) = x.sin_cos();
        let mut z = (c, s);
        let last = self.weights.len() - 1;
        let mut sum = 0.0;
        for (k, (w, r)) in self.weights.iter().zip(&self.rotations).enumerate() {
            sum += w * (z.0 * r.0 - z.1 * r.1);
            if k < last {
                z = self.power(z);
            }
        }
        sum
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        let (s, c) = x.sin_cos();
        let mut z = (c, s);
        let last = self.weights.len() - 1;
        let mut sum = 0.0;
        let mut freq = 1.0;
        for (k, (w, r)) in self.weights.iter().zip(&self.rotations).enumerate() {
            sum -= w * freq * (z.0 * r.1 + z.1 * r.0);
            if k < last {
                z = self.power(z);
                freq *= self.base as f64;
            }
        }
        sum
    }
}

/// One term `a cos(ω x + φ)` of a trigonometric series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// One-dimensional building block of every field.
#[derive(Clone)]
pub enum Profile {
    Zero,
    Constant(f64),
    /// `slope · x`; unbounded, only for closed-form oracles.
    Linear(f64),
    /// `a sin(ω x + φ)`
    Sine { amplitude: f64, frequency: f64, phase: f64 },
    /// `a cos(ω x + φ)`
    Cosine { amplitude: f64, frequency: f64, phase: f64 },
    /// `|sin x|^{1/2}`, a 1/2-Hölder terminal function with cusps at `kπ`.
    SqrtAbsSine,
    Weierstrass(WeierstrassSeries),
    Trig(Vec<TrigTerm>),
    Custom {
        value: ScalarFn,
        derivative: Option<ScalarFn>,
        regularity: Certificate,
    },
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Zero => write!(f, "Zero"),
            Profile::Constant(c) => write!(f, "Constant({c})"),
            Profile::Linear(s) => write!(f, "Linear({s})"),
            Profile::Sine {
                amplitude,
                frequency,
                phase,
            } => write!(f, "Sine({amplitude}, {frequency}, {phase})"),
            Profile::Cosine {
                amplitude,
                frequency,
                phase,
            } => write!(f, "Cosine({amplitude}, {frequency}, {phase})"),
            Profile::SqrtAbsSine => write!(f, "SqrtAbsSine"),
            Profile::Weierstrass(w) => write!(f, "{w:?}"),
            Profile::Trig(t) => write!(f, "Trig({t:?})"),
            Profile::Custom { regularity, .. } => write!(f, "Custom({regularity:?})"),
        }
    }
}

impl Profile {
    pub fn sine(amplitude: f64) -> Self {
        Profile::Sine {
            amplitude,
            frequency: 1.0,
            phase: 0.0,
        }
    }

    pub fn cosine(amplitude: f64) -> Self {
        Profile::Cosine {
            amplitude,
            frequency: 1.0,
            phase: 0.0,
        }
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Constant(c) => *c,
            Profile::Linear(s) => s * x,
            Profile::Sine {
                amplitude,
                frequency,
                phase,
            } => amplitude * (frequency * x + phase).sin(),
            Profile::Cosine {
                amplitude,
                frequency,
                phase,
            } => amplitude * (frequency * x + phase).cos(),
            Profile::SqrtAbsSine => x.sin().abs().sqrt(),
            Profile::Weierstrass(w) => w.value(x),
            Profile::Trig(terms) => terms
                .iter()
                .map(|t| t.amplitude * (t.frequency * x + t.phase).cos())
                .sum(),
            Profile::Custom { value, .. } => value(x),
        }
    }

    /// Derivative, where the profile is differentiable everywhere.
    pub fn derivative(&self, x: f64) -> Option<f64> {
        Some(match self {
            Profile::Zero | Profile::Constant(_) => 0.0,
            Profile::Linear(s) => *s,
            Profile::Sine {
                amplitude,
                frequency,
                phase,
            } => amplitude * frequency * (frequency * x + phase).cos(),
            Profile::Cosine {
                amplitude,
                frequency,
                phase,
            } => -amplitude * frequency * (frequency * x + phase).sin(),
            Profile::SqrtAbsSine => return None,
            Profile::Weierstrass(w) => w.derivative(x),
            Profile::Trig(terms) => terms
                .iter()
                .map(|t| -t.amplitude * t.frequency * (t.frequency * x + t.phase).sin())
                .sum(),
            Profile::Custom { derivative, .. } => return derivative.as_ref().map(|d| d(x)),
        })
    }

    /// Analytic regularity of the one-dimensional profile.
    pub fn certificate(&self) -> Certificate {
        let lip = |sup: f64, lip: f64| {
            Certificate::Holder(RegularityTag {
                alpha: 1.0,
                sup_bound: sup,
                holder_seminorm_bound: lip,
            })
        };
        match self {
            Profile::Zero => lip(0.0, 0.0),
            Profile::Constant(c) => lip(c.abs(), 0.0),
            Profile::Linear(_) => Certificate::Uncertified,
            Profile::Sine {
                amplitude,
                frequency,
                ..
            }
            | Profile::Cosine {
                amplitude,
                frequency,
                ..
            } => lip(amplitude.abs(), (amplitude * frequency).abs()),
            Profile::SqrtAbsSine => Certificate::Holder(RegularityTag {
                alpha: 0.5,
                sup_bound: 1.0,
                holder_seminorm_bound: 1.0,
            }),
            Profile::Weierstrass(w) => Certificate::Holder(RegularityTag {
                alpha: w.alpha(),
                sup_bound: w.sup_bound(),
                holder_seminorm_bound: w.holder_seminorm_bound(),
            }),
            Profile::Trig(terms) => lip(
                terms.iter().map(|t| t.amplitude.abs()).sum(),
                terms
                    .iter()
                    .map(|t| (t.amplitude * t.frequency).abs())
                    .sum(),
            ),
            Profile::Custom { regularity, .. } => *regularity,
        }
    }

    /// Sup bounds on the profile and its first two derivatives, where known.
    fn c2_bounds(&self) -> Option<C2Bounds> {
        match self {
            Profile::Zero => Some(C2Bounds {
                sup: 0.0,
                first: 0.0,
                second: 0.0,
            }),
            Profile::Constant(c) => Some(C2Bounds {
                sup: c.abs(),
                first: 0.0,
                second: 0.0,
            }),
            Profile::Sine {
                amplitude,
                frequency,
                ..
            }
            | Profile::Cosine {
                amplitude,
                frequency,
                ..
            } => {
                let a = amplitude.abs();
                let w = frequency.abs();
                Some(C2Bounds {
                    sup: a,
                    first: a * w,
                    second: a * w * w,
                })
            }
            Profile::Trig(terms) => Some(C2Bounds {
                sup: terms.iter().map(|t| t.amplitude.abs()).sum(),
                first: terms
                    .iter()
                    .map(|t| (t.amplitude * t.frequency).abs())
                    .sum(),
                second: terms
                    .iter()
                    .map(|t| (t.amplitude * t.frequency * t.frequency).abs())
                    .sum(),
            }),
            Profile::Custom {
                regularity: Certificate::C2(b),
                ..
            } => Some(*b),
            _ => None,
        }
    }
}

pub type VectorFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type ScalarFieldFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// The matrix field `S` perturbing a constant diffusion.
#[derive(Clone)]
pub enum Modulation {
    /// `S(x) = diag(φ(x_1), …, φ(x_d))`
    Diagonal(Profile),
    /// Row-major `d×d` matrix field with declared bounds: `sup` is the sup of
    /// the operator norm, `first`/`second` bound the derivatives.
    Matrix { field: VectorFn, bounds: C2Bounds },
}

impl Modulation {
    fn bounds(&self) -> Result<C2Bounds> {
        match self {
            Modulation::Diagonal(p) => p.c2_bounds().ok_or_else(|| {
                Error::InvalidParameter(format!("modulation {p:?} is not certified C²"))
            }),
            Modulation::Matrix { bounds, .. } => Ok(*bounds),
        }
    }
}

#[derive(Clone)]
enum Layout {
    Componentwise(Profile),
    Summed(Profile),
    Diffusion {
        mu: f64,
        eps: f64,
        modulation: Modulation,
    },
    CustomScalar(ScalarFieldFn),
    CustomVector(VectorFn),
    CustomMatrix(VectorFn),
}

/// An evaluable map on `R^d` with its regularity certificate.
#[derive(Clone)]
pub struct CoefficientField {
    dim: usize,
    shape: FieldShape,
    layout: Layout,
    certificate: Certificate,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let layout = match &self.layout {
            Layout::Componentwise(p) => format!("componentwise {p:?}"),
            Layout::Summed(p) => format!("summed {p:?}"),
            Layout::Diffusion { mu, eps, .. } => format!("{mu}·I + {eps}·S"),
            Layout::CustomScalar(_) | Layout::CustomVector(_) | Layout::CustomMatrix(_) => {
                "custom".to_string()
            }
        };
        f.debug_struct("CoefficientField")
            .field("dim", &self.dim)
            .field("shape", &self.shape)
            .field("layout", &layout)
            .field("certificate", &self.certificate)
            .finish()
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::InvalidParameter("dimension must be positive".into()))
    } else {
        Ok(())
    }
}

impl CoefficientField {
    /// Vector field `b_i(x) = φ(x_i)`.
    pub fn componentwise(dim: usize, profile: Profile) -> Result<Self> {
        check_dim(dim)?;
        // |b(x)-b(y)|² ≤ C² Σ|x_i-y_i|^{2α} ≤ C² d^{1-α} |x-y|^{2α}
        let certificate = match profile.certificate() {
            Certificate::Holder(t) => Certificate::Holder(RegularityTag {
                alpha: t.alpha,
                sup_bound: t.sup_bound * (dim as f64).sqrt(),
                holder_seminorm_bound: t.holder_seminorm_bound
                    * (dim as f64).powf((1.0 - t.alpha) / 2.0),
            }),
            other => other,
        };
        Ok(Self {
            dim,
            shape: FieldShape::Vector,
            layout: Layout::Componentwise(profile),
            certificate,
        })
    }

    /// Scalar field `g(x) = Σ_i φ(x_i)`.
    pub fn summed(dim: usize, profile: Profile) -> Result<Self> {
        check_dim(dim)?;
        // Σ|x_i-y_i|^α ≤ d^{1-α/2}|x-y|^α
        let certificate = match profile.certificate() {
            Certificate::Holder(t) => Certificate::Holder(RegularityTag {
                alpha: t.alpha,
                sup_bound: t.sup_bound * dim as f64,
                holder_seminorm_bound: t.holder_seminorm_bound
                    * (dim as f64).powf(1.0 - t.alpha / 2.0),
            }),
            other => other,
        };
        Ok(Self {
            dim,
            shape: FieldShape::Scalar,
            layout: Layout::Summed(profile),
            certificate,
        })
    }

    /// `σ ≡ c·I`. A zero `c` is allowed for deterministic oracles.
    pub fn constant_diffusion(dim: usize, c: f64) -> Result<Self> {
        check_dim(dim)?;
        if !c.is_finite() {
            return Err(Error::InvalidParameter("diffusion scale must be finite".into()));
        }
        Ok(Self {
            dim,
            shape: FieldShape::Matrix,
            layout: Layout::Diffusion {
                mu: c,
                eps: 0.0,
                modulation: Modulation::Diagonal(Profile::Zero),
            },
            certificate: Certificate::C2(C2Bounds {
                sup: c.abs(),
                first: 0.0,
                second: 0.0,
            }),
        })
    }

    pub fn custom_scalar(dim: usize, f: ScalarFieldFn, certificate: Certificate) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            shape: FieldShape::Scalar,
            layout: Layout::CustomScalar(f),
            certificate,
        })
    }

    pub fn custom_vector(dim: usize, f: VectorFn, certificate: Certificate) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            shape: FieldShape::Vector,
            layout: Layout::CustomVector(f),
            certificate,
        })
    }

    pub fn custom_matrix(dim: usize, f: VectorFn, certificate: Certificate) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            shape: FieldShape::Matrix,
            layout: Layout::CustomMatrix(f),
            certificate,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> FieldShape {
        self.shape
    }

    pub fn certificate(&self) -> Certificate {
        self.certificate
    }

    /// Hölder tag, if the field carries one.
    pub fn regularity(&self) -> Option<RegularityTag> {
        match self.certificate {
            Certificate::Holder(t) => Some(t),
            _ => None,
        }
    }

    /// Length of the buffer `eval` writes into.
    pub fn output_len(&self) -> usize {
        match self.shape {
            FieldShape::Scalar => 1,
            FieldShape::Vector => self.dim,
            FieldShape::Matrix => self.dim * self.dim,
        }
    }

    /// The profile of a componentwise or summed field.
    pub fn profile(&self) -> Option<&Profile> {
        match &self.layout {
            Layout::Componentwise(p) | Layout::Summed(p) => Some(p),
            _ => None,
        }
    }

    /// `(μ, ε, modulation profile)` of a diagonal diffusion field.
    pub fn diffusion_parts(&self) -> Option<(f64, f64, &Profile)> {
        match &self.layout {
            Layout::Diffusion {
                mu,
                eps,
                modulation: Modulation::Diagonal(p),
            } => Some((*mu, *eps, p)),
            _ => None,
        }
    }

    /// True when the field does not depend on the state.
    pub fn is_constant(&self) -> bool {
        match &self.layout {
            Layout::Componentwise(p) | Layout::Summed(p) => {
                matches!(p, Profile::Zero | Profile::Constant(_))
            }
            Layout::Diffusion {
                eps, modulation, ..
            } => {
                *eps == 0.0
                    || matches!(
                        modulation,
                        Modulation::Diagonal(Profile::Zero | Profile::Constant(_))
                    )
            }
            _ => false,
        }
    }

    /// Evaluates into `out` (length [`Self::output_len`], matrices row-major).
    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        match &self.layout {
            Layout::Componentwise(p) => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = p.value(*xi);
                }
            }
            Layout::Summed(p) => out[0] = x.iter().map(|xi| p.value(*xi)).sum(),
            Layout::Diffusion {
                mu,
                eps,
                modulation,
            } => {
                let d = self.dim;
                match modulation {
                    Modulation::Diagonal(p) => {
                        out.iter_mut().for_each(|o| *o = 0.0);
                        for i in 0..d {
                            out[i * d + i] = mu + eps * p.value(x[i]);
                        }
                    }
                    Modulation::Matrix { field, .. } => {
                        field(x, out);
                        for (idx, o) in out.iter_mut().enumerate() {
                            *o *= eps;
                            if idx / d == idx % d {
                                *o += mu;
                            }
                        }
                    }
                }
            }
            Layout::CustomScalar(f) => out[0] = f(x),
            Layout::CustomVector(f) | Layout::CustomMatrix(f) => f(x, out),
        }
    }

    /// Scalar value of a scalar field.
    pub fn scalar(&self, x: &[f64]) -> f64 {
        match &self.layout {
            Layout::Summed(p) => x.iter().map(|xi| p.value(*xi)).sum(),
            Layout::CustomScalar(f) => f(x),
            _ => {
                let mut out = vec![0.0; self.output_len()];
                self.eval(x, &mut out);
                out[0]
            }
        }
    }

    /// Single-entry evaluation for one-dimensional fields.
    #[inline]
    pub fn eval_1d(&self, x: f64) -> f64 {
        debug_assert_eq!(self.dim, 1);
        match &self.layout {
            Layout::Componentwise(p) | Layout::Summed(p) => p.value(x),
            Layout::Diffusion {
                mu,
                eps,
                modulation,
            } => match modulation {
                Modulation::Diagonal(p) => mu + eps * p.value(x),
                Modulation::Matrix { field, .. } => {
                    let mut out = [0.0];
                    field(&[x], &mut out);
                    mu + eps * out[0]
                }
            },
            Layout::CustomScalar(f) => f(&[x]),
            Layout::CustomVector(f) | Layout::CustomMatrix(f) => {
                let mut out = [0.0];
                f(&[x], &mut out);
                out[0]
            }
        }
    }

    /// `∂g/∂x_k` of a summed scalar field with a differentiable profile.
    pub fn partial(&self, x: &[f64], k: usize) -> Option<f64> {
        match &self.layout {
            Layout::Summed(p) => p.derivative(x[k]),
            _ => None,
        }
    }
}

/// Builds the lacunary drift `b_i(x) = A Σ_{k=0}^{L} B^{-αk} cos(B^k x_i + φ_k)`.
///
/// The truncated series is smooth, but its C¹ norm grows like
/// `B^{(1−α)L}` while the recorded Hölder bound stays uniform in `L`.
pub fn make_weierstrass_drift(
    dim: usize,
    alpha: f64,
    amplitude: f64,
    base: u32,
    levels: u32,
    phases: &[f64],
) -> Result<CoefficientField> {
    let series = WeierstrassSeries::new(amplitude, alpha, base, levels, phases)?;
    CoefficientField::componentwise(dim, Profile::Weierstrass(series))
}

/// Builds `σ(x) = μ·I + ε·S(x)` together with its ellipticity certificate
/// `λ = (μ − ε sup‖S‖)²`.
pub fn make_elliptic_diffusion(
    dim: usize,
    mu: f64,
    eps: f64,
    modulation: Modulation,
) -> Result<(CoefficientField, EllipticityCert)> {
    check_dim(dim)?;
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::InvalidParameter(format!("mu = {mu} must be positive")));
    }
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be nonnegative")));
    }
    let bounds = modulation.bounds()?;
    let margin = mu - eps * bounds.sup;
    if !(margin > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps·sup‖S‖ = {} ≥ mu = {mu}: ellipticity fails",
            eps * bounds.sup
        )));
    }
    let field = CoefficientField {
        dim,
        shape: FieldShape::Matrix,
        layout: Layout::Diffusion {
            mu,
            eps,
            modulation,
        },
        certificate: Certificate::C2(C2Bounds {
            sup: mu + eps * bounds.sup,
            first: eps * bounds.first,
            second: eps * bounds.second,
        }),
    };
    Ok((field, EllipticityCert { lambda: margin * margin }))
}

/// Largest Hölder quotient `|f(x)−f(y)|/|x−y|^α` over all pairs of the
/// point set. A lower bound for the true seminorm.
pub fn holder_seminorm_estimate(
    f: &CoefficientField,
    alpha: f64,
    points: &[Vec<f64>],
) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter(
            "Hölder estimate needs at least two points".into(),
        ));
    }
    let len = f.output_len();
    let mut values = vec![0.0; points.len() * len];
    for (x, out) in points.iter().zip(values.chunks_mut(len)) {
        if x.len() != f.dim() {
            return Err(Error::DimensionMismatch {
                expected: f.dim(),
                got: x.len(),
            });
        }
        f.eval(x, out);
    }
    let mut best: f64 = 0.0;
    for i in 0..points.len() {
        let vi = &values[i * len..(i + 1) * len];
        for j in (i + 1)..points.len() {
            let vj = &values[j * len..(j + 1) * len];
            let dist = euclid(&points[i], &points[j]);
            if dist == 0.0 {
                continue;
            }
            let diff = euclid(vi, vj);
            best = best.max(diff / dist.powf(alpha));
        }
    }
    Ok(best)
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Uniform one-dimensional grid on `[lo, hi]` as a point set.
pub fn uniform_grid_1d(lo: f64, hi: f64, spacing: f64) -> Vec<Vec<f64>> {
    let count = ((hi - lo) / spacing).round() as usize;
    (0..=count)
        .map(|i| vec![lo + (hi - lo) * i as f64 / count as f64])
        .collect()
}

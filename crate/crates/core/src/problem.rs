use crate::coefficients::{CoefficientField, EllipticityCert, FieldShape};
use crate::error::{Error, Result};

/// `dX = b(X)dt + σ(X)dW` on `[0, 1]`, started at `x₀`, with terminal
/// functional `g`.
#[derive(Clone, Debug)]
pub struct SdeProblem {
    drift: CoefficientField,
    diffusion: CoefficientField,
    start: Vec<f64>,
    terminal: CoefficientField,
    ellipticity: Option<EllipticityCert>,
}

impl SdeProblem {
    pub fn new(
        drift: CoefficientField,
        diffusion: CoefficientField,
        start: Vec<f64>,
        terminal: CoefficientField,
    ) -> Result<Self> {
        let d = start.len();
        for (field, shape) in [
            (&drift, FieldShape::Vector),
            (&diffusion, FieldShape::Matrix),
            (&terminal, FieldShape::Scalar),
        ] {
            if field.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: field.dim(),
                });
            }
            if field.shape() != shape {
                return Err(Error::InvalidParameter(format!(
                    "expected a {shape:?} field, got {:?}",
                    field.shape()
                )));
            }
        }
        if start.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("start point must be finite".into()));
        }
        Ok(Self {
            drift,
            diffusion,
            start,
            terminal,
            ellipticity: None,
        })
    }

    pub fn with_ellipticity(mut self, cert: EllipticityCert) -> Self {
        self.ellipticity = Some(cert);
        self
    }

    pub fn dim(&self) -> usize {
        self.start.len()
    }

    pub fn drift(&self) -> &CoefficientField {
        &self.drift
    }

    pub fn diffusion(&self) -> &CoefficientField {
        &self.diffusion
    }

    pub fn start(&self) -> &[f64] {
        &self.start
    }

    pub fn terminal(&self) -> &CoefficientField {
        &self.terminal
    }

    pub fn ellipticity(&self) -> Option<EllipticityCert> {
        self.ellipticity
    }

    /// Same coefficients with a different terminal functional.
    pub fn with_terminal(&self, terminal: CoefficientField) -> Result<Self> {
        let mut p = Self::new(
            self.drift.clone(),
            self.diffusion.clone(),
            self.start.clone(),
            terminal,
        )?;
        p.ellipticity = self.ellipticity;
        Ok(p)
    }

    /// Same diffusion, start and terminal with a different drift.
    pub fn with_drift(&self, drift: CoefficientField) -> Result<Self> {
        let mut p = Self::new(
            drift,
            self.diffusion.clone(),
            self.start.clone(),
            self.terminal.clone(),
        )?;
        p.ellipticity = self.ellipticity;
        Ok(p)
    }
}

//! Report assembly and the files a study leaves behind.
//!
//! `summary.json`, `points.csv`, `plot_data.tsv` and `plot.py` depend only
//! on the config and seed. Wall-clock data goes to `metadata.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use weak_euler::estimators::{
    QuadratureEstimate, ReferenceValue, SupProbePoint, WassersteinPoint, WeakErrorPoint,
};
use weak_euler::pde::SchauderProfile;

use crate::config::{CheckSpec, ExperimentConfig};
use crate::error::{exit, CliError};

pub const TOOL: &str = env!("CARGO_PKG_NAME");

/// `<version>-g<revision>` when the build saw a git checkout.
pub fn artifact_version() -> String {
    match option_env!("WEAK_EULER_GIT_REVISION") {
        Some(rev) if !rev.is_empty() => format!("{}-g{rev}", env!("CARGO_PKG_VERSION")),
        _ => env!("CARGO_PKG_VERSION").to_string(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Study {
    RateStudy,
    WassersteinStudy,
    QuadratureStudy,
    SmoothingStudy,
    PdeCheck,
}

impl Study {
    pub fn as_str(self) -> &'static str {
        match self {
            Study::RateStudy => "rate-study",
            Study::WassersteinStudy => "wasserstein-study",
            Study::QuadratureStudy => "quadrature-study",
            Study::SmoothingStudy => "smoothing-study",
            Study::PdeCheck => "pde-check",
        }
    }
}

/// A fitted straight line in log-log coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    /// What `value` measures, e.g. `weak-error exponent`.
    pub quantity: String,
    pub value: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub theoretical: Option<f64>,
    /// Abscissae that entered the fit.
    pub used: Vec<f64>,
    /// Abscissae dropped at the noise floor or outside the fit window.
    pub excluded: Vec<f64>,
    /// `log y = intercept + slope · log x`; `slope = −value` for decay
    /// exponents.
    pub slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub description: String,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub passed: bool,
    pub conditions: Vec<Condition>,
}

impl CheckOutcome {
    pub fn from_conditions(conditions: Vec<Condition>) -> Self {
        Self {
            passed: conditions.iter().all(|c| c.passed),
            conditions,
        }
    }

    /// Evaluates every condition of `spec` against a fitted value. A missing
    /// target falls back to the theoretical value.
    pub fn evaluate(spec: &CheckSpec, fit: &FitSummary) -> Result<Self, CliError> {
        let mut out = Vec::new();
        let target = spec.target.or(fit.theoretical);
        if spec.tolerance.is_some() || spec.band_sigmas.is_some() {
            let Some(target) = target else {
                return Err(CliError::Config(
                    "check needs a target: none given and no theoretical value is known".into(),
                ));
            };
            if let Some(tol) = spec.tolerance {
                out.push(Condition {
                    description: format!("|{:.4} − {target}| ≤ {tol}", fit.value),
                    passed: (fit.value - target).abs() <= tol,
                });
            }
            if let Some(k) = spec.band_sigmas {
                out.push(Condition {
                    description: format!(
                        "{target} inside {:.4} ± {k}·{:.4}",
                        fit.value, fit.stderr
                    ),
                    passed: (fit.value - target).abs() <= k * fit.stderr,
                });
            }
        }
        if let Some(min) = spec.min {
            out.push(Condition {
                description: format!("{:.4} ≥ {min}", fit.value),
                passed: fit.value >= min,
            });
        }
        if let Some(max) = spec.max {
            out.push(Condition {
                description: format!("{:.4} ≤ {max}", fit.value),
                passed: fit.value <= max,
            });
        }
        Ok(Self::from_conditions(out))
    }
}

/// Study-specific payload of `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StudyResults {
    Rate {
        /// `None` when the fine scheme is the reference.
        reference: Option<ReferenceValue>,
        fine_n: Option<usize>,
        points: Vec<WeakErrorPoint>,
    },
    Wasserstein {
        fine_n: usize,
        points: Vec<WassersteinPoint>,
        /// The coupled mean gap bounds the distributional `W₁` from above
        /// at every `n`.
        coupling_bound_dominates: bool,
    },
    Quadrature {
        functional: String,
        points: Vec<QuadratureEstimate>,
        identically_zero: bool,
    },
    Smoothing {
        steps: usize,
        starts: Vec<f64>,
        points: Vec<SupProbePoint>,
    },
    Pde {
        u_start: f64,
        profile: SchauderProfile,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub study: Study,
    pub config: ExperimentConfig,
    /// Smallest and largest abscissa probed.
    pub range: Option<[f64; 2]>,
    pub fit: Option<FitSummary>,
    pub fit_error: Option<String>,
    pub check: Option<CheckOutcome>,
    pub notes: Vec<String>,
    pub results: StudyResults,
}

/// Columns of `points.csv`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

/// One series for `plot_data.tsv`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotData {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// `(x, y, yerr)`
    pub points: Vec<(f64, f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub summary: Summary,
    pub table: Table,
    pub plot: PlotData,
}

#[derive(Serialize)]
struct Metadata<'a> {
    tool: &'a str,
    version: String,
    config_hash: &'a str,
    unix_time: u64,
    threads: usize,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        if self.summary.fit_error.is_some() {
            exit::NUMERICAL
        } else if self.summary.check.as_ref().is_some_and(|c| !c.passed) {
            exit::CHECK_FAILED
        } else {
            exit::PASS
        }
    }

    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn points_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| CliError::Write {
            path: PathBuf::from("points.csv"),
            message: e.to_string(),
        };
        w.write_record(&self.table.columns).map_err(err)?;
        for row in &self.table.rows {
            w.write_record(row.iter().map(|v| v.to_string())).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Write {
            path: PathBuf::from("points.csv"),
            message: e.to_string(),
        })?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Whitespace-separated `x y yerr fit`, where `fit` is the fitted line
    /// at `x` (`nan` without a fit).
    pub fn plot_tsv(&self) -> String {
        let mut out = String::from("# x\ty\tyerr\tfit\n");
        for &(x, y, e) in &self.plot.points {
            let fit = match &self.summary.fit {
                Some(f) => (f.intercept + f.slope * x.ln()).exp(),
                None => f64::NAN,
            };
            let _ = writeln!(out, "{x}\t{y}\t{e}\t{fit}");
        }
        out
    }

    pub fn plot_script(&self) -> String {
        let fit_label = match &self.summary.fit {
            Some(f) => format!("fit: {} = {:.3} ± {:.3}", f.quantity, f.value, f.stderr),
            None => "no fit".to_string(),
        };
        format!(
            r#"#!/usr/bin/env python3
# Generated by {tool}; reads plot_data.tsv from this directory.
import os
import numpy as np
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
x, y, yerr, fit = np.loadtxt(os.path.join(here, "plot_data.tsv"), unpack=True, ndmin=2)
fig, ax = plt.subplots()
ax.errorbar(x, y, yerr=yerr, fmt="o", capsize=3, label="estimate")
if np.isfinite(fit).any():
    ax.plot(x, fit, "-", label={fit_label:?})
ax.set_xscale("log")
ax.set_yscale("log")
ax.set_xlabel({x:?})
ax.set_ylabel({y:?})
ax.set_title({title:?})
ax.legend()
fig.savefig(os.path.join(here, "plot.png"), dpi=150, bbox_inches="tight")
"#,
            tool = TOOL,
            x = self.plot.x_label,
            y = self.plot.y_label,
            title = self.plot.title,
        )
    }

    /// Writes all report files into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path, threads: usize) -> Result<(), CliError> {
        let write = |name: &str, contents: &str| {
            let path = dir.join(name);
            fs::write(&path, contents).map_err(|e| CliError::Write {
                path,
                message: e.to_string(),
            })
        };
        fs::create_dir_all(dir).map_err(|e| CliError::Write {
            path: dir.to_path_buf(),
            message: e.to_string(),
        })?;
        write("summary.json", &self.summary_json())?;
        write("points.csv", &self.points_csv()?)?;
        write("plot_data.tsv", &self.plot_tsv())?;
        write("plot.py", &self.plot_script())?;
        let meta = Metadata {
            tool: TOOL,
            version: artifact_version(),
            config_hash: &self.summary.config_hash,
            unix_time: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            threads,
        };
        let mut meta_json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
        meta_json.push('\n');
        write("metadata.json", &meta_json)
    }
}

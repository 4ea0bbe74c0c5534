//! Study drivers: each turns a config into a [`Report`].

use std::f64::consts::PI;

use log::{info, warn};
use weak_euler::coefficients::Certificate;
use weak_euler::estimators::{
    diffusion_quadrature, drift_quadrature, fit_rate, smoothing_sup_profile, wasserstein_sweep,
    weighted_line_fit, Coupling, QuadratureOptions, RateFit, RatePoint, ReferenceValue, WeakErrorStudy,
};
use weak_euler::pde::{feynman_kac_reference, schauder_profile, solve_backward_kolmogorov, Field};
use weak_euler::SdeProblem;

use crate::config::{CouplingMode, EstimatorSpec, ExperimentConfig, ReferencePolicy};
use crate::error::CliError;
use crate::report::{
    artifact_version, CheckOutcome, Condition, FitSummary, PlotData, Report, Study, StudyResults,
    Summary, Table, TOOL,
};

pub fn run(study: Study, cfg: &ExperimentConfig) -> Result<Report, CliError> {
    cfg.validate()?;
    info!("{} '{}' with seed {}", study.as_str(), cfg.name, cfg.master_seed);
    match study {
        Study::RateStudy => run_rate_study(cfg),
        Study::WassersteinStudy => run_wasserstein_study(cfg),
        Study::QuadratureStudy => run_quadrature_study(cfg),
        Study::SmoothingStudy => run_smoothing_study(cfg),
        Study::PdeCheck => run_pde_check(cfg),
    }
}

fn build_problem(cfg: &ExperimentConfig) -> Result<SdeProblem, CliError> {
    cfg.problem.build().map_err(CliError::Problem)
}

fn require_ns(cfg: &ExperimentConfig) -> Result<(&[usize], usize), CliError> {
    match cfg.max_n() {
        Some(max) => Ok((&cfg.ns, max)),
        None => Err(CliError::Config("ns must list at least one resolution".into())),
    }
}

fn wrong_estimator(study: Study, cfg: &ExperimentConfig) -> CliError {
    CliError::Config(format!(
        "{} cannot run estimator '{}'",
        study.as_str(),
        cfg.estimator.name()
    ))
}

/// `(1+α)/2` from the drift's Hölder certificate.
fn weak_rate_target(problem: &SdeProblem) -> Option<f64> {
    match problem.drift().certificate() {
        Certificate::Holder(tag) => Some((1.0 + tag.alpha) / 2.0),
        Certificate::C2(_) => Some(1.0),
        Certificate::Uncertified => None,
    }
}

fn rate_summary(quantity: &str, fit: &RateFit, theoretical: Option<f64>) -> FitSummary {
    FitSummary {
        quantity: quantity.to_string(),
        value: fit.exponent,
        stderr: fit.exponent_stderr,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        theoretical,
        used: fit.points.iter().map(|p| p.n).collect(),
        excluded: fit.excluded.iter().map(|p| p.n).collect(),
        slope: -fit.exponent,
    }
}

struct Outcome {
    fit: Option<FitSummary>,
    fit_error: Option<String>,
    check: Option<CheckOutcome>,
}

/// Fits and, when the fit succeeds, evaluates the config's check.
fn decide(cfg: &ExperimentConfig, fit: Result<FitSummary, weak_euler::Error>) -> Result<Outcome, CliError> {
    match fit {
        Ok(fit) => {
            let check = cfg
                .check
                .as_ref()
                .map(|spec| CheckOutcome::evaluate(spec, &fit))
                .transpose()?;
            Ok(Outcome {
                fit: Some(fit),
                fit_error: None,
                check,
            })
        }
        Err(e) => {
            warn!("fit failed: {e}");
            Ok(Outcome {
                fit: None,
                fit_error: Some(e.to_string()),
                check: None,
            })
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    study: Study,
    cfg: &ExperimentConfig,
    range: Option<[f64; 2]>,
    outcome: Outcome,
    notes: Vec<String>,
    results: StudyResults,
    table: Table,
    plot: PlotData,
) -> Report {
    Report {
        summary: Summary {
            tool: TOOL.to_string(),
            version: artifact_version(),
            config_hash: cfg.hash(),
            study,
            config: cfg.clone(),
            range,
            fit: outcome.fit,
            fit_error: outcome.fit_error,
            check: outcome.check,
            notes,
            results,
        },
        table,
        plot,
    }
}

fn n_range(ns: &[usize]) -> Option<[f64; 2]> {
    Some([*ns.first()? as f64, *ns.last()? as f64])
}

/// Weak errors `E g(X₁ⁿ) − E g(X₁)` over `ns` and their log-log rate.
pub fn run_rate_study(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let study = Study::RateStudy;
    let EstimatorSpec::WeakError { coupling } = cfg.estimator else {
        return Err(wrong_estimator(study, cfg));
    };
    let (ns, max_n) = require_ns(cfg)?;
    let problem = build_problem(cfg)?;
    let mut notes = Vec::new();

    let mut control = None;
    let (reference, default_fine) = match &cfg.reference {
        ReferencePolicy::Pde {
            target,
            max_refinements,
            control_variate,
        } => {
            let grid = cfg.pde.grid(&problem).map_err(CliError::Problem)?;
            let fk = feynman_kac_reference(&problem, &grid, *target, *max_refinements)
                .map_err(CliError::numerical("reference precision insufficient"))?;
            notes.push(format!(
                "PDE reference {:.10} (coarse {:.10}, fine {:.10}, error estimate {:.3e})",
                fk.value, fk.coarse_value, fk.fine_value, fk.error_estimate
            ));
            let r = ReferenceValue {
                value: fk.value,
                error_estimate: fk.error_estimate,
            };
            if *control_variate {
                control = Some(fk.solution);
            }
            (Some(r), max_n)
        }
        ReferencePolicy::FineEm => {
            if coupling == CouplingMode::Independent {
                return Err(CliError::Config(
                    "the fine-em reference needs shared coupling".into(),
                ));
            }
            (None, 64 * max_n)
        }
        ReferencePolicy::Exact { value } => (Some(ReferenceValue::exact(*value)), max_n),
    };
    let fine_n = cfg.fine_n_or(default_fine);
    let mode = match coupling {
        CouplingMode::Shared => Coupling::Shared { fine_n },
        CouplingMode::Independent => Coupling::Independent,
    };
    let points = WeakErrorStudy {
        problem: &problem,
        ns,
        paths: cfg.paths,
        master_seed: cfg.master_seed,
        coupling: mode,
        reference,
        control: control.as_ref(),
    }
    .run()
    .map_err(CliError::numerical("weak-error sweep"))?;
    notes.extend(
        points
            .iter()
            .filter_map(|p| p.warning.as_ref().map(|w| format!("n = {}: {w}", p.n))),
    );

    let rate_points: Vec<RatePoint> = points
        .iter()
        .map(|p| RatePoint::new(p.n as f64, p.estimate.mean.abs(), p.estimate.stderr))
        .collect();
    let theoretical = weak_rate_target(&problem);
    let outcome = decide(
        cfg,
        fit_rate(&rate_points).map(|f| rate_summary("weak-error exponent", &f, theoretical)),
    )?;
    let table = Table {
        columns: vec!["n", "signed_error", "stderr", "abs_error"],
        rows: points
            .iter()
            .map(|p| {
                vec![
                    p.n as f64,
                    p.estimate.mean,
                    p.estimate.stderr,
                    p.estimate.mean.abs(),
                ]
            })
            .collect(),
    };
    let plot = PlotData {
        title: format!("{}: weak error", cfg.name),
        x_label: "n".into(),
        y_label: "|E g(X^n) - E g(X)|".into(),
        points: rate_points.iter().map(|p| (p.n, p.error, p.stderr)).collect(),
    };
    let results = StudyResults::Rate {
        reference,
        fine_n: matches!(mode, Coupling::Shared { .. }).then_some(fine_n),
        points,
    };
    Ok(assemble(study, cfg, n_range(ns), outcome, notes, results, table, plot))
}

/// `W₁` between the laws of `X₁ⁿ` and the fine scheme, on coupled
/// ensembles.
pub fn run_wasserstein_study(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let study = Study::WassersteinStudy;
    let EstimatorSpec::Wasserstein { resamples } = cfg.estimator else {
        return Err(wrong_estimator(study, cfg));
    };
    let (ns, max_n) = require_ns(cfg)?;
    let problem = build_problem(cfg)?;
    let fine_n = cfg.fine_n_or(16 * max_n);
    let points = wasserstein_sweep(&problem, ns, fine_n, cfg.paths, cfg.master_seed, resamples)
        .map_err(CliError::numerical("Wasserstein sweep"))?;
    let dominates = points
        .iter()
        .all(|p| p.coupling_bound + 1e-12 >= p.estimate.mean);
    let notes = vec![format!(
        "the coupled mean gap E|X^n − X^{fine_n}| bounds the distributional W₁ from above at every n: {dominates}"
    )];
    let rate_points: Vec<RatePoint> = points
        .iter()
        .map(|p| RatePoint::new(p.n as f64, p.estimate.mean, p.estimate.stderr))
        .collect();
    let outcome = decide(
        cfg,
        fit_rate(&rate_points).map(|f| rate_summary("W₁ exponent", &f, weak_rate_target(&problem))),
    )?;
    let table = Table {
        columns: vec!["n", "w1", "stderr", "coupling_bound"],
        rows: points
            .iter()
            .map(|p| vec![p.n as f64, p.estimate.mean, p.estimate.stderr, p.coupling_bound])
            .collect(),
    };
    let plot = PlotData {
        title: format!("{}: Wasserstein-1 distance", cfg.name),
        x_label: "n".into(),
        y_label: "W1(X^n, X^N)".into(),
        points: rate_points.iter().map(|p| (p.n, p.error, p.stderr)).collect(),
    };
    let results = StudyResults::Wasserstein {
        fine_n,
        points,
        coupling_bound_dominates: dominates,
    };
    Ok(assemble(study, cfg, n_range(ns), outcome, notes, results, table, plot))
}

/// Drift or diffusion quadrature functional along scheme paths, over `ns`.
pub fn run_quadrature_study(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let study = Study::QuadratureStudy;
    let (ns, _) = require_ns(cfg)?;
    let problem = build_problem(cfg)?;
    let grid = cfg.pde.grid(&problem).map_err(CliError::Problem)?;
    let pde = solve_backward_kolmogorov(&problem, &grid).map_err(CliError::numerical("PDE solve"))?;
    let (functional, points) = match cfg.estimator {
        EstimatorSpec::DriftQuadrature {
            coordinate,
            p,
            sub_steps,
            resamples,
        } => {
            let options = QuadratureOptions { sub_steps, resamples };
            let pts = ns
                .iter()
                .map(|&n| {
                    drift_quadrature(&problem, &pde, n, coordinate, p, cfg.paths, cfg.master_seed, options)
                        .map_err(CliError::numerical(format!("drift quadrature at n = {n}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            (format!("drift (L_{p} norm, coordinate {coordinate})"), pts)
        }
        EstimatorSpec::DiffusionQuadrature { i, j, sub_steps } => {
            let pts = ns
                .iter()
                .map(|&n| {
                    diffusion_quadrature(&problem, &pde, n, (i, j), cfg.paths, cfg.master_seed, sub_steps)
                        .map_err(CliError::numerical(format!("diffusion quadrature at n = {n}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            (format!("diffusion (|mean|, entry ({i}, {j}))"), pts)
        }
        _ => return Err(wrong_estimator(study, cfg)),
    };
    let identically_zero = points.iter().all(|q| q.estimate.mean == 0.0);
    let mut notes: Vec<String> = points
        .iter()
        .filter(|q| q.excluded > 0)
        .map(|q| format!("n = {}: {} paths left the PDE grid", q.n, q.excluded))
        .collect();
    let rate_points: Vec<RatePoint> = points
        .iter()
        .map(|q| RatePoint::new(q.n as f64, q.estimate.mean, q.estimate.stderr))
        .collect();
    let outcome = if identically_zero {
        notes.push("the functional is identically zero at every n".into());
        Outcome {
            fit: None,
            fit_error: None,
            check: cfg.check.as_ref().map(|_| {
                CheckOutcome::from_conditions(vec![Condition {
                    description: "functional identically zero".into(),
                    passed: true,
                }])
            }),
        }
    } else {
        decide(
            cfg,
            fit_rate(&rate_points)
                .map(|f| rate_summary("quadrature exponent", &f, weak_rate_target(&problem))),
        )?
    };
    let table = Table {
        columns: vec!["n", "estimate", "stderr", "excluded", "exclusion_fraction"],
        rows: points
            .iter()
            .map(|q| {
                vec![
                    q.n as f64,
                    q.estimate.mean,
                    q.estimate.stderr,
                    q.excluded as f64,
                    q.exclusion_fraction,
                ]
            })
            .collect(),
    };
    let plot = PlotData {
        title: format!("{}: {functional} quadrature", cfg.name),
        x_label: "n".into(),
        y_label: "quadrature functional".into(),
        points: rate_points.iter().map(|p| (p.n, p.error, p.stderr)).collect(),
    };
    let results = StudyResults::Quadrature {
        functional,
        points,
        identically_zero,
    };
    Ok(assemble(study, cfg, n_range(ns), outcome, notes, results, table, plot))
}

/// `sup_y |E G'(X̄_t)|` under the driftless scheme and its log-log slope
/// in `t`.
pub fn run_smoothing_study(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let study = Study::SmoothingStudy;
    let EstimatorSpec::SmoothingProbe {
        ref test_function,
        steps,
        ref starts,
        start_count,
    } = cfg.estimator
    else {
        return Err(wrong_estimator(study, cfg));
    };
    let problem = build_problem(cfg)?;
    let g = test_function.build().map_err(CliError::Problem)?;
    let starts: Vec<f64> = if starts.is_empty() {
        (0..start_count)
            .map(|i| 2.0 * PI * i as f64 / start_count as f64)
            .collect()
    } else {
        starts.clone()
    };
    let points = smoothing_sup_profile(problem.diffusion(), &g, &starts, steps, cfg.paths, cfg.master_seed)
        .map_err(CliError::numerical("smoothing probe"))?;

    let (mut x, mut y, mut w) = (Vec::new(), Vec::new(), Vec::new());
    let (mut used, mut excluded) = (Vec::new(), Vec::new());
    for p in &points {
        if p.value > 3.0 * p.stderr && p.stderr > 0.0 {
            x.push(p.t.ln());
            y.push(p.value.ln());
            w.push((p.value / p.stderr).powi(2));
            used.push(p.t);
        } else {
            excluded.push(p.t);
        }
    }
    let fit = if used.len() < 3 {
        Err(weak_euler::Error::InsufficientPoints { usable: used.len() })
    } else {
        weighted_line_fit(&x, &y, &w).map(|f| FitSummary {
            quantity: "probe slope".into(),
            value: f.slope,
            stderr: f.slope_stderr.max(f.slope_stderr_weights),
            intercept: f.intercept,
            r_squared: f.r_squared,
            theoretical: Some(-0.5),
            used: used.clone(),
            excluded: excluded.clone(),
            slope: f.slope,
        })
    };
    let outcome = decide(cfg, fit)?;
    let table = Table {
        columns: vec!["t", "sup_abs_mean", "stderr", "argmax"],
        rows: points
            .iter()
            .map(|p| vec![p.t, p.value, p.stderr, p.argmax])
            .collect(),
    };
    let plot = PlotData {
        title: format!("{}: smoothing probe", cfg.name),
        x_label: "t".into(),
        y_label: "sup_y |E G'(X_t)|".into(),
        points: points.iter().map(|p| (p.t, p.value, p.stderr)).collect(),
    };
    let range = Some([points.first().map_or(0.0, |p| p.t), points.last().map_or(0.0, |p| p.t)]);
    let results = StudyResults::Smoothing {
        steps,
        starts,
        points,
    };
    Ok(assemble(study, cfg, range, outcome, Vec::new(), results, table, plot))
}

/// Schauder profile of the Kolmogorov solution and its blowup exponent in
/// the time to maturity.
pub fn run_pde_check(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let study = Study::PdeCheck;
    let EstimatorSpec::Schauder {
        gamma,
        beta,
        tau_min,
        tau_max,
    } = cfg.estimator
    else {
        return Err(wrong_estimator(study, cfg));
    };
    if !(0.0 < tau_min && tau_min < tau_max && tau_max <= 1.0) {
        return Err(CliError::Config(format!(
            "fit window [{tau_min}, {tau_max}] must satisfy 0 < tau_min < tau_max ≤ 1"
        )));
    }
    let problem = build_problem(cfg)?;
    let beta = match beta {
        Some(b) => b,
        None => match problem.terminal().certificate() {
            Certificate::Holder(tag) => tag.alpha,
            Certificate::C2(_) => 2.0,
            Certificate::Uncertified => {
                return Err(CliError::Config(
                    "terminal function has no regularity certificate; set estimator.beta".into(),
                ))
            }
        },
    };
    let grid = cfg.pde.grid(&problem).map_err(CliError::Problem)?;
    let solution = solve_backward_kolmogorov(&problem, &grid).map_err(CliError::numerical("PDE solve"))?;
    let u_start = solution
        .eval(Field::U, 0.0, problem.start()[0])
        .map_err(CliError::numerical("u(0, x0)"))?;
    let profile = schauder_profile(&solution, gamma, beta).map_err(CliError::numerical("Schauder profile"))?;

    let (mut x, mut y) = (Vec::new(), Vec::new());
    let (mut used, mut excluded) = (Vec::new(), Vec::new());
    let slack = 1e-9;
    for p in &profile.points {
        let tau = 1.0 - p.t;
        if tau >= tau_min * (1.0 - slack) && tau <= tau_max * (1.0 + slack) && p.top_seminorm > 0.0 {
            x.push(tau.ln());
            y.push(p.top_seminorm.ln());
            used.push(tau);
        } else {
            excluded.push(tau);
        }
    }
    let fit = if used.len() < 3 {
        Err(weak_euler::Error::InsufficientPoints { usable: used.len() })
    } else {
        weighted_line_fit(&x, &y, &vec![1.0; x.len()]).map(|f| FitSummary {
            quantity: "Schauder blowup exponent".into(),
            value: -f.slope,
            stderr: f.slope_stderr,
            intercept: f.intercept,
            r_squared: f.r_squared,
            theoretical: Some(profile.expected_exponent),
            used: used.clone(),
            excluded: Vec::new(),
            slope: f.slope,
        })
    };
    let outcome = decide(cfg, fit)?;
    let notes = vec![format!(
        "{} time levels outside the fit window [{tau_min}, {tau_max}]",
        excluded.len()
    )];
    let table = Table {
        columns: vec!["t", "tau", "norm", "top_seminorm"],
        rows: profile
            .points
            .iter()
            .map(|p| vec![p.t, 1.0 - p.t, p.norm, p.top_seminorm])
            .collect(),
    };
    let plot = PlotData {
        title: format!("{}: Schauder profile (gamma = {gamma})", cfg.name),
        x_label: "1 - t".into(),
        y_label: "sup |d^gamma u(t, .)|".into(),
        points: profile
            .points
            .iter()
            .filter(|p| p.t < 1.0)
            .map(|p| (1.0 - p.t, p.top_seminorm, 0.0))
            .collect(),
    };
    let results = StudyResults::Pde { u_start, profile };
    Ok(assemble(study, cfg, Some([tau_min, tau_max]), outcome, notes, results, table, plot))
}

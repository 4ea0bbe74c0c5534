use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;
use weak_euler::parallel::with_threads;
use weak_euler_cli::{exit, run, CliError, ExperimentConfig, Study};

#[derive(Parser)]
#[command(name = "weak-euler", version, about = "Weak-rate studies for Euler-Maruyama with Hölder drift")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Weak error against a reference value over a sweep of step counts.
    RateStudy(StudyArgs),
    /// Wasserstein-1 distance to a fine scheme on coupled ensembles.
    WassersteinStudy(StudyArgs),
    /// Drift or diffusion quadrature functionals along scheme paths.
    QuadratureStudy(StudyArgs),
    /// Smoothing probe of the driftless scheme.
    SmoothingStudy(StudyArgs),
    /// Schauder profile of the Kolmogorov solution.
    PdeCheck(StudyArgs),
}

#[derive(Args)]
struct StudyArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config. The
    /// reports still embed the configured value.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides `master_seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 uses all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

fn execute(study: Study, args: StudyArgs) -> Result<i32, CliError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg = cfg.with_seed(seed);
    }
    let out = args.out.unwrap_or_else(|| cfg.output_dir.clone());
    let report = with_threads(args.threads, || run(study, &cfg))?;
    report.write(&out, args.threads)?;
    let s = &report.summary;
    match (&s.fit, &s.fit_error) {
        (Some(f), _) => println!(
            "{}: {} = {:.4} ± {:.4} (theory {})",
            study.as_str(),
            f.quantity,
            f.value,
            f.stderr,
            f.theoretical.map_or("n/a".to_string(), |t| format!("{t:.4}"))
        ),
        (None, Some(e)) => println!("{}: fit failed: {e}", study.as_str()),
        (None, None) => println!("{}: no fit", study.as_str()),
    }
    if let Some(check) = &s.check {
        for c in &check.conditions {
            println!("  [{}] {}", if c.passed { "pass" } else { "FAIL" }, c.description);
        }
    }
    println!("reports written to {}", out.display());
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::PASS };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let (study, args) = match cli.command {
        Command::RateStudy(a) => (Study::RateStudy, a),
        Command::WassersteinStudy(a) => (Study::WassersteinStudy, a),
        Command::QuadratureStudy(a) => (Study::QuadratureStudy, a),
        Command::SmoothingStudy(a) => (Study::SmoothingStudy, a),
        Command::PdeCheck(a) => (Study::PdeCheck, a),
    };
    let code = execute(study, args).unwrap_or_else(|e| {
        error!("{e}");
        eprintln!("error: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}

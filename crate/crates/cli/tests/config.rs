use std::path::{Path, PathBuf};

use proptest::prelude::*;
use weak_euler::pde::Boundary;
use weak_euler_cli::config::{
    CheckSpec, CouplingMode, DiffusionSpec, EstimatorSpec, PdeSpec, ProblemSpec, ProfileSpec, ReferencePolicy,
};
use weak_euler_cli::{CliError, ExperimentConfig};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

const MINIMAL: &str = r#"
name = "minimal"
master_seed = 5
paths = 1000
ns = [8, 16]
output_dir = "out"

[problem]
x0 = [0.0]
drift = { family = "sine" }
diffusion = { family = "constant", value = 1.0 }
terminal = { family = "cosine" }

[reference]
policy = "fine-em"

[estimator]
kind = "weak-error"
"#;

#[test]
fn shipped_configs_parse_and_build() {
    let mut count = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.problem.build().unwrap();
            let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
            assert_eq!(cfg, again, "{}", path.display());
            count += 1;
        }
    }
    assert!(count >= 10);
}

#[test]
fn defaults_are_filled_in() {
    let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
    assert_eq!(cfg.problem.dim, 1);
    assert_eq!(cfg.estimator, EstimatorSpec::WeakError { coupling: CouplingMode::Shared });
    assert_eq!(cfg.pde, PdeSpec::default());
    assert_eq!(
        cfg.problem.drift,
        ProfileSpec::Sine {
            amplitude: 1.0,
            frequency: 1.0,
            phase: 0.0
        }
    );
    assert!(cfg.check.is_none() && cfg.fine_n.is_none());
}

fn rejects(text: &str, needle: &str) {
    match ExperimentConfig::from_toml_str(text) {
        Err(CliError::Config(m)) => assert!(m.contains(needle), "{m}"),
        other => panic!("expected a config error mentioning {needle:?}, got {other:?}"),
    }
}

#[test]
fn invalid_resolutions_are_rejected() {
    rejects(&MINIMAL.replace("ns = [8, 16]", "ns = [8, 12]"), "power of two");
    rejects(&MINIMAL.replace("ns = [8, 16]", "ns = [16, 8]"), "strictly increasing");
    rejects(&MINIMAL.replace("ns = [8, 16]", "ns = [8, 8]"), "strictly increasing");
    rejects(
        &MINIMAL.replace("ns = [8, 16]", "ns = [8, 16]\nfine_n = 24"),
        "not divisible",
    );
    rejects(&MINIMAL.replace("x0 = [0.0]", "x0 = [0.0, 1.0]"), "x0 has 2");
    rejects(&MINIMAL.replace("paths = 1000", "paths = 0"), "paths");
}

#[test]
fn unknown_keys_and_families_are_rejected() {
    assert!(ExperimentConfig::from_toml_str(&MINIMAL.replace("paths = 1000", "paths = 1000\npathz = 3")).is_err());
    assert!(ExperimentConfig::from_toml_str(&MINIMAL.replace("\"sine\"", "\"tangent\"")).is_err());
    assert!(ExperimentConfig::from_toml_str(&MINIMAL.replace("fine-em", "oracle")).is_err());
}

#[test]
fn missing_file_is_a_read_error() {
    let err = ExperimentConfig::load(Path::new("/nonexistent/config.toml")).unwrap_err();
    assert!(matches!(err, CliError::Read { .. }));
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn hash_ignores_output_dir_but_not_seed() {
    let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
    let mut moved = cfg.clone();
    moved.output_dir = PathBuf::from("/elsewhere");
    assert_eq!(cfg.hash(), moved.hash());
    assert_ne!(cfg.hash(), cfg.clone().with_seed(6).hash());
    assert_eq!(cfg.hash().len(), 64);
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6f64..1e6, (-300i32..300).prop_map(|e| 10f64.powi(e)), Just(0.0)]
}

fn profile() -> impl Strategy<Value = ProfileSpec> {
    prop_oneof![
        Just(ProfileSpec::Zero),
        finite().prop_map(|value| ProfileSpec::Constant { value }),
        finite().prop_map(|slope| ProfileSpec::Linear { slope }),
        (finite(), finite(), finite()).prop_map(|(amplitude, frequency, phase)| ProfileSpec::Sine {
            amplitude,
            frequency,
            phase
        }),
        (finite(), finite(), finite()).prop_map(|(amplitude, frequency, phase)| ProfileSpec::Cosine {
            amplitude,
            frequency,
            phase
        }),
        Just(ProfileSpec::SqrtAbsSine),
        (0.01f64..0.99, finite(), 2u32..5, 1u32..20, prop::collection::vec(finite(), 0..4)).prop_map(
            |(alpha, amplitude, base, levels, phases)| ProfileSpec::Weierstrass {
                alpha,
                amplitude,
                base,
                levels,
                phases
            }
        ),
        (-5i32..0, 0i32..8, prop::collection::vec(finite(), 0..3))
            .prop_map(|(lo, hi, phases)| ProfileSpec::Lacunary { lo, hi, phases }),
    ]
}

fn estimator() -> impl Strategy<Value = EstimatorSpec> {
    prop_oneof![
        prop_oneof![Just(CouplingMode::Shared), Just(CouplingMode::Independent)]
            .prop_map(|coupling| EstimatorSpec::WeakError { coupling }),
        (1usize..1000).prop_map(|resamples| EstimatorSpec::Wasserstein { resamples }),
        (0usize..3, 1.0f64..8.0, 8usize..64, 1usize..500).prop_map(|(coordinate, p, sub_steps, resamples)| {
            EstimatorSpec::DriftQuadrature {
                coordinate,
                p,
                sub_steps,
                resamples,
            }
        }),
        (0usize..3, 0usize..3, 8usize..64)
            .prop_map(|(i, j, sub_steps)| EstimatorSpec::DiffusionQuadrature { i, j, sub_steps }),
        (profile(), 1usize..512, prop::collection::vec(finite(), 0..4), 1usize..32).prop_map(
            |(test_function, steps, starts, start_count)| EstimatorSpec::SmoothingProbe {
                test_function,
                steps,
                starts,
                start_count
            }
        ),
        (1u32..3, prop::option::of(0.0f64..2.0), 1e-4f64..1e-2, 0.05f64..1.0).prop_map(
            |(gamma, beta, tau_min, tau_max)| EstimatorSpec::Schauder {
                gamma,
                beta,
                tau_min,
                tau_max
            }
        ),
    ]
}

fn reference() -> impl Strategy<Value = ReferencePolicy> {
    prop_oneof![
        (1e-9f64..1e-2, 0usize..5, any::<bool>()).prop_map(|(target, max_refinements, control_variate)| {
            ReferencePolicy::Pde {
                target,
                max_refinements,
                control_variate,
            }
        }),
        Just(ReferencePolicy::FineEm),
        finite().prop_map(|value| ReferencePolicy::Exact { value }),
    ]
}

fn pde() -> impl Strategy<Value = PdeSpec> {
    (
        5usize..1_000_000,
        1usize..1000,
        prop::option::of(0.1f64..100.0),
        0u32..20,
        any::<bool>(),
        prop::option::of((-50.0f64..0.0, 0.1f64..50.0)),
        1usize..9,
        1usize..9,
    )
        .prop_map(|(m_x, m_t, radius, geometric_levels, neumann, window, x_stride, t_stride)| PdeSpec {
            m_x,
            m_t,
            radius,
            geometric_levels,
            boundary: if neumann { Boundary::Neumann } else { Boundary::Dirichlet },
            window: window.map(|(a, b)| [a, b]),
            x_stride,
            t_stride,
        })
}

fn check() -> impl Strategy<Value = Option<CheckSpec>> {
    prop::option::of(
        (
            prop::option::of(finite()),
            prop::option::of(finite()),
            prop::option::of(finite()),
            prop::option::of(finite()),
            prop::option::of(finite()),
        )
            .prop_map(|(target, tolerance, band_sigmas, min, max)| CheckSpec {
                target,
                tolerance,
                band_sigmas,
                min,
                max,
            }),
    )
}

fn config() -> impl Strategy<Value = ExperimentConfig> {
    let problem = (1usize..4, finite(), profile(), profile(), any::<bool>(), finite(), finite(), profile()).prop_map(
        |(dim, x, drift, terminal, constant, mu, eps, modulation)| ProblemSpec {
            dim,
            x0: vec![x; dim],
            drift,
            diffusion: if constant {
                DiffusionSpec::Constant { value: mu }
            } else {
                DiffusionSpec::Elliptic { mu, eps, modulation }
            },
            terminal,
        },
    );
    (
        "[a-z0-9 _-]{0,20}",
        0u64..=i64::MAX as u64,
        1u64..10_000_000,
        0u32..6,
        1usize..6,
        prop::option::of(0u32..4),
        "[a-z/_]{1,20}",
        problem,
        reference(),
        estimator(),
        pde(),
        check(),
    )
        .prop_map(
            |(name, master_seed, paths, k0, count, fine_shift, dir, problem, reference, estimator, pde, check)| {
                let ns: Vec<usize> = (0..count).map(|i| 1usize << (k0 as usize + i)).collect();
                let fine_n = fine_shift.map(|s| ns.last().unwrap() << s);
                ExperimentConfig {
                    name,
                    master_seed,
                    paths,
                    ns,
                    fine_n,
                    output_dir: PathBuf::from(dir),
                    problem,
                    reference,
                    estimator,
                    pde,
                    check,
                }
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn config_round_trips_through_toml(cfg in config()) {
        let text = cfg.to_toml_string().unwrap();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.hash(), cfg.hash());
    }
}

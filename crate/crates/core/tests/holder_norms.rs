use std::f64::consts::PI;

use proptest::prelude::*;
use weak_euler::coefficients::{holder_seminorm_estimate, make_weierstrass_drift, uniform_grid_1d};
use weak_euler::holder::{
    default_eps_grid, geometric_grid, heat_smooth, negative_holder_norm, noise_increment, GriddedFunction,
};

const CELL: f64 = 2.0 * PI;

fn trig(k: f64, phase: f64) -> GriddedFunction {
    GriddedFunction::periodic_sample(0.0, CELL, 1024, |x| (k * x + phase).cos()).unwrap()
}

fn max_gap(a: &GriddedFunction, b: &GriddedFunction) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn heat_smoothing_damps_each_mode_exactly(k in 1u32..60, phase in 0.0f64..6.3, eps in 1e-5f64..1.0) {
        let k = k as f64;
        let f = trig(k, phase);
        let smoothed = heat_smooth(&f, eps).unwrap();
        let expected = f.map(|v| v * (-0.5 * k * k * eps).exp());
        prop_assert!(max_gap(&smoothed, &expected) <= 1e-12);
    }

    #[test]
    fn heat_smoothing_is_a_mean_preserving_contraction(
        amps in prop::collection::vec(-1.0f64..1.0, 1..6),
        shift in -2.0f64..2.0,
        eps in 1e-6f64..1.0,
    ) {
        let f = GriddedFunction::periodic_sample(0.0, CELL, 512, |x| {
            shift + amps.iter().enumerate().map(|(j, a)| a * ((3 * j + 1) as f64 * x).sin()).sum::<f64>()
        })
        .unwrap();
        let g = heat_smooth(&f, eps).unwrap();
        let mean = |h: &GriddedFunction| h.values().iter().sum::<f64>() / h.len() as f64;
        prop_assert!((mean(&f) - mean(&g)).abs() <= 1e-12);
        prop_assert!(g.sup() <= f.sup() + 1e-12);
    }

    #[test]
    fn heat_smoothing_is_a_semigroup(a in 1e-4f64..0.5, b in 1e-4f64..0.5) {
        let f = GriddedFunction::periodic_sample(0.0, CELL, 256, |x| x.sin().abs().sqrt()).unwrap();
        let twice = heat_smooth(&heat_smooth(&f, a).unwrap(), b).unwrap();
        let once = heat_smooth(&f, a + b).unwrap();
        prop_assert!(max_gap(&twice, &once) <= 1e-12);
    }

    #[test]
    fn sampled_seminorm_stays_below_the_declared_bound(
        alpha in 0.1f64..0.9,
        levels in 1u32..13,
        phases in prop::collection::vec(0.0f64..6.3, 13),
    ) {
        let b = make_weierstrass_drift(1, alpha, 1.0, 2, levels, &phases[..=levels as usize]).unwrap();
        let tag = b.regularity().unwrap();
        let grid = uniform_grid_1d(-PI, PI, 1e-2);
        let est = holder_seminorm_estimate(&b, alpha, &grid).unwrap();
        prop_assert!(est > 0.0 && est <= tag.holder_seminorm_bound * (1.0 + 1e-9));
        for x in &grid {
            prop_assert!(b.eval_1d(x[0]).abs() <= tag.sup_bound * (1.0 + 1e-12));
        }
    }
}

#[test]
fn negative_norm_of_a_mode_matches_its_maximiser() {
    // max_ε ε^{-α/2} e^{-k²ε/2} = (a/(k²/2))^a e^{-a} with a = −α/2
    let grid = default_eps_grid();
    assert_eq!(grid.len(), 61);
    assert!((grid[0] - 1e-6).abs() < 1e-18 && (grid[60] - 1.0).abs() < 1e-12);
    for alpha in [-0.25, -0.5, -1.0] {
        let a: f64 = -alpha / 2.0;
        let mut prev = f64::INFINITY;
        for k in [4.0, 16.0, 64.0] {
            let exact = (2.0 * a / (k * k)).powf(a) * (-a).exp();
            let got = negative_holder_norm(&trig(k, 0.0), alpha, &grid).unwrap();
            assert!(got <= exact * (1.0 + 1e-9), "{got} vs {exact}");
            assert!(got >= 0.97 * exact, "{got} vs {exact}");
            assert!(got < prev);
            prev = got;
        }
    }
    assert!(negative_holder_norm(&trig(1.0, 0.0), 0.5, &grid).is_err());
}

#[test]
fn noise_increment_is_smoothing_minus_identity() {
    let f = GriddedFunction::periodic_sample(0.0, CELL, 512, |x| (3.0 * x).cos() + 0.5 * x.sin()).unwrap();
    let (sigma, delta) = (1.3, 0.01);
    let inc = noise_increment(&f, sigma, delta).unwrap();
    let direct = heat_smooth(&f, sigma * sigma * delta).unwrap().axpy(-1.0, &f).unwrap();
    assert!(max_gap(&inc, &direct) <= 1e-13);
}

#[test]
fn geometric_grid_has_constant_ratio() {
    let g = geometric_grid(1e-3, 1.0, 7);
    assert_eq!(g.len(), 7);
    for w in g.windows(2) {
        assert!((w[1] / w[0] - 10f64.sqrt()).abs() < 1e-12);
    }
}

#[test]
fn truncated_series_stiffens_while_its_seminorm_stays_bounded() {
    // sup|b'| grows like 2^{(1−α)L}; the Hölder seminorm does not grow with L
    let fine = uniform_grid_1d(-PI, PI, 2e-4);
    let coarse = uniform_grid_1d(-PI, PI, 1e-3);
    let measure = |levels: u32| {
        let b = make_weierstrass_drift(1, 0.5, 1.0, 2, levels, &[]).unwrap();
        let lipschitz = fine
            .windows(2)
            .map(|w| (b.eval_1d(w[1][0]) - b.eval_1d(w[0][0])).abs() / (w[1][0] - w[0][0]))
            .fold(0.0, f64::max);
        (lipschitz, holder_seminorm_estimate(&b, 0.5, &coarse).unwrap())
    };
    let (l8, h8) = measure(8);
    let (l10, h10) = measure(10);
    let (l12, h12) = measure(12);
    for (lo, hi) in [(l8, l10), (l10, l12)] {
        assert!((1.6..2.4).contains(&(hi / lo)), "{lo} -> {hi}");
    }
    // increments of the seminorm shrink and stay under the L-uniform bound
    let uniform = 1.0 / (1.0 - 2f64.powf(-0.5)) + 2.0 / (1.0 - 2f64.powf(-0.5));
    assert!(h8 < h10 && h10 < h12 && h12 - h10 < h10 - h8, "{h8} {h10} {h12}");
    assert!(h12 <= uniform, "{h12} vs {uniform}");
    assert!(l12 > 16.0 * h12, "{l12} vs {h12}");
}

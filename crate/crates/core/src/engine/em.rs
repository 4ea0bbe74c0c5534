use crate::coefficients::CoefficientField;
use crate::engine::{GridScheme, IncrementTable};
use crate::error::{Error, Result};
use crate::problem::SdeProblem;

/// One scheme step `x + b h + σ ΔW` in one dimension.
#[inline(always)]
pub fn em_step_1d(x: f64, b: f64, s: f64, h: f64, dw: f64) -> f64 {
    x + b * h + s * dw
}

/// Scratch buffers for the multi-dimensional step.
struct Workspace {
    drift: Vec<f64>,
    sigma: Vec<f64>,
    dw: Vec<f64>,
}

impl Workspace {
    fn new(d: usize) -> Self {
        Self {
            drift: vec![0.0; d],
            sigma: vec![0.0; d * d],
            dw: vec![0.0; d],
        }
    }
}

/// Frozen-coefficient update `x ← x + b(x̄)δ + σ(x̄)ΔW` where the
/// coefficients are already in `ws`.
#[inline]
#[allow(clippy::needless_range_loop)]
fn apply_step(x: &mut [f64], ws: &Workspace, delta: f64) {
    let d = x.len();
    for i in 0..d {
        let mut noise = 0.0;
        for j in 0..d {
            noise += ws.sigma[i * d + j] * ws.dw[j];
        }
        x[i] = x[i] + ws.drift[i] * delta + noise;
    }
}

fn check_table(dim: usize, scheme: &GridScheme, table: &IncrementTable) -> Result<usize> {
    if table.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: table.dim(),
        });
    }
    table.ratio_for(scheme.n())
}

/// Marches the scheme, calling `visit(k, x_k)` at every grid point
/// `k = 0..=n`. `drift = None` gives the driftless scheme.
fn march(
    drift: Option<&CoefficientField>,
    sigma: &CoefficientField,
    start: &[f64],
    scheme: &GridScheme,
    table: &IncrementTable,
    mut visit: impl FnMut(usize, &[f64]),
) -> Result<Vec<f64>> {
    let d = start.len();
    let ratio = check_table(d, scheme, table)?;
    let n = scheme.n();
    let h = scheme.step();
    let mut x = start.to_vec();
    visit(0, &x);
    if d == 1 {
        let mut xs = x[0];
        for k in 0..n {
            let dw = table.aggregate_1d(k, ratio);
            let b = drift.map_or(0.0, |f| f.eval_1d(xs));
            let s = sigma.eval_1d(xs);
            xs = em_step_1d(xs, b, s, h, dw);
            if !xs.is_finite() {
                return Err(Error::NonFinite {
                    path: table.seed(),
                    step: k + 1,
                });
            }
            visit(k + 1, std::slice::from_ref(&xs));
        }
        x[0] = xs;
        return Ok(x);
    }
    let mut ws = Workspace::new(d);
    for k in 0..n {
        table.aggregate(k, ratio, &mut ws.dw);
        match drift {
            Some(f) => f.eval(&x, &mut ws.drift),
            None => ws.drift.iter_mut().for_each(|v| *v = 0.0),
        }
        sigma.eval(&x, &mut ws.sigma);
        apply_step(&mut x, &ws, h);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                path: table.seed(),
                step: k + 1,
            });
        }
        visit(k + 1, &x);
    }
    Ok(x)
}

/// Terminal value `X₁ⁿ` of the Euler–Maruyama scheme driven by `table`.
pub fn simulate_em(
    problem: &SdeProblem,
    scheme: &GridScheme,
    table: &IncrementTable,
) -> Result<Vec<f64>> {
    march(
        Some(problem.drift()),
        problem.diffusion(),
        problem.start(),
        scheme,
        table,
        |_, _| {},
    )
}

/// The grid values `X_0ⁿ, X_{1/n}ⁿ, …, X_1ⁿ`.
pub fn simulate_em_path(
    problem: &SdeProblem,
    scheme: &GridScheme,
    table: &IncrementTable,
) -> Result<Vec<Vec<f64>>> {
    let mut path = Vec::with_capacity(scheme.n() + 1);
    march(
        Some(problem.drift()),
        problem.diffusion(),
        problem.start(),
        scheme,
        table,
        |_, x| path.push(x.to_vec()),
    )?;
    Ok(path)
}

/// Drifted scheme, visiting every grid value.
pub(crate) fn march_em(
    problem: &SdeProblem,
    scheme: &GridScheme,
    table: &IncrementTable,
    visit: impl FnMut(usize, &[f64]),
) -> Result<Vec<f64>> {
    march(
        Some(problem.drift()),
        problem.diffusion(),
        problem.start(),
        scheme,
        table,
        visit,
    )
}

/// Terminal value of the driftless scheme `dX̄ = σ(X̄_{κ_n(t)})dW`.
pub fn simulate_driftless(
    sigma: &CoefficientField,
    start: &[f64],
    scheme: &GridScheme,
    table: &IncrementTable,
) -> Result<Vec<f64>> {
    march(None, sigma, start, scheme, table, |_, _| {})
}

/// Driftless scheme, visiting every grid value.
pub(crate) fn march_driftless(
    sigma: &CoefficientField,
    start: &[f64],
    scheme: &GridScheme,
    table: &IncrementTable,
    visit: impl FnMut(usize, &[f64]),
) -> Result<Vec<f64>> {
    march(None, sigma, start, scheme, table, visit)
}

/// Scheme state at the start of grid step `time_index`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathState {
    pub position: Vec<f64>,
    pub grid_position: Vec<f64>,
    pub time_index: usize,
}

impl PathState {
    pub fn new(start: &[f64]) -> Self {
        Self {
            position: start.to_vec(),
            grid_position: start.to_vec(),
            time_index: 0,
        }
    }

    /// Advances to the next grid time with one scheme step.
    pub fn advance(
        &mut self,
        problem: &SdeProblem,
        scheme: &GridScheme,
        table: &IncrementTable,
    ) -> Result<()> {
        let ratio = check_table(problem.dim(), scheme, table)?;
        let k = self.time_index;
        if k >= scheme.n() {
            return Err(Error::OutsideStep(scheme.time(k + 1)));
        }
        let next = frozen_update(
            problem,
            &self.grid_position,
            scheme.step(),
            table,
            k * ratio,
            (k + 1) * ratio,
        );
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                path: table.seed(),
                step: k + 1,
            });
        }
        self.grid_position = next.clone();
        self.position = next;
        self.time_index = k + 1;
        Ok(())
    }
}

fn frozen_update(
    problem: &SdeProblem,
    anchor: &[f64],
    delta: f64,
    table: &IncrementTable,
    from: usize,
    to: usize,
) -> Vec<f64> {
    let d = anchor.len();
    if d == 1 {
        let x = anchor[0];
        let b = problem.drift().eval_1d(x);
        let s = problem.diffusion().eval_1d(x);
        return vec![em_step_1d(x, b, s, delta, table.partial_sum(from, to, 0))];
    }
    let mut ws = Workspace::new(d);
    problem.drift().eval(anchor, &mut ws.drift);
    problem.diffusion().eval(anchor, &mut ws.sigma);
    for (i, w) in ws.dw.iter_mut().enumerate() {
        *w = table.partial_sum(from, to, i);
    }
    let mut x = anchor.to_vec();
    apply_step(&mut x, &ws, delta);
    x
}

/// Scheme value at an intra-step time `r`:
/// `X_κ + b(X_κ)(r − κ) + σ(X_κ)(W_r − W_κ)` with `κ = κ_n(r)` the state's
/// grid time. `r` must lie on the table's grid.
pub fn sub_step_position(
    problem: &SdeProblem,
    scheme: &GridScheme,
    state: &PathState,
    r: f64,
    table: &IncrementTable,
) -> Result<Vec<f64>> {
    let ratio = check_table(problem.dim(), scheme, table)?;
    let fine = table.fine_n() as f64;
    let j_real = r * fine;
    let j = j_real.round();
    if (j_real - j).abs() > 1e-9 * fine.max(1.0) || j < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "time {r} is not on the increment grid"
        )));
    }
    let j = j as usize;
    let start = state.time_index * ratio;
    if j < start || j > start + ratio {
        return Err(Error::OutsideStep(r));
    }
    let delta = (j - start) as f64 / table.fine_n() as f64;
    Ok(frozen_update(
        problem,
        &state.grid_position,
        delta,
        table,
        start,
        j,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::Profile;
    use crate::stats::Welford;

    fn problem(drift: Profile, sigma: f64, x0: f64, g: Profile) -> SdeProblem {
        SdeProblem::new(
            CoefficientField::componentwise(1, drift).unwrap(),
            CoefficientField::constant_diffusion(1, sigma).unwrap(),
            vec![x0],
            CoefficientField::summed(1, g).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn deterministic_linear_recursion() {
        let p = problem(Profile::Linear(-1.0), 0.0, 1.0, Profile::Linear(1.0));
        for n in [1usize, 3, 10, 64] {
            let s = GridScheme::new(n).unwrap();
            let t = IncrementTable::generate(1, 0, n, 1).unwrap();
            let x = simulate_em(&p, &s, &t).unwrap()[0];
            let exact = (1.0 - 1.0 / n as f64).powi(n as i32);
            assert!((x - exact).abs() < 1e-14, "n={n}: {x} vs {exact}");
        }
    }

    #[test]
    fn additive_noise_is_exact_brownian_endpoint() {
        let sigma = CoefficientField::constant_diffusion(2, 1.0).unwrap();
        let t = IncrementTable::generate(9, 4, 64, 2).unwrap();
        let w1: Vec<f64> = (0..2).map(|i| t.partial_sum(0, 64, i)).collect();
        for n in [1usize, 4, 16, 64] {
            let s = GridScheme::new(n).unwrap();
            let x = simulate_driftless(&sigma, &[0.5, -1.0], &s, &t).unwrap();
            assert!((x[0] - (0.5 + w1[0])).abs() < 1e-13);
            assert!((x[1] - (-1.0 + w1[1])).abs() < 1e-13);
        }
    }

    #[test]
    fn constant_drift_mean_shift() {
        let c = 0.7;
        let p = problem(Profile::Constant(c), 1.0, 0.2, Profile::Linear(1.0));
        let s = GridScheme::new(8).unwrap();
        let mut acc = Welford::default();
        let mut t = IncrementTable::generate(2, 0, 8, 1).unwrap();
        for path in 0..20_000 {
            t.regenerate(2, path);
            acc.push(simulate_em(&p, &s, &t).unwrap()[0]);
        }
        assert!(acc.estimate().within(0.2 + c, 3.0));
    }

    #[test]
    fn driftless_second_moment() {
        let c = 0.8;
        let sigma = CoefficientField::constant_diffusion(2, c).unwrap();
        let s = GridScheme::new(4).unwrap();
        let mut mean0 = Welford::default();
        let mut sq = Welford::default();
        let mut t = IncrementTable::generate(6, 0, 8, 2).unwrap();
        for path in 0..20_000 {
            t.regenerate(6, path);
            let x = simulate_driftless(&sigma, &[1.0, 2.0], &s, &t).unwrap();
            mean0.push(x[0]);
            sq.push((x[0] - 1.0).powi(2) + (x[1] - 2.0).powi(2));
        }
        assert!(mean0.estimate().within(1.0, 3.0), "{:?}", mean0.estimate());
        assert!(sq.estimate().within(2.0 * c * c, 3.0));
    }

    #[test]
    fn coupling_is_bit_exact() {
        let b = crate::coefficients::make_weierstrass_drift(1, 0.5, 1.0, 2, 12, &[]).unwrap();
        let (sigma, _) = crate::coefficients::make_elliptic_diffusion(
            1,
            1.0,
            0.3,
            crate::coefficients::Modulation::Diagonal(Profile::sine(1.0)),
        )
        .unwrap();
        let p = SdeProblem::new(
            b,
            sigma,
            vec![0.1],
            CoefficientField::summed(1, Profile::cosine(1.0)).unwrap(),
        )
        .unwrap();
        let s = GridScheme::new(16).unwrap();
        for path in 0..50 {
            let fine = IncrementTable::generate(8, path, 64, 1).unwrap();
            let coarse = fine.coarsen(16).unwrap();
            assert_eq!(
                simulate_em(&p, &s, &fine).unwrap(),
                simulate_em(&p, &s, &coarse).unwrap()
            );
        }
    }

    #[test]
    fn sub_step_endpoints_and_linear_interpolation() {
        let b = crate::coefficients::make_weierstrass_drift(1, 0.5, 1.0, 2, 6, &[]).unwrap();
        let (sigma, _) = crate::coefficients::make_elliptic_diffusion(
            1,
            1.0,
            0.3,
            crate::coefficients::Modulation::Diagonal(Profile::sine(1.0)),
        )
        .unwrap();
        let p = SdeProblem::new(
            b.clone(),
            sigma,
            vec![0.3],
            CoefficientField::summed(1, Profile::cosine(1.0)).unwrap(),
        )
        .unwrap();
        let s = GridScheme::new(8).unwrap();
        let t = IncrementTable::generate(4, 2, 128, 1).unwrap();
        let path = simulate_em_path(&p, &s, &t).unwrap();
        let mut state = PathState::new(p.start());
        for k in 0..8 {
            let kappa = s.time(k);
            assert_eq!(
                sub_step_position(&p, &s, &state, kappa, &t).unwrap(),
                state.grid_position
            );
            let end = sub_step_position(&p, &s, &state, s.time(k + 1), &t).unwrap();
            assert_eq!(end, path[k + 1]);
            assert!(sub_step_position(&p, &s, &state, s.time(k + 1) + 1.0 / 128.0, &t).is_err());
            state.advance(&p, &s, &t).unwrap();
            assert_eq!(state.position, path[k + 1]);
        }

        // σ ≡ 0: straight line along the frozen drift
        let q = SdeProblem::new(
            b.clone(),
            CoefficientField::constant_diffusion(1, 0.0).unwrap(),
            vec![0.3],
            CoefficientField::summed(1, Profile::cosine(1.0)).unwrap(),
        )
        .unwrap();
        let state = PathState::new(q.start());
        for j in 0..=16 {
            let r = j as f64 / 128.0;
            let x = sub_step_position(&q, &s, &state, r, &t).unwrap()[0];
            assert!((x - (0.3 + b.eval_1d(0.3) * r)).abs() < 1e-15);
        }
        assert!(sub_step_position(&q, &s, &state, 0.001, &t).is_err());
    }

    #[test]
    fn explosion_is_reported() {
        let p = problem(Profile::Linear(1e308), 0.0, 1.0, Profile::Linear(1.0));
        let s = GridScheme::new(4).unwrap();
        let t = IncrementTable::generate(1, 0, 4, 1).unwrap();
        assert!(matches!(
            simulate_em(&p, &s, &t),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn multi_dimensional_matches_one_dimensional_route() {
        // Diagonal 2D problem evolves each coordinate like the 1D problem.
        let b1 = crate::coefficients::make_weierstrass_drift(1, 0.5, 1.0, 2, 8, &[]).unwrap();
        let b2 = crate::coefficients::make_weierstrass_drift(2, 0.5, 1.0, 2, 8, &[]).unwrap();
        let s1 = CoefficientField::constant_diffusion(1, 0.9).unwrap();
        let s2 = CoefficientField::constant_diffusion(2, 0.9).unwrap();
        let g1 = CoefficientField::summed(1, Profile::cosine(1.0)).unwrap();
        let g2 = CoefficientField::summed(2, Profile::cosine(1.0)).unwrap();
        let p1 = SdeProblem::new(b1, s1, vec![0.4], g1).unwrap();
        let p2 = SdeProblem::new(b2, s2, vec![0.4, 0.4], g2).unwrap();
        let s = GridScheme::new(32).unwrap();
        let t2 = IncrementTable::generate(1, 1, 32, 2).unwrap();
        let first: Vec<f64> = (0..32).map(|k| t2.row(k)[0]).collect();
        let t1 = IncrementTable::from_increments(32, 1, first).unwrap();
        let x2 = simulate_em(&p2, &s, &t2).unwrap();
        let x1 = simulate_em(&p1, &s, &t1).unwrap();
        assert!((x2[0] - x1[0]).abs() < 1e-12);
    }
}

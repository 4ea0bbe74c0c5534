//! Backward Kolmogorov solver on a truncated one-dimensional domain.
//!
//! Solves `∂_t u + ½σ²(x)∂ₓₓu + b(x)∂ₓu = 0`, `u(1,·) = g`, by marching
//! `τ = 1 − t` forward with Crank–Nicolson in time and centred differences
//! in space. The time grid is geometrically graded towards `t = 1`
//! (`τ = 2^{-k}/M_t`) followed by `M_t` uniform steps; the first two steps
//! are implicit Euler to damp the Crank–Nicolson response to rough terminal
//! data.
//!
//! The stored solution can be restricted to a space window and strided in
//! space and time so that fine solves stay within memory.

use std::io::{self, Write};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::coefficients::Certificate;
use crate::error::{Error, Result};
use crate::problem::SdeProblem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// `∂ₓu = 0` at both ends.
    Neumann,
    /// `u = g` at both ends for all times.
    Dirichlet,
}

/// Solver grid and storage layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdeGrid {
    pub x_lo: f64,
    pub x_hi: f64,
    /// Solver nodes including both boundaries.
    pub m_x: usize,
    /// Uniform time steps on `[0, 1]`.
    pub m_t: usize,
    /// Geometric refinement levels inside the first uniform step.
    pub geometric_levels: u32,
    pub boundary: Boundary,
    /// Space window kept in the stored solution (whole domain if `None`).
    pub window: Option<(f64, f64)>,
    /// Keep every `x_stride`-th node.
    pub x_stride: usize,
    /// Keep every `t_stride`-th uniform time level (geometric levels are
    /// always kept).
    pub t_stride: usize,
}

const RANNACHER_STEPS: usize = 2;

impl PdeGrid {
    pub fn new(x_lo: f64, x_hi: f64, m_x: usize, m_t: usize) -> Self {
        Self {
            x_lo,
            x_hi,
            m_x,
            m_t,
            geometric_levels: 10,
            boundary: Boundary::Neumann,
            window: None,
            x_stride: 1,
            t_stride: 1,
        }
    }

    /// Domain `[x₀ − R, x₀ + R]` with `R = 8(sup|σ| + sup|b|)`, and an odd
    /// node count so that `x₀` is a node.
    pub fn around(problem: &SdeProblem, m_x: usize, m_t: usize) -> Result<Self> {
        let radius = default_radius(problem)?;
        let x0 = problem.start()[0];
        let m_x = if m_x.is_multiple_of(2) { m_x + 1 } else { m_x };
        Ok(Self::new(x0 - radius, x0 + radius, m_x, m_t))
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_geometric_levels(mut self, levels: u32) -> Self {
        self.geometric_levels = levels;
        self
    }

    pub fn with_window(mut self, lo: f64, hi: f64) -> Self {
        self.window = Some((lo, hi));
        self
    }

    pub fn with_strides(mut self, x_stride: usize, t_stride: usize) -> Self {
        self.x_stride = x_stride.max(1);
        self.t_stride = t_stride.max(1);
        self
    }

    pub fn dx(&self) -> f64 {
        (self.x_hi - self.x_lo) / (self.m_x - 1) as f64
    }

    /// Halves `Δx` and every time step, keeping the stored layout.
    pub fn refined(&self) -> Self {
        Self {
            m_x: 2 * self.m_x - 1,
            m_t: 2 * self.m_t,
            geometric_levels: self.geometric_levels + 1,
            x_stride: 2 * self.x_stride,
            t_stride: 2 * self.t_stride,
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.x_hi > self.x_lo) || !self.x_lo.is_finite() || !self.x_hi.is_finite() {
            return Err(Error::InvalidParameter("empty or non-finite space domain".into()));
        }
        if self.m_x < 5 || self.m_t < 1 {
            return Err(Error::InvalidParameter(
                "PDE grid needs at least 5 nodes and one time step".into(),
            ));
        }
        Ok(())
    }

    /// `τ` levels (time to maturity) from 0 to 1.
    fn tau_levels(&self) -> Vec<(f64, bool)> {
        let mt = self.m_t as f64;
        let mut taus = vec![(0.0, true)];
        for k in (1..=self.geometric_levels).rev() {
            taus.push((2f64.powi(-(k as i32)) / mt, true));
        }
        for j in 1..=self.m_t {
            let keep = j % self.t_stride == 0 || j == self.m_t || j == 1;
            taus.push((j as f64 / mt, keep));
        }
        taus
    }
}

/// Truncation radius `8(sup|σ| + sup|b|)`.
pub fn default_radius(problem: &SdeProblem) -> Result<f64> {
    if problem.dim() != 1 {
        return Err(Error::InvalidParameter(
            "PDE reference is one-dimensional".into(),
        ));
    }
    let sup_b = match problem.drift().certificate() {
        Certificate::Holder(t) => t.sup_bound,
        Certificate::C2(b) => b.sup,
        Certificate::Uncertified => {
            return Err(Error::InvalidParameter(
                "drift has no sup bound; give the domain explicitly".into(),
            ))
        }
    };
    let sup_s = match problem.diffusion().certificate() {
        Certificate::Holder(t) => t.sup_bound,
        Certificate::C2(b) => b.sup,
        Certificate::Uncertified => {
            return Err(Error::InvalidParameter(
                "diffusion has no sup bound; give the domain explicitly".into(),
            ))
        }
    };
    Ok(8.0 * (sup_s + sup_b))
}

/// Which stored field to interpolate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    U,
    Du,
    D2u,
}

/// Stored `u`, `∂ₓu`, `∂ₓₓu` on a (t, x) grid with times decreasing from
/// 1 to 0.
#[derive(Clone, Debug)]
pub struct PdeSolution {
    times: Vec<f64>,
    x_lo: f64,
    dx: f64,
    m_x: usize,
    u: Vec<f64>,
    du: Vec<f64>,
    d2u: Vec<f64>,
    grid: PdeGrid,
    center_value: f64,
}

impl PdeSolution {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn space(&self) -> Vec<f64> {
        (0..self.m_x).map(|i| self.node_x(i)).collect()
    }

    pub fn node_x(&self, i: usize) -> f64 {
        self.x_lo + i as f64 * self.dx
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.x_lo, self.node_x(self.m_x - 1))
    }

    pub fn len_x(&self) -> usize {
        self.m_x
    }

    /// The solver grid actually used (after any Péclet refinement).
    pub fn grid(&self) -> &PdeGrid {
        &self.grid
    }

    fn slice(&self, field: Field) -> &[f64] {
        match field {
            Field::U => &self.u,
            Field::Du => &self.du,
            Field::D2u => &self.d2u,
        }
    }

    /// Values of `field` at stored time index `j`.
    pub fn level(&self, field: Field, j: usize) -> &[f64] {
        &self.slice(field)[j * self.m_x..(j + 1) * self.m_x]
    }

    /// `u(0, x)` at the solver node closest to the middle of the domain,
    /// read before striding.
    pub fn center_value(&self) -> f64 {
        self.center_value
    }

    /// Bilinear interpolation, `None` outside the stored hull.
    #[inline]
    pub fn try_eval(&self, field: Field, t: f64, x: f64) -> Option<f64> {
        let (j, wt) = self.time_bracket(t)?;
        let s = (x - self.x_lo) / self.dx;
        let last = (self.m_x - 1) as f64;
        if !(s >= -1e-9 && s <= last + 1e-9) {
            return None;
        }
        let snapped = s.round();
        let (i, wx) = if (s - snapped).abs() < 1e-9 {
            (snapped as usize, 0.0)
        } else {
            let i = s.floor() as usize;
            (i, s - i as f64)
        };
        let data = self.slice(field);
        let at = |jj: usize| {
            let row = &data[jj * self.m_x..(jj + 1) * self.m_x];
            if wx == 0.0 {
                row[i]
            } else {
                row[i] * (1.0 - wx) + row[i + 1] * wx
            }
        };
        if wt == 0.0 {
            Some(at(j))
        } else {
            Some(at(j) * (1.0 - wt) + at(j + 1) * wt)
        }
    }

    /// Index `j` and weight `w` with `t = (1−w) times[j] + w times[j+1]`.
    #[inline]
    fn time_bracket(&self, t: f64) -> Option<(usize, f64)> {
        let first = self.times[0];
        let last = *self.times.last()?;
        if !(t <= first + 1e-12 && t >= last - 1e-12) {
            return None;
        }
        // times are decreasing
        let idx = self.times.partition_point(|&s| s > t);
        if idx < self.times.len() && self.times[idx] == t {
            return Some((idx, 0.0));
        }
        if idx == 0 {
            return Some((0, 0.0));
        }
        if idx >= self.times.len() {
            return Some((self.times.len() - 1, 0.0));
        }
        let (t0, t1) = (self.times[idx - 1], self.times[idx]);
        Some((idx - 1, (t0 - t) / (t0 - t1)))
    }

    pub fn eval(&self, field: Field, t: f64, x: f64) -> Result<f64> {
        self.try_eval(field, t, x).ok_or(Error::OutOfHull { t, x })
    }

    pub fn eval_u(&self, t: f64, x: f64) -> Result<f64> {
        self.eval(Field::U, t, x)
    }

    pub fn eval_du(&self, t: f64, x: f64) -> Result<f64> {
        self.eval(Field::Du, t, x)
    }

    pub fn eval_d2u(&self, t: f64, x: f64) -> Result<f64> {
        self.eval(Field::D2u, t, x)
    }

    /// Writes `t,x,u,du,d2u` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,x,u,du,d2u")?;
        for (j, t) in self.times.iter().enumerate() {
            for i in 0..self.m_x {
                let k = j * self.m_x + i;
                writeln!(
                    w,
                    "{t:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                    self.node_x(i),
                    self.u[k],
                    self.du[k],
                    self.d2u[k]
                )?;
            }
        }
        Ok(())
    }
}

/// Pre-factored tridiagonal system `(I − θΔL)`.
struct Factor {
    delta: f64,
    theta: f64,
    sub: Vec<f64>,
    cp: Vec<f64>,
    inv: Vec<f64>,
}

struct Operator {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    dirichlet: bool,
}

impl Operator {
    fn apply(&self, u: &[f64], out: &mut [f64], scale: f64) {
        let m = u.len();
        for i in 0..m {
            let mut v = self.diag[i] * u[i];
            if i > 0 {
                v += self.lower[i] * u[i - 1];
            }
            if i + 1 < m {
                v += self.upper[i] * u[i + 1];
            }
            out[i] = u[i] + scale * v;
        }
        if self.dirichlet {
            out[0] = u[0];
            out[m - 1] = u[m - 1];
        }
    }

    fn factor(&self, delta: f64, theta: f64) -> Factor {
        let m = self.diag.len();
        let k = theta * delta;
        let mut sub = vec![0.0; m];
        let mut cp = vec![0.0; m];
        let mut inv = vec![0.0; m];
        let mut prev_cp = 0.0;
        for i in 0..m {
            let (a, b, c) = if self.dirichlet && (i == 0 || i == m - 1) {
                (0.0, 1.0, 0.0)
            } else {
                (-k * self.lower[i], 1.0 - k * self.diag[i], -k * self.upper[i])
            };
            let denom = b - a * prev_cp;
            inv[i] = 1.0 / denom;
            cp[i] = c * inv[i];
            sub[i] = a;
            prev_cp = cp[i];
        }
        Factor {
            delta,
            theta,
            sub,
            cp,
            inv,
        }
    }
}

impl Factor {
    #[allow(clippy::needless_range_loop)]
    fn solve(&self, rhs: &mut [f64]) {
        let m = rhs.len();
        let mut prev = 0.0;
        for i in 0..m {
            prev = (rhs[i] - self.sub[i] * prev) * self.inv[i];
            rhs[i] = prev;
        }
        for i in (0..m - 1).rev() {
            rhs[i] -= self.cp[i] * rhs[i + 1];
        }
    }
}

fn derivatives(u: &[f64], dx: f64, boundary: Boundary, du: &mut [f64], d2u: &mut [f64]) {
    let m = u.len();
    let inv2 = 1.0 / (2.0 * dx);
    let invsq = 1.0 / (dx * dx);
    for i in 1..m - 1 {
        du[i] = (u[i + 1] - u[i - 1]) * inv2;
        d2u[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * invsq;
    }
    match boundary {
        Boundary::Neumann => {
            du[0] = 0.0;
            du[m - 1] = 0.0;
            d2u[0] = 2.0 * (u[1] - u[0]) * invsq;
            d2u[m - 1] = 2.0 * (u[m - 2] - u[m - 1]) * invsq;
        }
        Boundary::Dirichlet => {
            du[0] = (u[1] - u[0]) / dx;
            du[m - 1] = (u[m - 1] - u[m - 2]) / dx;
            d2u[0] = d2u[1];
            d2u[m - 1] = d2u[m - 2];
        }
    }
}

/// Refines `m_x` until `|b|Δx ≤ σ²` holds at every node.
fn peclet_refined(problem: &SdeProblem, grid: &PdeGrid) -> PdeGrid {
    let mut g = grid.clone();
    loop {
        let dx = g.dx();
        let violated = (0..g.m_x).any(|i| {
            let x = g.x_lo + i as f64 * dx;
            let s = problem.diffusion().eval_1d(x);
            problem.drift().eval_1d(x).abs() * dx > s * s
        });
        if !violated || g.m_x > (1 << 26) {
            return g;
        }
        warn!(
            "grid Péclet condition violated at dx = {dx:e}; refining to {} nodes",
            2 * g.m_x - 1
        );
        g.m_x = 2 * g.m_x - 1;
        g.x_stride *= 2;
    }
}

/// Crank–Nicolson solve of the backward Kolmogorov problem for a
/// one-dimensional SDE.
pub fn solve_backward_kolmogorov(problem: &SdeProblem, grid: &PdeGrid) -> Result<PdeSolution> {
    if problem.dim() != 1 {
        return Err(Error::InvalidParameter(
            "PDE reference is one-dimensional".into(),
        ));
    }
    grid.validate()?;
    let grid = peclet_refined(problem, grid);
    let m = grid.m_x;
    let dx = grid.dx();
    let xs: Vec<f64> = (0..m).map(|i| grid.x_lo + i as f64 * dx).collect();

    let mut op = Operator {
        lower: vec![0.0; m],
        diag: vec![0.0; m],
        upper: vec![0.0; m],
        dirichlet: grid.boundary == Boundary::Dirichlet,
    };
    for (i, &x) in xs.iter().enumerate() {
        let s = problem.diffusion().eval_1d(x);
        let a = 0.5 * s * s / (dx * dx);
        let b = problem.drift().eval_1d(x) / (2.0 * dx);
        op.lower[i] = a - b;
        op.diag[i] = -2.0 * a;
        op.upper[i] = a + b;
    }
    if grid.boundary == Boundary::Neumann {
        // ghost node u_{-1} = u_1
        op.upper[0] += op.lower[0];
        op.lower[0] = 0.0;
        op.lower[m - 1] += op.upper[m - 1];
        op.upper[m - 1] = 0.0;
    }

    // stored nodes: aligned with the central node so x₀ is kept
    let center = (m - 1) / 2;
    let stride = grid.x_stride;
    let (w_lo, w_hi) = grid.window.unwrap_or((grid.x_lo, grid.x_hi));
    let lo_idx = ((w_lo - grid.x_lo) / dx).ceil().max(0.0) as usize;
    let hi_idx = (((w_hi - grid.x_lo) / dx).floor() as usize).min(m - 1);
    if lo_idx >= hi_idx {
        return Err(Error::InvalidParameter("stored window is empty".into()));
    }
    let first = if lo_idx <= center {
        center - ((center - lo_idx) / stride) * stride
    } else {
        center + (lo_idx - center).div_ceil(stride) * stride
    };
    let kept: Vec<usize> = (first..=hi_idx).step_by(stride).collect();
    if kept.len() < 2 {
        return Err(Error::InvalidParameter("stored window holds fewer than two nodes".into()));
    }

    let taus = grid.tau_levels();
    let stored_levels = taus.iter().filter(|(_, keep)| *keep).count();
    let mut times = Vec::with_capacity(stored_levels);
    let mut su = Vec::with_capacity(stored_levels * kept.len());
    let mut sdu = Vec::with_capacity(stored_levels * kept.len());
    let mut sd2u = Vec::with_capacity(stored_levels * kept.len());

    let mut u: Vec<f64> = xs.iter().map(|&x| problem.terminal().eval_1d(x)).collect();
    let mut rhs = vec![0.0; m];
    let mut du = vec![0.0; m];
    let mut d2u = vec![0.0; m];
    let mut store = |tau: f64, u: &[f64], du: &mut [f64], d2u: &mut [f64]| {
        derivatives(u, dx, grid.boundary, du, d2u);
        times.push(1.0 - tau);
        for &i in &kept {
            su.push(u[i]);
            sdu.push(du[i]);
            sd2u.push(d2u[i]);
        }
    };
    store(0.0, &u, &mut du, &mut d2u);

    let mut factor: Option<Factor> = None;
    for (step, w) in taus.windows(2).enumerate() {
        let (tau0, tau1) = (w[0].0, w[1].0);
        let delta = tau1 - tau0;
        let theta = if step < RANNACHER_STEPS { 1.0 } else { 0.5 };
        let stale = factor
            .as_ref()
            .is_none_or(|f| f.delta != delta || f.theta != theta);
        if stale {
            factor = Some(op.factor(delta, theta));
        }
        op.apply(&u, &mut rhs, (1.0 - theta) * delta);
        factor.as_ref().expect("factor set above").solve(&mut rhs);
        std::mem::swap(&mut u, &mut rhs);
        if w[1].1 {
            if u.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteSolution);
            }
            store(tau1, &u, &mut du, &mut d2u);
        }
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSolution);
    }
    let center_value = u[center];

    Ok(PdeSolution {
        times,
        x_lo: xs[kept[0]],
        dx: dx * stride as f64,
        m_x: kept.len(),
        u: su,
        du: sdu,
        d2u: sd2u,
        grid,
        center_value,
    })
}

/// Result of a Richardson-extrapolated Feynman–Kac solve.
#[derive(Clone, Debug)]
pub struct FkReference {
    /// Extrapolated `u(0, x₀) = E g(X₁)`.
    pub value: f64,
    /// `|u_fine − u_coarse|` at `x₀`.
    pub error_estimate: f64,
    pub coarse_value: f64,
    pub fine_value: f64,
    /// The finer of the two solves.
    pub solution: PdeSolution,
}

/// `u(0, x₀)` at the start point, read at solver resolution when `x₀` is
/// the central node.
fn start_value(solution: &PdeSolution, x0: f64) -> Result<f64> {
    let g = solution.grid();
    let center = g.x_lo + ((g.m_x - 1) / 2) as f64 * g.dx();
    if (center - x0).abs() <= 1e-12 * (1.0 + x0.abs()) {
        Ok(solution.center_value())
    } else {
        solution.eval_u(0.0, x0)
    }
}

/// Solves on `grid` and on its refinement, Richardson-extrapolates, and
/// keeps refining (at most `max_refinements` times) until the two
/// resolutions agree to within `target`.
pub fn feynman_kac_reference(
    problem: &SdeProblem,
    grid: &PdeGrid,
    target: f64,
    max_refinements: usize,
) -> Result<FkReference> {
    let x0 = problem.start()[0];
    let mut coarse = solve_backward_kolmogorov(problem, grid)?;
    let mut coarse_value = start_value(&coarse, x0)?;
    let mut current = grid.clone();
    let mut estimate = f64::INFINITY;
    for _ in 0..=max_refinements {
        current = current.refined();
        let fine = solve_backward_kolmogorov(problem, &current)?;
        let fine_value = start_value(&fine, x0)?;
        estimate = (fine_value - coarse_value).abs();
        if estimate <= target {
            return Ok(FkReference {
                value: fine_value + (fine_value - coarse_value) / 3.0,
                error_estimate: estimate,
                coarse_value,
                fine_value,
                solution: fine,
            });
        }
        coarse = fine;
        coarse_value = fine_value;
    }
    drop(coarse);
    Err(Error::NoConvergence { estimate, target })
}

/// One entry of a Schauder profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchauderPoint {
    pub t: f64,
    /// Discrete `C^γ` norm (sum of the sup norms of `u, …, ∂^γ u`).
    pub norm: f64,
    /// `sup|∂^γ u(t,·)|` alone; its blowup carries the exponent.
    pub top_seminorm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchauderProfile {
    pub gamma: u32,
    pub beta: f64,
    /// `max(0, (γ − β)/2)`
    pub expected_exponent: f64,
    pub points: Vec<SchauderPoint>,
}

/// Time profile of the discrete `C^γ` norm of `u(t,·)` over the stored
/// window, `γ ∈ {1, 2}`.
pub fn schauder_profile(solution: &PdeSolution, gamma: u32, beta: f64) -> Result<SchauderProfile> {
    if !(1..=2).contains(&gamma) {
        return Err(Error::InvalidParameter(format!(
            "discrete Schauder norms support γ ∈ {{1, 2}}, got {gamma}"
        )));
    }
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let points = (0..solution.times().len())
        .map(|j| {
            let s0 = sup(solution.level(Field::U, j));
            let s1 = sup(solution.level(Field::Du, j));
            let (norm, top) = if gamma == 1 {
                (s0 + s1, s1)
            } else {
                let s2 = sup(solution.level(Field::D2u, j));
                (s0 + s1 + s2, s2)
            };
            SchauderPoint {
                t: solution.times()[j],
                norm,
                top_seminorm: top,
            }
        })
        .collect();
    Ok(SchauderProfile {
        gamma,
        beta,
        expected_exponent: ((gamma as f64 - beta) / 2.0).max(0.0),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{CoefficientField, Profile};

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
    fn linear_terminal_is_preserved() {
        let p = problem(Profile::Zero, 1.0, 0.3, Profile::Linear(1.0));
        let grid = PdeGrid::new(-10.0, 10.0, 401, 50).with_boundary(Boundary::Dirichlet);
        let sol = solve_backward_kolmogorov(&p, &grid).unwrap();
        assert!((sol.eval_u(0.0, 0.3).unwrap() - 0.3).abs() < 1e-10);
        for t in [0.0, 0.37, 0.999] {
            for x in [-2.0, 0.0, 1.3] {
                assert!((sol.eval_du(t, x).unwrap() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn terminal_condition_is_exact() {
        let p = problem(Profile::sine(0.5), 1.0, 0.0, Profile::cosine(1.0));
        let grid = PdeGrid::new(-8.0, 8.0, 321, 40);
        let sol = solve_backward_kolmogorov(&p, &grid).unwrap();
        assert_eq!(sol.times()[0], 1.0);
        for (i, x) in sol.space().iter().enumerate() {
            assert_eq!(sol.level(Field::U, 0)[i], x.cos());
            assert_eq!(sol.eval_u(1.0, *x).unwrap(), x.cos());
        }
        assert!(sol.eval_u(0.5, 9.0).is_err());
        assert!(matches!(sol.eval_du(-0.1, 0.0), Err(Error::OutOfHull { .. })));
    }

    #[test]
    fn heat_semigroup_on_cosine() {
        let p = problem(Profile::Zero, 1.0, 0.0, Profile::cosine(1.0));
        let grid = PdeGrid::new(-12.0, 12.0, 2401, 200);
        let sol = solve_backward_kolmogorov(&p, &grid).unwrap();
        assert!((sol.eval_u(0.0, 0.0).unwrap() - (-0.5f64).exp()).abs() < 2e-5);
        for t in [0.2, 0.6, 0.9] {
            for x in [-1.0, 0.4, 2.0] {
                let exact = -(-(1.0 - t) / 2.0f64).exp() * f64::cos(x);
                assert!((sol.eval_d2u(t, x).unwrap() - exact).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn eigenfunction_decay_and_maximum_principle() {
        let p = problem(Profile::Zero, 2f64.sqrt(), 0.0, Profile::sine(1.0));
        let grid = PdeGrid::new(-20.0, 20.0, 4001, 200);
        let sol = solve_backward_kolmogorov(&p, &grid).unwrap();
        for &t in &[0.0, 0.5] {
            for x in [-1.0, 0.5, 1.5] {
                let v = sol.eval_u(t, x).unwrap();
                assert!((v - (-(1.0 - t)).exp() * f64::sin(x)).abs() < 1e-4);
            }
        }
        assert!(sol.level(Field::U, sol.times().len() - 1).iter().all(|v| v.abs() <= 1.0 + 1e-12));
    }

    #[test]
    fn ornstein_uhlenbeck_mean() {
        let p = problem(Profile::Linear(-1.0), 1.0, 1.0, Profile::Linear(1.0));
        let grid = PdeGrid::new(-9.0, 11.0, 2001, 400).with_boundary(Boundary::Dirichlet);
        let sol = solve_backward_kolmogorov(&p, &grid).unwrap();
        assert!((sol.eval_u(0.0, 1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-5);
    }

    #[test]
    fn richardson_reference_on_heat_cosine() {
        let p = problem(Profile::Zero, 1.0, 0.0, Profile::cosine(1.0));
        let grid = PdeGrid::new(-12.0, 12.0, 1201, 100);
        let r = feynman_kac_reference(&p, &grid, 1e-4, 3).unwrap();
        assert!((r.value - (-0.5f64).exp()).abs() < 1e-6, "{r:?}");
        assert!(r.error_estimate <= 1e-4);
    }

    #[test]
    fn stored_grid_matches_full_grid() {
        let p = problem(Profile::sine(0.4), 1.0, 0.0, Profile::cosine(1.0));
        let full = solve_backward_kolmogorov(&p, &PdeGrid::new(-10.0, 10.0, 801, 40)).unwrap();
        let part = solve_backward_kolmogorov(
            &p,
            &PdeGrid::new(-10.0, 10.0, 801, 40)
                .with_window(-3.0, 3.0)
                .with_strides(4, 5),
        )
        .unwrap();
        assert_eq!(part.center_value(), full.center_value());
        for &t in part.times() {
            for x in [-2.0, 0.0, 1.0] {
                assert!((part.eval_du(t, x).unwrap() - full.eval_du(t, x).unwrap()).abs() < 1e-3);
            }
        }
        assert!(part.eval_u(0.0, 3.5).is_err());
    }

    #[test]
    fn schauder_profile_rejects_fractional_orders() {
        let p = problem(Profile::Zero, 1.0, 0.0, Profile::cosine(1.0));
        let sol = solve_backward_kolmogorov(&p, &PdeGrid::new(-5.0, 5.0, 1001, 10)).unwrap();
        assert!(schauder_profile(&sol, 3, 1.0).is_err());
        let prof = schauder_profile(&sol, 1, 1.0).unwrap();
        assert_eq!(prof.expected_exponent, 0.0);
        // t = 1: discrete C¹ norm of g
        let g0 = &prof.points[0];
        assert!((g0.norm - 2.0).abs() < 1e-3);
    }
}

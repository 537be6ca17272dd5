//! Grid solvers for the general (`σ₁ ≠ σ₂`) case.
//!
//! Both solvers share one three-point discretization of the group generators
//! `Lᵢφ = κᵢ(θᵢ−d)φ′ + ½σᵢ²dφ″`. The drift is exponentially fitted
//! (Il'in–Allen–Southwell), so every off-diagonal coefficient is nonnegative
//! at any cell Péclet number while affine functions are reproduced exactly.
//! At `d = 0` the fitted stencil degenerates to a forward difference of the
//! drift term.
//!
//! At `d_max` a ghost node imposes the far-field Robin condition
//! `φ′ − s = ρ(φ − ℓ)`. Here `ℓ` is the buy-and-hold line of the group
//! that dominates for large `d` and `s = 1/(λ+κ)` is its slope. `ρ` is the
//! log-derivative of that group's decaying homogeneous solution
//! `U(λ/κ, 2κθ/σ², 2κd/σ²)`. The bubble decays only algebraically, so the
//! plain linear-growth condition `φ′ = s` would leave an `O(d_max^(-λ/κ))`
//! truncation error.

use alloc::vec;
use alloc::vec::Vec;

use crate::closed_form::PriceCurve;
use crate::error::{domain, Error, Result};
use crate::market::{self, Group, ModelParams};
use crate::specfun::{self, HypergeomArgs};

#[allow(unused_imports)]
use num_traits::Float;

/// Policy-iteration cap.
pub const MAX_POLICY_ITERATIONS: usize = 200;
/// Default residual tolerance.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default number of resale stages.
pub const DEFAULT_STAGES: usize = 50;

/// Uniform grid on `[0, d_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub d_max: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(params: &ModelParams, d_max: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(domain(alloc::format!("grid needs at least 3 nodes, got {n}")));
        }
        let floor = Self::extent_floor(params);
        if !(d_max > floor && d_max.is_finite()) {
            return Err(domain(alloc::format!(
                "d_max = {d_max} must exceed max(theta1, theta2, d_bar+, d_tilde+) = {floor}"
            )));
        }
        Ok(Grid { d_max, n })
    }

    /// Grid with the default extent `max(10·max θ, 2·D̄⁺, 2·D̃⁺)`.
    pub fn with_default_extent(params: &ModelParams, n: usize) -> Result<Self> {
        Self::new(params, Self::default_extent(params), n)
    }

    pub fn default_extent(params: &ModelParams) -> f64 {
        let (bar, tilde) = Self::thresholds_pos(params);
        (10.0 * params.theta1.max(params.theta2))
            .max(2.0 * bar)
            .max(2.0 * tilde)
    }

    fn thresholds_pos(params: &ModelParams) -> (f64, f64) {
        let t = market::thresholds(params);
        let bar = if t.d_bar.is_finite() { t.d_bar.max(0.0) } else { 0.0 };
        (bar, t.d_tilde.unwrap_or(0.0).max(0.0))
    }

    fn extent_floor(params: &ModelParams) -> f64 {
        let (bar, tilde) = Self::thresholds_pos(params);
        params.theta1.max(params.theta2).max(bar).max(tilde)
    }

    pub fn spacing(&self) -> f64 {
        self.d_max / (self.n - 1) as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        if j + 1 == self.n {
            self.d_max
        } else {
            j as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }
}

/// Output of a grid solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub grid: Grid,
    pub values: Vec<f64>,
    /// Maximizing group of the discrete HJB bracket at each node.
    pub policy: Vec<Group>,
    pub iterations: usize,
    /// Max absolute residual of the discrete equation.
    pub final_residual: f64,
    pub converged: bool,
}

impl SolveReport {
    /// Piecewise-linear interpolation of the grid values; clamps outside the grid.
    pub fn interpolate(&self, d: f64) -> f64 {
        let h = self.grid.spacing();
        if d <= 0.0 {
            return self.values[0];
        }
        let last = self.grid.n - 1;
        if d >= self.grid.d_max {
            return self.values[last];
        }
        let j = ((d / h) as usize).min(last - 1);
        let w = (d - self.grid.node(j)) / h;
        self.values[j] * (1.0 - w) + self.values[j + 1] * w
    }

    pub fn curve(&self, params: &ModelParams) -> Result<PriceCurve> {
        PriceCurve::from_prices(params, &self.grid.nodes(), self.values.clone())
    }

    /// Largest `values − I` over the grid.
    pub fn max_bubble(&self, params: &ModelParams) -> f64 {
        self.grid
            .nodes()
            .iter()
            .zip(&self.values)
            .map(|(&d, &v)| v - market::intrinsic_value(params, d))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Resale-iteration result: the final report plus every stage's iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointReport {
    pub report: SolveReport,
    /// `iterates[k]` is `P_k` on the grid; `iterates[0]` is `I`.
    pub iterates: Vec<Vec<f64>>,
    /// Sup-norm increment `‖P_k − P_{k−1}‖` per stage.
    pub increments: Vec<f64>,
}

/// Off-diagonal weights of `Lᵢ` at every node: `Lφ_j = lo_j(φ_{j−1}−φ_j) + up_j(φ_{j+1}−φ_j)`.
struct Stencil {
    lo: Vec<f64>,
    up: Vec<f64>,
}

fn fitted_diffusion(a: f64, mu: f64, h: f64) -> f64 {
    let pe = mu * h / (2.0 * a);
    if pe.abs() < 1e-6 {
        a * (1.0 + pe * pe / 3.0)
    } else {
        a * pe / pe.tanh()
    }
}

fn stencil(params: &ModelParams, g: Group, grid: &Grid) -> Result<Stencil> {
    let h = grid.spacing();
    let s = params.sigma(g);
    let mut lo = vec![0.0; grid.n];
    let mut up = vec![0.0; grid.n];
    for j in 0..grid.n {
        let d = grid.node(j);
        let mu = params.drift(g, d);
        let a = 0.5 * s * s * d;
        let (l, u) = if a == 0.0 {
            (-mu.min(0.0) / h, mu.max(0.0) / h)
        } else {
            let diff = fitted_diffusion(a, mu, h) / (h * h);
            // Exact cancellation at large Péclet numbers can leave -ulp residue.
            ((diff - mu / (2.0 * h)).max(0.0), (diff + mu / (2.0 * h)).max(0.0))
        };
        if !(l.is_finite() && u.is_finite()) {
            return Err(Error::Scheme(alloc::format!("non-finite coefficient at d = {d}")));
        }
        lo[j] = l;
        up[j] = u;
    }
    if up[0] == 0.0 && grid.n > 1 && lo[0] != 0.0 {
        return Err(Error::Scheme("negative drift at d = 0".into()));
    }
    lo[0] = 0.0;
    Ok(Stencil { lo, up })
}

struct Problem<'a> {
    params: &'a ModelParams,
    grid: Grid,
    nodes: Vec<f64>,
    stencils: [Stencil; 2],
    /// Ghost node: `φ_n = φ_{n−2} + ghost_c + ghost_k·φ_{n−1}`.
    ghost_c: f64,
    ghost_k: f64,
}

/// `(slope, intercept line value, ρ)` of the far-field condition at `d_max`.
fn far_field(params: &ModelParams, d_max: f64) -> Result<(f64, f64, f64)> {
    let g = if params.kappa1 > params.kappa2 {
        Group::Two
    } else {
        Group::One
    };
    let (k, th, s) = (params.kappa(g), params.theta(g), params.sigma(g));
    let scale = 2.0 * k / (s * s);
    let args = HypergeomArgs::new(params.lambda / k, th * scale, d_max * scale)?;
    let ratio = specfun::tricomi_u(args.shifted())? / specfun::tricomi_u(args)?;
    let rho = -scale * args.a * ratio;
    Ok((
        1.0 / (params.lambda + k),
        market::intrinsic_branch(params, g, d_max),
        rho,
    ))
}

impl<'a> Problem<'a> {
    fn new(params: &'a ModelParams, grid: Grid) -> Result<Self> {
        params.validate()?;
        let stencils = [stencil(params, Group::One, &grid)?, stencil(params, Group::Two, &grid)?];
        let (slope, line, rho) = far_field(params, grid.d_max)?;
        let h2 = 2.0 * grid.spacing();
        Ok(Problem {
            params,
            grid,
            nodes: grid.nodes(),
            stencils,
            ghost_c: h2 * (slope - rho * line),
            ghost_k: h2 * rho,
        })
    }

    fn st(&self, g: Group) -> &Stencil {
        &self.stencils[(g.number() - 1) as usize]
    }

    /// `(Lᵢφ)_j` including the ghost node at the right end.
    fn apply(&self, g: Group, phi: &[f64], j: usize) -> f64 {
        let s = self.st(g);
        let n = self.grid.n;
        let left = if j == 0 { 0.0 } else { s.lo[j] * (phi[j - 1] - phi[j]) };
        let right_value = if j + 1 == n {
            phi[n - 2] + self.ghost_c + self.ghost_k * phi[n - 1]
        } else {
            phi[j + 1]
        };
        left + s.up[j] * (right_value - phi[j])
    }

    /// Best group at node j (ties to group 1) and the bracket value.
    fn best(&self, phi: &[f64], j: usize) -> (Group, f64) {
        let l1 = self.apply(Group::One, phi, j);
        let l2 = self.apply(Group::Two, phi, j);
        if l2 > l1 {
            (Group::Two, l2)
        } else {
            (Group::One, l1)
        }
    }

    /// Policy update at node j: the other group must win by more than the
    /// rounding noise of the two brackets, otherwise `current` is kept.
    fn improve(&self, phi: &[f64], j: usize, current: Group) -> Group {
        let l1 = self.apply(Group::One, phi, j);
        let l2 = self.apply(Group::Two, phi, j);
        let (s1, s2) = (self.st(Group::One), self.st(Group::Two));
        let lo = j.saturating_sub(1);
        let hi = (j + 1).min(self.grid.n - 1);
        let size = phi[lo..=hi].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let weight = s1.lo[j] + s1.up[j] + s2.lo[j] + s2.up[j];
        let noise = 64.0 * f64::EPSILON * weight * size;
        if (l2 - l1).abs() <= noise {
            current
        } else if l2 > l1 {
            Group::Two
        } else {
            Group::One
        }
    }

    fn residual(&self, phi: &[f64]) -> f64 {
        (0..self.grid.n)
            .map(|j| (self.best(phi, j).1 - self.params.lambda * phi[j] + self.nodes[j]).abs())
            .fold(0.0, f64::max)
    }

    /// Assembles `shift·I + dt·(λ − L_policy)` as three diagonals plus the
    /// ghost contribution to the right-hand side.
    fn assemble(&self, policy: &[Group], shift: f64, dt: f64, rhs: &mut [f64]) -> Tridiag {
        let n = self.grid.n;
        let mut t = Tridiag::zeros(n);
        for j in 0..n {
            let s = self.st(policy[j]);
            let (lo, up) = (s.lo[j], s.up[j]);
            t.diag[j] = shift + dt * (self.params.lambda + lo + up);
            if j + 1 == n {
                t.diag[j] -= dt * up * self.ghost_k;
                t.sub[j] = -dt * (lo + up);
                rhs[j] += dt * up * self.ghost_c;
            } else {
                if j > 0 {
                    t.sub[j] = -dt * lo;
                }
                t.sup[j] = -dt * up;
            }
        }
        t
    }
}

struct Tridiag {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
}

impl Tridiag {
    fn zeros(n: usize) -> Self {
        Tridiag {
            sub: vec![0.0; n],
            diag: vec![0.0; n],
            sup: vec![0.0; n],
        }
    }

    /// Thomas algorithm; the matrices here are strictly diagonally dominant.
    fn solve(&self, rhs: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        let n = self.diag.len();
        let mut beta = self.diag[0];
        out[0] = rhs[0] / beta;
        for j in 1..n {
            scratch[j] = self.sup[j - 1] / beta;
            beta = self.diag[j] - self.sub[j] * scratch[j];
            out[j] = (rhs[j] - self.sub[j] * out[j - 1]) / beta;
        }
        for j in (0..n - 1).rev() {
            out[j] -= scratch[j + 1] * out[j + 1];
        }
    }
}

/// Exercise-set updates allowed per time step beyond one per node.
const OBSTACLE_EXTRA_ITERATIONS: usize = 10;

struct ObstacleWork {
    rhs: Vec<f64>,
    stop: Vec<bool>,
    row: Tridiag,
    row_rhs: Vec<f64>,
    scratch: Vec<f64>,
    last: Vec<f64>,
}

impl ObstacleWork {
    fn new(n: usize) -> Self {
        ObstacleWork {
            rhs: vec![0.0; n],
            stop: vec![true; n],
            row: Tridiag::zeros(n),
            row_rhs: vec![0.0; n],
            scratch: vec![0.0; n],
            last: vec![f64::NAN; n],
        }
    }
}

/// Solves `min(v − obstacle, A·v − rhs) = 0` by policy iteration on the
/// exercise set, warm-started from `work.stop`. The exercise front can move by
/// a single node per update, so up to `n` updates may be needed.
fn obstacle_step(a: &Tridiag, obstacle: &[f64], work: &mut ObstacleWork, v: &mut [f64]) -> Result<()> {
    let n = obstacle.len();
    work.last.iter_mut().for_each(|x| *x = f64::NAN);
    let cap = n + OBSTACLE_EXTRA_ITERATIONS;
    for _ in 0..cap {
        for j in 0..n {
            if work.stop[j] {
                work.row.sub[j] = 0.0;
                work.row.diag[j] = 1.0;
                work.row.sup[j] = 0.0;
                work.row_rhs[j] = obstacle[j];
            } else {
                work.row.sub[j] = a.sub[j];
                work.row.diag[j] = a.diag[j];
                work.row.sup[j] = a.sup[j];
                work.row_rhs[j] = work.rhs[j];
            }
        }
        work.row.solve(&work.row_rhs, v, &mut work.scratch);
        // Nodes where holding and exercising tie may keep flipping without
        // moving the solution.
        let settled = v
            .iter()
            .zip(&work.last)
            .all(|(a, b)| (a - b).abs() <= 1e-14 * a.abs().max(1.0));
        work.last.copy_from_slice(v);
        if settled {
            return Ok(());
        }
        let mut changed = false;
        for j in 0..n {
            let mut av = a.diag[j] * v[j];
            let mut size = av.abs() + work.rhs[j].abs();
            if j > 0 {
                av += a.sub[j] * v[j - 1];
                size += (a.sub[j] * v[j - 1]).abs();
            }
            if j + 1 < n {
                av += a.sup[j] * v[j + 1];
                size += (a.sup[j] * v[j + 1]).abs();
            }
            let hold = av - work.rhs[j];
            let exercise = v[j] - obstacle[j];
            // Differences at rounding level must not flip the set back and forth.
            let slack = 64.0 * f64::EPSILON * (size + obstacle[j].abs());
            let stop = if exercise < hold - slack {
                true
            } else if hold < exercise - slack {
                false
            } else {
                work.stop[j]
            };
            if stop != work.stop[j] {
                work.stop[j] = stop;
                changed = true;
            }
        }
        if !changed {
            return Ok(());
        }
    }
    Err(Error::NonConvergence {
        iterations: cap,
        residual: f64::NAN,
    })
}

fn check_dominance(params: &ModelParams, nodes: &[f64], values: &[f64]) -> Result<()> {
    for (&d, &v) in nodes.iter().zip(values) {
        let i = market::intrinsic_value(params, d);
        if v < i - 1e-9 * i.abs().max(1.0) {
            return Err(Error::Consistency(alloc::format!(
                "grid value {v} below intrinsic value {i} at d = {d}"
            )));
        }
    }
    Ok(())
}

/// Solves `max{L₁φ, L₂φ} − λφ + d = 0` on `grid` by policy iteration.
///
/// A report with `converged == false` is returned when the iteration cap is
/// reached or the final residual exceeds `tol`.
pub fn solve_hjb(params: &ModelParams, grid: Grid, tol: f64) -> Result<SolveReport> {
    if !(tol > 0.0) {
        return Err(domain(alloc::format!("tol must be positive, got {tol}")));
    }
    let pb = Problem::new(params, grid)?;
    let n = grid.n;
    let mut policy: Vec<Group> = pb.nodes.iter().map(|&d| market::dominant_group(params, d)).collect();
    let mut values = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut iterations = 0;
    let mut converged_policy = false;
    while iterations < MAX_POLICY_ITERATIONS {
        iterations += 1;
        rhs.copy_from_slice(&pb.nodes);
        let t = pb.assemble(&policy, 0.0, 1.0, &mut rhs);
        t.solve(&rhs, &mut next, &mut scratch);
        let change = next.iter().zip(&values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        core::mem::swap(&mut values, &mut next);
        let mut changed = false;
        for j in 0..n {
            let g = pb.improve(&values, j, policy[j]);
            if g != policy[j] {
                policy[j] = g;
                changed = true;
            }
        }
        let scale = values.iter().fold(1.0, |m: f64, v| m.max(v.abs()));
        if !changed || change <= 1e-14 * scale {
            converged_policy = true;
            break;
        }
    }
    let final_residual = pb.residual(&values);
    check_dominance(params, &pb.nodes, &values)?;
    Ok(SolveReport {
        grid,
        values,
        policy,
        iterations,
        final_residual,
        converged: converged_policy && final_residual < tol,
    })
}

/// Iterates the resale operator `P_{k−1} ↦ P_k` from `P₀ = I`.
///
/// Each stage solves one optimal-stopping problem per group by backward
/// implicit-Euler dynamic programming over `steps` steps of `horizon/steps`,
/// with terminal and exercise payoff `P_{k−1}`; `P_k` is the larger of the two
/// values. The stopping decision is taken implicitly at every step (a small
/// complementarity problem), so the long-horizon limit of a stage is the
/// discrete obstacle problem itself and does not depend on the step size. Stops when `‖P_k − P_{k−1}‖∞ < tol` or after `k_max` stages.
pub fn resale_fixed_point(
    params: &ModelParams,
    grid: Grid,
    horizon: f64,
    steps: usize,
    k_max: usize,
    tol: f64,
) -> Result<FixedPointReport> {
    if !(horizon > 0.0 && horizon.is_finite()) || steps == 0 {
        return Err(domain("resale iteration needs horizon > 0 and steps >= 1"));
    }
    if !(tol > 0.0) {
        return Err(domain(alloc::format!("tol must be positive, got {tol}")));
    }
    let pb = Problem::new(params, grid)?;
    let n = grid.n;
    let dt = horizon / steps as f64;
    let mut work = ObstacleWork::new(n);

    // The step matrices do not change between stages.
    let mut matrices = Vec::with_capacity(2);
    for g in Group::BOTH {
        let policy = vec![g; n];
        let mut ghost_rhs = vec![0.0; n];
        let t = pb.assemble(&policy, 1.0, dt, &mut ghost_rhs);
        matrices.push((t, ghost_rhs));
    }

    let intrinsic: Vec<f64> = pb.nodes.iter().map(|&d| market::intrinsic_value(params, d)).collect();
    let mut iterates = vec![intrinsic];
    let mut increments = Vec::new();
    let mut converged = false;
    for _ in 0..k_max {
        let prev = iterates.last().expect("P_0 is present");
        let mut stage = prev.clone();
        for (t, ghost_rhs) in &matrices {
            let mut v = prev.clone();
            work.stop.iter_mut().for_each(|s| *s = true);
            for _ in 0..steps {
                for j in 0..n {
                    work.rhs[j] = v[j] + dt * pb.nodes[j] + ghost_rhs[j];
                }
                obstacle_step(t, prev, &mut work, &mut v)?;
            }
            for j in 0..n {
                stage[j] = stage[j].max(v[j]);
            }
        }
        let mut increment: f64 = 0.0;
        for (a, b) in stage.iter().zip(prev) {
            if *a < *b - 1e-12 * b.abs().max(1.0) {
                return Err(Error::Consistency("resale iterate decreased".into()));
            }
            increment = increment.max(a - b);
        }
        increments.push(increment);
        iterates.push(stage);
        if increment < tol {
            converged = true;
            break;
        }
    }
    let values = iterates.last().expect("nonempty").clone();
    let policy = (0..n).map(|j| pb.best(&values, j).0).collect();
    let final_residual = pb.residual(&values);
    Ok(FixedPointReport {
        report: SolveReport {
            grid,
            values,
            policy,
            iterations: iterates.len() - 1,
            final_residual,
            converged,
        },
        iterates,
        increments,
    })
}

/// `−max_i{Lᵢφ} + λφ − d` at interior node `j` with central differences.
/// Nonnegative values mean `φ` is a supersolution there.
pub fn supersolution_residual(values: &[f64], grid: &Grid, params: &ModelParams, j: usize) -> Result<f64> {
    if values.len() != grid.n {
        return Err(domain("value vector does not match the grid"));
    }
    if j == 0 || j + 1 >= grid.n {
        return Err(domain(alloc::format!("node {j} is not interior")));
    }
    let h = grid.spacing();
    let d = grid.node(j);
    let slope = (values[j + 1] - values[j - 1]) / (2.0 * h);
    let curvature = (values[j + 1] - 2.0 * values[j] + values[j - 1]) / (h * h);
    let best = Group::BOTH
        .iter()
        .map(|&g| {
            let s = params.sigma(g);
            params.drift(g, d) * slope + 0.5 * s * s * d * curvature
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(-best + params.lambda * values[j] - d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(k1: f64, k2: f64, t1: f64, t2: f64, lam: f64, s1: f64, s2: f64) -> ModelParams {
        ModelParams {
            kappa1: k1,
            kappa2: k2,
            theta1: t1,
            theta2: t2,
            sigma1: s1,
            sigma2: s2,
            lambda: lam,
        }
    }

    #[test]
    fn grid_validation() {
        let q = p(0.2, 0.1, 0.04, 0.02, 0.02, 0.02, 0.02);
        assert!(Grid::new(&q, 1.0, 2).is_err());
        assert!(Grid::new(&q, 0.2, 101).is_err()); // below D̄ = 0.26
        let g = Grid::with_default_extent(&q, 101).unwrap();
        assert!((g.d_max - 0.52).abs() < 1e-12);
        assert_eq!(g.node(100), g.d_max);
    }

    #[test]
    fn thomas_solves_small_system() {
        let t = Tridiag {
            sub: vec![0.0, -1.0, -1.0],
            diag: vec![4.0, 4.0, 4.0],
            sup: vec![-1.0, -1.0, 0.0],
        };
        let x = [1.0, 2.0, 3.0];
        let rhs = [4.0 - 2.0, -1.0 + 8.0 - 3.0, -2.0 + 12.0];
        let mut out = [0.0; 3];
        let mut scratch = [0.0; 3];
        t.solve(&rhs, &mut out, &mut scratch);
        for (a, b) in out.iter().zip(&x) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn stencil_is_monotone_and_exact_on_affine() {
        let q = p(0.2, 0.1, 0.015, 0.02, 0.02, 0.02, 0.03);
        let grid = Grid::with_default_extent(&q, 401).unwrap();
        let pb = Problem::new(&q, grid).unwrap();
        let line: Vec<f64> = pb.nodes.iter().map(|d| 3.0 * d + 1.0).collect();
        for g in Group::BOTH {
            let s = pb.st(g);
            assert!(s.lo.iter().chain(&s.up).all(|&c| c >= 0.0));
            for j in 0..grid.n - 1 {
                let exact = q.drift(g, pb.nodes[j]) * 3.0;
                assert!((pb.apply(g, &line, j) - exact).abs() < 1e-9, "j={j}");
            }
        }
    }

    #[test]
    fn no_bubble_solutions_are_intrinsic() {
        for q in [
            p(0.1, 0.1, 0.02, 0.015, 0.02, 0.02, 0.02),
            p(0.2, 0.1, 0.01, 0.03, 0.02, 0.02, 0.02),
            p(0.1, 0.1, 0.02, 0.015, 0.02, 0.01, 0.03),
        ] {
            let grid = Grid::with_default_extent(&q, 501).unwrap();
            let r = solve_hjb(&q, grid, DEFAULT_TOL).unwrap();
            assert!(r.converged);
            assert!(r.max_bubble(&q).abs() < 1e-10, "{}", r.max_bubble(&q));
        }
    }

    #[test]
    fn supersolution_examples() {
        let q = p(0.2, 0.1, 0.04, 0.02, 0.02, 0.02, 0.02);
        let grid = Grid::with_default_extent(&q, 201).unwrap();
        let big = vec![grid.d_max / q.lambda + 1.0; grid.n];
        for j in 1..grid.n - 1 {
            assert!(supersolution_residual(&big, &grid, &q, j).unwrap() > 0.0);
        }
        assert!(supersolution_residual(&big, &grid, &q, 0).is_err());
        assert!(supersolution_residual(&big, &grid, &q, grid.n - 1).is_err());
    }

    #[test]
    fn resale_stage_zero_is_intrinsic() {
        let q = p(0.2, 0.1, 0.015, 0.02, 0.02, 0.02, 0.02);
        let grid = Grid::with_default_extent(&q, 101).unwrap();
        let r = resale_fixed_point(&q, grid, 100.0, 50, 1, 1e-8).unwrap();
        for (d, v) in grid.nodes().iter().zip(&r.iterates[0]) {
            assert_eq!(*v, market::intrinsic_value(&q, *d));
        }
    }
}

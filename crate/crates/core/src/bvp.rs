//! Two-point boundary value solver.
//!
//! The terminal data `s(L) = 0`, `w(L) = 0` are known exactly, so the
//! solver shoots backwards from `x = L` on the two unknowns `(v(L), θ(L))`
//! and drives `(v(0) − 1, θ(0))` to zero with a damped Newton iteration.
//! Steps that straddle a profile breakpoint are split there so that
//! piecewise loads keep the fourth-order accuracy of RK4.

use crate::error::{Error, Result};
use crate::model::{rhs_at, FeederParams, Profile, Scaled, Side, SolutionGrid, State};
use crate::numerics::max_abs;

/// How RK4 steps treat discontinuities of the power profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stepping {
    /// Split each step at the profile breakpoints it contains.
    SplitAtBreakpoints,
    /// Plain uniform steps; accuracy drops to first order across jumps.
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Number of grid intervals `N`; even and at least 16.
    pub grid_intervals: usize,
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    /// Forward-difference step for the shooting Jacobian.
    pub fd_step: f64,
    /// Initial Newton damping factor in `(0, 1]`.
    pub damping: f64,
    pub stepping: Stepping,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            grid_intervals: 512,
            newton_tol: 1e-10,
            max_newton_iters: 50,
            fd_step: 1e-7,
            damping: 1.0,
            stepping: Stepping::SplitAtBreakpoints,
        }
    }
}

impl SolverOptions {
    pub fn with_grid(&self, grid_intervals: usize) -> Self {
        Self {
            grid_intervals,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.grid_intervals;
        if n < 16 || !n.is_multiple_of(2) {
            return Err(Error::Validation(format!(
                "grid must be an even number of intervals ≥ 16, got {n}"
            )));
        }
        if !(self.newton_tol > 0.0 && self.newton_tol.is_finite()) {
            return Err(Error::Validation(format!(
                "newton_tol must be positive, got {}",
                self.newton_tol
            )));
        }
        if self.max_newton_iters == 0 {
            return Err(Error::Validation("max_newton_iters must be at least 1".into()));
        }
        if !(self.fd_step > 0.0 && self.fd_step.is_finite()) {
            return Err(Error::Validation(format!(
                "fd_step must be positive, got {}",
                self.fd_step
            )));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Validation(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveDiagnostics {
    /// Newton iterations, summed over continuation stages when used.
    pub iterations: usize,
    pub final_residual_norm: f64,
    pub converged: bool,
    /// `[θ(0), v(0) − 1, s(L), w(L)]` of the returned grid.
    pub boundary_residuals: [f64; 4],
    /// Number of load-continuation stages run; 0 when plain Newton converged.
    pub continuation_stages: usize,
    /// `|v(L) − 1| > 0.5`: Newton may have landed on a low-voltage branch.
    pub suspicious: bool,
}

/// Unknown terminal data of the shooting problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Terminal {
    pub v: f64,
    pub theta: f64,
}

impl Terminal {
    pub const NO_LOAD: Terminal = Terminal { v: 1.0, theta: 0.0 };
}

const CONTINUATION: [f64; 4] = [0.25, 0.5, 0.75, 1.0];
const MAX_HALVINGS: usize = 8;

/// One classical RK4 step from `from` to `to` (either direction) with the
/// profile sampled on the closed interval between them.
fn rk4_step(y: &State, from: f64, to: f64, profile: &dyn Profile, params: &FeederParams) -> Result<State> {
    let h = to - from;
    let (lo, hi) = if h < 0.0 { (to, from) } else { (from, to) };
    let sample = |x: f64| {
        if x == lo {
            profile.eval_side(x, Side::Right)
        } else if x == hi {
            profile.eval_side(x, Side::Left)
        } else {
            profile.eval(x)
        }
    };
    let mid = from + 0.5 * h;
    let (p0, q0) = sample(from);
    let (pm, qm) = sample(mid);
    let (p1, q1) = sample(to);
    let k1 = rhs_at(y, p0, q0, params, from)?;
    let k2 = rhs_at(&y.offset(&k1, 0.5 * h), pm, qm, params, mid)?;
    let k3 = rhs_at(&y.offset(&k2, 0.5 * h), pm, qm, params, mid)?;
    let k4 = rhs_at(&y.offset(&k3, h), p1, q1, params, to)?;
    let next = State {
        theta: y.theta + h / 6.0 * (k1.theta + 2.0 * k2.theta + 2.0 * k3.theta + k4.theta),
        v: y.v + h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v),
        s: y.s + h / 6.0 * (k1.s + 2.0 * k2.s + 2.0 * k3.s + k4.s),
        w: y.w + h / 6.0 * (k1.w + 2.0 * k2.w + 2.0 * k3.w + k4.w),
    };
    // guards the endpoint too, not only the stages
    rhs_at(&next, 0.0, 0.0, params, to)?;
    Ok(next)
}

/// Marches the state equations from `x = L` (state `(θ_L, v_L, 0, 0)`) down
/// to `x = 0` on `intervals` uniform steps.
pub fn integrate_backward(
    terminal: Terminal,
    profile: &dyn Profile,
    params: &FeederParams,
    intervals: usize,
    stepping: Stepping,
) -> Result<SolutionGrid> {
    if intervals < 16 || !intervals.is_multiple_of(2) {
        return Err(Error::Validation(format!(
            "grid must be an even number of intervals ≥ 16, got {intervals}"
        )));
    }
    let length = params.length();
    let nodes = crate::model::grid_nodes(length, intervals);
    let breaks: Vec<f64> = match stepping {
        Stepping::SplitAtBreakpoints => {
            let mut b: Vec<f64> = profile
                .breakpoints()
                .into_iter()
                .filter(|&c| c > 0.0 && c < length)
                .collect();
            b.sort_by(f64::total_cmp);
            b
        }
        Stepping::Uniform => Vec::new(),
    };

    let mut states = vec![State::default(); intervals + 1];
    let mut y = State::new(terminal.theta, terminal.v, 0.0, 0.0);
    rhs_at(&y, 0.0, 0.0, params, length)?;
    states[intervals] = y;
    for i in (0..intervals).rev() {
        let hi = nodes[i + 1];
        let lo = nodes[i];
        let mut at = hi;
        for &c in breaks.iter().rev().filter(|&&c| c > lo && c < hi) {
            y = rk4_step(&y, at, c, profile, params)?;
            at = c;
        }
        y = rk4_step(&y, at, lo, profile, params)?;
        states[i] = y;
    }
    Ok(SolutionGrid::from_states(length, states)?.with_breakpoints(profile.breakpoints()))
}

fn sending_mismatch(grid: &SolutionGrid) -> [f64; 2] {
    let s = grid.sending();
    [s.v - 1.0, s.theta]
}

fn newton(
    profile: &dyn Profile,
    params: &FeederParams,
    options: &SolverOptions,
    start: Terminal,
) -> Result<(SolutionGrid, Terminal, usize, f64)> {
    let n = options.grid_intervals;
    let shoot = |t: Terminal| -> Result<(SolutionGrid, [f64; 2])> {
        let grid = integrate_backward(t, profile, params, n, options.stepping)?;
        let f = sending_mismatch(&grid);
        Ok((grid, f))
    };

    let mut u = start;
    let (mut grid, mut f) = shoot(u)?;
    let mut iterations = 0;
    loop {
        let norm = max_abs(f);
        if norm <= options.newton_tol {
            return Ok((grid, u, iterations, norm));
        }
        if iterations == options.max_newton_iters {
            return Err(Error::NotConverged { iterations, residual: norm });
        }
        iterations += 1;

        // forward-difference Jacobian of the mismatch w.r.t. (v_L, θ_L)
        let dv = options.fd_step * u.v.abs().max(1.0);
        let dt = options.fd_step * u.theta.abs().max(1.0);
        let (_, fv) = shoot(Terminal { v: u.v + dv, ..u })?;
        let (_, ft) = shoot(Terminal { theta: u.theta + dt, ..u })?;
        let j = [
            [(fv[0] - f[0]) / dv, (ft[0] - f[0]) / dt],
            [(fv[1] - f[1]) / dv, (ft[1] - f[1]) / dt],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !(det.is_finite() && det != 0.0) {
            return Err(Error::NotConverged { iterations, residual: norm });
        }
        let step_v = (j[1][1] * f[0] - j[0][1] * f[1]) / det;
        let step_t = (j[0][0] * f[1] - j[1][0] * f[0]) / det;

        let mut lambda = options.damping;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = Terminal {
                v: u.v - lambda * step_v,
                theta: u.theta - lambda * step_t,
            };
            if let Ok((g, ft)) = shoot(trial) {
                if max_abs(ft) < norm {
                    accepted = Some((trial, g, ft));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((trial, g, ft)) => {
                u = trial;
                grid = g;
                f = ft;
            }
            None => return Err(Error::NotConverged { iterations, residual: norm }),
        }
    }
}

fn diagnostics(grid: &SolutionGrid, u: Terminal, iterations: usize, residual: f64, stages: usize) -> SolveDiagnostics {
    SolveDiagnostics {
        iterations,
        final_residual_norm: residual,
        converged: true,
        boundary_residuals: grid.boundary_residuals(),
        continuation_stages: stages,
        suspicious: (u.v - 1.0).abs() > 0.5,
    }
}

/// Solves `θ(0) = 0, v(0) = 1, s(L) = 0, w(L) = 0` for the given profile.
///
/// Starts Newton from the no-load terminal data. If that fails to converge,
/// retries with the load scaled by 0.25, 0.5, 0.75 and 1.0, warm-starting
/// each stage from the previous one.
pub fn solve_bvp(profile: &dyn Profile, params: &FeederParams, options: &SolverOptions) -> Result<(SolutionGrid, SolveDiagnostics)> {
    options.validate()?;
    let first = match newton(profile, params, options, Terminal::NO_LOAD) {
        Ok((grid, u, iters, res)) => return Ok((grid.clone(), diagnostics(&grid, u, iters, res, 0))),
        Err(e @ Error::NotConverged { .. }) => e,
        Err(e) => return Err(e),
    };

    let mut u = Terminal::NO_LOAD;
    let mut total = 0;
    let mut last = None;
    for (stage, &factor) in CONTINUATION.iter().enumerate() {
        let scaled = Scaled { inner: profile, factor };
        match newton(&scaled, params, options, u) {
            Ok((grid, next, iters, res)) => {
                total += iters;
                u = next;
                last = Some((grid, res, stage + 1));
            }
            Err(Error::NotConverged { .. }) => return Err(first),
            Err(e) => return Err(e),
        }
    }
    let (grid, res, stages) = last.expect("continuation has stages");
    let diag = diagnostics(&grid, u, total, res, stages);
    Ok((grid, diag))
}

/// Result of solving on `N` and `2N`.
#[derive(Debug, Clone)]
pub struct Refinement {
    pub fine: SolutionGrid,
    pub diagnostics: SolveDiagnostics,
    /// Max-norm difference of `v` between the two grids on the coarse nodes.
    pub error_estimate: f64,
}

pub fn refine_and_estimate(profile: &dyn Profile, params: &FeederParams, options: &SolverOptions) -> Result<Refinement> {
    let (coarse, _) = solve_bvp(profile, params, options)?;
    let (fine, diagnostics) = solve_bvp(profile, params, &options.with_grid(2 * options.grid_intervals))?;
    let error_estimate = max_abs(
        coarse
            .states()
            .iter()
            .enumerate()
            .map(|(i, s)| s.v - fine.states()[2 * i].v),
    );
    Ok(Refinement {
        fine,
        diagnostics,
        error_estimate,
    })
}

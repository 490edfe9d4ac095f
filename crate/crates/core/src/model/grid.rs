use super::State;
use crate::error::{Error, Result};

/// States of the model sampled on the uniform grid `x_i = i·L/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionGrid {
    xs: Vec<f64>,
    states: Vec<State>,
    h: f64,
    breakpoints: Vec<f64>,
}

pub(crate) fn uniform_nodes(length: f64, intervals: usize) -> Vec<f64> {
    (0..=intervals)
        .map(|i| length * i as f64 / intervals as f64)
        .collect()
}

impl SolutionGrid {
    /// Wraps `states` sampled at `N + 1` uniform nodes on `[0, length]`.
    /// `N` must be even and at least 4.
    pub fn from_states(length: f64, states: Vec<State>) -> Result<Self> {
        let n = states.len().saturating_sub(1);
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::Validation(format!(
                "a solution grid needs an even number of intervals ≥ 4, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Validation(format!("grid length must be positive, got {length}")));
        }
        Ok(Self {
            xs: uniform_nodes(length, n),
            states,
            h: length / n as f64,
            breakpoints: Vec::new(),
        })
    }

    /// Records where the load profile behind this solution has kinks or
    /// jumps; quadrature over the grid splits there. Points outside
    /// `(0, L)` are dropped.
    pub fn with_breakpoints(mut self, mut points: Vec<f64>) -> Self {
        let l = self.length();
        points.retain(|&c| c > 0.0 && c < l);
        points.sort_by(f64::total_cmp);
        points.dedup();
        self.breakpoints = points;
        self
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// `∫₀ᴸ f dx` for nodal values of a function that is smooth between
    /// the recorded breakpoints.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        crate::numerics::piecewise_integral(&self.xs, values, &self.breakpoints)
    }

    pub fn intervals(&self) -> usize {
        self.states.len() - 1
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn length(&self) -> f64 {
        self.xs[self.xs.len() - 1]
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn column(&self, f: impl Fn(&State) -> f64) -> Vec<f64> {
        self.states.iter().map(f).collect()
    }

    pub fn voltages(&self) -> Vec<f64> {
        self.column(|s| s.v)
    }

    pub fn phases(&self) -> Vec<f64> {
        self.column(|s| s.theta)
    }

    pub fn sending(&self) -> &State {
        &self.states[0]
    }

    pub fn terminal(&self) -> &State {
        &self.states[self.states.len() - 1]
    }

    /// `[θ(0), v(0) − 1, s(L), w(L)]`.
    pub fn boundary_residuals(&self) -> [f64; 4] {
        let a = self.sending();
        let z = self.terminal();
        [a.theta, a.v - 1.0, z.s, z.w]
    }

    /// Copy with the voltage gradient `w` skewed by `amplitude·x/L`.
    ///
    /// Fault-injection hook for the verification commands: the result is no
    /// longer a solution, and the amplitude/dissipation balance breaks.
    pub fn perturbed(&self, amplitude: f64) -> SolutionGrid {
        let l = self.length();
        let states = self
            .states
            .iter()
            .zip(&self.xs)
            .map(|(s, &x)| State {
                w: s.w + amplitude * x / l,
                ..*s
            })
            .collect();
        SolutionGrid {
            xs: self.xs.clone(),
            states,
            h: self.h,
            breakpoints: self.breakpoints.clone(),
        }
    }
}

//! Continuum feeder model.
//!
//! The voltage profile along a straight feeder `x ∈ [0, L]` is described by
//! four first-order ODEs in the state `(θ, v, s, w)`:
//!
//! ```text
//! dθ/dx = −s / v²
//! dv/dx = w
//! ds/dx = (b·p − g·q) / (g² + b²)
//! dw/dx = s² / v³ − (g·p + b·q) / ((g² + b²)·v)
//! ```
//!
//! with `p(x)`, `q(x)` the active/reactive power densities injected into the
//! line (positive = supply, negative = consumption) and `g`, `b` the line
//! conductance/susceptance per unit length. Eliminating `s` and `w` gives the
//! second-order active and reactive power balances checked by
//! [`subsystem_residuals`].

mod grid;
mod manufactured;
mod profile;

pub(crate) use grid::uniform_nodes as grid_nodes;
pub use grid::SolutionGrid;
pub use manufactured::{
    manufactured_profile, FnJet, ManufacturedProfile, ShapeFunction, SmoothFunction,
};
pub(crate) use profile::integrate_weighted;
pub use profile::{Bump, PowerProfile, Profile, Scaled, Segment, Side, Superposition};

use crate::error::{Error, Result};

/// Guard on the voltage amplitude before dividing by `v`, `v²` or `v³`.
pub const V_MIN: f64 = 1e-6;

/// Per-unit line constants of a uniform feeder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeederParams {
    g: f64,
    b: f64,
    length: f64,
}

impl FeederParams {
    pub fn new(g: f64, b: f64, length: f64) -> Result<Self> {
        if !(g.is_finite() && g > 0.0) {
            return Err(Error::Validation(format!(
                "conductance g must be finite and positive, got {g}"
            )));
        }
        if !b.is_finite() {
            return Err(Error::Validation(format!("susceptance b must be finite, got {b}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Validation(format!(
                "feeder length must be finite and positive, got {length}"
            )));
        }
        Ok(Self { g, b, length })
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// `g² + b²`.
    pub fn admittance_sq(&self) -> f64 {
        self.g * self.g + self.b * self.b
    }

    /// Series resistance per unit length, `R = g / (g² + b²)`.
    pub fn resistance(&self) -> f64 {
        self.g / self.admittance_sq()
    }

    /// Series reactance per unit length, `X = b / (g² + b²)`, so that
    /// `(R + jX)⁻¹ = g − jb`.
    pub fn reactance(&self) -> f64 {
        self.b / self.admittance_sq()
    }
}

/// Model state at one position; also used for its spatial derivative.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct State {
    /// Voltage phase (rad).
    pub theta: f64,
    /// Voltage amplitude (per-unit).
    pub v: f64,
    /// Supplemental variable, `s = −v²·dθ/dx`.
    pub s: f64,
    /// Voltage gradient, `w = dv/dx`.
    pub w: f64,
}

impl State {
    pub const FLAT: State = State {
        theta: 0.0,
        v: 1.0,
        s: 0.0,
        w: 0.0,
    };

    pub fn new(theta: f64, v: f64, s: f64, w: f64) -> Self {
        Self { theta, v, s, w }
    }

    /// `self + scale·delta`, component-wise.
    pub fn offset(&self, delta: &State, scale: f64) -> State {
        State {
            theta: self.theta + scale * delta.theta,
            v: self.v + scale * delta.v,
            s: self.s + scale * delta.s,
            w: self.w + scale * delta.w,
        }
    }

    /// Phase gradient recovered from the state, `dθ/dx = −s/v²`.
    pub fn phase_gradient(&self) -> f64 {
        -self.s / (self.v * self.v)
    }
}

/// Right-hand side of the four state equations.
pub fn rhs(state: &State, p: f64, q: f64, params: &FeederParams) -> Result<State> {
    rhs_at(state, p, q, params, f64::NAN)
}

pub(crate) fn rhs_at(state: &State, p: f64, q: f64, params: &FeederParams, x: f64) -> Result<State> {
    let v = state.v;
    if !(v >= V_MIN) {
        return Err(Error::VoltageCollapse { x, v, v_min: V_MIN });
    }
    let g = params.g;
    let b = params.b;
    let d = params.admittance_sq();
    let v2 = v * v;
    Ok(State {
        theta: -state.s / v2,
        v: state.w,
        s: (b * p - g * q) / d,
        w: state.s * state.s / (v2 * v) - (g * p + b * q) / (d * v),
    })
}

/// Value with its first two derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub fn new(value: f64, d1: f64, d2: f64) -> Self {
        Self { value, d1, d2 }
    }
}

/// `2·v·v'·θ' + v²·θ''`, which equals `−dΨ_b/dx`.
fn phase_flux_term(v: &Jet, theta: &Jet) -> f64 {
    2.0 * v.value * v.d1 * theta.d1 + v.value * v.value * theta.d2
}

/// `v·v'' − v²·θ'²`.
fn amplitude_term(v: &Jet, theta: &Jet) -> f64 {
    v.value * v.d2 - v.value * v.value * theta.d1 * theta.d1
}

/// Left-hand sides of the active (`A`) and reactive (`R`) power subsystem
/// equations. Both vanish on an exact solution.
pub fn subsystem_residuals(v: &Jet, theta: &Jet, p: f64, q: f64, params: &FeederParams) -> (f64, f64) {
    let a = phase_flux_term(v, theta);
    let m = amplitude_term(v, theta);
    let res_active = p + params.b * a + params.g * m;
    let res_reactive = q + params.b * m - params.g * a;
    (res_active, res_reactive)
}

/// Supply rates of the voltage (`V`) and phase (`P`) subsystems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupplyRates {
    /// `(g·p + b·q)/(g² + b²)`
    pub voltage: f64,
    /// `(b·p − g·q)/(g² + b²)`
    pub phase: f64,
}

pub fn supply_rates(p: f64, q: f64, params: &FeederParams) -> SupplyRates {
    let d = params.admittance_sq();
    SupplyRates {
        voltage: (params.g * p + params.b * q) / d,
        phase: (params.b * p - params.g * q) / d,
    }
}

/// Inverse of [`supply_rates`]: recovers `(p, q)`.
pub fn powers_from_supply_rates(rates: &SupplyRates, params: &FeederParams) -> (f64, f64) {
    let (g, b) = (params.g, params.b);
    (
        g * rates.voltage + b * rates.phase,
        b * rates.voltage - g * rates.phase,
    )
}

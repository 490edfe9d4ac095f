//! Manufactured solutions: pick smooth `v(x)`, `θ(x)` satisfying the
//! boundary data, then read off the `p(x)`, `q(x)` that make them exact.

use std::f64::consts::PI;

use super::{amplitude_term, phase_flux_term, FeederParams, Jet, Profile, State, V_MIN};
use crate::error::{Error, Result};

pub trait SmoothFunction: Send + Sync {
    fn jet(&self, x: f64) -> Jet;
}

/// Closure adaptor: `FnJet(|x| Jet::new(f(x), f'(x), f''(x)))`.
pub struct FnJet<F>(pub F);

impl<F> std::fmt::Debug for FnJet<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("FnJet(..)")
    }
}

impl<F: Fn(f64) -> Jet + Send + Sync> SmoothFunction for FnJet<F> {
    fn jet(&self, x: f64) -> Jet {
        (self.0)(x)
    }
}

/// `offset + quad·x(2L − x)/L² + wave·sin²(kπx/(2L))`.
///
/// Both shape terms have zero slope at `x = L` for integer `k`, and vanish
/// at `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeFunction {
    pub offset: f64,
    pub quad: f64,
    pub wave: f64,
    pub k: u32,
    pub length: f64,
}

impl SmoothFunction for ShapeFunction {
    fn jet(&self, x: f64) -> Jet {
        let l = self.length;
        let u = f64::from(self.k) * PI / (2.0 * l);
        let s = (u * x).sin();
        let s2 = (2.0 * u * x).sin();
        let c2 = (2.0 * u * x).cos();
        Jet {
            value: self.offset + self.quad * x * (2.0 * l - x) / (l * l) + self.wave * s * s,
            d1: self.quad * 2.0 * (l - x) / (l * l) + self.wave * u * s2,
            d2: -2.0 * self.quad / (l * l) + self.wave * 2.0 * u * u * c2,
        }
    }
}

/// Power densities reverse-engineered from a chosen `(v, θ)` pair.
#[derive(Debug, Clone)]
pub struct ManufacturedProfile<V, T> {
    v: V,
    theta: T,
    params: FeederParams,
}

impl<V: SmoothFunction, T: SmoothFunction> ManufacturedProfile<V, T> {
    pub fn voltage(&self, x: f64) -> Jet {
        self.v.jet(x)
    }

    pub fn phase(&self, x: f64) -> Jet {
        self.theta.jet(x)
    }

    /// Exact model state at `x`.
    pub fn exact_state(&self, x: f64) -> State {
        let v = self.v.jet(x);
        let t = self.theta.jet(x);
        State {
            theta: t.value,
            v: v.value,
            s: -v.value * v.value * t.d1,
            w: v.d1,
        }
    }
}

impl<V: SmoothFunction, T: SmoothFunction> Profile for ManufacturedProfile<V, T> {
    fn eval(&self, x: f64) -> (f64, f64) {
        let v = self.v.jet(x);
        let t = self.theta.jet(x);
        let a = phase_flux_term(&v, &t);
        let m = amplitude_term(&v, &t);
        let (g, b) = (self.params.g(), self.params.b());
        (-b * a - g * m, g * a - b * m)
    }
}

const BOUNDARY_TOL: f64 = 1e-12;

/// Builds the `p`, `q` that make `(v_fn, theta_fn)` an exact solution.
///
/// The pair must satisfy `v(0) = 1`, `θ(0) = 0`, `v'(L) = 0`, `θ'(L) = 0`
/// (so that `s(L) = w(L) = 0`) and stay above the voltage guard.
pub fn manufactured_profile<V, T>(v_fn: V, theta_fn: T, params: &FeederParams) -> Result<ManufacturedProfile<V, T>>
where
    V: SmoothFunction,
    T: SmoothFunction,
{
    let l = params.length();
    let v0 = v_fn.jet(0.0);
    let t0 = theta_fn.jet(0.0);
    let vl = v_fn.jet(l);
    let tl = theta_fn.jet(l);
    let checks = [
        ("v(0) = 1", v0.value - 1.0),
        ("θ(0) = 0", t0.value),
        ("v'(L) = 0", vl.d1),
        ("θ'(L) = 0", tl.d1),
    ];
    for (what, gap) in checks {
        if !(gap.abs() <= BOUNDARY_TOL) {
            return Err(Error::Domain(format!(
                "manufactured pair violates {what} (off by {gap:e})"
            )));
        }
    }
    const SAMPLES: usize = 1024;
    for i in 0..=SAMPLES {
        let x = l * i as f64 / SAMPLES as f64;
        let v = v_fn.jet(x).value;
        if !(v >= V_MIN) {
            return Err(Error::Domain(format!(
                "manufactured voltage drops to {v} at x = {x}"
            )));
        }
    }
    Ok(ManufacturedProfile {
        v: v_fn,
        theta: theta_fn,
        params: *params,
    })
}

//! Flux and dissipation-rate functions evaluated on a solution grid.
//!
//! With `Ψ_b = −v²θ'`, `Ψ_g = −v·v'` and `Δ = v'² + v²θ'²` the state
//! equations imply, pointwise,
//!
//! ```text
//! dΨ_g/dx = σ_V − Δ                       (voltage subsystem, dissipative)
//! dΨ_b/dx = σ_P                           (phase subsystem, lossless)
//! d(b·Ψ_b + g·Ψ_g)/dx = p − g·Δ           (active power)
//! d(b·Ψ_g − g·Ψ_b)/dx = q − b·Δ           (reactive power)
//! ```
//!
//! with supply rates `σ_V = (gp + bq)/(g² + b²)` and
//! `σ_P = (bp − gq)/(g² + b²)`. Integrating the first two over `[0, L]`
//! gives the identities `∫σ_V − v'(0) = ∫Δ` and `∫σ_P = θ'(0)·v(0)²`.
//!
//! `Ψ_g` is also known as a storage function. This crate calls it a flux
//! throughout.

use crate::bvp::{solve_bvp, SolverOptions};
use crate::error::{Error, Result};
use crate::model::{supply_rates, FeederParams, Profile, Side, SolutionGrid, Superposition};
use crate::numerics::{derivative, max_abs, stencil};

/// Threshold separating a genuine gradient sign from round-off.
pub const TOL_SIGN: f64 = 1e-8;

/// `Ψ_b`, `Ψ_g` and `Δ` at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxFunctions {
    pub psi_b: Vec<f64>,
    pub psi_g: Vec<f64>,
    pub delta: Vec<f64>,
}

/// Evaluates the flux and dissipation functions with `dv/dx = w` and
/// `dθ/dx = −s/v²` taken from the state, so no differencing is involved.
pub fn evaluate_functions(grid: &SolutionGrid) -> FluxFunctions {
    let n = grid.states().len();
    let mut out = FluxFunctions {
        psi_b: Vec::with_capacity(n),
        psi_g: Vec::with_capacity(n),
        delta: Vec::with_capacity(n),
    };
    for st in grid.states() {
        let dtheta = st.phase_gradient();
        let dv = st.w;
        out.psi_b.push(-st.v * st.v * dtheta);
        out.psi_g.push(-st.v * dv);
        out.delta.push(dv * dv + st.v * st.v * dtheta * dtheta);
    }
    out
}

/// Pointwise residuals of the four dissipation equalities.
///
/// Only nodes in `checked` enter the max-norms; boundary nodes and nodes
/// whose five-point stencil straddles a profile breakpoint are left out
/// because the finite-difference derivative is not meaningful there.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualProfiles {
    pub d09: Vec<f64>,
    pub d10: Vec<f64>,
    pub e05: Vec<f64>,
    pub e06: Vec<f64>,
    pub checked: Vec<bool>,
}

/// Max-norm residuals of the dissipation equalities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EqualityResiduals {
    /// Active power balance `d(bΨ_b + gΨ_g)/dx − p + gΔ`.
    pub d09: f64,
    /// Reactive power balance `d(bΨ_g − gΨ_b)/dx − q + bΔ`.
    pub d10: f64,
    /// Voltage subsystem `dΨ_g/dx − σ_V + Δ`.
    pub e05: f64,
    /// Phase subsystem `dΨ_b/dx − σ_P`.
    pub e06: f64,
    /// `max |r_d09 − (b·r_e06 + g·r_e05)|` and the analogous d10 gap.
    pub recombination: f64,
}

impl EqualityResiduals {
    pub fn named(&self) -> [(&'static str, f64); 4] {
        [("d09", self.d09), ("d10", self.d10), ("e05", self.e05), ("e06", self.e06)]
    }
}

fn checked_nodes(grid: &SolutionGrid, profile: &dyn Profile) -> Vec<bool> {
    let xs = grid.xs();
    let n = grid.intervals();
    let breaks = profile.breakpoints();
    (0..=n)
        .map(|i| {
            if i == 0 || i == n {
                return false;
            }
            let r = stencil(i, n);
            let (lo, hi) = (xs[*r.start()], xs[*r.end()]);
            !breaks.iter().any(|&c| c > lo && c < hi)
        })
        .collect()
}

pub fn residual_profiles(grid: &SolutionGrid, profile: &dyn Profile, params: &FeederParams) -> ResidualProfiles {
    let (g, b) = (params.g(), params.b());
    let h = grid.h();
    let f = evaluate_functions(grid);
    let active_flux: Vec<f64> = f.psi_b.iter().zip(&f.psi_g).map(|(pb, pg)| b * pb + g * pg).collect();
    let reactive_flux: Vec<f64> = f.psi_b.iter().zip(&f.psi_g).map(|(pb, pg)| b * pg - g * pb).collect();
    let d_active = derivative(&active_flux, h);
    let d_reactive = derivative(&reactive_flux, h);
    let d_psi_g = derivative(&f.psi_g, h);
    let d_psi_b = derivative(&f.psi_b, h);

    let len = grid.xs().len();
    let mut out = ResidualProfiles {
        d09: Vec::with_capacity(len),
        d10: Vec::with_capacity(len),
        e05: Vec::with_capacity(len),
        e06: Vec::with_capacity(len),
        checked: checked_nodes(grid, profile),
    };
    for (i, &x) in grid.xs().iter().enumerate() {
        let (p, q) = profile.eval(x);
        let rates = supply_rates(p, q, params);
        let delta = f.delta[i];
        out.d09.push(d_active[i] - p + g * delta);
        out.d10.push(d_reactive[i] - q + b * delta);
        out.e05.push(d_psi_g[i] - rates.voltage + delta);
        out.e06.push(d_psi_b[i] - rates.phase);
    }
    out
}

pub fn verify_dissipation_equalities(grid: &SolutionGrid, profile: &dyn Profile, params: &FeederParams) -> EqualityResiduals {
    let r = residual_profiles(grid, profile, params);
    let (g, b) = (params.g(), params.b());
    let pick = |values: &[f64]| {
        max_abs(values.iter().zip(&r.checked).filter(|(_, &c)| c).map(|(&v, _)| v))
    };
    let recombination = max_abs((0..r.d09.len()).flat_map(|i| {
        [
            r.d09[i] - (b * r.e06[i] + g * r.e05[i]),
            r.d10[i] - (b * r.e05[i] - g * r.e06[i]),
        ]
    }));
    EqualityResiduals {
        d09: pick(&r.d09),
        d10: pick(&r.d10),
        e05: pick(&r.e05),
        e06: pick(&r.e06),
        recombination,
    }
}

/// Both sides of the integrated voltage and phase balances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralIdentities {
    /// `∫σ_V dx`
    pub supply_voltage: f64,
    /// `∫σ_P dx`
    pub supply_phase: f64,
    /// `∫Δ dx`
    pub dissipation: f64,
    pub v_gradient_0: f64,
    pub theta_gradient_0: f64,
    /// `|∫σ_V − v'(0) − ∫Δ|`
    pub j02_gap: f64,
    /// `|∫σ_P − θ'(0)|`
    pub j04_gap: f64,
    /// `|∫σ_P − (Ψ_b(L) − Ψ_b(0))|`
    pub phase_balance_gap: f64,
}

/// Supply integrals come from the profile itself (exact for segments and
/// bumps) so that load discontinuities do not pollute the gaps; `∫Δ` uses
/// the grid quadrature, composite Simpson when the profile is smooth.
pub fn verify_integral_identities(grid: &SolutionGrid, profile: &dyn Profile, params: &FeederParams) -> IntegralIdentities {
    let (ip, iq) = profile.integral(0.0, grid.length());
    let rates = supply_rates(ip, iq, params);
    let f = evaluate_functions(grid);
    let dissipation = grid.integrate(&f.delta);
    let start = grid.sending();
    let v0 = start.w;
    let t0 = start.phase_gradient();
    let n = f.psi_b.len() - 1;
    IntegralIdentities {
        supply_voltage: rates.voltage,
        supply_phase: rates.phase,
        dissipation,
        v_gradient_0: v0,
        theta_gradient_0: t0,
        j02_gap: (rates.voltage - v0 - dissipation).abs(),
        j04_gap: (rates.phase - t0).abs(),
        phase_balance_gap: (rates.phase - (f.psi_b[n] - f.psi_b[0])).abs(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossDecomposition {
    /// `∫Δ dx`
    pub total: f64,
    /// `g·∫Δ`, the resistive loss `∫R·I² dx`.
    pub active: f64,
    /// `b·∫Δ`, the reactive counterpart `∫X·I² dx`.
    pub reactive: f64,
    /// Squared current amplitude `(g² + b²)·Δ` per node.
    pub current_sq: Vec<f64>,
}

pub fn loss_decomposition(grid: &SolutionGrid, params: &FeederParams) -> LossDecomposition {
    let f = evaluate_functions(grid);
    let total = grid.integrate(&f.delta);
    let d = params.admittance_sq();
    LossDecomposition {
        total,
        active: params.g() * total,
        reactive: params.b() * total,
        current_sq: f.delta.iter().map(|x| d * x).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phenomenon {
    VoltageDrop,
    ReverseFlow,
    PhaseDelay,
    PhaseAdvance,
}

impl Phenomenon {
    pub fn name(self) -> &'static str {
        match self {
            Phenomenon::VoltageDrop => "VoltageDrop",
            Phenomenon::ReverseFlow => "ReverseFlow",
            Phenomenon::PhaseDelay => "PhaseDelay",
            Phenomenon::PhaseAdvance => "PhaseAdvance",
        }
    }
}

impl std::fmt::Display for Phenomenon {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One phase-sign equivalence evaluated on a scenario.
///
/// Delay form (all `q ≤ 0`): `θ'(0) ≤ 0 ⇔ ∫q ≥ (b/g)∫p`.
/// Advance form (all `q ≥ 0`): `θ'(0) ≥ 0 ⇔ ∫q ≤ (b/g)∫p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseEquivalence {
    /// Whether the sign condition on `q` holds, so the check applies.
    pub applicable: bool,
    pub gradient_side: bool,
    pub integral_side: bool,
}

impl PhaseEquivalence {
    /// True when not applicable or when both sides agree.
    pub fn holds(&self) -> bool {
        !self.applicable || self.gradient_side == self.integral_side
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhenomenaReport {
    /// Sorted, without duplicates.
    pub flags: Vec<Phenomenon>,
    pub delay_equivalence: PhaseEquivalence,
    pub advance_equivalence: PhaseEquivalence,
}

/// Sample points for sign conditions on the profile: grid nodes plus both
/// one-sided limits at every breakpoint.
fn sign_samples(grid: &SolutionGrid, profile: &dyn Profile) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = grid.xs().iter().map(|&x| profile.eval(x)).collect();
    for c in profile.breakpoints() {
        out.push(profile.eval_side(c, Side::Left));
        out.push(profile.eval_side(c, Side::Right));
    }
    out
}

pub fn classify_phenomena(grid: &SolutionGrid, profile: &dyn Profile, params: &FeederParams) -> PhenomenaReport {
    let start = grid.sending();
    let dv = start.w;
    let dt = start.phase_gradient();
    let mut flags = Vec::new();
    if dv <= -TOL_SIGN {
        flags.push(Phenomenon::VoltageDrop);
    }
    if dv >= TOL_SIGN {
        flags.push(Phenomenon::ReverseFlow);
    }
    if dt <= -TOL_SIGN {
        flags.push(Phenomenon::PhaseDelay);
    }
    if dt >= TOL_SIGN {
        flags.push(Phenomenon::PhaseAdvance);
    }

    let samples = sign_samples(grid, profile);
    let (ip, iq) = profile.integral(0.0, grid.length());
    // ∫q − (b/g)∫p
    let margin = iq - params.b() / params.g() * ip;
    PhenomenaReport {
        flags,
        delay_equivalence: PhaseEquivalence {
            applicable: samples.iter().all(|&(_, q)| q <= 0.0),
            gradient_side: dt <= TOL_SIGN,
            integral_side: margin >= -TOL_SIGN,
        },
        advance_equivalence: PhaseEquivalence {
            applicable: samples.iter().all(|&(_, q)| q >= 0.0),
            gradient_side: dt >= -TOL_SIGN,
            integral_side: margin <= TOL_SIGN,
        },
    }
}

/// Sign claims that follow from the identities and are asserted on every
/// analysed solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignChecks {
    /// `Δ ≥ 0` at every node.
    pub delta_nonnegative: bool,
    /// With `p ≤ 0`, `q ≤ 0` everywhere and positive loss, `v'(0) < 0`.
    /// `None` when the premise does not hold.
    pub consumption_drops_voltage: Option<bool>,
    /// With `b < 0`, `b·Δ ≤ 0` at every node. `None` when `b ≥ 0`.
    pub reactive_rate_nonpositive: Option<bool>,
}

pub fn sign_checks(grid: &SolutionGrid, profile: &dyn Profile, params: &FeederParams) -> SignChecks {
    let f = evaluate_functions(grid);
    let samples = sign_samples(grid, profile);
    let consuming = samples.iter().all(|&(p, q)| p <= 0.0 && q <= 0.0);
    let total = grid.integrate(&f.delta);
    let b = params.b();
    SignChecks {
        delta_nonnegative: f.delta.iter().all(|&d| d >= 0.0),
        consumption_drops_voltage: (consuming && total > 0.0).then(|| grid.sending().w < 0.0),
        reactive_rate_nonpositive: (b < 0.0).then(|| f.delta.iter().all(|&d| b * d <= 0.0)),
    }
}

/// Everything the dissipation analysis computes for one solution.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipationReport {
    pub functions: FluxFunctions,
    pub residuals: EqualityResiduals,
    pub integrals: IntegralIdentities,
    pub losses: LossDecomposition,
    pub phenomena: PhenomenaReport,
    pub signs: SignChecks,
    /// `max |Ψ_b[i] − s(x_i)|`
    pub psi_b_deviation: f64,
}

impl DissipationReport {
    pub fn total_loss(&self) -> f64 {
        self.losses.total
    }

    pub fn loss_active(&self) -> f64 {
        self.losses.active
    }

    pub fn loss_reactive(&self) -> f64 {
        self.losses.reactive
    }

    pub fn v_gradient_0(&self) -> f64 {
        self.integrals.v_gradient_0
    }

    pub fn theta_gradient_0(&self) -> f64 {
        self.integrals.theta_gradient_0
    }
}

pub fn analyze(grid: &SolutionGrid, profile: &dyn Profile, params: &FeederParams) -> DissipationReport {
    let functions = evaluate_functions(grid);
    let psi_b_deviation = max_abs(functions.psi_b.iter().zip(grid.states()).map(|(pb, st)| pb - st.s));
    DissipationReport {
        residuals: verify_dissipation_equalities(grid, profile, params),
        integrals: verify_integral_identities(grid, profile, params),
        losses: loss_decomposition(grid, params),
        phenomena: classify_phenomena(grid, profile, params),
        signs: sign_checks(grid, profile, params),
        psi_b_deviation,
        functions,
    }
}

/// Loss balance of one solved scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBalance {
    pub total_loss: f64,
    /// `∫σ_V dx`
    pub supply_voltage: f64,
    pub v_gradient_0: f64,
    /// `|∫Δ − (∫σ_V − v'(0))|`
    pub identity_gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InjectionEvaluation {
    pub base: LossBalance,
    pub injected: LossBalance,
    /// Injected total loss minus base total loss.
    pub loss_delta: f64,
}

fn balance(profile: &dyn Profile, params: &FeederParams, options: &SolverOptions) -> Result<LossBalance> {
    let (grid, _) = solve_bvp(profile, params, options)?;
    let id = verify_integral_identities(&grid, profile, params);
    Ok(LossBalance {
        total_loss: id.dissipation,
        supply_voltage: id.supply_voltage,
        v_gradient_0: id.v_gradient_0,
        identity_gap: id.j02_gap,
    })
}

/// Solves the base scenario and the base with `injection` superposed, and
/// reports how the net loss changes. Solver failures name the scenario.
pub fn injection_evaluation(
    base: &dyn Profile,
    injection: &dyn Profile,
    params: &FeederParams,
    options: &SolverOptions,
) -> Result<InjectionEvaluation> {
    let label = |which: &str| {
        let which = which.to_string();
        move |e: Error| Error::InScenario {
            scenario: which,
            source: Box::new(e),
        }
    };
    let b = balance(base, params, options).map_err(label("base"))?;
    let combined = Superposition {
        parts: vec![base, injection],
    };
    let i = balance(&combined, params, options).map_err(label("injected"))?;
    Ok(InjectionEvaluation {
        base: b,
        injected: i,
        loss_delta: i.total_loss - b.total_loss,
    })
}

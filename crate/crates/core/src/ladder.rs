//! Discrete ladder network used as an independent check on the continuum
//! model.
//!
//! The feeder is cut into `N` series impedances `z·h` with
//! `z = R + jX = 1/(g − jb)`. Each node carries a constant-power injection
//! obtained by lumping the density against the piecewise-linear hat
//! function of that node, and the slack bus at node 0 is held at `1∠0`.
//! A backward-forward sweep solves the radial circuit.

use num_complex::Complex64;

use crate::model::{integrate_weighted, FeederParams, Profile, SolutionGrid};
use crate::dissipation::loss_decomposition;

#[derive(Debug, Clone, PartialEq)]
pub struct LadderNetwork {
    h: f64,
    z_segment: Complex64,
    injections: Vec<Complex64>,
}

impl LadderNetwork {
    /// Network with `injections.len()` nodes joined by identical segments.
    pub fn new(h: f64, z_segment: Complex64, injections: Vec<Complex64>) -> Self {
        assert!(injections.len() >= 2, "a ladder needs at least two nodes");
        assert!(z_segment.re > 0.0, "segment impedance needs a positive real part");
        Self { h, z_segment, injections }
    }

    pub fn n_nodes(&self) -> usize {
        self.injections.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn z_segment(&self) -> Complex64 {
        self.z_segment
    }

    /// Complex power injected at each node; positive real part is supply.
    pub fn injections(&self) -> &[Complex64] {
        &self.injections
    }
}

/// Lumps `profile` onto the nodes `x_k = k·L/N`.
///
/// `S_k = ∫(p + jq)·φ_k dx` with `φ_k` the hat function that is 1 at `x_k`
/// and 0 at the neighbouring nodes. The hats sum to one, so the lumped
/// powers add up to `∫(p + jq)` exactly and the end nodes get half cells.
pub fn build_network(profile: &dyn Profile, params: &FeederParams, intervals: usize) -> LadderNetwork {
    assert!(intervals >= 1);
    let l = params.length();
    let h = l / intervals as f64;
    let xs = crate::model::grid_nodes(l, intervals);
    let injections = (0..=intervals)
        .map(|k| {
            let x = xs[k];
            let mut s = (0.0, 0.0);
            if k > 0 {
                let a = xs[k - 1];
                let (p, q) = integrate_weighted(profile, a, x, 1, |t| (t - a) / h);
                s = (s.0 + p, s.1 + q);
            }
            if k < intervals {
                let b = xs[k + 1];
                let (p, q) = integrate_weighted(profile, x, b, 1, |t| (b - t) / h);
                s = (s.0 + p, s.1 + q);
            }
            Complex64::new(s.0, s.1)
        })
        .collect();
    let z = Complex64::new(params.resistance(), params.reactance());
    LadderNetwork::new(h, z * h, injections)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerflowSolution {
    pub voltages: Vec<Complex64>,
    /// Current in segment `k` (node `k` to node `k + 1`), positive away from
    /// the slack.
    pub branch_currents: Vec<Complex64>,
    pub iterations: usize,
    pub converged: bool,
    /// `max |ΔV|` of the last sweep.
    pub last_update: f64,
}

impl PowerflowSolution {
    /// `Σ Re(z_segment)·|I_k|²`
    pub fn active_loss(&self, net: &LadderNetwork) -> f64 {
        net.z_segment.re * self.branch_currents.iter().map(|i| i.norm_sqr()).sum::<f64>()
    }

    /// Power drawn from the slack source, net of the injection lumped onto
    /// node 0.
    pub fn slack_power(&self, net: &LadderNetwork) -> Complex64 {
        self.voltages[0] * self.branch_currents[0].conj() - net.injections[0]
    }

    /// `|S_slack − (−Σ S_k + Σ z·|I_k|²)|`
    pub fn power_balance_gap(&self, net: &LadderNetwork) -> f64 {
        let injected: Complex64 = net.injections.iter().sum();
        let losses: Complex64 = self.branch_currents.iter().map(|i| net.z_segment * i.norm_sqr()).sum();
        (self.slack_power(net) - (losses - injected)).norm()
    }
}

fn branch_currents(net: &LadderNetwork, voltages: &[Complex64]) -> Vec<Complex64> {
    let n = net.n_nodes();
    let mut out = vec![Complex64::new(0.0, 0.0); n - 1];
    let mut acc = Complex64::new(0.0, 0.0);
    for k in (1..n).rev() {
        // injected current conj(S/V); what flows on towards the terminal is
        // the negative of everything injected downstream
        acc -= (net.injections[k] / voltages[k]).conj();
        out[k - 1] = acc;
    }
    out
}

/// Backward-forward sweep from a flat start. Stops when no node voltage
/// moves by more than `tol`; non-convergence is reported in the result.
pub fn solve_powerflow(net: &LadderNetwork, tol: f64, max_iters: usize) -> PowerflowSolution {
    assert!(tol > 0.0);
    let n = net.n_nodes();
    let mut v = vec![Complex64::new(1.0, 0.0); n];
    let mut currents = vec![Complex64::new(0.0, 0.0); n - 1];
    let mut last_update = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        currents = branch_currents(net, &v);
        last_update = 0.0;
        for k in 0..n - 1 {
            let next = v[k] - net.z_segment * currents[k];
            last_update = last_update.max((next - v[k + 1]).norm());
            v[k + 1] = next;
        }
        if !last_update.is_finite() {
            break;
        }
        if last_update <= tol {
            // currents consistent with the final voltages
            currents = branch_currents(net, &v);
            return PowerflowSolution {
                voltages: v,
                branch_currents: currents,
                iterations,
                converged: true,
                last_update,
            };
        }
    }
    PowerflowSolution {
        voltages: v,
        branch_currents: currents,
        iterations,
        converged: false,
        last_update,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuumComparison {
    /// `max_k ||V_k| − v(x_k)|`
    pub v_err: f64,
    /// `max_k |arg V_k − θ(x_k)|`
    pub theta_err: f64,
    /// `|ladder active loss − g·∫Δ| / max(g·∫Δ, ε)`
    pub loss_err: f64,
    pub ladder_loss: f64,
    pub continuum_loss: f64,
}

const LOSS_FLOOR: f64 = 1e-14;

/// Compares a continuum solution with a ladder solved on the same nodes.
pub fn compare_to_continuum(
    grid: &SolutionGrid,
    params: &FeederParams,
    net: &LadderNetwork,
    solution: &PowerflowSolution,
) -> ContinuumComparison {
    assert_eq!(grid.states().len(), solution.voltages.len(), "grid and ladder must share nodes");
    let mut v_err: f64 = 0.0;
    let mut theta_err: f64 = 0.0;
    for (st, vk) in grid.states().iter().zip(&solution.voltages) {
        v_err = v_err.max((vk.norm() - st.v).abs());
        theta_err = theta_err.max((vk.arg() - st.theta).abs());
    }
    let continuum_loss = loss_decomposition(grid, params).active;
    let ladder_loss = solution.active_loss(net);
    ContinuumComparison {
        v_err,
        theta_err,
        loss_err: (ladder_loss - continuum_loss).abs() / continuum_loss.max(LOSS_FLOOR),
        ladder_loss,
        continuum_loss,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvp::{solve_bvp, SolverOptions};
    use crate::model::{PowerProfile, Segment};

    fn unit() -> FeederParams {
        FeederParams::new(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn zero_profile_stays_at_slack_voltage() {
        let net = build_network(&PowerProfile::zero(), &unit(), 32);
        assert!(net.injections().iter().all(|s| *s == Complex64::new(0.0, 0.0)));
        let sol = solve_powerflow(&net, 1e-12, 10);
        assert!(sol.converged);
        assert_eq!(sol.iterations, 1);
        assert!(sol.voltages.iter().all(|v| *v == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn constant_density_lumps_exactly() {
        // [0, L) leaves p(L) = 0
        let prof = PowerProfile::new(vec![Segment { start: 0.0, end: 1.0, p: -0.1, q: 0.0 }], vec![], 1.0).unwrap();
        let net = build_network(&prof, &unit(), 64);
        let total: Complex64 = net.injections().iter().sum();
        assert!((total.re + 0.1).abs() < 1e-15, "{total}");
        assert_eq!(total.im, 0.0);
        assert!((net.injections()[0].re + 0.1 / 128.0).abs() < 1e-17);
    }

    #[test]
    fn lumped_segment_totals_match_the_integral() {
        let prof = PowerProfile::new(vec![Segment { start: 0.13, end: 0.71, p: -0.4, q: 0.25 }], vec![], 1.0).unwrap();
        for n in [16, 17, 100] {
            let net = build_network(&prof, &unit(), n);
            let total: Complex64 = net.injections().iter().sum();
            assert!((total.re - (-0.4 * 0.58)).abs() < 1e-14);
            assert!((total.im - 0.25 * 0.58).abs() < 1e-14);
        }
    }

    /// `|V₁|⁴ − (1 − 2a)|V₁|² + (a² + c²) = 0` with `a = RP + XQ`,
    /// `c = XP − RQ` for a load `P + jQ` drawn through `R + jX`.
    #[test]
    fn two_node_network_matches_closed_form() {
        let z = Complex64::new(0.05, 0.08);
        let (p, q) = (0.9, 0.3);
        let net = LadderNetwork::new(1.0, z, vec![Complex64::new(0.0, 0.0), Complex64::new(-p, -q)]);
        let sol = solve_powerflow(&net, 1e-14, 200);
        assert!(sol.converged);
        let a = z.re * p + z.im * q;
        let c = z.im * p - z.re * q;
        let u = ((1.0 - 2.0 * a) + ((1.0 - 2.0 * a).powi(2) - 4.0 * (a * a + c * c)).sqrt()) / 2.0;
        assert!((sol.voltages[1].norm() - u.sqrt()).abs() < 1e-12);
        assert!(sol.power_balance_gap(&net) < 1e-12);
    }

    #[test]
    fn consumption_only_profile_is_monotone() {
        let prof = PowerProfile::new(
            vec![
                Segment { start: 0.1, end: 0.3, p: -0.5, q: -0.2 },
                Segment { start: 0.6, end: 0.9, p: -0.2, q: -0.1 },
            ],
            vec![],
            1.0,
        )
        .unwrap();
        let net = build_network(&prof, &unit(), 128);
        let sol = solve_powerflow(&net, 1e-13, 100);
        assert!(sol.converged);
        assert!(sol.voltages.windows(2).all(|w| w[1].norm() <= w[0].norm()));
        assert!(sol.power_balance_gap(&net) < 1e-12);
    }

    #[test]
    fn sweep_failure_is_reported_not_raised() {
        let net = build_network(
            &PowerProfile::new(vec![Segment { start: 0.0, end: 0.9, p: -40.0, q: 0.0 }], vec![], 1.0).unwrap(),
            &unit(),
            32,
        );
        let sol = solve_powerflow(&net, 1e-12, 30);
        assert!(!sol.converged);
    }

    #[test]
    fn zero_profile_comparison_is_exact() {
        let prm = unit();
        let (g, _) = solve_bvp(&PowerProfile::zero(), &prm, &SolverOptions::default().with_grid(32)).unwrap();
        let net = build_network(&PowerProfile::zero(), &prm, 32);
        let sol = solve_powerflow(&net, 1e-12, 10);
        let c = compare_to_continuum(&g, &prm, &net, &sol);
        assert_eq!((c.v_err, c.theta_err, c.loss_err), (0.0, 0.0, 0.0));
    }
}

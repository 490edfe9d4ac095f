//! Command-line front end.
//!
//! Exit codes: 0 success, 1 parse/validation/usage error, 2 Newton did not
//! converge, 3 voltage collapse, 4 a dissipation check failed, 5 the ladder
//! oracle disagrees, 6 I/O error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::bvp::{solve_bvp, SolveDiagnostics, SolverOptions};
use crate::dissipation::{analyze, injection_evaluation, DissipationReport, LossBalance};
use crate::error::{Error, Result};
use crate::ladder::{build_network, compare_to_continuum, solve_powerflow};
use crate::model::SolutionGrid;
use crate::numerics::observed_orders;
use crate::scenario::{load, Scenario};

pub const EXIT_VERIFY_FAILED: u8 = 4;
pub const EXIT_ORACLE_DISAGREES: u8 = 5;

/// Residual and identity-gap tolerance for `verify`.
pub const RESIDUAL_TOL: f64 = 1e-6;
/// Minimum observed order for the dissipation residuals on smooth scenarios.
pub const MIN_ORDER: f64 = 1.9;
/// Residuals below this are round-off; no order is demanded from them.
pub const NOISE_FLOOR: f64 = 1e-11;
/// Largest relative loss mismatch `compare` accepts on its finest grid.
pub const LOSS_TOL: f64 = 1e-2;

const SWEEP_TOL: f64 = 1e-13;
const SWEEP_MAX_ITERS: usize = 1000;

#[derive(Debug, Parser)]
#[command(name = "feederflow", version, about = "Voltage-profile model of a radial distribution feeder")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a scenario and write the nodal profile (CSV) and a report.
    Solve(SolveArgs),
    /// Check the dissipation equalities and integral identities under grid refinement.
    Verify(VerifyArgs),
    /// Compare the continuum solution with the discrete ladder network.
    Compare(CompareArgs),
    /// Evaluate how an injection changes the net distribution loss.
    Losses(LossesArgs),
    /// Solve a scenario for each value of one numeric parameter.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Scenario file or preset name (no_load, conventional, pv_ev, manufactured).
    scenario: String,
    /// Grid intervals; overrides the scenario's solver setting.
    #[arg(long)]
    grid: Option<usize>,
    /// Directory for `<name>.csv` and `<name>.report`.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    scenario: String,
    #[arg(long)]
    grid: Option<usize>,
    /// Number of grids, each twice as fine as the previous one.
    #[arg(long, default_value_t = 3)]
    refine: u32,
    /// Skew the voltage gradient of every solved grid by this amplitude
    /// before checking (fault injection).
    #[arg(long, allow_negative_numbers = true)]
    perturb: Option<f64>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    scenario: String,
    /// Coarsest grid; the ladder is also solved at 2N and 4N.
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Debug, Args)]
struct LossesArgs {
    /// Base scenario.
    scenario: String,
    /// Scenario whose profile is added to the base.
    #[arg(long)]
    inject: String,
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    scenario: String,
    /// `path=v1,v2,...`, e.g. `feeder.b=-0.5,0,0.5`.
    #[arg(long)]
    param: String,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Formats a float with 17 significant digits. Negative zero prints as
/// zero.
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x + 0.0)
}

/// Headline numbers shared by the solve report and the sweep rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub iterations: usize,
    pub v_terminal: f64,
    pub theta_terminal: f64,
    pub v_gradient_0: f64,
    pub theta_gradient_0: f64,
    pub total_loss: f64,
    pub loss_active: f64,
    pub loss_reactive: f64,
    pub phenomena: Vec<String>,
}

impl Summary {
    fn new(grid: &SolutionGrid, diag: &SolveDiagnostics, report: &DissipationReport) -> Self {
        Self {
            iterations: diag.iterations,
            v_terminal: grid.terminal().v,
            theta_terminal: grid.terminal().theta,
            v_gradient_0: report.v_gradient_0(),
            theta_gradient_0: report.theta_gradient_0(),
            total_loss: report.total_loss(),
            loss_active: report.loss_active(),
            loss_reactive: report.loss_reactive(),
            phenomena: report.phenomena.flags.iter().map(|f| f.to_string()).collect(),
        }
    }

    fn phenomena_text(&self, sep: &str) -> String {
        if self.phenomena.is_empty() {
            "none".to_string()
        } else {
            self.phenomena.join(sep)
        }
    }
}

/// Result of `solve`: diagnostics, dissipation summary and file paths.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario: String,
    pub grid_intervals: usize,
    pub diagnostics: SolveDiagnostics,
    pub summary: Summary,
    pub dissipation: DissipationReport,
    pub csv_path: PathBuf,
    pub report_path: PathBuf,
}

impl RunReport {
    /// Flat `key=value` lines, LF-terminated. Independent of the output
    /// directory.
    pub fn to_text(&self) -> String {
        let d = &self.diagnostics;
        let r = &self.dissipation;
        let s = &self.summary;
        let mut lines: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| lines.push((k.to_string(), v));
        put("scenario", self.scenario.clone());
        put("grid", self.grid_intervals.to_string());
        put("converged", d.converged.to_string());
        put("iterations", d.iterations.to_string());
        put("continuation_stages", d.continuation_stages.to_string());
        put("final_residual_norm", fmt_f64(d.final_residual_norm));
        for (name, v) in ["theta_0", "v_0_minus_1", "s_L", "w_L"].iter().zip(d.boundary_residuals) {
            put(&format!("boundary_{name}"), fmt_f64(v));
        }
        put("suspicious", d.suspicious.to_string());
        put("v_terminal", fmt_f64(s.v_terminal));
        put("theta_terminal", fmt_f64(s.theta_terminal));
        put("v_gradient_0", fmt_f64(s.v_gradient_0));
        put("theta_gradient_0", fmt_f64(s.theta_gradient_0));
        put("total_loss", fmt_f64(s.total_loss));
        put("loss_active", fmt_f64(s.loss_active));
        put("loss_reactive", fmt_f64(s.loss_reactive));
        for (name, v) in r.residuals.named() {
            put(&format!("residual_{name}"), fmt_f64(v));
        }
        put("residual_recombination", fmt_f64(r.residuals.recombination));
        let i = &r.integrals;
        put("integral_j02_lhs", fmt_f64(i.supply_voltage - i.v_gradient_0));
        put("integral_j02_rhs", fmt_f64(i.dissipation));
        put("integral_j04_lhs", fmt_f64(i.supply_phase));
        put("integral_j04_rhs", fmt_f64(i.theta_gradient_0));
        put("j02_gap", fmt_f64(i.j02_gap));
        put("j04_gap", fmt_f64(i.j04_gap));
        put("psi_b_deviation", fmt_f64(r.psi_b_deviation));
        put("delta_nonnegative", r.signs.delta_nonnegative.to_string());
        put("phenomena", s.phenomena_text(","));
        lines.into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

pub const CSV_HEADER: &str = "x,theta,v,s,w,p,q,psi_b,psi_g,delta";

/// One row per node: `x, θ, v, s, w, p, q, Ψ_b, Ψ_g, Δ`.
pub fn profile_csv(grid: &SolutionGrid, scenario: &Scenario, report: &DissipationReport) -> String {
    let mut out = String::with_capacity(grid.xs().len() * 240);
    out.push_str(CSV_HEADER);
    out.push('\n');
    let f = &report.functions;
    for (i, (&x, st)) in grid.xs().iter().zip(grid.states()).enumerate() {
        let (p, q) = scenario.profile().eval(x);
        let row = [x, st.theta, st.v, st.s, st.w, p, q, f.psi_b[i], f.psi_g[i], f.delta[i]];
        let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("cannot create {}", dir.display()), e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| Error::io(format!("cannot create a temporary file in {}", dir.display()), e))?;
    tmp.write_all(contents)
        .and_then(|_| tmp.as_file().sync_all())
        .map_err(|e| Error::io(format!("cannot write {}", path.display()), e))?;
    tmp.persist(path)
        .map_err(|e| Error::io(format!("cannot move output into {}", path.display()), e.error))?;
    Ok(())
}

fn file_stem(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
        .collect();
    if s.is_empty() { "scenario".to_string() } else { s }
}

fn options_for(scenario: &Scenario, grid: Option<usize>) -> Result<SolverOptions> {
    let opts = match grid {
        Some(n) => scenario.solver().with_grid(n),
        None => scenario.solver().clone(),
    };
    opts.validate()?;
    Ok(opts)
}

/// Solves `scenario` and writes `<out>/<name>.csv` and `<out>/<name>.report`.
pub fn cmd_solve(scenario: &Scenario, grid: Option<usize>, out: &Path) -> Result<RunReport> {
    let opts = options_for(scenario, grid)?;
    let (sol, diag) = solve_bvp(scenario.profile(), scenario.params(), &opts)?;
    let dissipation = analyze(&sol, scenario.profile(), scenario.params());
    let stem = file_stem(scenario.name());
    let report = RunReport {
        scenario: scenario.name().to_string(),
        grid_intervals: opts.grid_intervals,
        summary: Summary::new(&sol, &diag, &dissipation),
        diagnostics: diag,
        csv_path: out.join(format!("{stem}.csv")),
        report_path: out.join(format!("{stem}.report")),
        dissipation,
    };
    let csv = profile_csv(&sol, scenario, &report.dissipation);
    write_atomic(&report.csv_path, csv.as_bytes())?;
    write_atomic(&report.report_path, report.to_text().as_bytes())?;
    Ok(report)
}

/// Residuals of one refinement level, in the order d09, d10, e05, e06,
/// j02, j04.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyLevel {
    pub grid: usize,
    pub values: [f64; 6],
}

pub const VERIFY_CHECKS: [&str; 6] = ["d09", "d10", "e05", "e06", "j02", "j04"];

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOutcome {
    pub levels: Vec<VerifyLevel>,
    /// Observed orders between consecutive levels, per check; `None` when
    /// the coarser value is already at the noise floor.
    pub orders: Vec<[Option<f64>; 6]>,
    /// Whether orders were enforced (profile without breakpoints).
    pub smooth: bool,
    /// Names of failing checks.
    pub failing: Vec<&'static str>,
}

impl VerifyOutcome {
    pub fn passed(&self) -> bool {
        self.failing.is_empty()
    }

    pub fn to_text(&self, scenario: &str) -> String {
        let mut out = format!("scenario={scenario}\n");
        out.push_str(&format!("{:>8}", "grid"));
        for c in VERIFY_CHECKS {
            out.push_str(&format!(" {c:>13}"));
        }
        out.push('\n');
        for l in &self.levels {
            out.push_str(&format!("{:>8}", l.grid));
            for v in l.values {
                out.push_str(&format!(" {v:>13.6e}"));
            }
            out.push('\n');
        }
        for (l, o) in self.levels.windows(2).zip(&self.orders) {
            out.push_str(&format!("{:>8}", format!("{}/{}", l[0].grid, l[1].grid)));
            for v in o {
                match v {
                    Some(v) => out.push_str(&format!(" {v:>13.3}")),
                    None => out.push_str(&format!(" {:>13}", "-")),
                }
            }
            out.push('\n');
        }
        out.push_str(&format!("orders_enforced={}\n", self.smooth));
        if self.passed() {
            out.push_str("result=pass\n");
        } else {
            out.push_str(&format!("result=fail\nfailing={}\n", self.failing.join(",")));
        }
        out
    }
}

pub fn cmd_verify(scenario: &Scenario, grid: Option<usize>, refine: u32, perturb: Option<f64>) -> Result<VerifyOutcome> {
    if refine == 0 {
        return Err(Error::Validation("--refine needs at least one level".into()));
    }
    let base = options_for(scenario, grid)?;
    let mut levels = Vec::new();
    for k in 0..refine {
        let n = base.grid_intervals << k;
        let (mut sol, _) = solve_bvp(scenario.profile(), scenario.params(), &base.with_grid(n))?;
        if let Some(a) = perturb {
            sol = sol.perturbed(a);
        }
        let r = analyze(&sol, scenario.profile(), scenario.params());
        let e = r.residuals;
        levels.push(VerifyLevel {
            grid: n,
            values: [e.d09, e.d10, e.e05, e.e06, r.integrals.j02_gap, r.integrals.j04_gap],
        });
    }
    let smooth = scenario.profile().breakpoints().is_empty();
    let orders: Vec<[Option<f64>; 6]> = levels
        .windows(2)
        .map(|w| {
            std::array::from_fn(|c| {
                let (a, b) = (w[0].values[c], w[1].values[c]);
                (a > NOISE_FLOOR).then(|| observed_orders(&[a, b])[0])
            })
        })
        .collect();
    let finest = levels.last().expect("at least one level");
    let mut failing = Vec::new();
    for (c, name) in VERIFY_CHECKS.iter().enumerate() {
        let too_big = !(finest.values[c] <= RESIDUAL_TOL);
        // orders are asked of the differenced equalities only
        let too_slow = smooth && c < 4 && orders.iter().any(|o| o[c].is_some_and(|v| v < MIN_ORDER));
        if too_big || too_slow {
            failing.push(*name);
        }
    }
    Ok(VerifyOutcome { levels, orders, smooth, failing })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub grid: usize,
    pub v_err: f64,
    pub theta_err: f64,
    pub loss_err: f64,
    pub sweep_iterations: usize,
    pub power_balance_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareOutcome {
    pub rows: Vec<CompareRow>,
    pub problems: Vec<String>,
}

impl CompareOutcome {
    pub fn passed(&self) -> bool {
        self.problems.is_empty()
    }

    pub fn to_text(&self, scenario: &str) -> String {
        let mut out = format!("scenario={scenario}\n");
        out.push_str(&format!("{:>8} {:>13} {:>13} {:>13} {:>6}\n", "grid", "v_err", "theta_err", "loss_err", "sweeps"));
        for r in &self.rows {
            out.push_str(&format!(
                "{:>8} {:>13.6e} {:>13.6e} {:>13.6e} {:>6}\n",
                r.grid, r.v_err, r.theta_err, r.loss_err, r.sweep_iterations
            ));
        }
        for (w, name) in ["v_err", "theta_err", "loss_err"].into_iter().enumerate() {
            let errs: Vec<f64> = self.rows.iter().map(|r| [r.v_err, r.theta_err, r.loss_err][w]).collect();
            let orders: Vec<String> = observed_orders(&errs).iter().map(|o| format!("{o:.3}")).collect();
            out.push_str(&format!("order_{name}={}\n", orders.join(",")));
        }
        if self.passed() {
            out.push_str("result=pass\n");
        } else {
            out.push_str("result=fail\n");
            for p in &self.problems {
                out.push_str(&format!("problem={p}\n"));
            }
        }
        out
    }
}

/// Errors below this count as agreement to round-off.
const COMPARE_FLOOR: f64 = 1e-12;

pub fn cmd_compare(scenario: &Scenario, grid: Option<usize>) -> Result<CompareOutcome> {
    let base = options_for(scenario, grid)?;
    let mut rows = Vec::new();
    let mut problems = Vec::new();
    for k in 0..3 {
        let n = base.grid_intervals << k;
        let (sol, _) = solve_bvp(scenario.profile(), scenario.params(), &base.with_grid(n))?;
        let net = build_network(scenario.profile(), scenario.params(), n);
        let pf = solve_powerflow(&net, SWEEP_TOL, SWEEP_MAX_ITERS);
        if !pf.converged {
            problems.push(format!("ladder sweep did not converge at N={n}"));
            continue;
        }
        let c = compare_to_continuum(&sol, scenario.params(), &net, &pf);
        rows.push(CompareRow {
            grid: n,
            v_err: c.v_err,
            theta_err: c.theta_err,
            loss_err: c.loss_err,
            sweep_iterations: pf.iterations,
            power_balance_gap: pf.power_balance_gap(&net),
        });
    }
    for (name, pick) in [
        ("v_err", (|r: &CompareRow| r.v_err) as fn(&CompareRow) -> f64),
        ("theta_err", |r: &CompareRow| r.theta_err),
        ("loss_err", |r: &CompareRow| r.loss_err),
    ] {
        for w in rows.windows(2) {
            let (a, b) = (pick(&w[0]), pick(&w[1]));
            if b > a && b > COMPARE_FLOOR {
                problems.push(format!("{name} grows from N={} to N={}", w[0].grid, w[1].grid));
            }
        }
    }
    if let Some(last) = rows.last() {
        if !(last.loss_err <= LOSS_TOL) {
            problems.push(format!("loss_err {} exceeds {LOSS_TOL} at N={}", fmt_f64(last.loss_err), last.grid));
        }
    }
    Ok(CompareOutcome { rows, problems })
}

fn balance_lines(prefix: &str, b: &LossBalance) -> String {
    format!(
        "{prefix}_total_loss={}\n{prefix}_supply_voltage_integral={}\n{prefix}_v_gradient_0={}\n{prefix}_identity_gap={}\n",
        fmt_f64(b.total_loss),
        fmt_f64(b.supply_voltage),
        fmt_f64(b.v_gradient_0),
        fmt_f64(b.identity_gap)
    )
}

pub fn cmd_losses(base: &Scenario, inject: &Scenario, grid: Option<usize>) -> Result<String> {
    let (a, b) = (base.params(), inject.params());
    if a != b {
        return Err(Error::Validation(format!(
            "injection scenario `{}` has different feeder constants (g, b, length) than `{}`",
            inject.name(),
            base.name()
        )));
    }
    let opts = options_for(base, grid)?;
    let ev = injection_evaluation(base.profile(), inject.profile(), base.params(), &opts)?;
    let mut out = format!("base={}\ninjection={}\ngrid={}\n", base.name(), inject.name(), opts.grid_intervals);
    out.push_str(&balance_lines("base", &ev.base));
    out.push_str(&balance_lines("injected", &ev.injected));
    out.push_str(&format!("loss_delta={}\n", fmt_f64(ev.loss_delta)));
    Ok(out)
}

/// Outcome of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub outcome: std::result::Result<Summary, Error>,
}

fn status_name(e: &Error) -> &'static str {
    match e {
        Error::InScenario { source, .. } => status_name(source),
        Error::NotConverged { .. } => "not_converged",
        Error::VoltageCollapse { .. } => "voltage_collapse",
        Error::Domain(_) => "domain_error",
        Error::Parse { .. } | Error::Validation(_) | Error::UnknownPreset(_) => "invalid",
        Error::Io { .. } => "io_error",
    }
}

pub fn parse_param(arg: &str) -> Result<(String, Vec<f64>)> {
    let (path, list) = arg
        .split_once('=')
        .ok_or_else(|| Error::Validation(format!("--param expects path=v1,v2,..., got `{arg}`")))?;
    let values = list
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Validation(format!("--param value `{}` is not a finite number", v.trim())))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((path.trim().to_string(), values))
}

fn solve_summary(scenario: &Scenario) -> Result<Summary> {
    let (sol, diag) = solve_bvp(scenario.profile(), scenario.params(), scenario.solver())?;
    let r = analyze(&sol, scenario.profile(), scenario.params());
    Ok(Summary::new(&sol, &diag, &r))
}

/// Solves one scenario per value on `jobs` threads. Rows come back in
/// the order of `values` whatever the thread count.
pub fn cmd_sweep(scenario: &Scenario, path: &str, values: &[f64], jobs: usize) -> Result<Vec<SweepRow>> {
    if jobs == 0 {
        return Err(Error::Validation("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Validation(format!("cannot start {jobs} worker threads: {e}")))?;
    Ok(pool.install(|| {
        values
            .par_iter()
            .map(|&value| SweepRow {
                value,
                outcome: scenario.with_param(path, value).and_then(|s| solve_summary(&s)),
            })
            .collect()
    }))
}

pub fn sweep_csv(path: &str, rows: &[SweepRow]) -> String {
    let mut out = format!(
        "{path},status,iterations,v_terminal,theta_terminal,v_gradient_0,theta_gradient_0,total_loss,loss_active,loss_reactive,reactive_sign,phenomena\n"
    );
    for r in rows {
        match &r.outcome {
            Ok(s) => {
                let sign = if s.loss_reactive > 0.0 {
                    1
                } else if s.loss_reactive < 0.0 {
                    -1
                } else {
                    0
                };
                out.push_str(&format!(
                    "{},ok,{},{},{},{},{},{},{},{},{},{}\n",
                    fmt_f64(r.value),
                    s.iterations,
                    fmt_f64(s.v_terminal),
                    fmt_f64(s.theta_terminal),
                    fmt_f64(s.v_gradient_0),
                    fmt_f64(s.theta_gradient_0),
                    fmt_f64(s.total_loss),
                    fmt_f64(s.loss_active),
                    fmt_f64(s.loss_reactive),
                    sign,
                    s.phenomena_text(";"),
                ));
            }
            Err(e) => out.push_str(&format!("{},{},,,,,,,,,,\n", fmt_f64(r.value), status_name(e))),
        }
    }
    out
}

fn run_command(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8> {
    let emit = |out: &mut dyn Write, text: &str| {
        out.write_all(text.as_bytes()).map_err(|e| Error::io("cannot write to standard output", e))
    };
    match cmd {
        Command::Solve(a) => {
            let s = load(&a.scenario)?;
            let report = cmd_solve(&s, a.grid, &a.out)?;
            if report.diagnostics.suspicious {
                let _ = writeln!(err, "warning: |v(L) - 1| > 0.5, the solution may lie on a low-voltage branch");
            }
            let paths = format!("csv={}\nreport={}\n", report.csv_path.display(), report.report_path.display());
            emit(out, &(report.to_text() + &paths))?;
            Ok(0)
        }
        Command::Verify(a) => {
            let s = load(&a.scenario)?;
            let v = cmd_verify(&s, a.grid, a.refine, a.perturb)?;
            emit(out, &v.to_text(s.name()))?;
            if v.passed() {
                Ok(0)
            } else {
                let _ = writeln!(err, "error: check failed: {}", v.failing.join(", "));
                Ok(EXIT_VERIFY_FAILED)
            }
        }
        Command::Compare(a) => {
            let s = load(&a.scenario)?;
            let c = cmd_compare(&s, a.grid)?;
            emit(out, &c.to_text(s.name()))?;
            if c.passed() {
                Ok(0)
            } else {
                for p in &c.problems {
                    let _ = writeln!(err, "error: {p}");
                }
                Ok(EXIT_ORACLE_DISAGREES)
            }
        }
        Command::Losses(a) => {
            let base = load(&a.scenario)?;
            let inject = load(&a.inject)?;
            let text = cmd_losses(&base, &inject, a.grid)?;
            emit(out, &text)?;
            Ok(0)
        }
        Command::Sweep(a) => {
            let s = load(&a.scenario)?;
            let (path, values) = parse_param(&a.param)?;
            // fail early on a bad path rather than once per row
            if let Some(&first) = values.first() {
                if let Err(e @ Error::Validation(_)) = s.with_param(&path, first) {
                    if e.to_string().contains("unknown parameter path") {
                        return Err(e);
                    }
                }
            }
            let rows = cmd_sweep(&s, &path, &values, a.jobs)?;
            for r in &rows {
                if let Err(e) = &r.outcome {
                    let _ = writeln!(err, "warning: {path}={}: {e}", r.value);
                }
            }
            let csv = sweep_csv(&path, &rows);
            match &a.out {
                Some(p) => write_atomic(p, csv.as_bytes())?,
                None => emit(out, &csv)?,
            }
            match rows.iter().find_map(|r| r.outcome.as_ref().err()) {
                Some(e) if rows.iter().all(|r| r.outcome.is_err()) => Ok(e.exit_code()),
                _ => Ok(0),
            }
        }
    }
}

/// Runs the command line `args` (program name first) and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match run_command(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

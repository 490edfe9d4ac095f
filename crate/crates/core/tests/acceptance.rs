//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use feederflow::bvp::solve_bvp;
use feederflow::cli::{cmd_solve, cmd_sweep, CSV_HEADER};
use feederflow::dissipation::{
    analyze, classify_phenomena, evaluate_functions, loss_decomposition, verify_dissipation_equalities,
    verify_integral_identities, Phenomenon,
};
use feederflow::ladder::{build_network, compare_to_continuum, solve_powerflow};
use feederflow::model::SolutionGrid;
use feederflow::scenario::{load, parse_scenario, preset, Scenario};

const PRESETS: [&str; 4] = ["no_load", "conventional", "pv_ev", "manufactured"];

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn scenario_file(name: &str) -> String {
    format!("{}/scenarios/{name}.cfg", env!("CARGO_MANIFEST_DIR"))
}

fn solve(sc: &Scenario, n: usize) -> SolutionGrid {
    solve_bvp(sc.profile(), sc.params(), &sc.solver().with_grid(n))
        .unwrap_or_else(|e| panic!("{} at N = {n}: {e}", sc.name()))
        .0
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

fn within(elapsed: Duration, limit: f64) -> Result<(), String> {
    if elapsed.as_secs_f64() < limit {
        Ok(())
    } else {
        Err(format!("took {:.2} s, limit {limit} s", elapsed.as_secs_f64()))
    }
}

/// `1 + quad·x(2 − x) + wave·sin²(kπx/2)` on a unit feeder, written out
/// from the preset coefficients.
fn manufactured_v(x: f64) -> f64 {
    let (quad, wave, k) = (-0.05, 0.02, 3.0);
    1.0 + quad * x * (2.0 - x) + wave * (k * PI * x / 2.0).sin().powi(2)
}

fn no_load_exactness() -> Outcome {
    let t = Instant::now();
    let sc = preset("no_load").unwrap();
    let grid = solve_bvp(sc.profile(), sc.params(), sc.solver()).map_err(|e| e.to_string())?.0;
    let report = analyze(&grid, sc.profile(), sc.params());
    let elapsed = t.elapsed();
    let dv = grid.states().iter().map(|s| (s.v - 1.0).abs()).fold(0.0, f64::max);
    let dt = grid.states().iter().map(|s| s.theta.abs()).fold(0.0, f64::max);
    let delta_zero = report.functions.delta.iter().all(|&d| d == 0.0);
    let detail = format!("max|v-1| = {dv:e}, max|theta| = {dt:e}, loss = {:e}, {:.3} s", report.total_loss(), elapsed.as_secs_f64());
    within(elapsed, 1.0)?;
    if dv <= 1e-12 && dt <= 1e-12 && delta_zero && report.total_loss() == 0.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn manufactured_recovery() -> Outcome {
    let t = Instant::now();
    let sc = preset("manufactured").unwrap();
    let errs: Vec<f64> = [128, 256, 512]
        .iter()
        .map(|&n| {
            let grid = solve(&sc, n);
            grid.xs()
                .iter()
                .zip(grid.states())
                .map(|(&x, s)| (s.v - manufactured_v(x)).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let elapsed = t.elapsed();
    let orders = [order(errs[0], errs[1]), order(errs[1], errs[2])];
    let detail = format!("errors {}, orders {orders:.2?}, {:.2} s", sci(&errs), elapsed.as_secs_f64());
    within(elapsed, 5.0)?;
    if errs[2] <= 1e-8 && orders.iter().all(|&p| p >= 3.5) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn dissipation_residuals() -> Outcome {
    let t = Instant::now();
    let sc = preset("manufactured").unwrap();
    let levels = [256, 512, 1024, 2048];
    let res: Vec<[f64; 4]> = levels
        .iter()
        .map(|&n| {
            let r = verify_dissipation_equalities(&solve(&sc, n), sc.profile(), sc.params());
            [r.d09, r.d10, r.e05, r.e06]
        })
        .collect();
    let elapsed = t.elapsed();
    let finest = res[res.len() - 1];
    let mut problems = Vec::new();
    for (i, name) in ["d09", "d10", "e05", "e06"].iter().enumerate() {
        if finest[i] > 1e-6 {
            problems.push(format!("{name} = {:e} at N = 2048", finest[i]));
        }
        // orders only mean something above round-off
        let orders: Vec<f64> = res
            .windows(2)
            .filter(|w| w[1][i] > 1e-11)
            .map(|w| order(w[0][i], w[1][i]))
            .collect();
        if orders.is_empty() {
            problems.push(format!("{name} has no measurable order"));
        } else if orders.iter().any(|&p| p < 1.9) {
            problems.push(format!("{name} orders {orders:.2?}"));
        }
    }
    let detail = format!(
        "N = 2048: d09 {:.2e}, d10 {:.2e}, e05 {:.2e}, e06 {:.2e}; N = 256: d09 {:.2e}; {:.2} s",
        finest[0], finest[1], finest[2], finest[3], res[0][0], elapsed.as_secs_f64()
    );
    within(elapsed, 10.0)?;
    if problems.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", problems.join("; ")))
    }
}

fn integral_identities() -> Outcome {
    let mut worst: (f64, &str) = (0.0, "");
    for name in PRESETS {
        let sc = preset(name).unwrap();
        let grid = solve(&sc, 2048);
        let ids = verify_integral_identities(&grid, sc.profile(), sc.params());
        for gap in [ids.j02_gap, ids.j04_gap] {
            if gap > worst.0 {
                worst = (gap, name);
            }
        }
    }
    let detail = format!("largest gap {:e} ({})", worst.0, worst.1);
    if worst.0 <= 1e-6 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn psi_b_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let scenarios: Vec<Scenario> = PRESETS
        .iter()
        .map(|n| preset(n).unwrap())
        .chain(["single_load", "compensation"].iter().map(|n| load(&scenario_file(n)).unwrap()))
        .collect();
    for sc in &scenarios {
        for n in [64, 256, 1024] {
            let grid = solve(sc, n);
            let f = evaluate_functions(&grid);
            for (psi, st) in f.psi_b.iter().zip(grid.states()) {
                worst = worst.max((psi - st.s).abs());
            }
            count += 1;
        }
    }
    let detail = format!("max |psi_b - s| = {worst:e} over {count} solutions");
    if worst <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn loss_identity() -> Outcome {
    let mut pointwise: f64 = 0.0;
    let mut ladder: Vec<(String, f64)> = Vec::new();
    for name in ["conventional", "pv_ev", "manufactured"] {
        let sc = preset(name).unwrap();
        let prm = sc.params();
        let grid = solve(&sc, 4096);
        let losses = loss_decomposition(&grid, prm);
        let f = evaluate_functions(&grid);
        let r = prm.g() / (prm.g().powi(2) + prm.b().powi(2));
        for (d, c) in f.delta.iter().zip(&losses.current_sq) {
            let lhs = prm.g() * d;
            let rhs = r * c;
            if lhs != rhs {
                pointwise = pointwise.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()));
            }
        }
        let net = build_network(sc.profile(), prm, 4096);
        let pf = solve_powerflow(&net, 1e-13, 1000);
        if !pf.converged {
            return Err(format!("ladder sweep did not converge on {name}"));
        }
        let cmp = compare_to_continuum(&grid, prm, &net, &pf);
        ladder.push((name.to_string(), cmp.loss_err));
    }
    let worst = ladder.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    let listed: Vec<String> = ladder.iter().map(|(n, e)| format!("{n} {e:.2e}")).collect();
    let detail = format!("pointwise relative gap {pointwise:e}; ladder loss errors {}", listed.join(", "));
    if pointwise <= 1e-12 && worst <= 1e-2 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn single_segment(p: f64, q: f64) -> Scenario {
    parse_scenario(&format!(
        "[feeder]\ng = 1\nb = 1\nlength = 1\n[segments]\nsegment = 0.4, 0.6, {p:?}, {q:?}\n"
    ))
    .unwrap()
}

fn phenomena_signs() -> Outcome {
    let mut problems = Vec::new();
    let conventional = preset("conventional").unwrap();
    let pv_ev = preset("pv_ev").unwrap();
    let rc = classify_phenomena(&solve(&conventional, 1024), conventional.profile(), conventional.params());
    let rp = classify_phenomena(&solve(&pv_ev, 1024), pv_ev.profile(), pv_ev.params());
    if !rc.flags.contains(&Phenomenon::VoltageDrop) {
        problems.push(format!("conventional flags {:?}", rc.flags));
    }
    if !rp.flags.contains(&Phenomenon::ReverseFlow) {
        problems.push(format!("pv_ev flags {:?}", rp.flags));
    }
    if !(rc.delay_equivalence.applicable && rc.delay_equivalence.holds()) {
        problems.push(format!("delay equivalence on conventional: {:?}", rc.delay_equivalence));
    }
    if !(rp.advance_equivalence.applicable && rp.advance_equivalence.holds()) {
        problems.push(format!("advance equivalence on pv_ev: {:?}", rp.advance_equivalence));
    }

    // Both truth values of each biconditional, with the integral side
    // worked out by hand: one segment of width 0.2 and b/g = 1 gives
    // ∫q − (b/g)∫p = 0.2·(q − p).
    let cases = [(-0.1, -0.3), (-0.1, -0.02), (-0.1, 0.0), (0.3, 0.0), (0.3, 0.1), (0.3, 0.5), (-0.1, 0.2)];
    let mut seen = [[false; 2]; 2];
    for (p, q) in cases {
        let sc = single_segment(p, q);
        let grid = solve(&sc, 512);
        let dt = grid.sending().phase_gradient();
        let margin = 0.2 * (q - p);
        let r = classify_phenomena(&grid, sc.profile(), sc.params());
        if q <= 0.0 {
            let rhs = margin >= 0.0;
            seen[0][rhs as usize] = true;
            if (dt <= 1e-8) != rhs || !r.delay_equivalence.applicable || !r.delay_equivalence.holds() {
                problems.push(format!("delay form fails at p = {p}, q = {q}: theta'(0) = {dt:e}"));
            }
        }
        if q >= 0.0 {
            let rhs = margin <= 0.0;
            seen[1][rhs as usize] = true;
            if (dt >= -1e-8) != rhs || !r.advance_equivalence.applicable || !r.advance_equivalence.holds() {
                problems.push(format!("advance form fails at p = {p}, q = {q}: theta'(0) = {dt:e}"));
            }
        }
    }
    if seen.iter().flatten().any(|s| !s) {
        problems.push("case table does not exercise both truth values".into());
    }
    let detail = format!("conventional {:?}, pv_ev {:?}, {} biconditional cases", rc.flags, rp.flags, cases.len());
    if problems.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", problems.join("; ")))
    }
}

fn oracle_equivalence() -> Outcome {
    let t = Instant::now();
    let sc = load(&scenario_file("single_load")).unwrap();
    let errs: Vec<f64> = [512, 1024, 2048, 4096]
        .iter()
        .map(|&n| {
            let grid = solve(&sc, n);
            let net = build_network(sc.profile(), sc.params(), n);
            let pf = solve_powerflow(&net, 1e-14, 1000);
            assert!(pf.converged);
            compare_to_continuum(&grid, sc.params(), &net, &pf).v_err
        })
        .collect();
    let elapsed = t.elapsed();
    let orders: Vec<f64> = errs.windows(2).map(|w| order(w[0], w[1])).collect();
    let detail = format!("v_err {}, orders {orders:.2?}, {:.2} s", sci(&errs), elapsed.as_secs_f64());
    within(elapsed, 30.0)?;
    if orders.iter().all(|&p| p >= 0.9) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn reactive_non_dissipativity() -> Outcome {
    let sc = preset("conventional").unwrap();
    let values = [-1.0, -0.5, -0.1, 0.5];
    let rows = cmd_sweep(&sc, "feeder.b", &values, 2).map_err(|e| e.to_string())?;
    let mut problems = Vec::new();
    let mut reported = Vec::new();
    for row in &rows {
        match &row.outcome {
            Ok(s) => {
                reported.push((row.value, s.loss_reactive));
                let expect_negative = row.value < 0.0;
                if (s.loss_reactive < 0.0) != expect_negative || s.total_loss.is_nan() || s.total_loss <= 0.0 {
                    problems.push(format!("b = {}: reactive {:e}", row.value, s.loss_reactive));
                }
            }
            Err(e) => problems.push(format!("b = {} failed: {e}", row.value)),
        }
    }
    let listed: Vec<String> = reported.iter().map(|(b, r)| format!("b = {b}: {r:.3e}")).collect();
    let detail = format!("reactive loss {}", listed.join(", "));
    if problems.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", problems.join("; ")))
    }
}

fn check_number(field: &str) -> bool {
    let mantissa = field.split(['e', 'E']).next().unwrap_or("");
    let digits = mantissa.chars().filter(char::is_ascii_digit).count();
    field.parse::<f64>().is_ok() && digits == 17
}

fn check_formats(csv: &str, report: &str, nodes: usize) -> Vec<String> {
    let mut problems = Vec::new();
    if csv.contains('\r') || report.contains('\r') {
        problems.push("carriage return in output".into());
    }
    if !csv.ends_with('\n') || !report.ends_with('\n') {
        problems.push("missing final LF".into());
    }
    let mut lines = csv.lines();
    if lines.next() != Some(CSV_HEADER) {
        problems.push("CSV header mismatch".into());
    }
    let rows: Vec<&str> = lines.collect();
    if rows.len() != nodes {
        problems.push(format!("{} CSV rows, expected {nodes}", rows.len()));
    }
    let width = CSV_HEADER.split(',').count();
    for (i, row) in rows.iter().enumerate() {
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != width || !fields.iter().all(|f| check_number(f)) {
            problems.push(format!("CSV row {i}: {row}"));
            break;
        }
    }
    for line in report.lines() {
        match line.split_once('=') {
            Some((k, v)) if !k.is_empty() && !v.is_empty() && !k.contains(char::is_whitespace) => {}
            _ => {
                problems.push(format!("report line {line:?}"));
                break;
            }
        }
    }
    problems
}

fn determinism_and_format() -> Outcome {
    let mut problems = Vec::new();
    for name in PRESETS {
        let sc = preset(name).unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let mut outputs = Vec::new();
        for dir in [a.path(), a.path(), b.path()] {
            let r = cmd_solve(&sc, Some(256), dir).map_err(|e| e.to_string())?;
            outputs.push((std::fs::read(&r.csv_path).unwrap(), std::fs::read(&r.report_path).unwrap()));
        }
        if outputs.windows(2).any(|w| w[0] != w[1]) {
            problems.push(format!("{name}: repeated runs differ"));
        }
        let (csv, report) = outputs.swap_remove(0);
        let csv = String::from_utf8(csv).unwrap();
        let report = String::from_utf8(report).unwrap();
        problems.extend(check_formats(&csv, &report, 257).into_iter().map(|p| format!("{name}: {p}")));
    }
    if problems.is_empty() {
        Ok("4 presets byte-identical across runs; CSV and report formats conform".into())
    } else {
        Err(problems.join("; "))
    }
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("no-load exactness", no_load_exactness),
        ("manufactured-solution recovery", manufactured_recovery),
        ("dissipation-equality residuals", dissipation_residuals),
        ("integral identities", integral_identities),
        ("psi_b equals s", psi_b_identity),
        ("loss identity and ladder loss", loss_identity),
        ("phenomena signs", phenomena_signs),
        ("ladder oracle convergence", oracle_equivalence),
        ("reactive non-dissipativity", reactive_non_dissipativity),
        ("determinism and format", determinism_and_format),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match std::panic::catch_unwind(check) {
            Ok(Ok(detail)) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Ok(Err(detail)) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {detail}", i + 1);
            }
            Err(_) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: panicked", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

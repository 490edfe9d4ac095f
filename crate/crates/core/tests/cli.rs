use std::path::Path;
use std::process::Command;

use feederflow::cli::{run, CSV_HEADER, EXIT_VERIFY_FAILED};

struct Output {
    code: u8,
    stdout: String,
    stderr: String,
}

fn ff(args: &[&str]) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("feederflow").chain(args.iter().copied()), &mut out, &mut err);
    Output { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .unwrap_or_else(|| panic!("no {key} in\n{text}"))
}

fn scenario(name: &str) -> String {
    format!("{}/scenarios/{name}.cfg", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn solve_writes_csv_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let r = ff(&["solve", "conventional", "--grid", "64", "--out", out]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(value(&r.stdout, "phenomena"), "VoltageDrop,PhaseDelay");
    assert_eq!(value(&r.stdout, "converged"), "true");

    let csv = std::fs::read_to_string(dir.path().join("conventional.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert_eq!(lines.count(), 65);
    let report = std::fs::read_to_string(dir.path().join("conventional.report")).unwrap();
    assert!(r.stdout.starts_with(&report));
    assert!(!report.contains(out));
}

#[test]
fn solve_accepts_scenario_files() {
    let dir = tempfile::tempdir().unwrap();
    let r = ff(&["solve", &scenario("single_load"), "--grid", "32", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(dir.path().join("single_load.csv").is_file());
    let v_l: f64 = value(&r.stdout, "v_terminal").parse().unwrap();
    assert!(v_l < 1.0);
}

#[test]
fn usage_and_input_errors_exit_1() {
    assert_eq!(ff(&[]).code, 1);
    assert_eq!(ff(&["solve"]).code, 1);
    assert_eq!(ff(&["solve", "no_such_preset"]).code, 1);
    assert_eq!(ff(&["solve", "no_load", "--grid", "15"]).code, 1);
    let help = ff(&["--help"]);
    assert_eq!(help.code, 0);
    assert!(help.stdout.contains("sweep"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "[feeder]\ng = 1\nb = 1\n").unwrap();
    let r = ff(&["solve", bad.to_str().unwrap()]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("length"), "{}", r.stderr);
}

#[test]
fn collapse_exits_3_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let heavy = dir.path().join("heavy.cfg");
    std::fs::write(&heavy, "name = heavy\n[feeder]\ng = 1\nb = 1\nlength = 1\n[segments]\nsegment = 0, 1, -50, 0\n").unwrap();
    let r = ff(&["solve", heavy.to_str().unwrap(), "--grid", "64", "--out", dir.path().to_str().unwrap()]);
    assert!(r.code == 2 || r.code == 3, "exit {} {}", r.code, r.stderr);
    assert!(!dir.path().join("heavy.csv").exists());
}

#[test]
fn missing_output_directories_are_created() {
    let dir = tempfile::tempdir().unwrap();
    let nested = dir.path().join("a/b");
    assert_eq!(ff(&["solve", "no_load", "--grid", "16", "--out", nested.to_str().unwrap()]).code, 0);
    assert!(nested.join("no_load.csv").is_file());
}

#[test]
fn io_errors_exit_6() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let r = ff(&["solve", "no_load", "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(r.code, 6, "{}", r.stderr);
}

#[test]
fn verify_passes_and_fault_injection_fails() {
    let ok = ff(&["verify", "manufactured", "--grid", "128", "--refine", "3"]);
    assert_eq!(ok.code, 0, "{}\n{}", ok.stdout, ok.stderr);
    let bad = ff(&["verify", "manufactured", "--grid", "128", "--refine", "3", "--perturb", "1e-3"]);
    assert_eq!(bad.code, EXIT_VERIFY_FAILED);
    assert!(bad.stderr.contains("d09"), "{}", bad.stderr);
}

#[test]
fn compare_agrees_on_presets() {
    for name in ["no_load", "conventional", "pv_ev"] {
        let r = ff(&["compare", name, "--grid", "256"]);
        assert_eq!(r.code, 0, "{name}: {}\n{}", r.stdout, r.stderr);
    }
}

#[test]
fn losses_reports_the_change() {
    let r = ff(&["losses", "conventional", "--inject", &scenario("compensation"), "--grid", "256"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let delta: f64 = value(&r.stdout, "loss_delta").parse().unwrap();
    assert!(delta < 0.0, "compensation should reduce the loss: {delta}");

    let zero = ff(&["losses", "conventional", "--inject", "no_load", "--grid", "64"]);
    assert_eq!(zero.code, 0, "{}", zero.stderr);
    assert_eq!(value(&zero.stdout, "loss_delta").parse::<f64>().unwrap(), 0.0);
}

#[test]
fn sweep_order_is_independent_of_jobs() {
    let args = |jobs: &'static str| ["sweep", "conventional", "--param", "feeder.b=-0.5,0,0.5,1", "--jobs", jobs];
    let one = ff(&args("1"));
    let four = ff(&args("4"));
    assert_eq!(one.code, 0, "{}", one.stderr);
    assert_eq!(one.stdout, four.stdout);
    let signs: Vec<&str> = one.stdout.lines().skip(1).map(|l| l.split(',').nth(10).unwrap()).collect();
    assert_eq!(signs, ["-1", "0", "1", "1"]);
}

#[test]
fn sweep_isolates_failing_points() {
    let r = ff(&["sweep", &scenario("single_load"), "--param", "segment.1.p=-0.1,-80,-0.2"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let status: Vec<&str> = r.stdout.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(status[0], "ok");
    assert_ne!(status[1], "ok");
    assert_eq!(status[2], "ok");
    assert!(r.stderr.contains("warning"));
}

#[test]
fn sweep_rejects_unknown_paths() {
    let r = ff(&["sweep", "conventional", "--param", "feeder.colour=1,2"]);
    assert_eq!(r.code, 1);
}

#[test]
fn single_point_sweep_matches_solve() {
    let dir = tempfile::tempdir().unwrap();
    let solve = ff(&["solve", "pv_ev", "--out", dir.path().to_str().unwrap()]);
    let sweep = ff(&["sweep", "pv_ev", "--param", "feeder.g=1"]);
    let row: Vec<&str> = sweep.stdout.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[3], value(&solve.stdout, "v_terminal"));
    assert_eq!(row[7], value(&solve.stdout, "total_loss"));
}

#[test]
fn binary_runs_and_reads_preset_dir() {
    let bin = env!("CARGO_BIN_EXE_feederflow");
    let presets = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    std::fs::write(
        presets.path().join("conventional.cfg"),
        "name = conventional\n[feeder]\ng = 2\nb = 1\nlength = 1\n[solver]\ngrid = 32\n",
    )
    .unwrap();
    let run = |dir: Option<&Path>| {
        let mut cmd = Command::new(bin);
        cmd.args(["solve", "conventional", "--out"]).arg(out.path());
        match dir {
            Some(d) => cmd.env("FEEDERFLOW_PRESET_DIR", d),
            None => cmd.env_remove("FEEDERFLOW_PRESET_DIR"),
        };
        cmd.output().unwrap()
    };
    let overridden = run(Some(presets.path()));
    assert!(overridden.status.success());
    let text = String::from_utf8(overridden.stdout).unwrap();
    assert_eq!(value(&text, "grid"), "32");
    assert_eq!(value(&text, "phenomena"), "none");

    let builtin = run(None);
    assert!(builtin.status.success());
    let text = String::from_utf8(builtin.stdout).unwrap();
    assert_eq!(value(&text, "phenomena"), "VoltageDrop,PhaseDelay");

    // presets missing from the directory fall back to the built-in copy
    let mut cmd = Command::new(bin);
    cmd.args(["solve", "pv_ev", "--grid", "32", "--out"]).arg(out.path()).env("FEEDERFLOW_PRESET_DIR", presets.path());
    assert!(cmd.output().unwrap().status.success());

    let unknown = Command::new(bin).args(["solve", "nope"]).output().unwrap();
    assert_eq!(unknown.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("unknown preset"));
}

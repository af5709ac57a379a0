//! End-to-end checks of the runner binary: exit codes, artifact layout, and
//! the byte-identical determinism criterion (A11).

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_nashmoser")
}

fn fresh_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nashmoser-cli-{name}"));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

#[test]
fn print_config_output_is_a_valid_config() {
    let out = run(&["print-config"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("problem.id = P2"));
    assert!(text.contains("seed = 1"));

    let dir = fresh_dir("printcfg");
    let path = dir.join("default.cfg");
    fs::write(&path, &text).unwrap();
    let reparse = run(&["print-config", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&reparse), 0);
    // same keys, same values, same hash line
    let hash = |s: &str| {
        s.lines()
            .find(|l| l.starts_with("# config_hash"))
            .unwrap()
            .to_string()
    };
    assert_eq!(hash(&text), hash(&String::from_utf8(reparse.stdout).unwrap()));
}

#[test]
fn verify_space_passes_and_catches_the_negative_control() {
    let dir = fresh_dir("space");
    let ok = run(&[
        "verify-space",
        "--set",
        "problem.n=32",
        "--set",
        "space.samples=100",
        "--set",
        &format!("output.dir={}", dir.display()),
    ]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    let report = fs::read_to_string(dir.join("reports/space_report.json")).unwrap();
    assert!(report.contains("config_hash"));

    // minimal three-mode space
    let minimal = run(&[
        "verify-space",
        "--set",
        "problem.n=1",
        "--set",
        "space.samples=100",
        "--set",
        &format!("output.dir={}", dir.display()),
    ]);
    assert_eq!(code(&minimal), 0);

    // deliberately skewed weights must fail
    let broken = run(&[
        "verify-space",
        "--set",
        "problem.n=32",
        "--set",
        "space.samples=100",
        "--set",
        "space.weight_skew=1.1",
        "--set",
        &format!("output.dir={}", dir.display()),
    ]);
    assert_eq!(code(&broken), 1);
}

#[test]
fn verify_problem_exit_codes() {
    let dir = fresh_dir("problem");
    let ok = run(&[
        "verify-problem",
        "--set",
        "problem.id=P0",
        "--set",
        "problem.n=32",
        "--set",
        "estimator.samples=100",
        "--set",
        &format!("output.dir={}", dir.display()),
    ]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(dir.join("reports/condition_7.json").exists());

    let rational = run(&[
        "verify-problem",
        "--set",
        "problem.alpha=0.5",
        "--set",
        &format!("output.dir={}", dir.display()),
    ]);
    assert_eq!(code(&rational), 1);
    let stderr = String::from_utf8(rational.stderr).unwrap();
    assert!(stderr.contains("divisor floor violated"), "{stderr}");
}

#[test]
fn solve_writes_artifacts_and_respects_the_domain() {
    let dir = fresh_dir("solve");
    let out_dir = format!("output.dir={}", dir.display());
    let ok = run(&[
        "solve",
        "--set",
        "solver.residual_tol=1e-12",
        "--set",
        "y.amplitude=0.5",
        "--set",
        &out_dir,
    ]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    let trace = fs::read_to_string(dir.join("trace.csv")).unwrap();
    assert!(trace.starts_with("# config_hash = "));
    assert!(trace.lines().nth(1).unwrap().starts_with("p,theta,x_d,x_s0,z_d,z_s0,dx_d"));
    let summary = fs::read_to_string(dir.join("summary.json")).unwrap();
    assert!(summary.contains("\"status\": \"converged\""));

    // out-of-domain targets are refused without the override
    let refused = run(&[
        "solve",
        "--set",
        "y.amplitude=10",
        "--set",
        &out_dir,
    ]);
    assert_eq!(code(&refused), 1);
    assert!(String::from_utf8(refused.stderr)
        .unwrap()
        .contains("domain radius"));
}

#[test]
fn single_cell_sweep_agrees_with_solve() {
    let dir = fresh_dir("sweep");
    let out_dir = format!("output.dir={}", dir.display());
    let swept = run(&[
        "sweep",
        "--set",
        "problem.n=64",
        "--set",
        "y.amplitude=0.3",
        "--set",
        "solver.residual_tol=1e-12",
        "--set",
        &out_dir,
    ]);
    assert_eq!(code(&swept), 0, "{}", String::from_utf8_lossy(&swept.stderr));
    let csv = fs::read_to_string(dir.join("sweep.csv")).unwrap();
    let mut lines = csv.lines().skip(1); // hash comment
    assert_eq!(
        lines.next().unwrap(),
        "epsilon,amplitude,tau,status,iterations,final_residual,mu_hat,c_hat"
    );
    let row = lines.next().unwrap();
    assert!(row.starts_with("0.001,0.3,1.5,converged,"), "{row}");
    assert!(lines.next().is_none());

    // bisect mode emits the calibrated radius per cell
    let bisect = run(&[
        "sweep",
        "--set",
        "sweep.bisect=true",
        "--set",
        "problem.n=32",
        "--set",
        "sweep.bisect_iters=4",
        "--set",
        &out_dir,
    ]);
    assert_eq!(code(&bisect), 0);
    let csv = fs::read_to_string(dir.join("sweep.csv")).unwrap();
    assert!(csv.contains("epsilon,tau,delta_hat"));
}

#[test]
fn a11_repeated_runs_are_byte_identical() {
    // the residual-decay acceptance configuration, run twice
    let args = |dir: &str| {
        vec![
            "solve".to_string(),
            "--set".to_string(),
            "solver.residual_tol=1e-12".to_string(),
            "--set".to_string(),
            "y.amplitude=0.5".to_string(),
            "--set".to_string(),
            "y.seed=101".to_string(),
            "--set".to_string(),
            format!("output.dir={dir}"),
        ]
    };
    let dir_a = fresh_dir("a11-first");
    let dir_b = fresh_dir("a11-second");
    let run_a = Command::new(bin()).args(args(dir_a.to_str().unwrap())).output().unwrap();
    let run_b = Command::new(bin()).args(args(dir_b.to_str().unwrap())).output().unwrap();
    assert_eq!(code(&run_a), 0);
    assert_eq!(code(&run_b), 0);

    let mut identical = true;
    let mut detail = String::new();
    for name in ["trace.csv", "summary.json", "reports/diagnostics.json"] {
        let a = fs::read(dir_a.join(name)).unwrap();
        let b = fs::read(dir_b.join(name)).unwrap();
        let same = a == b;
        identical &= same;
        detail.push_str(&format!("{name}: {} bytes, identical = {same}; ", a.len()));
    }
    println!(
        "[A11] {} - {detail}",
        if identical { "PASS" } else { "FAIL" }
    );
    assert!(identical, "[A11] FAIL - {detail}");
}

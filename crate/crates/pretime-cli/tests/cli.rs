//! End-to-end checks of the command-line surface: exit-code contract,
//! config handling, and the shapes of the emitted files.

use std::path::PathBuf;
use std::process::Command;

fn run(args: &[&str]) -> (String, String, Option<i32>) {
    let out = Command::new(env!("CARGO_BIN_EXE_pretime"))
        .args(args)
        .output()
        .expect("run pretime binary");
    (
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
        out.status.code(),
    )
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pretime-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).expect("create temp dir");
    dir
}

fn last_json(stdout: &str) -> serde_json::Value {
    let line = stdout
        .lines()
        .rev()
        .find(|l| l.starts_with('{'))
        .expect("JSON line in output");
    serde_json::from_str(line).expect("valid JSON")
}

#[test]
fn bounds_reports_reference_numbers() {
    let (stdout, _, code) = run(&[
        "bounds", "--alpha", "4", "--beta", "0.25", "--p", "0.5", "--q", "3", "--k", "1.5",
        "--t-c", "1",
    ]);
    assert_eq!(code, Some(0));
    let v = last_json(&stdout);
    assert!((v["gamma"].as_f64().unwrap() - 0.6283917972138646).abs() < 1e-12);
    assert!((v["t_max_predefined"].as_f64().unwrap() - 4.4331).abs() < 1e-3);
    assert!(v["conservatism_ratio"].as_f64().unwrap() >= 1.0);
}

#[test]
fn bounds_symmetric_case_gives_pi() {
    let (stdout, _, code) = run(&[
        "bounds", "--alpha", "1", "--beta", "1", "--p", "0.5", "--q", "1.5", "--k", "1",
    ]);
    assert_eq!(code, Some(0));
    let v = last_json(&stdout);
    assert!((v["gamma"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn validation_failures_exit_2() {
    let (_, stderr, code) = run(&[
        "bounds", "--alpha", "4", "--beta", "0.25", "--p", "0.5", "--q", "3", "--k", "0",
    ]);
    assert_eq!(code, Some(2));
    assert!(stderr.contains("k > 0"), "stderr: {stderr}");

    // k*q = 1 sits on the excluded boundary.
    let (_, stderr, code) = run(&[
        "bounds", "--alpha", "1", "--beta", "1", "--p", "1", "--q", "1", "--k", "1",
    ]);
    assert_eq!(code, Some(2));
    assert!(stderr.contains("k*q > 1"), "stderr: {stderr}");
}

#[test]
fn settle_is_even_in_x0_and_zero_at_origin() {
    let base = [
        "settle", "--alpha", "4", "--beta", "0.25", "--p", "0.5", "--q", "3", "--k", "1.5",
        "--t-c", "1",
    ];
    let value = |x0: &str| {
        let mut args = base.to_vec();
        args.extend(["--x0", x0]);
        let (stdout, _, code) = run(&args);
        assert_eq!(code, Some(0));
        last_json(&stdout)["settling_time"].as_f64().unwrap()
    };
    assert_eq!(value("0"), 0.0);
    assert_eq!(value("1"), value("-1"));
    let t20 = value("1e20");
    assert!((0.99..=1.0 + 1e-9).contains(&t20), "T(1e20) = {t20}");
}

#[test]
fn unreachable_tolerance_exits_3() {
    let (_, stderr, code) = run(&[
        "settle", "--alpha", "4", "--beta", "0.25", "--p", "0.5", "--q", "3", "--k", "1.5",
        "--x0", "1", "--tol", "1e-300",
    ]);
    assert_eq!(code, Some(3), "stderr: {stderr}");
}

#[test]
fn collapse_exits_4_and_preserves_partial_output() {
    let dir = tmpdir("collapse");
    let config = dir.join("run.conf");
    std::fs::write(
        &config,
        "\
name = blowup
system = fixed
alpha = 4
beta = 0.25
p = 0.5
q = 3
k = 1.5
initial_conditions = 1e300
horizon = 1
",
    )
    .unwrap();
    let (_, stderr, code) = run(&[
        "simulate",
        config.to_str().unwrap(),
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code, Some(4), "stderr: {stderr}");
    let partial = dir.join("blowup_ic0.csv.partial");
    let content = std::fs::read_to_string(&partial).expect("partial file written");
    assert!(content.starts_with("t,x1,u,delta\n"));
}

#[test]
fn bad_config_exits_2() {
    let dir = tmpdir("badconf");
    let config = dir.join("bad.conf");
    std::fs::write(&config, "system = predefined\nwhatever = 3\n").unwrap();
    let (_, _, code) = run(&["simulate", config.to_str().unwrap()]);
    assert_eq!(code, Some(2));

    let (_, _, code) = run(&["simulate", "/nonexistent/path.conf"]);
    assert_eq!(code, Some(2));
}

#[test]
fn sweep_rho_emits_header_grid_and_constant_check_column() {
    let dir = tmpdir("sweep");
    let (stdout, _, code) = run(&[
        "sweep-rho", "--points", "41", "--out-dir", dir.to_str().unwrap(),
    ]);
    assert_eq!(code, Some(0));
    assert!(stdout.contains("argmin rho = 1"), "stdout: {stdout}");
    let csv = std::fs::read_to_string(dir.join("sweep_rho.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("rho,t_max,gamma_check"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 41);
    for row in rows {
        let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols.len(), 3);
        // The normalization column sits at T_c = 1 to within 1e-8.
        assert!((cols[2] - 1.0).abs() < 1e-8, "gamma_check drifted: {row}");
    }
}

#[test]
fn sweep_rho_rejects_bad_range() {
    let (_, _, code) = run(&["sweep-rho", "--rho-min", "10", "--rho-max", "1"]);
    assert_eq!(code, Some(2));
    let (_, _, code) = run(&["sweep-rho", "--points", "1"]);
    assert_eq!(code, Some(2));
}

#[test]
fn simulate_writes_manifest_files_and_summary() {
    let dir = tmpdir("sim");
    let config = dir.join("run.conf");
    std::fs::write(
        &config,
        "\
name = smoke
system = predefined
alpha = 4
beta = 0.25
p = 0.5
q = 3
k = 1.5
t_c = 1
initial_conditions = 0.5; -0.5
horizon = 1.2
",
    )
    .unwrap();
    let (_, stderr, code) = run(&[
        "simulate",
        config.to_str().unwrap(),
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code, Some(0), "stderr: {stderr}");
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("smoke_summary.json")).unwrap())
            .unwrap();
    // Every manifest entry exists and is non-empty.
    for f in summary["outputs"].as_array().unwrap() {
        let path = dir.join(f.as_str().unwrap());
        let meta = std::fs::metadata(&path).expect("listed output exists");
        assert!(meta.len() > 0, "{path:?} is empty");
    }
    // Symmetric starts settle at the same instant.
    let runs = summary["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 2);
    let t0 = runs[0]["settled_at"].as_f64().unwrap();
    let t1 = runs[1]["settled_at"].as_f64().unwrap();
    assert_eq!(t0, t1);

    // Trajectory CSV shape: header plus 17-significant-digit scientific floats.
    let csv = std::fs::read_to_string(dir.join("smoke_ic0.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,x1,u,delta"));
    let first = lines.next().unwrap();
    for field in first.split(',') {
        assert!(field.contains('e'), "field {field:?} not in scientific form");
        let _: f64 = field.parse().expect("parseable float");
    }
}

#[test]
fn second_order_csv_includes_sigma_column() {
    let dir = tmpdir("so-csv");
    let config = dir.join("run.conf");
    std::fs::write(
        &config,
        "\
name = so
system = second_order
alpha1 = 4
beta1 = 0.25
alpha2 = 4
beta2 = 0.25
p = 0.5
q = 3
k = 1.5
t_c1 = 0.5
t_c2 = 0.5
zeta = 1
delta = 1
disturbance = sinusoid(1, 5)
initial_conditions = 0.1, 0.1
horizon = 1.2
",
    )
    .unwrap();
    let (_, stderr, code) = run(&[
        "simulate",
        config.to_str().unwrap(),
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code, Some(0), "stderr: {stderr}");
    let csv = std::fs::read_to_string(dir.join("so_ic0.csv")).unwrap();
    assert!(csv.starts_with("t,x1,x2,sigma,u,delta\n"));
}

#[test]
fn out_dir_env_var_is_honored() {
    let dir = tmpdir("envdir");
    let out = Command::new(env!("CARGO_BIN_EXE_pretime"))
        .args(["sweep-rho", "--points", "5"])
        .env("PRETIME_OUT", &dir)
        .output()
        .expect("run binary");
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.join("sweep_rho.csv").exists());
}

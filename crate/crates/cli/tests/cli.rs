//! End-to-end runs of the compiled binary: artifact layout, determinism,
//! and the exit-code contract (2 config, 3 data, 4 divergence,
//! 5 identification).

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use boucwen::csv::{read_csv, write_csv};
use boucwen::fracdiff::Memory;
use boucwen::models::{simulate_cbw, simulate_fonbw, simulate_nbw, CbwParams, FonbwParams, NbwParams, PolynomialGain};
use boucwen::signals::{gen_sine_offset, TimeSeries};

const BIN: &str = env!("CARGO_BIN_EXE_boucwen");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process should exit, not signal")
}

fn assert_exit(args: &[&str], expected: i32) {
    let out = run(args);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(
        exit_code(&out),
        expected,
        "args {args:?}\nstderr: {stderr}"
    );
    if expected != 0 {
        assert!(!stderr.is_empty(), "failures should explain themselves");
    }
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

fn reference_cbw_config(signal: &str) -> String {
    format!(
        r#"command = "simulate"
model = "cbw"

[params]
alpha = 0.1
k = 1.0
D = 1.0
A = 0.7
beta = 0.6
gamma = 0.5
n = 1.0

{signal}
"#
    )
}

const SINE_SIGNAL: &str = r#"[signal]
generator = "sine_offset"
amplitude = 2.0
frequency = 1.0
duration = 2.0
dt = 1e-3"#;

fn reference_cbw() -> CbwParams {
    CbwParams {
        alpha: 0.1,
        k: 1.0,
        d: 1.0,
        a: 0.7,
        beta: 0.6,
        gamma: 0.5,
        n: 1.0,
        h_init: 0.0,
    }
}

#[test]
fn simulate_writes_the_series_and_a_reproducible_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sim.toml", &reference_cbw_config(SINE_SIGNAL));
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    assert_exit(&["simulate", "--config", &cfg, "--out", out_a.to_str().unwrap()], 0);
    assert_exit(&["simulate", "--config", &cfg, "--out", out_b.to_str().unwrap()], 0);

    let report_a = fs::read(out_a.join("report.json")).unwrap();
    let report_b = fs::read(out_b.join("report.json")).unwrap();
    assert_eq!(report_a, report_b, "identical runs must report identical bytes");

    let text = fs::read_to_string(out_a.join("simulation.csv")).unwrap();
    assert!(text.starts_with("t [s],u,H [um]\n"));

    let (u, h) = read_csv(out_a.join("simulation.csv")).unwrap();
    let expected_u = gen_sine_offset(2.0, 1.0, 2.0, 1e-3).unwrap();
    let expected_h = simulate_cbw(&reference_cbw(), &expected_u).unwrap();
    assert_eq!(u.values(), expected_u.values(), "csv text must round-trip exactly");
    assert_eq!(h.unwrap().values(), expected_h.values());
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("trace.csv");
    let u = gen_sine_offset(1.0, 1.0, 1.0, 1e-3).unwrap();
    write_csv(&data, &u, None).unwrap();
    let csv_signal = format!("[signal]\ncsv = \"{}\"", data.display());

    let unknown_field = write_config(
        dir.path(),
        "unknown.toml",
        &format!("bogus = 1\n{}", reference_cbw_config(SINE_SIGNAL)),
    );
    assert_exit(&["simulate", "--config", &unknown_field], 2);

    let missing_signal = write_config(dir.path(), "nosig.toml", &reference_cbw_config(""));
    assert_exit(&["simulate", "--config", &missing_signal], 2);

    let both_sources = write_config(
        dir.path(),
        "both.toml",
        &reference_cbw_config(&format!("{SINE_SIGNAL}\ncsv = \"{}\"", data.display())),
    );
    assert_exit(&["simulate", "--config", &both_sources], 2);

    let ghost_csv = write_config(
        dir.path(),
        "ghost.toml",
        &reference_cbw_config("[signal]\ncsv = \"/nonexistent/trace.csv\""),
    );
    assert_exit(&["simulate", "--config", &ghost_csv], 2);

    let cfg = write_config(dir.path(), "sim.toml", &reference_cbw_config(SINE_SIGNAL));
    assert_exit(&["metrics", "--config", &cfg], 2);
    assert_exit(&["simulate", "--config", &cfg, "--seed", "7"], 2);
    assert_exit(&["simulate", "--config", &cfg, "--memory", "sometimes"], 2);

    let from_csv = write_config(dir.path(), "fromcsv.toml", &reference_cbw_config(&csv_signal));
    assert_exit(&["simulate", "--config", &from_csv, "--dt", "1e-4"], 2);

    let no_params = write_config(
        dir.path(),
        "noparams.toml",
        &format!("command = \"simulate\"\nmodel = \"cbw\"\n\n{SINE_SIGNAL}\n"),
    );
    assert_exit(&["simulate", "--config", &no_params], 2);

    let uninvertible = write_config(
        dir.path(),
        "nbwcomp.toml",
        &format!(
            r#"command = "compensate"
model = "nbw"

[params]
k_u = 0.5
k_h = 0.4
rho = 1.2
sigma = 0.55
n = 1.5

{SINE_SIGNAL}
"#
        ),
    );
    assert_exit(&["compensate", "--config", &uninvertible], 2);

    let half_mode = write_config(
        dir.path(),
        "halfmode.toml",
        &format!(
            "{}\n[compensate]\nmode = \"fixed_point\"\n",
            fonbw_config("compensate", SINE_SIGNAL)
        ),
    );
    assert_exit(&["compensate", "--config", &half_mode], 2);

    let usage = run(&["simulate"]);
    assert_eq!(exit_code(&usage), 2, "missing --config is a usage error");
}

fn fonbw_config(command: &str, signal: &str) -> String {
    format!(
        r#"command = "{command}"
model = "fonbw"

[params]
poly = [0.18, -1.4e-4, -7.7e-8]
k_h = 2.0
rho = 0.02
sigma = 0.55
n = 1.5
lambda1 = 0.85
lambda2 = 0.95

{signal}
"#
    )
}

#[test]
fn data_errors_exit_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let u = gen_sine_offset(1.0, 1.0, 1.0, 1e-3).unwrap();

    let no_h = dir.path().join("no_h.csv");
    write_csv(&no_h, &u, None).unwrap();
    let metrics_cfg = write_config(
        dir.path(),
        "metrics.toml",
        &format!("command = \"metrics\"\n\n[signal]\ncsv = \"{}\"\n", no_h.display()),
    );
    assert_exit(&["metrics", "--config", &metrics_cfg], 3);

    let jittered = dir.path().join("jitter.csv");
    fs::write(&jittered, "t,u\n0,0\n0.001,0.1\n0.0025,0.2\n0.003,0.3\n").unwrap();
    let jitter_cfg = write_config(
        dir.path(),
        "jitter.toml",
        &reference_cbw_config(&format!("[signal]\ncsv = \"{}\"", jittered.display())),
    );
    assert_exit(&["simulate", "--config", &jitter_cfg], 3);

    let identify_cfg = write_config(
        dir.path(),
        "identify_no_h.toml",
        &format!(
            r#"command = "identify"
model = "nbw"

[signal]
csv = "{}"

[identify]
population = 6
generations = 2
seed = 1
bounds = [[0.25, 1.0], [0.2, 0.8], [0.6, 2.4], [0.3, 1.1], [1.0, 2.0]]
"#,
            no_h.display()
        ),
    );
    assert_exit(&["identify", "--config", &identify_cfg], 3);
}

#[test]
fn inverse_divergence_exits_with_code_4() {
    let dir = tempfile::tempdir().unwrap();
    // The sharply identified time constant makes e^{t/tau} pass the
    // divergence guard within a millisecond of command synthesis.
    let cfg = write_config(
        dir.path(),
        "zhu.toml",
        r#"command = "compensate"
model = "zhu"

[params]
m0 = 0.1026
c0 = 2.5820e2
k0 = 1.5567e5
k1 = 4.3915e-7
tau = 2.0408e-5
A = -0.0068
beta = 0.0457
gamma = -0.0255
delta = -0.0024
n = 1.0483

[signal]
generator = "sine_offset"
amplitude = 3.5e-7
frequency = 5.0
duration = 0.01
dt = 1e-5
"#,
    );
    assert_exit(&["compensate", "--config", &cfg, "--out", dir.path().join("out").to_str().unwrap()], 4);
}

fn nbw_truth() -> NbwParams {
    NbwParams {
        k_u: 0.5,
        k_h: 0.4,
        rho: 1.2,
        sigma: 0.55,
        n: 1.5,
        hbar_init: 0.0,
    }
}

fn write_nbw_trace(path: &Path) {
    let u = gen_sine_offset(2.0, 1.0, 2.0, 1e-3).unwrap();
    let h = simulate_nbw(&nbw_truth(), &u).unwrap();
    write_csv(path, &u, Some(&h)).unwrap();
}

#[test]
fn hopeless_bounds_exit_with_code_5_and_still_report() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("trace.csv");
    write_nbw_trace(&data);
    // n below 1 is invalid for every candidate, so the whole search scores
    // the infeasibility penalty.
    let cfg = write_config(
        dir.path(),
        "hopeless.toml",
        &format!(
            r#"command = "identify"
model = "nbw"

[signal]
csv = "{}"

[identify]
population = 5
generations = 2
seed = 3
bounds = [[0.25, 1.0], [0.2, 0.8], [0.6, 2.4], [0.3, 1.1], [0.2, 0.4]]
"#,
            data.display()
        ),
    );
    let out_dir = dir.path().join("out");
    assert_exit(&["identify", "--config", &cfg, "--out", out_dir.to_str().unwrap()], 5);

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    let best = report["result"]["best_objective"].as_f64().unwrap();
    assert!(best >= 1e9, "the report should still record the failed search, got {best}");
}

#[test]
fn identification_reports_are_deterministic_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("trace.csv");
    write_nbw_trace(&data);
    let cfg = write_config(
        dir.path(),
        "identify.toml",
        &format!(
            r#"command = "identify"
model = "nbw"

[signal]
csv = "{}"

[identify]
population = 8
generations = 10
seed = 0
bounds = [[0.25, 1.0], [0.2, 0.8], [0.6, 2.4], [0.3, 1.1], [1.0, 2.0]]
"#,
            data.display()
        ),
    );
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    assert_exit(&["identify", "--config", &cfg, "--seed", "42", "--out", out_a.to_str().unwrap()], 0);
    assert_exit(&["identify", "--config", &cfg, "--seed", "42", "--out", out_b.to_str().unwrap()], 0);

    let report_a = fs::read(out_a.join("report.json")).unwrap();
    let report_b = fs::read(out_b.join("report.json")).unwrap();
    assert_eq!(report_a, report_b);

    let report: serde_json::Value = serde_json::from_slice(&report_a).unwrap();
    assert_eq!(report["result"]["seed"].as_u64(), Some(42), "--seed must override the config");
    assert_eq!(report["result"]["best_theta"].as_array().unwrap().len(), 5);
}

#[test]
fn metrics_reports_zero_area_for_a_linear_trace() {
    let dir = tempfile::tempdir().unwrap();
    let u = gen_sine_offset(1.5, 2.0, 1.5, 1e-3).unwrap();
    let h = u.map_values(u.values().iter().map(|v| 2.0 * v).collect()).unwrap();
    let data = dir.path().join("linear.csv");
    write_csv(&data, &u, Some(&h)).unwrap();
    let cfg = write_config(
        dir.path(),
        "metrics.toml",
        &format!("command = \"metrics\"\n\n[signal]\ncsv = \"{}\"\n", data.display()),
    );
    let out_dir = dir.path().join("out");
    assert_exit(&["metrics", "--config", &cfg, "--out", out_dir.to_str().unwrap()], 0);

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["metrics"]["area"].as_f64(), Some(0.0));
    let width = report["metrics"]["max_width"].as_f64().unwrap();
    assert!(width.abs() <= 1e-12 * h.span());
}

#[test]
fn first_order_fracdiff_recovers_the_ramp_slope() {
    let dir = tempfile::tempdir().unwrap();
    let dt = 1e-3;
    let values: Vec<f64> = (0..1001).map(|k| 3.0 * k as f64 * dt).collect();
    let u = TimeSeries::new(0.0, dt, values).unwrap();
    let data = dir.path().join("ramp.csv");
    write_csv(&data, &u, None).unwrap();
    let cfg = write_config(
        dir.path(),
        "fracdiff.toml",
        &format!(
            "command = \"fracdiff\"\n\n[fracdiff]\nlambda = 1.0\n\n[signal]\ncsv = \"{}\"\n",
            data.display()
        ),
    );
    let out_dir = dir.path().join("out");
    assert_exit(&["fracdiff", "--config", &cfg, "--out", out_dir.to_str().unwrap()], 0);

    let (_, d) = read_csv(out_dir.join("fracdiff.csv")).unwrap();
    let d = d.unwrap();
    for &v in &d.values()[1..] {
        assert!((v - 3.0).abs() <= 1e-9, "slope sample {v}");
    }
}

#[test]
fn memory_flag_overrides_the_configured_window() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "fonbw.toml",
        &format!(
            "{}\n[solver]\nmemory = 50\n",
            fonbw_config(
                "simulate",
                "[signal]\ngenerator = \"sine_offset\"\namplitude = 5.0\nfrequency = 5.0\nduration = 0.5\ndt = 1e-3"
            )
        ),
    );
    let out_dir = dir.path().join("out");
    assert_exit(
        &["simulate", "--config", &cfg, "--memory", "100", "--out", out_dir.to_str().unwrap()],
        0,
    );

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["memory"].as_str(), Some("100"));

    let p = FonbwParams {
        poly: PolynomialGain::new(vec![0.18, -1.4e-4, -7.7e-8]).unwrap(),
        k_h: 2.0,
        rho: 0.02,
        sigma: 0.55,
        n: 1.5,
        lambda1: 0.85,
        lambda2: 0.95,
        hbar_init: 0.0,
    };
    let u = gen_sine_offset(5.0, 5.0, 0.5, 1e-3).unwrap();
    let expected = simulate_fonbw(&p, &u, Memory::Truncated(100)).unwrap();
    let (_, h) = read_csv(out_dir.join("simulation.csv")).unwrap();
    assert_eq!(h.unwrap().values(), expected.values());
}

#[test]
fn normalize_reports_the_reduced_parameter_set() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "normalize.toml",
        r#"command = "normalize"
model = "cbw"

[params]
alpha = 0.1
k = 1.0
D = 1.0
A = 0.7
beta = 0.6
gamma = 0.5
n = 1.0
"#,
    );
    let out_dir = dir.path().join("out");
    assert_exit(&["normalize", "--config", &cfg, "--out", out_dir.to_str().unwrap()], 0);

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    let expected = boucwen::models::normalize_cbw(&reference_cbw()).unwrap();
    assert_eq!(report["normalized"], serde_json::to_value(&expected).unwrap());
}

#[test]
fn compensate_reports_tracking_error_on_a_matched_cascade() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cascade.toml",
        &fonbw_config(
            "compensate",
            "[signal]\ngenerator = \"sine_offset\"\namplitude = 5.0\nfrequency = 5.0\nduration = 0.4\ndt = 1e-4",
        ),
    );
    let out_dir = dir.path().join("out");
    assert_exit(&["compensate", "--config", &cfg, "--out", out_dir.to_str().unwrap()], 0);

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    let rel = report["relative_tracking_error"].as_f64().unwrap();
    assert!(rel > 0.0 && rel <= 0.01, "matched cascade should track within 1%, got {rel}");
    assert!(out_dir.join("cascade.csv").exists());
}

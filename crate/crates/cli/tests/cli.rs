use std::fs;
use std::process::{Command, Output};

fn isochron(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isochron"))
        .args(args)
        .output()
        .expect("spawn isochron")
}

fn code(args: &[&str]) -> i32 {
    isochron(args).status.code().expect("exit code")
}

fn last_row(out: &Output) -> Vec<f64> {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let line = text.lines().last().unwrap();
    line.split(',').map(|f| f.parse().unwrap()).collect()
}

#[test]
fn phi_scan_exit_codes_encode_the_verdict() {
    let out = isochron(&[
        "phi-scan",
        "--potential",
        "pinney",
        "--forcing",
        "sin",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let verdict: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(verdict["min_modulus"].as_f64().unwrap() > 0.03);
    assert_eq!(
        code(&[
            "phi-scan",
            "--potential",
            "harmonic:1",
            "--forcing",
            "cos2t"
        ]),
        2
    );
}

#[test]
fn resonance_run_exit_codes_encode_the_verdict() {
    let run = |pot: &str, forcing: &str| {
        code(&[
            "resonance-run",
            "--potential",
            pot,
            "--forcing",
            forcing,
            "--eps",
            "0.05",
            "--periods",
            "200",
        ])
    };
    assert_eq!(run("harmonic:1", "sin"), 0);
    assert_eq!(run("pinney", "sin"), 0);
    assert_eq!(run("harmonic:1", "cos2t"), 2);
}

#[test]
fn bad_input_exits_with_one() {
    let out = isochron(&[
        "phi-scan",
        "--potential",
        "pinney",
        "--forcing",
        "{\"kind\":",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("forcing"));
    assert_eq!(code(&["no-such-command"]), 1);
    assert_eq!(code(&["phi-scan", "--eps", "abc"]), 1);
    assert_eq!(code(&["phi-scan", "--config", "/nonexistent/run.json"]), 1);
}

#[test]
fn acw_doubles_per_period_at_c_four() {
    let out = isochron(&["acw", "--c", "4", "--x0", "1", "--y0", "0", "--steps", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let row = last_row(&out);
    assert_eq!(row[0], 10.0);
    assert_eq!(row[1], 1024.0);
}

#[test]
fn period_and_limits_audits_match_known_values() {
    let out = isochron(&[
        "period-audit",
        "--potential",
        "pinney",
        "--r",
        "100",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("6.28318530"), "{text}");
    let out = isochron(&["limits-audit", "--potential", "pinney", "--I", "1e4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("1.414"), "{text}");
}

#[test]
fn identical_configs_give_identical_bytes() {
    let args = [
        "phi-scan",
        "--potential",
        "pinney",
        "--forcing",
        "sin",
        "--r-points",
        "12",
        "--theta-points",
        "64",
    ];
    let a = isochron(&args);
    let b = isochron(&args);
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
    let mut seedless = args.to_vec();
    seedless.push("--seedless");
    assert_eq!(isochron(&seedless).stdout, a.stdout);
}

#[test]
fn out_directory_receives_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().to_str().unwrap();
    let status = code(&[
        "acw", "--c", "0.25", "--x0", "1", "--y0", "0", "--steps", "4", "--out", path,
    ]);
    assert_eq!(status, 0);
    let csv = fs::read_to_string(dir.path().join("acw.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("acw.json")).unwrap()).unwrap();
    assert!(json.is_object());
}

#[test]
fn flags_override_config_file_fields() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    fs::write(&config, r#"{"c":4.0,"x0":1.0,"y0":0.0,"steps":3}"#).unwrap();
    let config = config.to_str().unwrap();
    assert_eq!(last_row(&isochron(&["acw", "--config", config]))[1], 8.0);
    assert_eq!(
        last_row(&isochron(&["acw", "--config", config, "--steps", "5"]))[1],
        32.0
    );
}

#[test]
fn fourier_constants_at_a_single_radius() {
    let row = last_row(&isochron(&["fourier-constants", "--r", "1"]));
    assert_eq!(row[0], 1.0);
    assert!((row[1] - 0.535895239354672).abs() < 1e-9);
    assert!((row[2] - 0.277750489431484).abs() < 1e-9);
}

//! End-to-end tests of the `parabolic` binary: exit codes, error JSON,
//! artifact headers and byte-identical reruns.

use serde_json::Value;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_parabolic"))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn model_spec(dir: &Path) -> String {
    write(
        dir,
        "model.json",
        r#"{"model": true, "k": 1, "a": [-1, 0]}"#,
    )
}

fn perturbed_spec(dir: &Path) -> String {
    write(
        dir,
        "perturbed.json",
        r#"{"coeffs": [[1, 0], [-1, 0], [0.2, 0]]}"#,
    )
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout)
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {:?}", o))
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr)
        .unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {:?}", o))
}

#[test]
fn analyze_reports_zero_residue_for_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&[
        "analyze",
        "--germ",
        &model_spec(dir.path()),
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let v = stdout_json(&o);
    assert_eq!(v["result"]["k"], 1);
    assert_eq!(v["result"]["rho"][0].as_f64().unwrap(), 0.0);
    assert_eq!(v["result"]["rho"][1].as_f64().unwrap(), 0.0);
    let file: Value =
        serde_json::from_str(&fs::read_to_string(out.join("analyze.json")).unwrap()).unwrap();
    assert_eq!(file, v["result"]);
    // x + x² has ρ = 1
    let quad = write(dir.path(), "quad.json", r#"{"coeffs": [[1, 0], [1, 0]]}"#);
    let v = stdout_json(&run(&[
        "analyze",
        "--germ",
        &quad,
        "--out-dir",
        out.to_str().unwrap(),
    ]));
    assert!((v["result"]["rho"][0].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn malformed_spec_exits_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"coeffs": [[1, 0], ["x", 0]]}"#);
    let o = run(&["analyze", "--germ", &bad]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_json(&o);
    assert_eq!(e["error"]["kind"], "input");
    assert_eq!(e["error"]["field"], "coeffs[1][0]");

    let typo = write(
        dir.path(),
        "typo.json",
        r#"{"model": true, "k": 1, "aa": [-1, 0]}"#,
    );
    let e = stderr_json(&run(&["analyze", "--germ", &typo]));
    assert_eq!(e["error"]["field"], "aa");

    let not_json = write(dir.path(), "broken.json", "{\"model\": tru");
    let o = run(&["analyze", "--germ", &not_json]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["field"], "germ");

    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"command": "theta", "quad_tol": -1}"#,
    );
    let o = run(&["--config", &cfg, "--germ", &model_spec(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["field"], "quad_tol");

    let o = run(&[
        "theta",
        "--germ",
        &model_spec(dir.path()),
        "--orbit-len",
        "many",
    ]);
    assert_eq!(stderr_json(&o)["error"]["field"], "orbit_len");

    let o = run(&["analyze"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["field"], "germ");
}

#[test]
fn numerical_failure_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&[
        "invariants",
        "--germ",
        &perturbed_spec(dir.path()),
        "--fourier-tol",
        "1e-16",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1), "{o:?}");
    assert_eq!(stderr_json(&o)["error"]["kind"], "tolerance");
}

#[test]
fn thread_variable_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["analyze", "--germ", &model_spec(dir.path())])
        .env("PARABOLIC_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["field"], "PARABOLIC_THREADS");
}

#[test]
fn csv_has_hash_header_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let spec = perturbed_spec(dir.path());
    let mut texts = Vec::new();
    for (i, threads) in ["1", "4"].iter().enumerate() {
        let out = dir.path().join("out");
        let o = bin()
            .args([
                "theta",
                "--germ",
                &spec,
                "--orbit-len",
                "2000",
                "--s-grid",
                "1,0.5",
                "--s-grid",
                "-0.5,1;crossings=+0",
                "--out-dir",
                out.to_str().unwrap(),
            ])
            .env("PARABOLIC_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "run {i}: {o:?}");
        let hash = stdout_json(&o)["config_sha256"]
            .as_str()
            .unwrap()
            .to_string();
        let text = fs::read_to_string(out.join("theta.csv")).unwrap();
        let first = text.lines().next().unwrap();
        assert!(first.starts_with("# parabolic theta"), "{first}");
        assert!(first.contains(&format!("config_sha256={hash}")), "{first}");
        for t in ["quad_tol=1e-10", "fatou_tol=1e-14", "fourier_tol=1e-8"] {
            assert!(first.contains(t), "{first}");
        }
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "s_re,s_im,crossings,strip,re,im,err"
        );
        assert_eq!(text.lines().count(), 4);
        texts.push(text);
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn overrides_beat_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write(
        dir.path(),
        "run.json",
        &format!(
            r#"{{"command": "orbit", "germ": "model.json", "orbit_len": 5, "out_dir": {:?}}}"#,
            out.display().to_string()
        ),
    );
    model_spec(dir.path());
    let o = run(&["--config", &cfg, "--orbit-len", "7"]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let text = fs::read_to_string(out.join("orbit.csv")).unwrap();
    // comment, header, x_0 … x_7
    assert_eq!(text.lines().count(), 10);
    // x_n = 1/(10 + n) for the model started at t(x0) = 10
    let last: Vec<&str> = text.lines().last().unwrap().split(',').collect();
    assert_eq!(last[0], "7");
    assert!((last[1].parse::<f64>().unwrap() - 1.0 / 17.0).abs() < 1e-15);
}

#[test]
fn every_command_runs_on_the_perturbed_germ() {
    let dir = tempfile::tempdir().unwrap();
    let spec = perturbed_spec(dir.path());
    for cmd in ["orbit", "fatou", "theta", "jumps", "invariants", "fractal"] {
        let out = dir.path().join(cmd);
        let o = run(&[
            cmd,
            "--germ",
            &spec,
            "--orbit-len",
            "3000",
            "--out-dir",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {o:?}");
        let v = stdout_json(&o);
        for a in v["artifacts"].as_array().unwrap() {
            assert!(Path::new(a.as_str().unwrap()).exists(), "{cmd}: {a}");
        }
        if cmd == "invariants" {
            assert_eq!(v["result"]["equivalence"]["equivalent"], true, "{v}");
        }
        if cmd == "fatou" {
            assert!(v["result"]["max_abel_residual"].as_f64().unwrap() < 1e-8);
        }
    }
}

#[test]
fn verify_passes_on_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&[
        "verify",
        "--germ",
        &model_spec(dir.path()),
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    let v = stdout_json(&o);
    assert_eq!(o.status.code(), Some(0), "{v}");
    assert_eq!(v["result"]["passed"], true);
    // 12 criteria and 5 germ checks
    assert_eq!(v["result"]["checks"].as_array().unwrap().len(), 17);
    let csv = fs::read_to_string(out.join("verify.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| l.contains(",pass,")).count(), 17);
}

//! Exit codes, failure manifests and mode outputs of the binary.

use std::path::Path;
use std::process::Command;

use noncoercive_cli::{RunManifest, Status};
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_noncoercive");

fn invoke(args: &[&str], out: &Path) -> (i32, String, RunManifest) {
    let output = Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "off")
        .output()
        .unwrap();
    let stderr = String::from_utf8_lossy(&output.stderr).into_owned();
    (
        output.status.code().unwrap(),
        stderr,
        RunManifest::read(out).unwrap(),
    )
}

fn config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

const LARGE_MU: &str = r#"
[grid]
counts = [17, 17]
[coefficients]
c0 = { kind = "gaussian-bump", center = [0.5, 0.5], width = 0.2, amplitude = 0.5 }
f = { kind = "sine-product", amplitude = 0.1 }
mu = { kind = "constant", value = 1e6 }
"#;

#[test]
fn large_coupling_fails_the_check_with_a_report() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), LARGE_MU);
    let out = dir.path().join("out");
    let (code, _, m) = invoke(&["check", "--config", &cfg], &out);
    assert_eq!(code, 3);
    assert_eq!(m.status, Status::Failed);
    assert_eq!(m.failed_stage.as_deref(), Some("check"));
    assert_eq!(m.report.as_ref().unwrap()["h2_ok"], false);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["h2_ok"], false);
    assert!(m.artifacts.iter().all(|a| a.verify(&out)));
}

#[test]
fn props_writes_a_passing_table() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let (code, _, m) = invoke(&["props"], &out);
    assert_eq!(code, 0, "{:?}", m.error);
    let table = std::fs::read_to_string(out.join("props.csv")).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert!(rows.len() >= 10);
    assert!(rows.iter().all(|r| r.contains(",pass,")), "{table}");
}

#[test]
fn unknown_key_fails_with_a_manifest() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "mu_typo = 1.0\n[grid]\ncounts = [9]\n");
    let out = dir.path().join("out");
    let (code, stderr, m) = invoke(&["check", "--config", &cfg], &out);
    assert_eq!(code, 2);
    assert!(stderr.contains("mu_typo"), "{stderr}");
    assert_eq!(m.failed_stage.as_deref(), Some("config"));
    assert!(m.error.unwrap().contains(":1:1:"));
}

#[test]
fn zero_coupling_is_an_input_error_for_solve_both() {
    let dir = TempDir::new().unwrap();
    let text =
        "[grid]\ncounts = [9, 9]\n[coefficients]\nmu = { kind = \"constant\", value = 0.0 }\n";
    let cfg = config(dir.path(), text);
    let out = dir.path().join("out");
    let (code, _, m) = invoke(&["solve-both", "--config", &cfg], &out);
    assert_eq!(code, 2);
    assert!(m.error.unwrap().contains("multiplicity requires μ ≠ 0"));
}

#[test]
fn missing_coefficient_file_is_named() {
    let dir = TempDir::new().unwrap();
    let text =
        "[grid]\ncounts = [9]\n[coefficients]\nc0 = { kind = \"file\", path = \"nope.field\" }\n";
    let cfg = config(dir.path(), text);
    let out = dir.path().join("out");
    let (code, _, m) = invoke(&["check", "--config", &cfg], &out);
    assert_eq!(code, 2);
    let err = m.error.unwrap();
    assert!(
        err.contains("coefficients.c0") && err.contains("nope.field"),
        "{err}"
    );
}

#[test]
fn flags_override_the_config() {
    let dir = TempDir::new().unwrap();
    let text = "[grid]\ncounts = [15]\n[coefficients]\nc0 = { kind = \"constant\", value = 1.0 }\nf = { kind = \"constant\", value = 0.1 }\n";
    let cfg = config(dir.path(), text);
    let out = dir.path().join("out");
    let (code, _, m) = invoke(
        &[
            "solve-min",
            "--config",
            &cfg,
            "--seed",
            "7",
            "--tol",
            "1e-8",
        ],
        &out,
    );
    assert_eq!(code, 0, "{:?}", m.error);
    let echo = m.config.unwrap();
    assert_eq!(echo.seed, 7);
    assert_eq!(echo.solver.tol, 1e-8);
    for name in ["u_min.field", "v_min.field", "log_min.csv", "report.json"] {
        assert!(
            m.artifacts.iter().any(|a| a.path == name),
            "{name} not listed"
        );
    }
    assert!(m.artifacts.iter().all(|a| a.verify(&out)));
}

use std::path::Path;
use std::process::{Command, Output};

fn vibro(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vibro"))
        .args(args)
        .current_dir(dir)
        .env_remove("VIBRO_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn fixpoint_row_matches_the_baseline_orbit() {
    let dir = tempfile::tempdir().unwrap();
    let out = vibro(dir.path(), &["fixpoint"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("fixpoint.csv")).unwrap();
    assert!(csv.starts_with("# vibro "));
    assert!(csv.contains("\"seed\":0"));
    let row: Vec<f64> = data_rows(&csv)[0].iter().map(|c| c.parse().unwrap()).collect();
    let expected = [0.1002798898, 0.5419433068, -0.4602868346, 1.0, 1.8030213804];
    for (got, want) in row.iter().zip(expected) {
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    }
    assert!(row[5] < 1e-10);
}

#[test]
fn verify_writes_a_decimal_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let out = vibro(dir.path(), &["verify", "--format", "json", "--out", "cert.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("cert.json")).unwrap()).unwrap();
    assert_eq!(doc["command"], "verify");
    assert_eq!(doc["result"]["verdict"], "UniqueFixedPointInBox");
    assert_eq!(doc["result"]["nonresonant"], true);
    let lo: f64 = doc["result"]["det"]["lo"].as_str().unwrap().parse().unwrap();
    let hi: f64 = doc["result"]["det"]["hi"].as_str().unwrap().parse().unwrap();
    assert!(lo <= 1.0 && 1.0 <= hi && hi - lo < 1e-8);
}

#[test]
fn invalid_params_exit_with_validation_code_and_no_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = vibro(dir.path(), &["simulate", "--set", "params.friction=-1"]);
    assert_eq!(out.status.code(), Some(2));
    let report: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(report["error"]["kind"], "validation");
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), "[params]\nforcing = 1.0\nfricton = 0.3\n").unwrap();
    let out = vibro(dir.path(), &["fixpoint", "--config", "run.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fricton"));
}

#[test]
fn convergence_failure_has_its_own_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = vibro(dir.path(), &["fixpoint", "--set", "fixpoint.max_iters=1", "--set", "fixpoint.seed=[0.9, -1.5]"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("fixpoint.csv").exists());
}

#[test]
fn identical_config_gives_identical_bytes() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["branch", "--set", "branch.end=0.42", "--seed", "11"];
    assert!(vibro(d1.path(), &args).status.success());
    assert!(vibro(d2.path(), &args).status.success());
    let a = std::fs::read(d1.path().join("branch.csv")).unwrap();
    let b = std::fs::read(d2.path().join("branch.csv")).unwrap();
    assert_eq!(a, b);
    let csv = String::from_utf8(a).unwrap();
    assert!(csv.contains("\"seed\":11"));
    assert!(csv.contains("param,x_star,v_star,trace,det,theta_star,fold_flag"));
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("artifacts");
    let out = Command::new(env!("CARGO_BIN_EXE_vibro"))
        .args(["melnikov"])
        .current_dir(dir.path())
        .env("VIBRO_OUT_DIR", &target)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(target.join("melnikov.csv").exists());
}

#[test]
fn multiparticle_json_reports_the_determinant() {
    let dir = tempfile::tempdir().unwrap();
    let out = vibro(
        dir.path(),
        &[
            "multiparticle",
            "--format",
            "json",
            "--set",
            "params.friction=0.1",
            "--set",
            "multiparticle.masses=[1.0, 2.0, 0.5]",
            "--set",
            "multiparticle.x0=[-0.6, 0.0, 0.6]",
            "--set",
            "multiparticle.v0=[1.5, -1.3, 2.0]",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("multiparticle.json")).unwrap()).unwrap();
    let jac = &doc["result"]["jacobian"];
    assert_eq!(jac["non_sticking"], true);
    assert!((jac["det"].as_f64().unwrap() - 1.0).abs() < 1e-5);
}

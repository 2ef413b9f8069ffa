use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn itep(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_itep"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn run(config: &str, cmd: &[&str], out: &Path) -> Output {
    let cfg = fixture(config);
    let mut args = vec!["--config", cfg.to_str().unwrap()];
    args.extend_from_slice(cmd);
    itep(&args, out)
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn ellipticity_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let ok = run("helmholtz.json", &["check-ellipticity"], tmp.path());
    assert_eq!(ok.status.code(), Some(0));
    let rep: serde_json::Value = serde_json::from_str(&read(tmp.path(), "ellipticity.json")).unwrap();
    assert!(rep["condition1"]["min_modulus"].as_f64().unwrap() > 0.1);
    assert!(rep["condition1"]["witness"]["xi_sq"].is_number());

    let touching = run("cone_touching.json", &["check-ellipticity"], tmp.path());
    assert_eq!(touching.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&touching.stdout).contains("witness"));

    let bad = run("bad_bc.json", &["check-ellipticity"], tmp.path());
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn config_and_usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run("too_few_points.json", &["spectrum"], tmp.path()).status.code(), Some(2));
    let unknown = itep(&["frobnicate"], tmp.path());
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("Usage"));
    assert_eq!(itep(&["spectrum"], tmp.path()).status.code(), Some(2));
    let missing = itep(&["--config", "/nonexistent/itep.json", "counting"], tmp.path());
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn spectrum_refine_and_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run("helmholtz.json", &["spectrum"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(tmp.path(), "eigenvalues.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("re,im,multiplicity,chain_length,residual,trusted"));
    let trust: Vec<&str> = lines.map(|l| l.rsplit(',').next().unwrap()).collect();
    // the cross-check against the finer grid rejects the high end of the spectrum
    assert!(trust.contains(&"true") && trust.contains(&"false"));
    let roots = read(tmp.path(), "oracle_roots.csv");
    assert!(roots.starts_with("re,im,multiplicity,newton_residual\n"));
    let manifest: serde_json::Value = serde_json::from_str(&read(tmp.path(), "manifest.json")).unwrap();
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest["config"]["spectrum"]["refine"], true);
    assert!(manifest["outputs"].as_array().unwrap().iter().any(|v| v == "chains.json"));
}

#[test]
fn counting_fixture_reproduces_hand_example() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run("counting_scalar.json", &["counting"], tmp.path()).status.code(), Some(0));
    let csv = read(tmp.path(), "counting.csv");
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[1], "2");
    assert_eq!(row[2].parse::<f64>().unwrap(), 5.25);
}

#[test]
fn laurent_fixture_reproduces_residue() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run("laurent_scalar.json", &["laurent"], tmp.path()).status.code(), Some(0));
    let c = itep::io::parse_matrix_csv(&read(tmp.path(), "coef_-1.csv")).unwrap();
    assert!((c[(0, 0)].re - 1.0).abs() < 1e-12 && c[(0, 0)].im.abs() < 1e-12);
    let meta: serde_json::Value = serde_json::from_str(&read(tmp.path(), "laurent.json")).unwrap();
    assert_eq!(meta["N"], 1);
    assert_eq!(meta["radius"], 0.5);
}

#[test]
fn variable_q_completeness() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run("schrodinger_variable.json", &["completeness"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(read(tmp.path(), "completeness.csv").starts_with("sample,m,residual\n"));
}

#[test]
fn threads_do_not_change_output() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = fixture("helmholtz.json");
    let cfg = cfg.to_str().unwrap();
    itep(&["--config", cfg, "--threads", "1", "laurent"], a.path());
    itep(&["--config", cfg, "--threads", "3", "laurent"], b.path());
    assert_eq!(read(a.path(), "laurent.json"), read(b.path(), "laurent.json"));
    assert_eq!(read(a.path(), "coef_-1.csv"), read(b.path(), "coef_-1.csv"));
}

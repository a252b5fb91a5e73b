use floquet4::spectrum::{validate_report, SpectrumReport};
use floquet4::CoefficientSet;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_floquet4")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8")
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().expect("number")).collect()).collect()
}

#[test]
fn malformed_coefficient_file_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"p": {"const": 1.0, "cos": [0.5"#).unwrap();
    let o = run(&["spectrum", "--coeffs", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("coefficient file"));
    assert_eq!(run(&["eigs", "--preset", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["eigs"]).status.code(), Some(2));
}

#[test]
fn empty_trace_grid_is_header_only() {
    let o = run(&["trace", "--preset", "zero", "--samples", "0"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "lambda,T1,T2,rho,Dplus,Dminus,Delta1_re,Delta1_im,Delta2_re,Delta2_im\n");
}

#[test]
fn free_trace_follows_hyperbolic_cosine() {
    let o = run(&["trace", "--preset", "zero", "--s-min", "-5", "--s-max", "5", "--samples", "41"]);
    assert!(o.status.success());
    for row in csv_rows(&stdout(&o)).iter().filter(|r| r[0] >= 0.0) {
        let z = row[0].powf(0.25);
        assert!((row[6] - z.cosh()).abs() <= 1e-10 * z.cosh(), "{row:?}");
        assert!((row[8] - z.cos()).abs() <= 1e-10 * z.cosh(), "{row:?}");
    }
}

#[test]
fn cosine_trace_satisfies_identities_on_reload() {
    let o = run(&["trace", "--preset", "cos1", "--s-min", "-4", "--s-max", "6", "--samples", "31"]);
    assert!(o.status.success());
    for r in csv_rows(&stdout(&o)) {
        let (t1, t2, rho, dp, dm) = (r[1], r[2], r[3], r[4], r[5]);
        let t = 4.0 * t1 * t1 - t2;
        let scale = 1.0 + t2.abs() + 4.0 * t1 * t1 + 4.0 * t1.abs();
        assert!((rho - ((t2 + 1.0) / 2.0 - t1 * t1)).abs() <= 1e-12 * scale);
        assert!((dp - (t - 4.0 * t1 + 1.0) / 2.0).abs() <= 1e-12 * scale);
        assert!((dm - (t + 4.0 * t1 + 1.0) / 2.0).abs() <= 1e-12 * scale);
    }
}

#[test]
fn spectrum_is_deterministic_and_revalidates() {
    let args = ["spectrum", "--preset", "cos1", "--scale", "0.3", "--lambda-max", "2000"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let report: SpectrumReport = serde_json::from_slice(&a.stdout).unwrap();
    assert!(report.schema_version.starts_with("floquet4.spectrum/"));
    assert!(!report.gaps.is_empty());
    assert!(!report.mult4.is_empty());
    assert!(report.mult4[0][0] <= report.bands[0].closure[0] + 1e-9);
    let c = CoefficientSet::cos1().scaled(0.3).unwrap();
    assert_eq!(validate_report(&c, &report, 8).unwrap(), Vec::<String>::new());
}

#[test]
fn free_spectrum_has_no_gaps() {
    let o = run(&["spectrum", "--preset", "zero", "--lambda-max", "3000"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["gaps"].as_array().unwrap().len(), 0);
    assert!(v["schema_version"].is_string());
}

#[test]
fn verify_passes_on_presets_and_catches_loose_integration() {
    for preset in ["zero", "cos1"] {
        let o = run(&["verify", "--preset", preset, "--random-sets", "2", "--lambdas", "6"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["schema_version"], "floquet4.verify/1");
    }
    let o = run(&["verify", "--preset", "cos1", "--random-sets", "2", "--lambdas", "6", "--tol-ode", "1e-2"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("FAIL det-M"), "{err}");
    assert!(err.contains("det M = 1"), "{err}");
}

#[test]
fn perturb_rows() {
    let o = run(&["perturb", "--preset", "cos1", "--eps", "0,0.1", "--format", "csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    let gap0: f64 = rows[0][3].parse().unwrap();
    assert!(gap0.abs() < 1e-12, "{gap0}");
    let gap: f64 = rows[1][3].parse().unwrap();
    let pred_trace_normalized: f64 = rows[1][8].parse().unwrap();
    assert!((gap / pred_trace_normalized - 1.0).abs() < 0.05, "{gap} vs {pred_trace_normalized}");
}

#[test]
fn eigs_and_resonances_tables() {
    let o = run(&["eigs", "--preset", "zero", "--n-max", "1", "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.ends_with(",Dplus,1,0+")), "{text}");
    assert!(text.lines().any(|l| l.ends_with(",Dminus,2,1-+")), "{text}");
    let o = run(&["resonances", "--preset", "zero", "--n-max", "1"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let labeled = v["data"]["labeled"].as_array().unwrap();
    let total: u64 = labeled.iter().map(|z| z["multiplicity"].as_u64().unwrap()).sum();
    assert_eq!(total, 3);
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("eigs.json");
    let o = run(&["eigs", "--preset", "cos1", "--n-max", "1", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let direct = run(&["eigs", "--preset", "cos1", "--n-max", "1"]);
    let written = std::fs::read_to_string(&path).unwrap();
    // the config block records the output path; everything else must agree
    let strip = |s: &str| {
        let mut v: serde_json::Value = serde_json::from_str(s).unwrap();
        v["config"]["out"] = serde_json::Value::Null;
        v
    };
    assert_eq!(strip(&written), strip(&stdout(&direct)));
}

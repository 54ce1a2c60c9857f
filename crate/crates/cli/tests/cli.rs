use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const PI2: f64 = std::f64::consts::PI * std::f64::consts::PI;

fn pqlap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pqlap"))
        .args(args)
        .env_remove("PQLAP_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn value(out: &str, key: &str) -> String {
    out.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {out}"))
        .to_string()
}

fn dir_arg(d: &Path) -> String {
    d.to_str().unwrap().to_string()
}

#[test]
fn spectrum_of_laplacian() {
    let o = pqlap(&["spectrum-ref", "--q", "2", "--k-max", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "schema_version,1");
    assert_eq!(lines[1], "q,k,lambda");
    for (k, line) in lines[2..].iter().enumerate() {
        let lambda: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        let exact = ((k + 1) as f64).powi(2) * PI2;
        assert!((lambda - exact).abs() < 1e-12 * exact);
    }
}

#[test]
fn spectrum_matches_golden_rows() {
    let o = pqlap(&["spectrum-ref", "--q", "3", "--k-max", "2"]);
    let golden = include_str!("../../core/data/v1/reference_spectrum.csv");
    for row in stdout(&o).lines().skip(2) {
        assert!(golden.lines().any(|g| g == row), "{row}");
    }
}

#[test]
fn spectrum_rejects_bad_exponent() {
    let o = pqlap(&["spectrum-ref", "--q", "0.9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("0.9"));
}

#[test]
fn solve_above_threshold() {
    let tmp = TempDir::new().unwrap();
    let lambda = (2.0 * PI2).to_string();
    let o = pqlap(&[
        "solve",
        "--lambda",
        &lambda,
        "--output-dir",
        &dir_arg(tmp.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(value(&out, "outcome"), "Eigen");
    assert_eq!(value(&out, "sign_changes"), "0");
    let csv = fs::read_to_string(tmp.path().join("solve.csv")).unwrap();
    assert!(csv.starts_with(
        "schema_version,1\noutcome,lambda,rho,level,residual,sign_changes,iterations\nEigen,"
    ));
    let f = fs::read_to_string(tmp.path().join("eigenfunction.csv")).unwrap();
    assert_eq!(f.lines().count(), 2 + 513);
}

#[test]
fn solve_below_threshold_converges_to_zero() {
    let tmp = TempDir::new().unwrap();
    let lambda = (0.5 * PI2).to_string();
    let o = pqlap(&[
        "solve",
        "--lambda",
        &lambda,
        "--output-dir",
        &dir_arg(tmp.path()),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(value(&stdout(&o), "outcome"), "ConvergedToZero");
}

#[test]
fn malformed_config_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("run.toml");
    for text in [
        "p = 3\nlambda = 2\n",
        "p = \"three\"\n",
        "p = 2\nq = 2\n",
        "elements = 0\n",
    ] {
        fs::write(&path, text).unwrap();
        let o = pqlap(&[
            "solve",
            "--config",
            path.to_str().unwrap(),
            "--lambda",
            "20",
        ]);
        assert_eq!(o.status.code(), Some(2), "{text}: {}", stderr(&o));
    }
}

#[test]
fn non_convergence_exit_code() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("run.toml");
    fs::write(
        &path,
        format!(
            "max_iterations = 1\noutput_dir = \"{}\"\n",
            dir_arg(tmp.path())
        ),
    )
    .unwrap();
    let o = pqlap(&["solve", "--config", path.to_str().unwrap(), "--rho", "0.5"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn output_directory_from_environment() {
    let tmp = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_pqlap"))
        .args(["solve", "--rho", "0.01", "--elements", "64"])
        .env("PQLAP_OUTPUT_DIR", tmp.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(tmp.path().join("solve.csv").exists());
}

#[test]
fn branch_output_is_deterministic() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for d in [&a, &b] {
        let o = pqlap(&[
            "branch",
            "--mode",
            "2",
            "--elements",
            "128",
            "--seed",
            "7",
            "--output-dir",
            &dir_arg(d.path()),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let x = fs::read(a.path().join("branch_k2.csv")).unwrap();
    let y = fs::read(b.path().join("branch_k2.csv")).unwrap();
    assert_eq!(x, y);
    let text = String::from_utf8(x).unwrap();
    assert!(text.starts_with(
        "schema_version,1\nrho,lambda,level,norm1p,norm1q,sign_changes,iterations,residual\n"
    ));
    assert_eq!(text.lines().count(), 2 + 12);
}

#[test]
fn diagram_from_zero() {
    let tmp = TempDir::new().unwrap();
    let o = pqlap(&[
        "diagram",
        "--elements",
        "256",
        "--output-dir",
        &dir_arg(tmp.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let svg = fs::read_to_string(tmp.path().join("diagram.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 3);
    assert_eq!(svg.matches("stroke-dasharray").count(), 3);
    for k in 1..=3 {
        let csv = fs::read_to_string(tmp.path().join(format!("branch_k{k}.csv"))).unwrap();
        let last: Vec<f64> = csv
            .lines()
            .last()
            .unwrap()
            .split(',')
            .map(|c| c.parse().unwrap())
            .collect();
        let lambda_k = (k * k) as f64 * PI2;
        assert!((last[1] - lambda_k).abs() < 0.05 * lambda_k);
    }
}

#[test]
fn diagram_from_infinity() {
    let tmp = TempDir::new().unwrap();
    let o = pqlap(&[
        "diagram",
        "--p",
        "1.5",
        "--modes",
        "1,2",
        "--elements",
        "256",
        "--output-dir",
        &dir_arg(tmp.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let svg = fs::read_to_string(tmp.path().join("diagram.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    let csv = fs::read_to_string(tmp.path().join("branch_k1.csv")).unwrap();
    let norms: Vec<f64> = csv
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    assert!(norms.last().unwrap() > &(10.0 * norms[0]));
}

#[test]
fn diagram_needs_modes() {
    let tmp = TempDir::new().unwrap();
    let o = pqlap(&["diagram", "--modes", "--output-dir", &dir_arg(tmp.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn multiplicity_between_second_and_third_eigenvalue() {
    let tmp = TempDir::new().unwrap();
    let o = pqlap(&[
        "multiplicity",
        "--lambda",
        "45",
        "--output-dir",
        &dir_arg(tmp.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(value(&stdout(&o), "modes"), "2");
    let csv = fs::read_to_string(tmp.path().join("multiplicity.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(2).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("1,ok,"));
    assert_eq!(rows[0].split(',').nth(6), Some("0"));
    assert_eq!(rows[1].split(',').nth(6), Some("1"));
}

#[test]
fn verify_single_criterion() {
    let tmp = TempDir::new().unwrap();
    let o = pqlap(&[
        "verify",
        "--only",
        "gradients",
        "--output-dir",
        &dir_arg(tmp.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 3);
    assert!(out.lines().nth(2).unwrap().starts_with("8,gradients,pass,"));
}

#[test]
fn verify_unknown_criterion() {
    let o = pqlap(&["verify", "--only", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_coarse_mesh_fails_with_diagnostic() {
    let tmp = TempDir::new().unwrap();
    let o = pqlap(&[
        "verify",
        "--elements",
        "8",
        "--only",
        "bifurcation-zero",
        "--output-dir",
        &dir_arg(tmp.path()),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("bifurcation-zero,fail"));
    assert!(out.contains("discretization error"));
}

#[test]
fn verify_full_suite() {
    let tmp = TempDir::new().unwrap();
    let o = pqlap(&["verify", "--output-dir", &dir_arg(tmp.path())]);
    let out = stdout(&o);
    print!("{out}");
    assert_eq!(o.status.code(), Some(0), "{out}{}", stderr(&o));
    assert_eq!(out.matches(",pass,").count(), 10);
}

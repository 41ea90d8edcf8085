//! End-to-end tests of the `weylkit` binary: exit codes, reports and spec-file errors.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

fn weylkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weylkit")).args(args).current_dir(data_dir()).output().unwrap()
}

fn code(args: &[&str]) -> i32 {
    weylkit(args).status.code().unwrap()
}

fn report(args: &[&str]) -> Value {
    let out = weylkit(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn exit_codes_follow_the_documented_table() {
    let cases: &[(&[&str], i32)] = &[
        (&["catalog"], 0),
        (&["--help"], 0),
        (&["curvature", "--catalog", "godel", "--points", "2", "--quiet"], 0),
        (&["compat", "--catalog", "frw_flat", "--points", "2", "--tensor", "ricci", "--vector", "1,0,0,0", "--quiet"], 0),
        (&["hypersurface", "--catalog", "sphere_embedding", "--points", "2", "--quiet"], 0),
        (&["geodesic-map", "--catalog", "minkowski", "--psi", "x*y", "--points", "2", "--quiet"], 0),
        (&["classify", "--catalog", "schwarzschild", "--points", "2", "--expect-type", "D", "--quiet"], 0),
        (&["classify", "--catalog", "schwarzschild", "--points", "2", "--expect-type", "N", "--quiet"], 1),
        (&["curvature", "--catalog", "minkowski", "--bogus"], 2),
        (&["curvature", "--catalog", "no_such_metric", "--quiet"], 2),
        (&["curvature", "--catalog", "minkowski", "--point", "1,2", "--quiet"], 2),
        (&["classify", "--catalog", "sphere_embedding", "--quiet"], 2),
        (&["hypersurface", "--catalog", "schwarzschild", "--quiet"], 2),
        (&["geodesic-map", "--catalog", "minkowski", "--psi", "1 +", "--quiet"], 2),
        (&["curvature", "--spec", "missing_coords.spec", "--quiet"], 2),
        (&["curvature", "--catalog", "schwarzschild", "--point", "0,2,1,0", "--quiet"], 3),
        (&["curvature", "--catalog", "schwarzschild", "--range", "r=2:2", "--quiet"], 3),
    ];
    for (args, want) in cases {
        assert_eq!(code(args), *want, "{args:?}");
    }
}

#[test]
fn spec_errors_match_golden_messages() {
    for name in ["bad_expression", "dim_mismatch", "duplicate_entry", "missing_coords", "unresolved"] {
        let spec = format!("{name}.spec");
        let out = weylkit(&["curvature", "--spec", &spec, "--quiet"]);
        let want = std::fs::read_to_string(data_dir().join(format!("{name}.err"))).unwrap();
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert_eq!(String::from_utf8_lossy(&out.stderr), want, "{name}");
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn reports_are_byte_identical_across_runs_and_thread_counts() {
    let args = ["compat", "--catalog", "schwarzschild", "--points", "6", "--seed", "11", "--tensor", "ricci", "--quiet"];
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_weylkit"))
            .args(args)
            .env("WEYLKIT_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        out.stdout
    };
    let one = run("1");
    assert_eq!(one, run("1"));
    assert_eq!(one, run("4"));
}

#[test]
fn out_file_holds_the_stdout_bytes() {
    let path = std::env::temp_dir().join(format!("weylkit-cli-{}.json", std::process::id()));
    let args = ["curvature", "--catalog", "pp_wave", "--points", "3", "--seed", "5", "--quiet"];
    let stdout = weylkit(&args).stdout;
    let mut with_out = args.to_vec();
    let p = path.to_string_lossy().to_string();
    with_out.extend(["--out", &p]);
    let direct = weylkit(&with_out);
    assert_eq!(direct.status.code(), Some(0));
    assert!(direct.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), stdout);
    let _ = std::fs::remove_file(&path);
}

#[test]
fn round_sphere_scalar_is_two_over_r_squared() {
    let r = report(&["curvature", "--spec", "round2.spec", "--points", "4", "--quiet"]);
    assert_eq!(r["pass"], Value::Bool(true));
    for p in r["points"].as_array().unwrap() {
        let s = p["scalar"].as_f64().unwrap();
        assert!((s - 0.5).abs() < 1e-12, "{s}");
    }
}

#[test]
fn report_layout_and_tolerances() {
    let r = report(&["curvature", "--catalog", "schwarzschild", "--points", "2", "--tol-identity", "1e-10", "--quiet"]);
    for key in ["aggregate", "checks", "command", "config", "pass", "points", "spec", "tool"] {
        assert!(r.get(key).is_some(), "{key}");
    }
    assert_eq!(r["command"], "curvature");
    assert_eq!(r["tool"]["name"], "weylkit");
    assert_eq!(r["config"]["seed"], 0);
    assert_eq!(r["points"].as_array().unwrap().len(), 2);
    let tol = |name: &str| {
        r["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap()["tolerance"].as_f64().unwrap()
    };
    assert_eq!(tol("first_bianchi"), 1e-10);
    assert_eq!(tol("contracted_bianchi"), 1e-9);
    assert_eq!(tol("christoffel_fd"), 1e-5);
    for p in r["points"].as_array().unwrap() {
        // vacuum
        assert!(p["scalar"].as_f64().unwrap().abs() < 1e-12);
        assert_eq!(p["signature"], serde_json::json!([3, 1]));
    }
}

#[test]
fn explicit_points_are_echoed() {
    let r = report(&["curvature", "--catalog", "schwarzschild", "--point", "0,4,pi/2,0", "--point", "1,6,1,2", "--quiet"]);
    assert_eq!(r["config"]["sampled"], false);
    let coords: Vec<Vec<f64>> = r["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["coords"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect())
        .collect();
    assert_eq!(coords, vec![vec![0.0, 4.0, std::f64::consts::FRAC_PI_2, 0.0], vec![1.0, 6.0, 1.0, 2.0]]);
}

#[test]
fn classification_reports_the_expected_type() {
    let r = report(&["classify", "--catalog", "pp_wave", "--points", "2", "--observer", "0,1,0,0", "--expect-type", "N", "--quiet"]);
    assert_eq!(r["pass"], Value::Bool(true));
    let d = report(&["classify", "--catalog", "de_sitter_static", "--points", "2", "--expect-type", "O", "--quiet"]);
    assert_eq!(d["pass"], Value::Bool(true));
}

#[test]
fn summary_goes_to_stderr_unless_quiet() {
    let loud = weylkit(&["curvature", "--catalog", "minkowski", "--points", "1"]);
    let text = String::from_utf8_lossy(&loud.stderr);
    assert!(text.starts_with("weylkit curvature: minkowski at 1 point(s)"), "{text}");
    assert!(text.trim_end().ends_with("PASS"));
    let quiet = weylkit(&["curvature", "--catalog", "minkowski", "--points", "1", "--quiet"]);
    assert!(quiet.stderr.is_empty());
    assert_eq!(loud.stdout, quiet.stdout);
}

//! End-to-end runs of the command-line binary against temp directories.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_cee")
}

fn tmpdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cee-cli-test-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

#[test]
fn covext_ar1_fixture() {
    let dir = tmpdir("covext");
    let data = dir.join("cov.json");
    write(&data, r#"{"c": [0.5, 0.3]}"#);
    let out = dir.join("out");
    let res = run(&[
        "covext",
        "--data",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let solution: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("solution.json")).unwrap()).unwrap();
    let a = solution["a"].as_array().unwrap();
    assert!((a[0].as_f64().unwrap() + 0.3).abs() < 1e-10);
    assert!((a[1].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let rho = solution["rho"].as_f64().unwrap();
    assert!((rho - 0.91_f64.sqrt()).abs() < 1e-10);
    assert!(out.join("frequency_response.csv").exists());
    assert!(out.join("pole_trajectory.csv").exists());
    assert!(out.join("singular_values.csv").exists());
}

#[test]
fn covext_is_deterministic() {
    let dir = tmpdir("determinism");
    let data = dir.join("cov.json");
    write(&data, r#"{"c": [0.5, 0.35, 0.2, 0.05], "raw": false}"#);
    let out1 = dir.join("a");
    let out2 = dir.join("b");
    for out in [&out1, &out2] {
        let res = run(&[
            "covext",
            "--data",
            data.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "7",
        ]);
        assert!(res.status.success());
    }
    for name in [
        "solution.json",
        "frequency_response.csv",
        "pole_trajectory.csv",
        "singular_values.csv",
    ] {
        let a = fs::read(out1.join(name)).unwrap();
        let b = fs::read(out2.join(name)).unwrap();
        assert_eq!(a, b, "artifact {name} differs between identical runs");
    }
}

#[test]
fn check_roundtrips_solution_files() {
    let dir = tmpdir("roundtrip");
    let data = dir.join("cov.json");
    write(&data, r#"{"c": [0.5, 0.3, 0.09, 0.027]}"#);
    let out = dir.join("out");
    let res = run(&[
        "covext",
        "--data",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--prior",
        "0.125,0.6,1.2,1",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let res = run(&["check", "--data", out.join("solution.json").to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(res.status.success(), "{stdout}");
    assert!(stdout.contains("[ok]"));
    assert!(!stdout.contains("MISMATCH"));
}

#[test]
fn check_validates_problem_files() {
    let dir = tmpdir("check");
    let problem = dir.join("problem.json");
    write(
        &problem,
        r#"{"ell": 1, "nodes": [
            {"re": 0.0, "im": 0.0, "multiplicity": 2,
             "jet": [{"re": 0.5, "im": 0.0}, {"re": 0.2, "im": 0.0}]},
            {"re": 0.4, "im": 0.5, "multiplicity": 1,
             "jet": [{"re": 0.45, "im": 0.1}]}
        ]}"#,
    );
    let res = run(&["check", "--data", problem.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(res.status.success(), "{stdout}");
    assert!(stdout.contains("feasible"));
    assert!(stdout.contains("added conjugate partner"));
}

#[test]
fn infeasible_data_exits_with_code_two() {
    let dir = tmpdir("infeasible");
    let data = dir.join("cov.json");
    write(&data, r#"{"c": [0.5, 1.5]}"#);
    let res = run(&["covext", "--data", data.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2), "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn unreadable_input_exits_with_code_four() {
    let res = run(&["covext", "--data", "/nonexistent/path.json"]);
    assert_eq!(res.status.code(), Some(4));
}

#[test]
fn interp_solves_problem_json() {
    let dir = tmpdir("interp");
    let problem = dir.join("problem.json");
    // jets of f = (1/2)(1 + 0.3 z)/(1 - 0.3 z) at 0 (order 2) and 0.5
    write(
        &problem,
        r#"{"ell": 1, "nodes": [
            {"re": 0.0, "im": 0.0, "multiplicity": 2,
             "jet": [{"re": 0.5, "im": 0.0}, {"re": 0.3, "im": 0.0}]},
            {"re": 0.5, "im": 0.0, "multiplicity": 1,
             "jet": [{"re": 0.6764705882352942, "im": 0.0}]}
        ]}"#,
    );
    let out = dir.join("out");
    let res = run(&[
        "interp",
        "--data",
        problem.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--prior",
        "0,0,1",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let solution: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("solution.json")).unwrap()).unwrap();
    // data comes from a degree-1 function: P has numerical degree 1
    assert_eq!(solution["numerical_degree"].as_u64().unwrap(), 1);
}

#[test]
fn mimo_solves_raw_lags() {
    let dir = tmpdir("mimo");
    let data = dir.join("lags.json");
    // exact lags of a 2x2 order-1 system computed by the library
    write(
        &data,
        r#"{"lags": [
            [[1.57781115980472886, 0.62571160963443917], [0.62571160963443917, 0.97271777979173479]],
            [[0.25299107099750184, 0.02787054394771436], [0.10882292490009531, 0.26052975345579849]]
        ]}"#,
    );
    let out = dir.join("out");
    let res = run(&[
        "mimo",
        "--data",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--prior",
        "max-entropy",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let solution: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("solution.json")).unwrap()).unwrap();
    assert_eq!(solution["kind"].as_str().unwrap(), "matrix");
    assert!(out.join("frequency_response.csv").exists());
}

#[test]
fn shape_benchmark_design() {
    let dir = tmpdir("shape");
    let plant = dir.join("plant.json");
    // z (z - 1.1)(z^2 + 1.21) expanded: -1.331 z + 1.21 z^2 - 1.1 z^3 + z^4;
    // numerator (z - 1.1 e^(+-19 pi i/20)) expanded
    write(
        &plant,
        r#"{
            "gamma": 5.0,
            "plant_numerator": [1.2100000000000002, 2.1729068461942635, 1.0],
            "plant_denominator": [0.0, -1.331, 1.21, -1.1, 1.0],
            "spectral_zeros": [
                {"re": 0.10246747076287869, "im": 0.9746295424982859},
                {"re": 0.10246747076287869, "im": -0.9746295424982859},
                {"re": 0.0, "im": 0.97},
                {"re": 0.0, "im": -0.97},
                {"re": 0.0, "im": 0.0},
                {"re": -0.1, "im": 0.0}
            ]
        }"#,
    );
    let out = dir.join("out");
    let res = run(&[
        "shape",
        "--data",
        plant.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let design: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("design.json")).unwrap()).unwrap();
    let c_den = design["c_denominator"].as_array().unwrap();
    assert!((c_den[2].as_f64().unwrap() - 1.059).abs() < 1e-3);
    assert!(design["h_inf"].as_f64().unwrap() < 5.0);
    assert!(design["band_low_peak_db"].as_f64().unwrap() <= -1.0);
    assert!(design["band_high_peak_db"].as_f64().unwrap() <= 0.5);
}

#[test]
fn three_simulated_and_reduce_chain() {
    let dir = tmpdir("three-reduce");
    let filter = dir.join("filter.json");
    // degree-3 filter with one weak zero/pole pair
    write(
        &filter,
        r#"{"sigma": [0.0072, 0.154, -0.67, 1.0],
            "a": [0.018, 0.24, -0.83, 1.0],
            "rho": 0.7}"#,
    );
    let bank = dir.join("bank.json");
    write(
        &bank,
        r#"{"nodes": [
            {"re": 0.0, "im": 0.0, "multiplicity": 2},
            {"re": 0.6, "im": 0.0},
            {"re": -0.6, "im": 0.0}
        ]}"#,
    );
    let out = dir.join("out");
    let res = run(&[
        "three",
        "--simulate",
        filter.to_str().unwrap(),
        "--samples",
        "60000",
        "--bank",
        bank.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "3",
        "--prior",
        "0.0072,0.154,-0.67,1",
        "--grid-points",
        "64",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(out.join("spectrum.csv").exists());

    // the solution file feeds the reducer
    let out2 = dir.join("reduced");
    let res = run(&[
        "reduce",
        "--data",
        out.join("solution.json").to_str().unwrap(),
        "--out",
        out2.to_str().unwrap(),
        "--rank-tol",
        "1e-2",
        "--grid-points",
        "32",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(out2.join("comparison.csv").exists());
    assert!(out2.join("plan.json").exists());
}

#[test]
fn pole_trajectory_endpoints_match_solution_roots() {
    let dir = tmpdir("trajectory");
    let data = dir.join("cov.json");
    write(&data, r#"{"c": [0.5, 0.3, 0.09, 0.027]}"#);
    let out = dir.join("out");
    let res = run(&[
        "covext",
        "--data",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--prior",
        "0.125,0.6,1.2,1",
    ]);
    assert!(res.status.success());
    let csv = fs::read_to_string(out.join("pole_trajectory.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    // first samples sit at the prior's spectral zeros (lambda = 0)
    let sigma_roots = [-0.5, 0.5, -0.5]; // roots of z^3 + 1.2 z^2 + 0.6 z + 0.125
    let _ = sigma_roots;
    let start: Vec<&Vec<f64>> = rows.iter().filter(|r| r[0] == 0.0).collect();
    assert_eq!(start.len(), 3);
    // endpoints agree with the recovered denominator's roots
    let solution: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("solution.json")).unwrap()).unwrap();
    let a: Vec<f64> = solution["a"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let ends: Vec<&Vec<f64>> = rows.iter().filter(|r| r[0] == 1.0).collect();
    assert_eq!(ends.len(), 3);
    for row in ends {
        let z = num_complex::Complex64::new(row[2], row[3]);
        let mut val = num_complex::Complex64::new(0.0, 0.0);
        for (k, c) in a.iter().enumerate() {
            val += c * z.powu(k as u32);
        }
        assert!(val.norm() < 1e-8, "endpoint {z} is not a root ({val})");
    }
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn phasemix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phasemix"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = phasemix(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn error_json(out: &Output) -> Value {
    assert!(!out.status.success());
    serde_json::from_slice(&out.stderr).expect("stderr is one JSON object")
}

struct Row {
    t1: f64,
    t2: f64,
    region: String,
    value: f64,
}

fn grid(text: &str) -> Vec<Row> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next(), Some("t1,t2,region,value"));
    lines
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            Row {
                t1: c[0].parse().unwrap(),
                t2: c[1].parse().unwrap(),
                region: c[2].to_string(),
                value: c[3].parse().unwrap(),
            }
        })
        .collect()
}

fn example(name: &str, extra: &[&str]) -> TempDir {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let mut args = vec!["example", name, "--out", out];
    args.extend(extra);
    ok(&args);
    dir
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap()
}

#[test]
fn exponential_grid_is_the_product_mixture() {
    let dir = example("exponential", &[]);
    // regime 2 has probability 0.4 at state 1 and rates (0.5, 0.75)
    let (p, a, b) = (0.4, [1.0, 2.0], [0.5, 0.75]);
    let rows = grid(&read(&dir.path().join("density.csv")));
    for r in &rows {
        match r.region.as_str() {
            "ac1" | "ac2" => {
                let want = p * b[0] * b[1] * (-b[0] * r.t1 - b[1] * r.t2).exp()
                    + (1.0 - p) * a[0] * a[1] * (-a[0] * r.t1 - a[1] * r.t2).exp();
                assert!(
                    (r.value - want).abs() < 1e-12,
                    "({}, {}): {} vs {want}",
                    r.t1,
                    r.t2,
                    r.value
                );
            }
            _ => assert!(
                r.value.abs() < 1e-12,
                "{} at ({}, {})",
                r.region,
                r.t1,
                r.t2
            ),
        }
    }
}

#[test]
fn marshall_olkin_diagonal_is_the_common_shock_density() {
    let dir = example("marshall-olkin", &[]);
    let (p, a, b) = (0.4, [1.0, 2.0, 0.5], [0.5, 0.75, 0.25]);
    let text = read(&dir.path().join("diagonal.csv"));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("u,value"));
    let mut count = 0;
    for l in lines {
        let (u, v) = l.split_once(',').unwrap();
        let (u, v): (f64, f64) = (u.parse().unwrap(), v.parse().unwrap());
        let want = p * b[2] * (-(b[0] + b[1] + b[2]) * u).exp()
            + (1.0 - p) * a[2] * (-(a[0] + a[1] + a[2]) * u).exp();
        assert!((v - want).abs() < 1e-12, "{u}: {v} vs {want}");
        count += 1;
    }
    assert_eq!(count, 80);
}

#[test]
fn alive_filter_in_the_grid_header() {
    let dir = example("birth-death", &["--psi", "0.5", "--t", "10"]);
    let text = read(&dir.path().join("psi0.5_t10_alive.csv"));
    let values: Vec<f64> = text.lines().nth(1).unwrap()[1..]
        .split_whitespace()
        .skip(2)
        .map(|x| x.parse().unwrap())
        .collect();
    let want = [0.0245, 0.0468, 0.0381];
    for (x, w) in values.iter().zip(want) {
        assert!(
            (x - w).abs() < 5e-4,
            "alpha = {values:?}, expected {want:?}"
        );
    }
}

#[test]
fn birth_death_example_writes_every_case() {
    let dir = example("birth-death", &["--i", "1"]);
    for psi in ["0.5", "2"] {
        assert!(dir.path().join(format!("model_psi{psi}.json")).exists());
        for t in ["0", "10"] {
            for file in ["state1", "alive", "marginals"] {
                let path = dir.path().join(format!("psi{psi}_t{t}_{file}.csv"));
                assert!(path.exists(), "{}", path.display());
            }
        }
    }
    let summary: Value = serde_json::from_str(&read(&dir.path().join("summary.json"))).unwrap();
    let start: Vec<f64> = serde_json::from_value(summary["psi2_t0"]["alpha"].clone()).unwrap();
    assert!((start.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

fn model_file(dir: &TempDir, name: &str) -> String {
    let d = example(name, &[]);
    let target = dir.path().join(format!("{name}.json"));
    fs::copy(d.path().join("model.json"), &target).unwrap();
    target.to_str().unwrap().to_string()
}

#[test]
fn two_by_two_grid_row_counts() {
    let dir = TempDir::new().unwrap();
    let model = model_file(&dir, "marshall-olkin");
    let apart = grid(&ok(&[
        "bivariate-grid",
        "--model",
        &model,
        "--t1",
        "0.5:0.6",
        "--t2",
        "1:1.1",
        "--step",
        "0.1",
    ]));
    let regions: Vec<&str> = apart.iter().map(|r| r.region.as_str()).collect();
    assert_eq!(regions, ["ac2", "ac2", "ac2", "ac2", "atom"]);
    let shared = grid(&ok(&[
        "bivariate-grid",
        "--model",
        &model,
        "--t1",
        "1:1.1",
        "--t2",
        "1:1.1",
        "--step",
        "0.1",
    ]));
    let regions: Vec<&str> = shared.iter().map(|r| r.region.as_str()).collect();
    assert_eq!(
        regions,
        ["ac1", "ac2", "ac1", "ac1", "singular", "singular", "atom"]
    );
    // row-major with t1 outer
    assert_eq!((shared[1].t1, shared[1].t2), (1.0, 1.1));
}

#[test]
fn output_is_byte_identical_across_runs_and_threads() {
    let dir = TempDir::new().unwrap();
    let model = model_file(&dir, "marshall-olkin");
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_phasemix"))
            .args(["bivariate-grid", "--model", &model, "--step", "0.25"])
            .env("PHASEMIX_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    let first = run("1");
    assert_eq!(first, run("4"));
    assert_eq!(first, run("1"));
}

#[test]
fn grid_mass_adds_up_to_one() {
    let dir = TempDir::new().unwrap();
    let model = model_file(&dir, "marshall-olkin");
    let h = 0.04;
    // cell midpoints
    let rows = grid(&ok(&[
        "bivariate-grid",
        "--model",
        &model,
        "--t1",
        "0.02:12",
        "--t2",
        "0.02:12",
        "--step",
        "0.04",
    ]));
    let total: f64 = rows
        .iter()
        .map(|r| match r.region.as_str() {
            "ac1" | "ac2" => r.value * h * h,
            "singular" => r.value * h,
            _ => r.value,
        })
        .sum();
    assert!((total - 1.0).abs() < 0.02, "total mass {total}");
}

#[test]
fn simulate_is_determined_by_the_seed() {
    let dir = TempDir::new().unwrap();
    let model = model_file(&dir, "marshall-olkin");
    let args = [
        "simulate", "--model", &model, "--times", "0.5,0.7", "--paths", "20000", "--seed", "5",
    ];
    let first = ok(&args);
    assert_eq!(first, ok(&args));
    let est: Value = serde_json::from_str(&first).unwrap();
    for key in ["estimate", "stderr", "n_paths", "seed"] {
        assert!(est.get(key).is_some(), "{key} missing from {first}");
    }
    assert_eq!(est["seed"], 5);
    let other = ok(&[
        "simulate", "--model", &model, "--times", "0.5,0.7", "--paths", "20000", "--seed", "6",
    ]);
    assert_ne!(first, other);
    // agrees with the closed form
    let exact = ok(&["multivariate", "--model", &model, "--times", "0.5,0.7"]);
    let exact: f64 = exact
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    let (x, se) = (
        est["estimate"].as_f64().unwrap(),
        est["stderr"].as_f64().unwrap(),
    );
    assert!((x - exact).abs() < 4.0 * se, "{x} ± {se} vs {exact}");
}

#[test]
fn dumped_paths_are_path_records() {
    let dir = TempDir::new().unwrap();
    let model = model_file(&dir, "exponential");
    let paths = dir.path().join("paths.json");
    ok(&[
        "simulate",
        "--model",
        &model,
        "--stat",
        "diag-mass",
        "--paths",
        "100",
        "--dump-paths",
        "5",
        "--paths-out",
        paths.to_str().unwrap(),
    ]);
    let records: Vec<Value> = serde_json::from_str(&read(&paths)).unwrap();
    assert_eq!(records.len(), 5);
    for r in &records {
        assert_eq!(r["events"][0][0], 0.0);
        assert_eq!(r["events"][0][1], 1);
        assert!(r["horizon"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn validate_accepts_examples_and_rejects_leaks() {
    let dir = TempDir::new().unwrap();
    let model = model_file(&dir, "exponential");
    let report: Value = serde_json::from_str(&ok(&["validate", "--model", &model])).unwrap();
    assert_eq!(report["violations"], Value::Array(vec![]));

    let leaking = dir.path().join("leak.json");
    fs::write(
        &leaking,
        r#"{"n": 2, "m": 1, "Q": [[[-2, 1, 1], [0.5, -1.5, 1], [0, 0, 0]]],
            "pi0": [1, 0, 0], "S0": [[1, 1, 1]], "gamma": [[2, 3]]}"#,
    )
    .unwrap();
    let out = phasemix(&["validate", "--model", leaking.to_str().unwrap()]);
    let err = error_json(&out);
    assert_eq!(err["error"]["kind"], "inadmissible_model");
    assert_eq!(err["error"]["violations"][0]["kind"], "not_closed");
    // other commands refuse the model too
    let out = phasemix(&["univariate", "--model", leaking.to_str().unwrap()]);
    assert_eq!(error_json(&out)["error"]["kind"], "inadmissible_model");
}

#[test]
fn errors_are_json_with_nonzero_exit() {
    let out = phasemix(&["example", "poisson"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["kind"], "usage");

    let out = phasemix(&["example", "exponential", "--psi", "2"]);
    assert_eq!(error_json(&out)["error"]["kind"], "invalid_input");

    let out = phasemix(&["univariate"]);
    assert_eq!(error_json(&out)["error"]["kind"], "usage");

    let dir = TempDir::new().unwrap();
    let broken = dir.path().join("broken.json");
    fs::write(&broken, "{\"n\": 1}").unwrap();
    let out = phasemix(&["univariate", "--model", broken.to_str().unwrap()]);
    assert_eq!(error_json(&out)["error"]["kind"], "invalid_input");

    let model = model_file(&dir, "exponential");
    let out = phasemix(&["bivariate-grid", "--model", &model, "--step", "0"]);
    assert_eq!(error_json(&out)["error"]["kind"], "invalid_input");
    let out = phasemix(&[
        "bivariate-grid",
        "--model",
        &model,
        "--t",
        "1",
        "--t1",
        "0:2",
    ]);
    assert_eq!(error_json(&out)["error"]["kind"], "invalid_time");
}

#[test]
fn limits_refuse_a_repeated_spectrum() {
    let dir = example("birth-death", &["--psi", "0.5", "--t", "0"]);
    let model = dir.path().join("model_psi0.5.json");
    let out = phasemix(&["limits", "--model", model.to_str().unwrap()]);
    assert_eq!(error_json(&out)["error"]["kind"], "unsupported_spectrum");
}

#[test]
fn limits_of_a_single_chain() {
    let dir = TempDir::new().unwrap();
    let model = dir.path().join("chain.json");
    // quasi-stationary law of 1 -> 2 -> Δ with rates 2 and 1 puts all mass on 2
    fs::write(
        &model,
        r#"{"n": 2, "m": 1, "Q": [[[-2, 2, 0], [0, -1, 1], [0, 0, 0]]],
            "pi0": [1, 0, 0], "S0": [[1, 1, 1]]}"#,
    )
    .unwrap();
    let v: Value =
        serde_json::from_str(&ok(&["limits", "--model", model.to_str().unwrap()])).unwrap();
    let state: Vec<f64> = serde_json::from_value(v["state_limit"].clone()).unwrap();
    assert!(
        state[0].abs() < 1e-12 && (state[1] - 1.0).abs() < 1e-12,
        "{state:?}"
    );
    assert_eq!(v["switching_limit"][0][0], 1.0);
}

#[test]
fn univariate_and_multivariate_outputs() {
    let dir = TempDir::new().unwrap();
    let model = model_file(&dir, "exponential");
    let text = ok(&[
        "univariate",
        "--model",
        &model,
        "--range",
        "0:1",
        "--step",
        "0.5",
    ]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], "s,survival,density");
    let v: Value = serde_json::from_str(&ok(&[
        "univariate",
        "--model",
        &model,
        "--format",
        "json",
        "--moments",
        "1",
    ]))
    .unwrap();
    assert_eq!(v["atom"], 0.0);
    assert_eq!(v["moments"].as_array().unwrap().len(), 1);
    assert_eq!(v["points"].as_array().unwrap().len(), 81);

    let text = ok(&[
        "multivariate",
        "--model",
        &model,
        "--times",
        "1,2",
        "--times",
        "1,1",
    ]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "s1,s2,survival,density");
    // independent exponentials within each regime
    let row: Vec<f64> = lines[1].split(',').map(|x| x.parse().unwrap()).collect();
    let want = 0.4 * (-0.5f64 - 1.5).exp() + 0.6 * (-1.0f64 - 4.0).exp();
    assert!((row[2] - want).abs() < 1e-13);
    // the joint density is not defined at ties
    assert!(lines[2].ends_with(','));
}

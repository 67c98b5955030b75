use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hazard-odds")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn convert_hazard_ratio_two() {
    let out = run(&["convert", "--hr", "2"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["odds"], "2:1");
    assert!((v["p_before"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-15);
    assert!((v["p_after"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(v["percent_before"], 67);
}

#[test]
fn convert_probability_back_to_ratio() {
    let out = run(&["convert", "--prob", "0.75"]);
    assert_eq!(code(&out), 0);
    assert!((json(&out)["hr"].as_f64().unwrap() - 3.0).abs() < 1e-12);
    let half = json(&run(&["convert", "--prob", "0.5"]));
    assert_eq!(half["hr"].as_f64().unwrap(), 1.0);
    assert_eq!(half["odds"], "1:1");
}

#[test]
fn convert_usage_errors() {
    assert_eq!(code(&run(&["convert", "--hr", "2", "--prob", "0.5"])), 2);
    assert_eq!(code(&run(&["convert"])), 2);
    assert_eq!(code(&run(&["convert", "--hr", "0"])), 2);
    assert_eq!(code(&run(&["convert", "--hr", "-1"])), 2);
    assert_eq!(code(&run(&["convert", "--prob", "1"])), 2);
}

#[test]
fn explain_sentence() {
    let out = run(&["explain", "--hr", "2", "--event", "heal"]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        String::from_utf8(out.stdout).unwrap().trim_end(),
        "The odds are roughly 2:1 (the probability is 67%) that you will heal before someone in the comparison group."
    );
}

#[test]
fn simulate_writes_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = run(&[
            "simulate", "--n-control", "5", "--n-treatment", "5", "--lambda", "2",
            "--baseline", "exp(rate=1)", "--seed", "7", "--out", path.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let summary = json(&out);
        assert_eq!(summary["seed"], 7);
        assert_eq!(summary["rows"], 10);
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("time,event,arm"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 10);
    assert_eq!(rows.iter().filter(|r| r.ends_with(",0")).count(), 5);
    assert!(rows.iter().all(|r| r.split(',').nth(1) == Some("1")));

    let other = run(&[
        "simulate", "--n-control", "5", "--n-treatment", "5", "--lambda", "2",
        "--baseline", "exp(rate=1)", "--seed", "8",
    ]);
    assert_ne!(String::from_utf8(other.stdout).unwrap(), text);
}

#[test]
fn simulate_censoring_and_parse_errors() {
    let out = run(&[
        "simulate", "--n-control", "50", "--n-treatment", "50", "--lambda", "1",
        "--baseline", "weibull(shape=2,scale=1)", "--censor", "admin(cutoff=0.5)", "--seed", "3",
    ]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for row in text.lines().skip(1) {
        let fields: Vec<&str> = row.split(',').collect();
        let t: f64 = fields[0].parse().unwrap();
        assert!(t <= 0.5);
        assert_eq!(fields[1] == "1", t < 0.5);
    }

    let bad = run(&[
        "simulate", "--n-control", "5", "--n-treatment", "5", "--lambda", "2",
        "--baseline", "weibull(shape=0,scale=1)", "--seed", "1",
    ]);
    assert_eq!(code(&bad), 2);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("position"));
    let missing_seed = run(&["simulate", "--n-control", "5", "--n-treatment", "5", "--lambda", "2", "--baseline", "exp(rate=1)"]);
    assert_eq!(code(&missing_seed), 2);
}

#[test]
fn fit_four_subjects() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "four.csv", "time,event,arm\n1,1,1\n2,1,0\n3,1,1\n4,1,0\n");
    let out = run(&["fit", "--in", &csv]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let root = (1.0 + 17f64.sqrt()) / 2.0;
    assert!((v["hr"].as_f64().unwrap() - root).abs() < 1e-8);
    assert!((v["beta_hat"].as_f64().unwrap() - root.ln()).abs() < 1e-8);
    assert!((v["loglik0"].as_f64().unwrap() + 24f64.ln()).abs() < 1e-12);
    assert_eq!(v["converged"], true);
    assert_eq!(v["ties"], "breslow");
    let (lo, hi) = (v["ci_low"].as_f64().unwrap(), v["ci_high"].as_f64().unwrap());
    assert!(lo < root && root < hi);

    let efron = json(&run(&["fit", "--in", &csv, "--ties", "efron"]));
    assert!((efron["beta_hat"].as_f64().unwrap() - v["beta_hat"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn fit_errors() {
    let dir = tempfile::tempdir().unwrap();
    let constant = write(dir.path(), "c.csv", "time,event,arm\n1,1,1\n2,1,1\n3,1,1\n");
    assert_eq!(code(&run(&["fit", "--in", &constant])), 3);
    let one_sided = write(dir.path(), "o.csv", "time,event,arm\n1,1,1\n2,1,1\n3,0,0\n");
    assert_eq!(code(&run(&["fit", "--in", &one_sided])), 3);
    let malformed = write(dir.path(), "m.csv", "time,event,arm\n1,2,1\n");
    assert_eq!(code(&run(&["fit", "--in", &malformed])), 2);
    assert_eq!(code(&run(&["fit", "--in", "/nonexistent/file.csv"])), 2);
}

#[test]
fn km_and_concordance() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "d.csv", "time,event,arm\n1,1,1\n2,1,1\n3,1,0\n4,1,0\n");
    let km = json(&run(&["km", "--in", &csv]));
    assert_eq!(km["values"], serde_json::json!([0.75, 0.5, 0.25, 0.0]));

    let c = json(&run(&["concordance", "--in", &csv]));
    assert_eq!(c["c"], 1.0);
    assert_eq!(c["comparable"], 4);

    let scores = write(dir.path(), "s.txt", "4\n3\n2\n1\n");
    let harrell = json(&run(&["concordance", "--in", &csv, "--scores", &scores]));
    assert_eq!(harrell["c"], 1.0);
    assert_eq!(harrell["comparable"], 6);
    assert_eq!(harrell["pair_rule"], "harrell_standard");
}

#[test]
fn verify_default_grid_passes() {
    let out = run(&["verify", "--seed", "20040801", "--format", "json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let reports = json(&out);
    let reports = reports.as_array().unwrap();
    assert_eq!(reports.len(), 25);
    for r in reports {
        assert_eq!(r["pass"], true);
        assert_eq!(r["seed"], 20040801);
        let diff = r["quadrature_p_after"].as_f64().unwrap() - r["analytic_p_after"].as_f64().unwrap();
        assert!(diff.abs() < 1e-8);
    }
}

#[test]
fn verify_small_run_and_broken_assumption() {
    let out = run(&["verify", "--lambdas", "1", "--pairs", "1000", "--seed", "5"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("5/5 cells pass"));

    let broken = run(&["verify", "--lambdas", "2", "--baselines", "exp(rate=1)", "--seed", "5", "--break-ph"]);
    assert_eq!(code(&broken), 1);

    assert_eq!(code(&run(&["verify", "--lambdas", "1"])), 2);
    assert_eq!(code(&run(&["verify", "--seed", "1", "--lambdas", "0"])), 2);
}

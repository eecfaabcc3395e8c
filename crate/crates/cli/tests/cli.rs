use std::f64::consts::E;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn spec(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs").join(name)
}

fn ndde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ndde"))
        .args(args)
        .env_remove("NDDE_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn rows_with<'a>(table: &'a str, verdict: &str) -> Vec<&'a str> {
    table
        .lines()
        .skip(1)
        .filter(|l| l.split_whitespace().nth(1) == Some(verdict))
        .collect()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn check_stable_example_exits_zero() {
    let o = ndde(&["check", spec("example1.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(rows_with(&out, "Satisfied").len() >= 6, "{out}");
}

#[test]
fn check_long_delay_exits_two_with_nothing_satisfied() {
    let o = ndde(&["check", spec("example1_long_delay.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(rows_with(&stdout(&o), "Satisfied").is_empty());
}

#[test]
fn ill_posed_equation_is_all_not_applicable() {
    let o = ndde(&["check", spec("ill_posed.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), rows_with(&out, "NotApplicable").len());
    assert!(stderr(&o).contains("well_posed\":false"), "{}", stderr(&o));
}

#[test]
fn malformed_spec_reports_line_and_column() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "bad.json", "{\n  \"t0\": 0,\n  \"neutral\": [\n}\n");
    let o = ndde(&["check", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));

    let p = write(&dir, "extra.json", r#"{"t0": 0, "delays": []}"#);
    let o = ndde(&["check", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("delays"), "{}", stderr(&o));

    let p = write(
        &dir,
        "neg.json",
        r#"{"t0": 0, "delay": [{"b": {"kind": "constant", "c": 1}, "h": {"kind": "lag", "tau": -1}}]}"#,
    );
    assert_eq!(ndde(&["check", p.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(ndde(&["check"]).status.code(), Some(1));
    assert_eq!(ndde(&["check", "x.json", "--criteria", "thm9"]).status.code(), Some(1));
    assert_eq!(ndde(&["--help"]).status.code(), Some(0));
}

#[test]
fn check_writes_json_and_csv() {
    let dir = TempDir::new().unwrap();
    let json = dir.path().join("v.json");
    let o = ndde(&[
        "check",
        spec("example1.json").to_str().unwrap(),
        "--criteria",
        "p8,cor2b-b",
        "--out",
        json.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let verdicts = v["verdicts"].as_array().unwrap();
    assert_eq!(verdicts.len(), 2);
    assert_eq!(verdicts[0]["criterion"], "p8");
    assert_eq!(verdicts[0]["verdict"], "Satisfied");
    assert_eq!(verdicts[1]["verdict"], "Violated");
    assert_eq!(v["exponentially_stable"], true);

    let csv = dir.path().join("v.csv");
    ndde(&[
        "check",
        spec("example1.json").to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("criterion,verdict,claim,detail\n"));
    assert_eq!(text.lines().count(), 1 + ndde::criteria::CriterionId::ALL.len());
}

#[test]
fn simulate_writes_trajectory_and_sidecar_deterministically() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str| {
        let csv = dir.path().join(name);
        let o = ndde(&[
            "simulate",
            spec("forced.json").to_str().unwrap(),
            "--t-end",
            "5",
            "--dt",
            "0.01",
            "--out",
            csv.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let side: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(csv.with_extension("json")).unwrap()).unwrap();
        (std::fs::read_to_string(&csv).unwrap(), side)
    };
    let (csv, side) = run("a.csv");
    let (csv2, side2) = run("b.csv");
    assert_eq!(csv, csv2);
    assert_eq!(side["digest"], side2["digest"]);
    assert!(csv.starts_with("t,x,xdot\n"));
    assert_eq!(csv.lines().count(), 1 + 501);
    // history phi = cos, so x(0) = 1
    let first: Vec<f64> = csv
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((first[1] - 1.0).abs() < 1e-12);
    assert_eq!(side["points"], 501);
    assert!(side["decay"]["classification"].is_string());
}

#[test]
fn simulate_geometric_grid_for_the_pantograph() {
    let o = ndde(&[
        "simulate",
        spec("pantograph.json").to_str().unwrap(),
        "--t-end",
        "100",
        "--geometric",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["meta"]["grid"]["kind"], "geometric");
}

#[test]
fn threshold_on_a_criterion_oracle() {
    let o = ndde(&[
        "threshold",
        spec("example1.json").to_str().unwrap(),
        "--param",
        "tau",
        "--range",
        "1:3",
        "--oracle",
        "cor1+cor2b-b",
        "--tol",
        "1e-9",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let t: f64 = stdout(&o).trim().parse().unwrap();
    assert!((t - (1.0 + 3.0 / E)).abs() < 1e-8, "{t}");
}

#[test]
fn threshold_without_a_bracket_fails() {
    let o = ndde(&[
        "threshold",
        spec("example1.json").to_str().unwrap(),
        "--param",
        "tau",
        "--range",
        "0.1:0.2",
        "--oracle",
        "p8",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bracket"), "{}", stderr(&o));
    let o = ndde(&[
        "threshold",
        spec("example1.json").to_str().unwrap(),
        "--param",
        "delay.3.h.tau",
        "--range",
        "0.1:0.2",
        "--oracle",
        "p8",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_rows_are_row_major_and_reproducible() {
    let path = spec("example1.json");
    let args = [
        "sweep",
        path.to_str().unwrap(),
        "--grid",
        "tau=0.1:3:30,sigma=0:3:30",
        "--oracle",
        "cor1+cor2b-b",
    ];
    let o = ndde(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out, stdout(&ndde(&args)));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "tau,sigma,cor1,cor2b-b");
    assert_eq!(lines.len(), 1 + 900);
    let row = |l: &str| -> (f64, f64, bool) {
        let f: Vec<&str> = l.split(',').collect();
        (
            f[0].parse().unwrap(),
            f[1].parse().unwrap(),
            f[2] == "Satisfied" || f[3] == "Satisfied",
        )
    };
    let (t0, s0, _) = row(lines[1]);
    let (t1, s1, _) = row(lines[2]);
    assert_eq!(t0, t1);
    assert!(s1 > s0);
    // The union fires exactly below 1 + 3/e, whatever sigma is.
    for l in &lines[1..] {
        let (tau, _, fired) = row(l);
        assert_eq!(fired, tau < 1.0 + 3.0 / E, "{l}");
    }
}

#[test]
fn sweep_defaults_to_every_criterion_and_can_simulate() {
    let o = ndde(&[
        "sweep",
        spec("example1.json").to_str().unwrap(),
        "--grid",
        "tau=0.5:4:3",
        "--simulate",
        "--t-end",
        "100",
        "--dt",
        "0.01",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let header: Vec<&str> = out.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 1 + ndde::criteria::CriterionId::ALL.len() + 1);
    assert_eq!(*header.last().unwrap(), "simulated");
    assert!(out.lines().nth(1).unwrap().ends_with("Decaying"));
    assert!(out.lines().nth(3).unwrap().ends_with("Growing"));
}

#[test]
fn sweep_rejects_oversized_grids() {
    let o = ndde(&[
        "sweep",
        spec("example1.json").to_str().unwrap(),
        "--grid",
        "tau=0:1:101,sigma=0:1:100",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("10100"), "{}", stderr(&o));
}

#[test]
fn reproduce_tables() {
    let o = ndde(&["reproduce", "example1", "--no-simulate"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let p2a = out.lines().find(|l| l.starts_with("P2a ")).unwrap();
    assert!(p2a.contains("2.4495"), "{p2a}");

    let dir = TempDir::new().unwrap();
    let json = dir.path().join("e2.json");
    let o = ndde(&["reproduce", "example2", "--out", json.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let rows: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[3]["empty"], true);
    assert!(rows[..3].iter().all(|r| r["union_better"] == true));
}

#[test]
fn thread_count_from_the_environment() {
    let run = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_ndde"))
            .args(["check", spec("example1.json").to_str().unwrap()])
            .env("NDDE_THREADS", v)
            .output()
            .unwrap()
    };
    assert_eq!(run("1").status.code(), Some(0));
    assert_eq!(run("many").status.code(), Some(1));
}

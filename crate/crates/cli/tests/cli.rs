use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nalgebra::{DMatrix, DVector};
use qwalk::coin::CoinPolicy;
use qwalk::dtqw::{StepOperator, WalkState};
use qwalk::graph::{FamilySpec, Graph};
use serde_json::Value;
use tempfile::tempdir;

fn qwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qwalk")).args(args).env_remove("QWALK_SEED").output().expect("run qwalk")
}

fn ok(args: &[&str]) -> String {
    let out = qwalk(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&ok(args)).unwrap()
}

fn report(v: &Value) -> &Value {
    &v["runs"][0]["report"]
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn graph_join_degrees() {
    let g = Graph::from_json(&ok(&["graph", "join", "k2c", "n=5"])).unwrap();
    assert_eq!(g.n(), 7);
    assert_eq!(g.degrees(), vec![5, 5, 4, 4, 4, 4, 4]);
}

#[test]
fn small_cycle_is_a_config_error() {
    let out = qwalk(&["graph", "cycle", "n=2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cycle requires n ≥ 3"));
}

#[test]
fn malformed_spec_names_the_field() {
    let out = qwalk(&["graph", "cycle", "m=4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("field `m`"));
}

#[test]
fn graph_round_trip() {
    let dir = tempdir().unwrap();
    let file = dir.path().join("g.json");
    ok(&["graph", "diamond", "n=2", "loops=true", "-o", path(&file)]);
    let first = Graph::from_json(&fs::read_to_string(&file).unwrap()).unwrap();
    let again = Graph::from_json(&ok(&["graph", &format!("@{}", path(&file))])).unwrap();
    assert_eq!(first.adjacency(), again.adjacency());
    let direct = FamilySpec::DiamondChain { diamonds: 2, loop_ends: true }.build().unwrap();
    assert_eq!(first.adjacency(), direct.adjacency());
}

#[test]
fn dtqw_k2c6_transfers_every_twelve_steps() {
    let v = json(&["dtqw", "-g", "k2c n=6", "--steps", "24"]);
    assert_eq!(report(&v)["pst_steps"], serde_json::json!([6, 18]));
    assert_eq!(report(&v)["strict_period"], 12);
}

#[test]
fn dtqw_all_dft_haar_period() {
    let v = json(&["dtqw", "-g", "k2k n=4", "-p", "table1:1", "-i", "haar:1", "--seed", "11"]);
    assert_eq!(report(&v)["strict_period"], 8);
}

#[test]
fn dtqw_csv_is_deterministic() {
    let dir = tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let args = |p: &Path| {
        vec!["--seed", "3", "dtqw", "-g", "k2c n=4", "-i", "haar:2", "--steps", "30", "-o"]
            .into_iter()
            .map(String::from)
            .chain([path(p).to_string()])
            .collect::<Vec<_>>()
    };
    ok(&args(&a).iter().map(String::as_str).collect::<Vec<_>>());
    ok(&args(&b).iter().map(String::as_str).collect::<Vec<_>>());
    let ca = fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(ca, fs::read(dir.path().join("b.csv")).unwrap());
    let text = String::from_utf8(ca).unwrap();
    assert!(text.starts_with("step,s0_v0,s0_v1,s1_v0,s1_v1\n"));
    assert_eq!(text.lines().count(), 32);
}

#[test]
fn seed_comes_from_the_environment() {
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_qwalk"));
        cmd.env_remove("QWALK_SEED");
        if let Some(s) = env {
            cmd.env("QWALK_SEED", s);
        }
        if let Some(s) = flag {
            cmd.args(["--seed", s]);
        }
        let out = cmd.args(["dtqw", "-g", "k2c n=3", "-i", "haar:1", "--steps", "5"]).output().unwrap();
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(run(Some("9"), None), run(None, Some("9")));
    assert_ne!(run(None, Some("9")), run(None, Some("10")));
    assert_eq!(run(Some("1"), Some("9")), run(None, Some("9")));
}

#[test]
fn config_values_yield_to_flags() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"command": "dtqw", "graph": "k2c n=6", "steps": 12, "init": "equal"}"#).unwrap();
    let v = json(&["--config", path(&cfg), "dtqw"]);
    assert_eq!(report(&v)["pst_steps"], serde_json::json!([6]));
    let v = json(&["--config", path(&cfg), "dtqw", "--steps", "24"]);
    assert_eq!(report(&v)["pst_steps"], serde_json::json!([6, 18]));

    let out = qwalk(&["--config", path(&cfg), "ctqw"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_port_list_and_inline_policy() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let s = 0.5f64.sqrt();
    fs::write(
        &cfg,
        format!(
            r#"{{"graph": "cycle n=4", "policy": "O2+{{\"0\": \"hadamard\"}}", "init": [[0, {s}, 0.0], [1, 0.0, {s}]], "steps": 4}}"#
        ),
    )
    .unwrap();
    let v = json(&["--config", path(&cfg), "dtqw"]);
    assert_eq!(v["runs"][0]["coin_state"][1][1], s);
}

#[test]
fn bad_config_reports_the_line() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, "{\n  \"graph\": \"cycle n=4\",\n  \"stesp\": 3\n}").unwrap();
    let out = qwalk(&["--config", path(&cfg), "dtqw"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn validation_failures_are_listed_together() {
    let out = qwalk(&["dtqw", "-g", "cycle n=4", "--steps", "0", "--lambda", "2", "-p", "O9"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    for field in ["steps:", "lambda:", "policy:"] {
        assert!(err.contains(field), "{err}");
    }
}

#[test]
fn unknown_flags_are_errors() {
    let out = qwalk(&["dtqw", "--stepz", "3"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_lists_every_flag() {
    let text = ok(&["dtqw", "--help"]);
    for flag in ["--graph", "--source", "--target", "--track", "--out", "--policy", "--init", "--steps", "--lambda"] {
        assert!(text.contains(flag), "{flag}");
    }
    let top = ok(&["--help"]);
    for cmd in ["graph", "dtqw", "ctqw", "decohere", "search", "robust", "interp"] {
        assert!(top.contains(cmd), "{cmd}");
    }
}

#[test]
fn ctqw_k2k9_period() {
    let v = json(&["ctqw", "-g", "k2k n=9"]);
    let period = v["report"]["period"].as_f64().unwrap();
    assert!((period - 2.0 * PI / 18f64.sqrt()).abs() < 1e-6, "{period}");
}

#[test]
fn ctqw_writes_series_and_spectrum() {
    let dir = tempdir().unwrap();
    let prefix = dir.path().join("ct");
    let spec = dir.path().join("spec.json");
    ok(&["ctqw", "-g", "cycle n=4", "--t-max", "1", "--track", "1", "-o", path(&prefix), "--spectrum", path(&spec)]);
    let csv = fs::read_to_string(dir.path().join("ct.csv")).unwrap();
    assert!(csv.starts_with("t,v0,v2,v1\n"));
    assert_eq!(csv.lines().count(), 102);
    let s: Value = serde_json::from_str(&fs::read_to_string(spec).unwrap()).unwrap();
    assert_eq!(s["values"].as_array().unwrap().len(), 4);
}

/// Final vertex distribution of the arc chain with transitions `|U_ba|²`.
fn markov_power(g: &Graph, steps: usize) -> Vec<f64> {
    let op = StepOperator::new(g, &CoinPolicy::O2).unwrap();
    let u = op.dense();
    let m = DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)].norm_sqr());
    let init = WalkState::equal_superposition(op.space(), 0).unwrap();
    let first = (&u * &init.amplitudes).map(|z| z.norm_sqr());
    let arcs: DVector<f64> = m.pow((steps - 1) as u32) * first;
    (0..g.n()).map(|v| op.space().ports(v).map(|a| arcs[a]).sum()).collect()
}

#[test]
fn full_dephasing_matches_the_markov_chain() {
    for (spec, n) in [("cycle n=4", FamilySpec::Cycle(4)), ("k2c n=3", FamilySpec::k2_join(FamilySpec::Cycle(3)))] {
        let v = json(&["decohere", "-g", spec, "--rates", "1", "--basis", "both", "--steps", "7"]);
        let got: Vec<f64> = serde_json::from_value(v["points"][0]["distribution"].clone()).unwrap();
        let want = markov_power(&n.build().unwrap(), 7);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12, "{spec}: {got:?} vs {want:?}");
        }
    }
}

#[test]
fn decohere_sweep_table() {
    let dir = tempdir().unwrap();
    let prefix = dir.path().join("d");
    ok(&["decohere", "-g", "k2c n=3", "--rates", "0,0.5,1", "--steps", "6", "-o", path(&prefix)]);
    let csv = fs::read_to_string(dir.path().join("d.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "p,v0,v1");
    let p0: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
    assert!(p0 > 1.0 - 1e-9);
}

#[test]
fn unstable_integration_is_a_numerical_failure() {
    let out = qwalk(&["decohere", "-g", "cycle n=4", "--time", "1000", "--dt", "1000", "--rates", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn search_records_are_schema_valid_and_resumable() {
    let dir = tempdir().unwrap();
    let file = dir.path().join("s.jsonl");
    let args = ["search", "--base", "4", "--max-new", "1", "--samples", "50", "-o", path(&file)];
    let printed = ok(&args);
    let text = fs::read_to_string(&file).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), printed.lines().count());
    assert!(!lines.is_empty());
    for line in &lines {
        let r: Value = serde_json::from_str(line).unwrap();
        assert!(r["key"].is_string());
        assert!(r["descriptor"]["attachments"].is_array());
        assert!(r["policy"].is_string());
        assert!(r["best_p"].is_f64());
        assert!(r["best_step"].is_u64());
        assert!(r["pst"].is_boolean());
        assert!(r["pst_steps"].is_array());
        assert!(r["frac_over_lambda"].is_f64());
    }
    // A second run finds every cell done and appends nothing.
    assert_eq!(ok(&args), printed);
    assert_eq!(fs::read_to_string(&file).unwrap(), text);

    let pst = ok(&["search", "--base", "4", "--max-new", "1", "--samples", "50", "-o", path(&file), "--pst-only"]);
    assert!(pst.lines().all(|l| l.contains("\"pst\":true")));
}

#[test]
fn search_output_ignores_worker_count() {
    let args = |w: &'static str| ["--workers", w, "search", "--base", "4", "--max-new", "1", "--samples", "40"];
    assert_eq!(ok(&args("1")), ok(&args("3")));
}

#[test]
fn robust_table() {
    let csv = ok(&["robust", "--ns", "4,6", "--deltas", "0", "--thetas", "0", "--random", "--runs", "20"]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n,perturbation,value,probability,runs");
    assert_eq!(lines.len(), 7);
    let p: f64 = lines[1].split(',').nth(3).unwrap().parse().unwrap();
    assert!((p - 1.0).abs() < 1e-9);
    assert_eq!(csv, ok(&["robust", "--ns", "4,6", "--deltas", "0", "--thetas", "0", "--random", "--runs", "20"]));
}

#[test]
fn interp_endpoints_transfer() {
    let csv = ok(&["interp", "--ns", "3,5", "--couplings", "0,1"]);
    let rows: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|p| (p - 1.0).abs() < 1e-9), "{rows:?}");
}

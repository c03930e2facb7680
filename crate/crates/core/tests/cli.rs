use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qworkbench")).args(args).output().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn maxcut_writes_result_trace_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mc");
    let o = qw(&["maxcut", "--nodes", "8", "--layers", "2", "--iters", "50", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));

    let r = json(&out.join("result.json"));
    assert_eq!(r["best_x"].as_array().unwrap().len(), 8);
    assert!(r["best_energy"].as_f64().unwrap() < 0.0);
    let first = &r["trace"][0];
    for key in ["iter", "cost", "energy", "elapsed_ms"] {
        assert!(first.get(key).is_some(), "trace entry lacks {key}");
    }
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("iter,cost,energy,best_energy,elapsed_ms"));

    let m = json(&out.join("manifest.json"));
    assert_eq!(m["subcommand"], "maxcut");
    assert_eq!(m["config"]["nodes"], 8);
    assert_eq!(m["seeds"], serde_json::json!([0]));
    assert_eq!(m["tool_version"], env!("CARGO_PKG_VERSION"));
    assert!(m["finished_unix"].as_f64().unwrap() >= m["started_unix"].as_f64().unwrap());
}

#[test]
fn brute_force_agrees_with_graph_file_and_bounds_others() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("square.txt");
    fs::write(&graph, "4 4\n0 1 1.0\n1 2 1.0\n2 3 1.0\n3 0 1.0\n").unwrap();
    let g = graph.to_str().unwrap();
    let brute = dir.path().join("brute");
    let sa = dir.path().join("sa");
    assert!(qw(&["maxcut", "--graph-file", g, "--method", "brute", "--out", brute.to_str().unwrap()]).status.success());
    assert!(qw(&["maxcut", "--graph-file", g, "--method", "sa", "--sweeps", "50", "--out", sa.to_str().unwrap()]).status.success());
    assert_eq!(json(&brute.join("result.json"))["best_energy"], -4.0);
    assert!(json(&sa.join("result.json"))["best_energy"].as_f64().unwrap() >= -4.0);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    let o = qw(&["maxcut", "--nodes", "30", "--method", "brute", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("24"));

    let o = qw(&["poisson", "--levels", "10", "--methods", "cg", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dense bound"));

    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "3 1\n0 7 1.0\n").unwrap();
    assert_eq!(qw(&["maxcut", "--graph-file", bad.to_str().unwrap(), "--out", out]).status.code(), Some(2));

    assert_eq!(qw(&["classify", "--bogus"]).status.code(), Some(2));
    assert_eq!(qw(&["--threads", "0", "maxcut", "--out", out]).status.code(), Some(2));
    assert_eq!(qw(&["poisson", "--methods", "fem", "--out", out]).status.code(), Some(2));
    assert_eq!(qw(&["classify", "--train-size", "900", "--out", out]).status.code(), Some(2));
}

#[test]
fn missing_csv_column_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    fs::write(&csv, "rooms,age,price\n6.1,40,2.1\n5.9,55,1.8\n").unwrap();
    let o = qw(&["regress", "--data-csv", csv.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("lstat"), "{}", stderr(&o));
}

#[test]
fn config_file_sits_between_defaults_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# small run\nnodes = 6\nlayers = 1\niters = 5\nseed = 3\n").unwrap();
    let out = dir.path().join("o");
    let o = qw(&["--config", cfg.to_str().unwrap(), "maxcut", "--seed", "7", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["config"]["nodes"], 6);
    assert_eq!(m["config"]["layers"], 1);
    assert_eq!(m["config"]["seed"], 7);
    assert_eq!(m["config"]["method"], "quenc");
}

#[test]
fn rerun_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = qw(&["--threads", "1", "maxcut", "--nodes", "9", "--layers", "3", "--iters", "40", "--seed", "5", "--out", a.to_str().unwrap()]);
    assert!(o.status.success());
    let o = qw(&["rerun", a.join("manifest.json").to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (ra, rb) = (json(&a.join("result.json")), json(&b.join("result.json")));
    assert_eq!(ra["best_x"], rb["best_x"]);
    assert_eq!(ra["best_energy"], rb["best_energy"]);
    let costs = |v: &Value| v["trace"].as_array().unwrap().iter().map(|t| t["cost"].clone()).collect::<Vec<_>>();
    assert_eq!(costs(&ra), costs(&rb));
}

#[test]
fn classify_and_regress_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c");
    let o = qw(&["classify", "--repeats", "3", "--epochs", "3", "--model", "classical", "--out", c.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = json(&c.join("summary.json"));
    assert_eq!(s["per_repeat"].as_array().unwrap().len(), 3);
    assert!(s["mean"].as_f64().unwrap() > 0.0 && s["stddev"].as_f64().unwrap() >= 0.0);
    for seed in 0..3 {
        let h = fs::read_to_string(c.join(format!("history/seed{seed}.csv"))).unwrap();
        assert_eq!(h.lines().count(), 4);
    }

    let r = dir.path().join("r");
    let o = qw(&["regress", "--repeats", "2", "--epochs", "3", "--train-sizes", "40,80", "--out", r.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = json(&r.join("summary.json"));
    assert_eq!(s["per_repeat"].as_array().unwrap().len(), 4);
    assert!(s.get("mean").is_some() && s.get("stddev").is_some());
    let sweep = fs::read_to_string(r.join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().next(), Some("train_size,repeats,mean_mse,std_mse,mean_mae"));
    assert_eq!(sweep.lines().count(), 3);
}

#[test]
fn poisson_bench_rows() {
    let dir = tempfile::tempdir().unwrap();
    let p1 = dir.path().join("p1");
    let o = qw(&["poisson", "--dim", "1", "--levels", "4,6", "--out", p1.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&p1.join("result.json"));
    for e in r["max_abs_error"].as_array().unwrap() {
        assert!(e[1].as_f64().unwrap() < 1e-8);
    }

    let p3 = dir.path().join("p3");
    let o = qw(&["poisson", "--levels", "3", "--methods", "tt,cg", "--export-solution", "true", "--out", p3.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let bench = fs::read_to_string(p3.join("bench.csv")).unwrap();
    let mut lines = bench.lines();
    assert_eq!(lines.next(), Some("method,d,points,wall_ms,residual,max_rank,rel_diff"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0][0], rows[1][0]), ("tt", "cg"));
    assert_eq!(rows[1][2], "512");
    let rel: f64 = rows[1][6].parse().unwrap();
    assert!(rel < 1e-6);
    let exported = fs::read_to_string(p3.join("solution_tt_d3.csv")).unwrap();
    assert_eq!(exported.lines().count(), 512);
}

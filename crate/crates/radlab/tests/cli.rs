use std::path::Path;
use std::process::{Command, Output};

use radlab::error::CliError;
use radlab::RunConfig;

fn radlab(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_radlab"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("RADLAB_THREADS", t),
        None => cmd.env_remove("RADLAB_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn write_config(dir: &Path, json: &str) -> String {
    let p = dir.join("config.in.json");
    std::fs::write(&p, json).unwrap();
    p.to_string_lossy().into_owned()
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines().skip(1).filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn empty_object_gives_defaults() {
    assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
}

#[test]
fn effective_config_round_trips() {
    let mut c = RunConfig::default();
    c.model.n = 4;
    c.study.eps_list = vec![0.3, 0.1];
    assert_eq!(RunConfig::from_json(&c.to_json()).unwrap(), c);
}

#[test]
fn schema_errors_name_the_field() {
    let path_of = |json: &str| match RunConfig::from_json(json) {
        Err(CliError::Config { path, .. }) => path,
        other => panic!("expected a config error, got {other:?}"),
    };
    assert_eq!(path_of(r#"{"solver": {"cfl": 1.5}}"#), "solver.cfl");
    assert_eq!(path_of(r#"{"solver": {"cfl": 0.5, "typo": 1}}"#), "solver.typo");
    assert_eq!(path_of(r#"{"study": {"eps_list": [0.1, 0.2]}}"#), "study.eps_list");
    assert_eq!(path_of(r#"{"study": {"eps_list": [0.1, "a"]}}"#), "study.eps_list[1]");
    assert_eq!(path_of(r#"{"model": {"N": 1}}"#), "model.N");
    assert_eq!(path_of(r#"{"study": {"profile": "ramp"}}"#), "study.profile");
    assert_eq!(path_of(r#"{"extra": {}}"#), "extra");
}

#[test]
fn bad_config_exits_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"solver": {"cfl": 1.5}}"#);
    let o = radlab(&["simulate", "--config", &cfg], None);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("solver.cfl"), "{}", stderr(&o));
    let o = radlab(&["simulate", "--config", "/nonexistent/radlab.json"], None);
    assert_eq!(code(&o), 2);
    let o = radlab(&["transmogrify"], None);
    assert_eq!(code(&o), 2);
}

#[test]
fn simulate_with_zero_eps_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = radlab(&["simulate", "--eps", "0", "--out", out.to_str().unwrap()], None);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(!out.join("final.csv").exists());
}

#[test]
fn invalid_thread_budget_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap().to_string();
    let o = radlab(&["stability-check", "--states", "1", "--out", &out], Some("zero"));
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn simulate_outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"model": {"N": 2}, "solver": {"snapshot_every": 10}}"#);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = radlab(&["simulate", "--config", &cfg, "--cells", "32", "--tfinal", "0.03", "--eps", "0.2", "--out", out.to_str().unwrap()], None);
        assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
        assert!(stdout(&o).starts_with("PASS"));
        out
    };
    let (a, b) = (run("a"), run("b"));
    let fin = read(&a.join("final.csv"));
    assert_eq!(fin, read(&b.join("final.csv")));
    assert_eq!(read(&a.join("diagnostics.csv")), read(&b.join("diagnostics.csv")));
    assert_eq!(fin.lines().next().unwrap(), "x,rho,v,E,theta,f0,alpha,f2");
    assert_eq!(data_rows(&fin).len(), 32);
    let snap = read(&a.join("snapshot_00000.csv"));
    assert_eq!(data_rows(&snap).len(), 32);
    // 17 significant digits
    let first = fin.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    let mantissa = first.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{first}");
    let echoed = RunConfig::from_json(&read(&a.join("config.json"))).unwrap();
    assert_eq!(echoed.solver.cells, 32);
    assert_eq!(echoed.solver.eps, 0.2);
}

#[test]
fn closure_tables_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = radlab(&["closure-tables", "--n", "2", "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("PASS"));
    let csv = read(&dir.path().join("closure_tables.csv"));
    assert_eq!(csv.lines().next().unwrap(), "alpha,name,i,j,value");
    let rows = data_rows(&csv);
    // per alpha: two (N+2)^2 kappa tables, (N+1)^2 m_tilde, three vectors of N+1
    assert_eq!(rows.len(), 7 * (2 * 16 + 9 + 3 * 3));
    let at_zero = rows.iter().find(|r| r.contains(",kappa,0,0,") && r.starts_with("0.0")).unwrap();
    let value: f64 = at_zero.rsplit(',').next().unwrap().parse().unwrap();
    assert!((value - 2.0).abs() < 1e-14, "{at_zero}");
}

#[test]
fn stability_check_summary_matches_exit_code_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let o = radlab(&["stability-check", "--states", "4", "--seed", "11", "--out", out.to_str().unwrap()], Some(threads));
        (o, out)
    };
    let (o1, a) = run("a", "1");
    let (o2, b) = run("b", "3");
    let summary = stdout(&o1);
    let line = summary.lines().next().unwrap();
    assert!(line.starts_with("PASS ") || line.starts_with("FAIL "), "{line}");
    assert_eq!(code(&o1) == 0, line.starts_with("PASS"));
    if line.starts_with("PASS") {
        assert_eq!(line, "PASS 12/12");
    } else {
        assert!(line.contains("worst="), "{line}");
    }
    assert_eq!(code(&o1), code(&o2));
    let csv = read(&a.join("stability.csv"));
    assert_eq!(csv, read(&b.join("stability.csv")));
    assert_eq!(data_rows(&csv).len(), 12);
    assert_eq!(read(&a.join("summary.txt")).trim(), line);
}

#[test]
fn converge_writes_one_row_per_eps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model": {"N": 2}, "solver": {"cells": 32, "tfinal": 0.02}, "study": {"eps_list": [0.4, 0.2, 0.1]}}"#,
    );
    let out = dir.path().join("out");
    let o = radlab(&["converge", "--config", &cfg, "--out", out.to_str().unwrap()], Some("2"));
    assert!(code(&o) == 0 || code(&o) == 1, "{}", stderr(&o));
    let csv = read(&out.join("convergence.csv"));
    assert_eq!(csv.lines().next().unwrap(), "eps,err_L2,err_H1,order_pairwise");
    assert_eq!(data_rows(&csv).len(), 3);
    assert!(csv.lines().last().unwrap().starts_with("# global_order L2="));
    assert!(csv.contains("# grid_guard"));
    let dat = read(&out.join("convergence.dat"));
    assert_eq!(dat.lines().filter(|l| !l.starts_with('#')).count(), 3);
}

#[test]
fn limit_subcommand_writes_all_pieces() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = radlab(&["limit", "--cells", "64", "--tfinal", "0.02", "--out", out.to_str().unwrap()], None);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    for f in ["limit.csv", "corrector.csv", "layer.csv", "layer_comparison.csv", "config.json", "summary.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert_eq!(data_rows(&read(&out.join("limit.csv"))).len(), 64);
}

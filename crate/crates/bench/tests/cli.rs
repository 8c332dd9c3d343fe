use std::path::Path;
use std::process::{Command, Output};

use mnru_bench::{synthetic, vecs, SyntheticKind, METRICS_CSV_HEADER};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mnru-bench"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_scenario_writes_one_row_per_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("metrics.csv");
    stdout(&bench(&[
        "run-scenario",
        "--dataset=synthetic:600:4",
        "--scenario=full_coverage",
        "--strategy=mn-thn-ru",
        "--iterations=6",
        "--batch=100",
        "--M=6",
        "--efc=24",
        "--recall-stride=2",
        "--dual-index",
        "--tau=150",
        "--out",
        path(&csv),
    ]));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], METRICS_CSV_HEADER);
    assert_eq!(lines.len(), 7);
    let columns = METRICS_CSV_HEADER.split(',').count();
    assert!(lines[1..].iter().all(|l| l.split(',').count() == columns));
    assert!(lines[2].split(',').nth(6).is_some_and(|r| !r.is_empty()));
}

#[test]
fn build_then_audit_and_evaluate_a_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("base.fvecs");
    let queries = dir.path().join("queries.fvecs");
    let gt = dir.path().join("gt.ivecs");
    let snapshot = dir.path().join("index.bin");
    vecs::save_fvecs(&base, &synthetic(SyntheticKind::Uniform, 500, 6, 1)).unwrap();
    vecs::save_fvecs(&queries, &synthetic(SyntheticKind::Uniform, 20, 6, 2)).unwrap();

    stdout(&bench(&[
        "build",
        "--dataset",
        path(&base),
        "--M=8",
        "--efc=40",
        "--out",
        path(&snapshot),
    ]));
    let audit = stdout(&bench(&["audit", "--index-file", path(&snapshot)]));
    assert!(audit.contains("live_count=500"), "{audit}");
    assert!(audit.contains("indegree_zero_count="));
    assert!(audit.contains("search_unreachable_count="));
    assert!(audit.contains("structure_clean=true"));

    stdout(&bench(&[
        "gt",
        "--dataset",
        path(&base),
        "--queries",
        path(&queries),
        "--k=10",
        "--out",
        path(&gt),
    ]));
    let rows = vecs::load_ivecs(&gt).unwrap();
    assert_eq!(rows.len(), 20);
    assert!(rows.iter().all(|r| r.len() == 10));

    let eval = stdout(&bench(&[
        "search-eval",
        "--index-file",
        path(&snapshot),
        "--dataset",
        path(&base),
        "--queries",
        path(&queries),
        "--gt",
        path(&gt),
        "--k=10",
        "--ef=10,500",
    ]));
    let lines: Vec<&str> = eval.lines().collect();
    assert_eq!(lines[0], "ef,k,recall_at_k,mean_query_seconds");
    assert_eq!(lines.len(), 3);
    let exhaustive: f64 = lines[2].split(',').nth(2).unwrap().parse().unwrap();
    assert_eq!(exhaustive, 1.0);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = bench(&["audit", "--bogus"]);
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
}

#[test]
fn unknown_strategy_is_rejected() {
    let out = bench(&[
        "run-scenario",
        "--dataset=synthetic:100:2",
        "--scenario=random",
        "--strategy=sideways",
        "--iterations=1",
        "--batch=1",
    ]);
    assert!(!out.status.success());
}

#[test]
fn missing_file_fails_with_a_diagnostic() {
    let out = bench(&["audit", "--index-file", "/no/such/index.bin"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error: /no/such/index.bin"), "{err}");
}

#[test]
fn invalid_scenario_shape_fails_before_running() {
    let out = bench(&[
        "run-scenario",
        "--dataset=synthetic:100:2",
        "--scenario=full_coverage",
        "--iterations=3",
        "--batch=10",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("full_coverage"));
}

//! End-to-end tests of the kd-sampler binary: the pool -> sample -> stats
//! flow on real files, exit codes, and a miniature experiment sweep.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_kd-sampler")
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(binary())
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(output: &Output) -> Value {
    let text = String::from_utf8_lossy(&output.stdout);
    let line = text.lines().last().expect("summary line");
    serde_json::from_str(line).expect("summary is one JSON line")
}

fn stderr_text(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

/// Two queries with hand-checkable pools. q1's teacher scores span [-1, 3]
/// with the positive at 3; q2's span [0, 10] with the positive at 9.
fn write_corpus(dir: &Path) -> (PathBuf, PathBuf) {
    let scores = dir.join("scores.jsonl");
    let positives = dir.join("positives.jsonl");
    let score_rows = [
        r#"{"query_id":"q1","doc_id":"dp","score":3.0}"#,
        r#"{"query_id":"q1","doc_id":"d1","score":2.0,"retriever_rank":1}"#,
        r#"{"query_id":"q1","doc_id":"d2","score":1.0,"retriever_rank":2}"#,
        r#"{"query_id":"q1","doc_id":"d3","score":0.0}"#,
        r#"{"query_id":"q1","doc_id":"d4","score":-1.0}"#,
        r#"{"query_id":"q2","doc_id":"ep","score":9.0}"#,
        r#"{"query_id":"q2","doc_id":"e1","score":10.0,"retriever_rank":1}"#,
        r#"{"query_id":"q2","doc_id":"e2","score":1.0,"retriever_rank":2}"#,
        r#"{"query_id":"q2","doc_id":"e3","score":0.0}"#,
        r#"{"query_id":"q2","doc_id":"e4","score":4.0}"#,
    ];
    std::fs::write(&scores, score_rows.join("\n") + "\n").unwrap();
    std::fs::write(
        &positives,
        concat!(
            r#"{"query_id":"q1","doc_id":"dp"}"#,
            "\n",
            r#"{"query_id":"q2","doc_id":"ep"}"#,
            "\n"
        ),
    )
    .unwrap();
    (scores, positives)
}

fn build_pools(dir: &Path) -> PathBuf {
    let (scores, positives) = write_corpus(dir);
    let pools = dir.join("pools.jsonl");
    let output = run(
        dir,
        &[
            "pool",
            "--scores",
            scores.to_str().unwrap(),
            "--positives",
            positives.to_str().unwrap(),
            "--out",
            pools.to_str().unwrap(),
        ],
    );
    assert!(output.status.success(), "{}", stderr_text(&output));
    pools
}

#[test]
fn pool_then_sample_then_stats_produces_checked_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let pools = build_pools(dir.path());

    let summary = stdout_json(&run(
        dir.path(),
        &[
            "pool",
            "--scores",
            "scores.jsonl",
            "--positives",
            "positives.jsonl",
            "--out",
            "pools2.jsonl",
        ],
    ));
    assert_eq!(summary["command"], "pool");
    assert_eq!(summary["n_queries"], 2);
    assert_eq!(summary["mean_pool_size"], 4.0);
    assert_eq!(summary["n_degenerate"], 0);

    let samples = dir.path().join("samples.jsonl");
    let output = run(
        dir.path(),
        &[
            "sample",
            "--pools",
            pools.to_str().unwrap(),
            "--strategy",
            "stratified",
            "--k",
            "3",
            "--out",
            samples.to_str().unwrap(),
        ],
    );
    assert!(output.status.success(), "{}", stderr_text(&output));
    let summary = stdout_json(&output);
    assert_eq!(summary["n_samples"], 2);
    assert_eq!(summary["skipped_degenerate"], 0);

    let text = std::fs::read_to_string(&samples).unwrap();
    let rows: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 2);
    let q1 = &rows[0];
    assert_eq!(q1["query_id"], "q1");
    assert_eq!(q1["strategy"], "stratified");
    assert_eq!(q1["k"], 3);
    assert_eq!(q1["positive"]["doc_id"], "dp");
    assert_eq!(q1["positive"]["norm"], 1.0);
    let ids: Vec<&str> = q1["negatives"]
        .as_array()
        .unwrap()
        .iter()
        .map(|n| n["doc_id"].as_str().unwrap())
        .collect();
    // Norms [0.75, 0.5, 0.25, 0]: anchors 0, 0.375, 0.75; the middle anchor
    // ties between 0.25 and 0.5 and resolves to the smaller norm.
    assert_eq!(ids, vec!["d4", "d3", "d1"]);
    let norms: Vec<f64> = q1["negatives"]
        .as_array()
        .unwrap()
        .iter()
        .map(|n| n["norm"].as_f64().unwrap())
        .collect();
    assert_eq!(norms, vec![0.0, 0.25, 0.75]);

    let stats = dir.path().join("stats.csv");
    let output = run(
        dir.path(),
        &[
            "stats",
            "--pools",
            pools.to_str().unwrap(),
            "--k",
            "2",
            "--strategies",
            "stratified,low",
            "--out",
            stats.to_str().unwrap(),
        ],
    );
    assert!(output.status.success(), "{}", stderr_text(&output));
    let csv = std::fs::read_to_string(&stats).unwrap();
    assert_eq!(
        csv,
        "strategy,k,mean_cov,mean_ent,mean_std,n_queries\n\
         stratified,2,0.875000,0.693147,0.437500,2\n\
         low,2,0.175000,0.693147,0.087500,2\n"
    );
}

#[test]
fn usage_errors_exit_2_before_touching_data() {
    let dir = tempfile::tempdir().unwrap();

    // Missing required flag: clap's own usage error.
    let output = run(dir.path(), &["pool", "--scores", "s.jsonl", "--out", "o"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_text(&output).contains("--positives"));

    // The pools file does not exist; both checks below must fire first.
    let output = run(
        dir.path(),
        &[
            "sample", "--pools", "missing.jsonl", "--strategy", "random", "--k", "4", "--out", "o",
        ],
    );
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_text(&output).contains("--seed"));

    let output = run(
        dir.path(),
        &[
            "sample", "--pools", "missing.jsonl", "--strategy", "stratified", "--k", "1", "--out",
            "o",
        ],
    );
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_text(&output).contains("(j-1)/(K-1)"));

    let output = run(
        dir.path(),
        &[
            "sample", "--pools", "missing.jsonl", "--strategy", "bogus", "--k", "4", "--out", "o",
        ],
    );
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_text(&output).contains("bogus"));

    let output = run(dir.path(), &["--help"]);
    assert_eq!(output.status.code(), Some(0));
    let output = run(dir.path(), &["--version"]);
    assert_eq!(output.status.code(), Some(0));
}

#[test]
fn data_errors_exit_1_with_a_named_query() {
    let dir = tempfile::tempdir().unwrap();
    let pools = build_pools(dir.path());

    // k exceeds every pool's size.
    let output = run(
        dir.path(),
        &[
            "sample",
            "--pools",
            pools.to_str().unwrap(),
            "--strategy",
            "low",
            "--k",
            "9",
            "--out",
            "samples.jsonl",
        ],
    );
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_text(&output).contains("q1"));

    let output = run(
        dir.path(),
        &[
            "sample", "--pools", "absent.jsonl", "--strategy", "low", "--k", "2", "--out", "o",
        ],
    );
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_text(&output).contains("absent.jsonl"));
}

#[test]
fn experiment_writes_a_deterministic_result_table() {
    let dir = tempfile::tempdir().unwrap();
    let world = dir.path().join("world.json");
    std::fs::write(
        &world,
        concat!(
            r#"{"n_queries":20,"n_docs":64,"latent_dim":4,"feature_dim":8,"student_dim":4,"#,
            r#""feature_noise":0.1,"teacher_noise":0.1,"pool_top":8,"pool_rand":8,"seed":3}"#,
            "\n"
        ),
    )
    .unwrap();

    let run_once = |out: &str| -> Output {
        run(
            dir.path(),
            &[
                "experiment",
                "--world",
                world.to_str().unwrap(),
                "--k",
                "2,4",
                "--strategies",
                "stratified,low",
                "--objectives",
                "kl",
                "--seeds",
                "2",
                "--recall-cutoff",
                "16",
                "--out",
                out,
            ],
        )
    };

    let output = run_once("first.csv");
    assert!(output.status.success(), "{}", stderr_text(&output));
    let summary = stdout_json(&output);
    assert_eq!(summary["n_rows"], 8, "2 strategies x 2 ks x 1 objective x 2 seeds");
    assert_eq!(summary["n_aborted"], 0);

    let second = run_once("second.csv");
    assert!(second.status.success(), "{}", stderr_text(&second));

    let first_bytes = std::fs::read(dir.path().join("first.csv")).unwrap();
    let second_bytes = std::fs::read(dir.path().join("second.csv")).unwrap();
    assert_eq!(first_bytes, second_bytes);

    let text = String::from_utf8(first_bytes).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("strategy,k,objective,seed,mrr10,ndcg10,recall_n,final_loss,status")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.ends_with(",ok")));
    assert!(rows.iter().filter(|r| r.starts_with("stratified,")).count() == 4);

    // Rows are sorted by (strategy, k, objective, seed).
    let keys: Vec<Vec<&str>> = rows
        .iter()
        .map(|r| r.split(',').take(4).collect())
        .collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| {
        (a[0], a[1].parse::<usize>().unwrap(), a[2], a[3].parse::<u64>().unwrap()).cmp(&(
            b[0],
            b[1].parse::<usize>().unwrap(),
            b[2],
            b[3].parse::<u64>().unwrap(),
        ))
    });
    assert_eq!(keys, sorted);
}

#[test]
fn experiment_rejects_a_bad_world_file_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let world = dir.path().join("world.json");
    std::fs::write(
        &world,
        concat!(
            r#"{"n_queries":20,"n_docs":10,"latent_dim":4,"feature_dim":8,"student_dim":4,"#,
            r#""feature_noise":0.1,"teacher_noise":0.1,"pool_top":8,"pool_rand":8,"seed":3}"#,
            "\n"
        ),
    )
    .unwrap();
    let output = run(
        dir.path(),
        &[
            "experiment",
            "--world",
            world.to_str().unwrap(),
            "--out",
            "results.csv",
        ],
    );
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_text(&output).contains("pool_top + pool_rand"));
}

//! End-to-end runs of the `fdprune` binary.

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::write_synthetic_jsonl;

fn fdprune(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdprune"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let out = fdprune(args);
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
    input: PathBuf,
}

impl Fixture {
    fn new(n_docs: usize) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("corpus.jsonl");
        write_synthetic_jsonl(&input, n_docs, 30, 800, n_docs as u64);
        Fixture { dir, input }
    }

    fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn prune(&self, out: &str, extra: &[&str]) -> PathBuf {
        let out_dir = self.out(out);
        let mut args = vec![
            "prune",
            "--input",
            s(&self.input),
            "--fields",
            "question,answer",
            "--out-dir",
            s(&out_dir),
        ];
        args.extend_from_slice(extra);
        run_ok(&args);
        out_dir
    }
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn prune_writes_coreset_and_report() {
    let fx = Fixture::new(400);
    let out = fx.prune("out", &["--rate", "0.5", "--emit-scores", "--emit-strata"]);
    let coreset = std::fs::read_to_string(out.join("coreset.txt")).unwrap();
    assert_eq!(coreset.lines().count(), 200);
    let r = report(&out);
    assert_eq!(r["kept"], 200);
    assert_eq!(r["strategy_used"], "furthest");
    for f in ["coreset.txt", "scores.csv", "report.json"] {
        let body = std::fs::read_to_string(out.join(f)).unwrap();
        assert!(body.ends_with('\n'), "{f} lacks a trailing newline");
    }
    // Furthest selection writes no strata even when asked.
    assert!(!out.join("strata.csv").exists());
}

#[test]
fn usage_errors_exit_with_one() {
    let fx = Fixture::new(20);
    let out = fdprune(&[
        "prune",
        "--input",
        s(&fx.input),
        "--fields",
        "question",
        "--rate",
        "0.0",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rate"));
    assert_eq!(fdprune(&["prune", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(fdprune(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(fdprune(&["--help"]).status.code(), Some(0));
}

#[test]
fn empty_input_exits_with_two_and_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty.jsonl");
    std::fs::write(&input, "").unwrap();
    let out = fdprune(&[
        "score",
        "--input",
        s(&input),
        "--fields",
        "text",
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("load"), "{err}");
    assert!(err.contains("empty"), "{err}");
}

#[test]
fn missing_field_exits_with_two() {
    let fx = Fixture::new(10);
    let out = fdprune(&[
        "score",
        "--input",
        s(&fx.input),
        "--fields",
        "body",
        "--out-dir",
        s(&fx.out("o")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("body"));
}

#[test]
fn reruns_and_thread_counts_give_identical_files() {
    let fx = Fixture::new(3000);
    let flags = [
        "--rate",
        "0.3",
        "--seed",
        "5",
        "--emit-scores",
        "--emit-strata",
    ];
    let runs: Vec<PathBuf> = [("a", "1"), ("b", "1"), ("c", "3")]
        .iter()
        .map(|(name, t)| {
            let mut f = flags.to_vec();
            f.extend(["--threads", t]);
            fx.prune(name, &f)
        })
        .chain(std::iter::once(fx.prune("d", &flags)))
        .collect();
    assert_eq!(report(&runs[0])["strategy_used"], "stratified");
    for f in ["coreset.txt", "scores.csv", "strata.csv"] {
        let first = std::fs::read(runs[0].join(f)).unwrap();
        for r in &runs[1..] {
            assert_eq!(
                first,
                std::fs::read(r.join(f)).unwrap(),
                "{f} differs in {}",
                r.display()
            );
        }
    }
}

#[test]
fn adaptive_matches_the_branch_it_picks() {
    let fx = Fixture::new(2490);
    // 30% of 2490 documents is 747, under the threshold: keep the furthest.
    let adaptive = fx.prune("adaptive", &["--rate", "0.7"]);
    let furthest = fx.prune("furthest", &["--rate", "0.7", "--strategy", "furthest"]);
    assert_eq!(report(&adaptive)["strategy_used"], "furthest");
    assert_eq!(report(&adaptive)["kept"], 747);
    assert_eq!(
        std::fs::read(adaptive.join("coreset.txt")).unwrap(),
        std::fs::read(furthest.join("coreset.txt")).unwrap()
    );

    // Lowering the threshold sends the same run down the stratified branch.
    let low = fx.prune(
        "low",
        &["--rate", "0.7", "--threshold", "700", "--seed", "2"],
    );
    let strat = fx.prune(
        "strat",
        &["--rate", "0.7", "--strategy", "stratified", "--seed", "2"],
    );
    assert_eq!(report(&low)["strategy_used"], "stratified");
    assert_eq!(
        std::fs::read(low.join("coreset.txt")).unwrap(),
        std::fs::read(strat.join("coreset.txt")).unwrap()
    );
}

#[test]
fn project_writes_coordinates_for_every_document() {
    let fx = Fixture::new(120);
    let out = fx.out("proj");
    run_ok(&[
        "project",
        "--input",
        s(&fx.input),
        "--fields",
        "question,answer",
        "--rate",
        "0.25",
        "--out-dir",
        s(&out),
    ]);
    let body = std::fs::read_to_string(out.join("projection.csv")).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("doc_id,pc1,pc2,kept"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 120);
    assert_eq!(rows.iter().filter(|r| r[3] == "1").count(), 90);
    for r in &rows {
        assert!(r[1].parse::<f64>().unwrap().is_finite());
    }
}

#[test]
fn score_then_stats() {
    let fx = Fixture::new(200);
    let out = fx.out("scored");
    run_ok(&[
        "score",
        "--input",
        s(&fx.input),
        "--fields",
        "question,answer",
        "--out-dir",
        s(&out),
    ]);
    let scores = out.join("scores.csv");
    let body = std::fs::read_to_string(&scores).unwrap();
    assert!(body.starts_with("doc_id,fd,percentile\n"));
    assert_eq!(body.lines().count(), 201);
    assert!(!out.join("coreset.txt").exists());

    let stats = run_ok(&["stats", s(&scores)]);
    let text = String::from_utf8(stats.stdout).unwrap();
    let n_line = text.lines().find(|l| l.starts_with("N ")).unwrap();
    assert!(n_line.ends_with("200"));
    for label in ["min", "mean", "max", "P1", "P25", "P50", "P75", "P99"] {
        assert!(
            text.lines()
                .any(|l| l.split_whitespace().next() == Some(label)),
            "{label} missing"
        );
    }

    let missing = fdprune(&["stats", s(&fx.out("nope.csv"))]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn flags_override_config_file() {
    let fx = Fixture::new(300);
    let cfg_path = fx.out("run.toml");
    std::fs::write(
        &cfg_path,
        format!(
            "input = \"{}\"\nfields = [\"question\", \"answer\"]\nrate = 0.5\nstrategy = \"closest\"\nout_dir = \"{}\"\n",
            s(&fx.input),
            s(&fx.out("from_file"))
        ),
    )
    .unwrap();
    run_ok(&["prune", "--config", s(&cfg_path)]);
    let r = report(&fx.out("from_file"));
    assert_eq!(r["strategy_used"], "closest");
    assert_eq!(r["kept"], 150);

    run_ok(&[
        "prune",
        "--config",
        s(&cfg_path),
        "--rate",
        "0.9",
        "--out-dir",
        s(&fx.out("flags")),
    ]);
    let r = report(&fx.out("flags"));
    assert_eq!(r["strategy_used"], "closest");
    assert_eq!(r["kept"], 30);

    std::fs::write(fx.out("bad.toml"), "rate = 0.5\nbogus = 1\n").unwrap();
    let out = fdprune(&[
        "prune",
        "--config",
        s(&fx.out("bad.toml")),
        "--input",
        s(&fx.input),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn embedding_dump_matches_vocabulary_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("tiny.csv");
    std::fs::write(
        &input,
        "text,label\nred fish blue fish,a\none fish,b\ntwo birds,a\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    run_ok(&[
        "score",
        "--input",
        s(&input),
        "--fields",
        "text",
        "--no-normalize",
        "--dump-embeddings",
        "--out-dir",
        s(&out),
    ]);
    let body = std::fs::read_to_string(out.join("embeddings.txt")).unwrap();
    // Terms sorted: birds blue fish one red two. N=3; df(fish)=2 gives idf 0,
    // so fish never appears.
    let triplets: Vec<(usize, usize, f64)> = body
        .lines()
        .map(|l| {
            let p: Vec<&str> = l.split(' ').collect();
            (
                p[0].parse().unwrap(),
                p[1].parse().unwrap(),
                p[2].parse().unwrap(),
            )
        })
        .collect();
    let idf1 = (3.0f64 / 2.0).ln();
    let expected = [
        (0, 1, 0.25 * idf1),
        (0, 4, 0.25 * idf1),
        (1, 3, 0.5 * idf1),
        (2, 0, 0.5 * idf1),
        (2, 5, 0.5 * idf1),
    ];
    assert_eq!(triplets.len(), expected.len());
    for (got, want) in triplets.iter().zip(&expected) {
        assert_eq!((got.0, got.1), (want.0, want.1));
        assert!((got.2 - want.2).abs() <= 1e-15 * want.2.abs());
    }
}

#[test]
fn stage_timings_add_up_to_the_total() {
    let fx = Fixture::new(4000);
    let out = fx.prune("timed", &["--rate", "0.5", "--emit-scores"]);
    let t = &report(&out)["timings"];
    let stages: f64 = [
        "load_ms",
        "vectorize_ms",
        "median_ms",
        "score_ms",
        "prune_ms",
        "project_ms",
        "write_ms",
    ]
    .iter()
    .map(|k| t[k].as_f64().unwrap())
    .sum();
    let total = t["total_ms"].as_f64().unwrap();
    assert!(
        (total - stages).abs() <= 0.05 * total,
        "stages {stages} ms vs total {total} ms"
    );
}

mod common;

use common::*;
use multirag_core::backend::{Generation, MockScript};
use multirag_core::datagen::Instance;
use multirag_core::fixtures::{planted_benchmark, retrieve_scenario, three_doc_corpus};
use multirag_core::{Conversation, Passage, Turn};

#[test]
fn help_lists_subcommands_and_flags() {
    let out = run(&["--help"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["index", "run", "chat", "eval-retrieval", "eval-critic", "datagen", "serve"] {
        assert!(text.contains(sub), "missing {sub} in help");
    }
    let out = run(&["run", "--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for flag in ["--bench", "--config", "--weights", "--parallel", "--corpus", "--index", "--script", "--backend-url", "--out", "--force", "--seed"] {
        assert!(text.contains(flag), "missing {flag} in run help");
    }
}

#[test]
fn usage_errors_exit_2_with_json() {
    let out = run(&["run", "--bench"]);
    assert_eq!(code(&out), 2);
    assert_eq!(stderr_json(&out)["error"], "usage");
    let out = run(&["frobnicate"]);
    assert_eq!(code(&out), 2);
    assert_eq!(stderr_json(&out)["exit_code"], 2);
}

#[test]
fn missing_backend_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), &three_doc_corpus());
    let bench = write_bench(dir.path(), "bench.jsonl", &[retrieve_scenario().benchmark()]);
    let out_dir = dir.path().join("out");
    let out = run(&["run", "--bench", s(&bench), "--corpus", s(&corpus), "--out", s(&out_dir)]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!out_dir.exists());
}

#[test]
fn malformed_input_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    std::fs::write(&corpus, "{\"id\": \"a\", \"text\": \"x\"}\nnot json\n").unwrap();
    let out = run(&["index", "--corpus", s(&corpus), "--out", s(&dir.path().join("idx"))]);
    assert_eq!(code(&out), 3);
    let err = stderr_json(&out);
    assert_eq!(err["error"], "data");
    assert!(err["message"].as_str().unwrap().contains("corpus.jsonl"));
}

#[test]
fn index_writes_index_and_meta() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), &three_doc_corpus());
    let out_dir = dir.path().join("idx");
    let out = run(&["index", "--corpus", s(&corpus), "--out", s(&out_dir), "--seed", "7"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("index.bm25").is_file());
    let meta = read_json(&out_dir.join("meta.json"));
    assert_eq!(meta["command"], "index");
    assert_eq!(meta["seed"], 7);
    assert_eq!(meta["details"]["doc_count"], 3);
}

#[test]
fn non_empty_out_dir_needs_force() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), &three_doc_corpus());
    let out_dir = dir.path().join("idx");
    std::fs::create_dir(&out_dir).unwrap();
    std::fs::write(out_dir.join("keep.txt"), "mine").unwrap();
    let out = run(&["index", "--corpus", s(&corpus), "--out", s(&out_dir)]);
    assert_eq!(code(&out), 2);
    assert!(!out_dir.join("index.bm25").exists());
    let out = run(&["index", "--corpus", s(&corpus), "--out", s(&out_dir), "--force"]);
    assert_eq!(code(&out), 0);
    assert!(out_dir.join("keep.txt").exists());
}

#[test]
fn stale_index_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), &three_doc_corpus());
    let idx = dir.path().join("idx");
    assert_eq!(code(&run(&["index", "--corpus", s(&corpus), "--out", s(&idx)])), 0);
    let other = planted_benchmark();
    let other_corpus = dir.path().join("other");
    std::fs::create_dir(&other_corpus).unwrap();
    let other_corpus = write_corpus(&other_corpus, &other.corpus);
    let bench = write_bench(dir.path(), "bench.jsonl", &other.conversations);
    let out = run(&[
        "eval-retrieval",
        "--bench",
        s(&bench),
        "--corpus",
        s(&other_corpus),
        "--index",
        s(&idx),
        "--representations",
        "last_turn",
        "--out",
        s(&dir.path().join("rep")),
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn run_writes_runlog_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let sc = retrieve_scenario();
    let corpus = write_corpus(dir.path(), &sc.corpus);
    let bench = write_bench(dir.path(), "bench.jsonl", &[sc.benchmark()]);
    let script = write_script(dir.path(), "script.jsonl", &sc.script);
    let out_dir = dir.path().join("run");
    let out = run(&[
        "run", "--bench", s(&bench), "--corpus", s(&corpus), "--script", s(&script), "--out", s(&out_dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let metrics = read_json(&out_dir.join("metrics.json"));
    assert_eq!(metrics["turns"], 1);
    assert_eq!(metrics["retrieval_rate"], 1.0);
    let log = std::fs::read_to_string(out_dir.join("runlog.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 1);
    let rec: serde_json::Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    assert!(rec.to_string().contains("volunteer militia units"));
}

#[test]
fn backend_failure_exits_4_and_cleans_up() {
    let dir = tempfile::tempdir().unwrap();
    let sc = retrieve_scenario();
    let corpus = write_corpus(dir.path(), &sc.corpus);
    let bench = write_bench(dir.path(), "bench.jsonl", &[sc.benchmark()]);
    let script = write_script(dir.path(), "empty.jsonl", &MockScript::new());
    let out_dir = dir.path().join("run");
    let out = run(&[
        "run", "--bench", s(&bench), "--corpus", s(&corpus), "--script", s(&script), "--out", s(&out_dir),
    ]);
    assert_eq!(code(&out), 4);
    assert_eq!(stderr_json(&out)["error"], "backend");
    assert!(!out_dir.exists());
}

#[test]
fn unreachable_url_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let sc = retrieve_scenario();
    let corpus = write_corpus(dir.path(), &sc.corpus);
    let bench = write_bench(dir.path(), "bench.jsonl", &[sc.benchmark()]);
    let out = run(&[
        "run",
        "--bench",
        s(&bench),
        "--corpus",
        s(&corpus),
        "--backend-url",
        "http://127.0.0.1:9",
        "--retries",
        "0",
        "--timeout-ms",
        "500",
        "--out",
        s(&dir.path().join("run")),
    ]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn eval_retrieval_planted_gap() {
    let dir = tempfile::tempdir().unwrap();
    let planted = planted_benchmark();
    let corpus = write_corpus(dir.path(), &planted.corpus);
    let bench = write_bench(dir.path(), "bench.jsonl", &planted.conversations);
    let script = write_script(dir.path(), "script.jsonl", &planted.script);
    let out_dir = dir.path().join("rep");
    let out = run(&[
        "eval-retrieval", "--bench", s(&bench), "--corpus", s(&corpus), "--script", s(&script), "--out", s(&out_dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&out_dir.join("report.json"));
    let r5 = |rep: &str| {
        report["rows"]
            .as_array()
            .unwrap()
            .iter()
            .find(|r| r["representation"] == rep)
            .map(|r| r["r_at_5"].as_f64().unwrap())
            .unwrap()
    };
    assert_eq!(r5("last_turn"), 0.0);
    assert_eq!(r5("summary"), 1.0);
    assert!(std::fs::read_to_string(out_dir.join("report.txt")).unwrap().contains("not reproduced here"));
}

#[test]
fn eval_retrieval_needs_backend_for_generated_queries() {
    let dir = tempfile::tempdir().unwrap();
    let planted = planted_benchmark();
    let corpus = write_corpus(dir.path(), &planted.corpus);
    let bench = write_bench(dir.path(), "bench.jsonl", &planted.conversations);
    let out = run(&[
        "eval-retrieval", "--bench", s(&bench), "--corpus", s(&corpus), "--out", s(&dir.path().join("rep")),
    ]);
    assert_eq!(code(&out), 2);
    let out = run(&[
        "eval-retrieval",
        "--bench",
        s(&bench),
        "--corpus",
        s(&corpus),
        "--representations",
        "last_turn,full_conversation,gold_rewrite",
        "--out",
        s(&dir.path().join("rep")),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn eval_critic_accuracy_and_alphabet_check() {
    let dir = tempfile::tempdir().unwrap();
    let preds = dir.path().join("preds.jsonl");
    std::fs::write(
        &preds,
        concat!(
            "{\"task\":\"relevance\",\"predicted\":\"[Relevant]\",\"gold\":\"[Relevant]\"}\n",
            "{\"task\":\"relevance\",\"predicted\":\"[Irrelevant]\",\"gold\":\"[Relevant]\"}\n",
            "{\"task\":\"utility\",\"predicted\":\"[Utility:4]\",\"gold\":\"[Utility:4]\"}\n",
        ),
    )
    .unwrap();
    let out_dir = dir.path().join("critic");
    let out = run(&["eval-critic", "--predictions", s(&preds), "--out", s(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_json(&out_dir.join("critic.json"))["rows"].clone();
    let rel = rows.as_array().unwrap().iter().find(|r| r["task"] == "relevance").unwrap();
    assert_eq!(rel["accuracy"], 0.5);

    std::fs::write(&preds, "{\"task\":\"relevance\",\"predicted\":\"[Maybe]\",\"gold\":\"[Relevant]\"}\n").unwrap();
    let out = run(&["eval-critic", "--predictions", s(&preds), "--out", s(&dir.path().join("c2"))]);
    assert_eq!(code(&out), 3);
    assert!(stderr_json(&out)["message"].as_str().unwrap().contains("record 0"));
}

fn single(text: &str) -> Conversation {
    Conversation::with_turns("c", vec![Turn::user(text)])
}

fn write_instances(dir: &std::path::Path, instances: &[Instance]) -> std::path::PathBuf {
    let path = dir.join("instances.jsonl");
    let body: String = instances.iter().map(|i| serde_json::to_string(i).unwrap() + "\n").collect();
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn datagen_labels_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let p = Passage::new("p", "", "evidence");
    let instances: Vec<_> = (0..4)
        .map(|i| Instance::new(single(&format!("q{i} {}", if i == 0 { "off" } else { "on" }))).with_evidence(p.clone()))
        .collect();
    let inst = write_instances(dir.path(), &instances);
    let script = MockScript::new()
        .on_generate(&["on"], Generation::text_only("Rating: [Relevant]"))
        .on_generate(&["off"], Generation::text_only("Rating: [Irrelevant]"));
    let script = write_script(dir.path(), "judge.jsonl", &script);
    let out_dir = dir.path().join("data");
    let out = run(&[
        "datagen", "--task", "relevance", "--instances", s(&inst), "--script", s(&script), "--parallel", "3", "--out",
        s(&out_dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stats = read_json(&out_dir.join("stats.json"));
    assert_eq!(stats["labeled"], 4);
    let lines = std::fs::read_to_string(out_dir.join("dataset.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 4);
    assert!(lines.lines().next().unwrap().contains("q0 off"));
}

#[test]
fn datagen_keeps_partial_labels_on_backend_failure() {
    let dir = tempfile::tempdir().unwrap();
    let instances: Vec<_> = ["ok 1", "ok 2", "missing", "ok 3"]
        .iter()
        .map(|t| Instance::new(single(t)).with_response("r"))
        .collect();
    let inst = write_instances(dir.path(), &instances);
    let script = MockScript::new().on_generate(&["ok"], Generation::text_only("Perceived utility: 4"));
    let script = write_script(dir.path(), "judge.jsonl", &script);
    let out_dir = dir.path().join("data");
    let out = run(&[
        "datagen", "--task", "utility", "--instances", s(&inst), "--script", s(&script), "--out", s(&out_dir),
    ]);
    assert_eq!(code(&out), 4);
    let partial = std::fs::read_to_string(out_dir.join("dataset.partial.jsonl")).unwrap();
    assert_eq!(partial.lines().count(), 2);
    assert!(!out_dir.join("dataset.jsonl").exists());
}

#[test]
fn bad_weights_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let sc = retrieve_scenario();
    let corpus = write_corpus(dir.path(), &sc.corpus);
    let bench = write_bench(dir.path(), "bench.jsonl", &[sc.benchmark()]);
    let script = write_script(dir.path(), "script.jsonl", &sc.script);
    let out = run(&[
        "run", "--bench", s(&bench), "--corpus", s(&corpus), "--script", s(&script), "--weights", "1,x,1", "--out",
        s(&dir.path().join("run")),
    ]);
    assert_eq!(code(&out), 2);
}

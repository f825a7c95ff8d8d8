#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use multirag_core::backend::MockScript;
use multirag_core::conversation::write_conversations;
use multirag_core::retrieval::Corpus;
use multirag_core::Conversation;

pub fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_multirag"));
    for var in [
        "MULTIRAG_SCRIPT",
        "MULTIRAG_BACKEND_URL",
        "MULTIRAG_CORPUS",
        "MULTIRAG_INDEX",
        "MULTIRAG_WEIGHTS",
    ] {
        cmd.env_remove(var);
    }
    cmd
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

pub fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|e| panic!("stderr is not one JSON line ({e}): {text}"))
}

pub fn write_corpus(dir: &Path, corpus: &Corpus) -> PathBuf {
    let path = dir.join("corpus.jsonl");
    let body: String = corpus
        .passages()
        .iter()
        .map(|p| serde_json::to_string(p).unwrap() + "\n")
        .collect();
    std::fs::write(&path, body).unwrap();
    path
}

pub fn write_bench(dir: &Path, name: &str, convs: &[Conversation]) -> PathBuf {
    let path = dir.join(name);
    let mut body = Vec::new();
    write_conversations(&mut body, convs).unwrap();
    std::fs::write(&path, body).unwrap();
    path
}

pub fn write_script(dir: &Path, name: &str, script: &MockScript) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, script.to_jsonl()).unwrap();
    path
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

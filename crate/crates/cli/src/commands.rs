use std::io::{BufRead, Write};

use serde_json::json;

use multirag_core::datagen::{collect_labels, CollectOptions, Instance, LabelStats};
use multirag_core::eval::{
    critic_accuracy, critic_table, retrieval_report, run_metrics, CriticPrediction, NamedRetriever, Representation,
    REFERENCE_FOOTNOTE, REPORT_VERSION,
};
use multirag_core::jsonl::write_records;
use multirag_core::orchestrator::{run_conversation, Pipeline, RunRecord, StepClock, SystemClock, TurnResult};
use multirag_core::retrieval::{Bm25Index, Bm25Params, Retriever, Tokenizer};
use multirag_core::conversation::validate_conversation_with_corpus;
use multirag_core::Conversation;
use multirag_service::ServiceConfig;

use crate::args::{
    ChatArgs, DatagenArgs, EvalCriticArgs, EvalRetrievalArgs, IndexArgs, RunArgs, ServeArgs,
};
use crate::error::{CliError, Result};
use crate::load::{self, INDEX_FILE};
use crate::output::OutDir;

pub fn index(args: &IndexArgs, seed: Option<u64>) -> Result<()> {
    if !(args.k1.is_finite() && args.k1 >= 0.0) || !(0.0..=1.0).contains(&args.b) {
        return Err(CliError::usage("--k1 must be >= 0 and --b within [0, 1]"));
    }
    let corpus = load::corpus(&args.corpus)?;
    let tokenizer = match &args.stopwords {
        Some(p) => Tokenizer::with_stopwords(load::read_to_string(p)?.lines().map(str::trim).filter(|w| !w.is_empty())),
        None => Tokenizer::default(),
    };
    let mut out = OutDir::prepare(&args.out)?;
    let index: Bm25Index<f64> = Bm25Index::build_with(&corpus, Bm25Params { k1: args.k1, b: args.b }, &tokenizer);
    let mut buf = Vec::new();
    index.save(&mut buf).map_err(|e| CliError::internal(e.to_string()))?;
    let path = out.write(INDEX_FILE, buf)?;
    println!(
        "indexed {} passages, {} terms -> {}",
        index.doc_count(),
        index.vocabulary_size(),
        path.display()
    );
    out.finish(
        "index",
        seed,
        json!({"doc_count": index.doc_count(), "vocabulary_size": index.vocabulary_size(), "k1": args.k1, "b": args.b}),
    )
}

pub fn run(args: &RunArgs, seed: Option<u64>) -> Result<()> {
    let config = load::pipeline_config(args.config.as_ref(), args.weights.as_deref(), seed)?;
    let corpus = load::corpus(&args.corpus.corpus)?;
    let bench = load::conversations(&args.bench)?;
    for conv in &bench {
        let check = validate_conversation_with_corpus(conv, |id| corpus.contains(id));
        if !check.is_ok() {
            return Err(CliError::data(format!("conversation {}: {check}", conv.id)));
        }
    }
    let retriever = load::retriever(config.retriever_kind, &args.corpus, &corpus)?;
    let backend = load::backend(&args.backend, seed)?;
    let mut out = OutDir::prepare(&args.out)?;

    let pipeline = Pipeline::new(&config, backend.as_ref(), retriever.as_ref(), &corpus);
    let mut records: Vec<RunRecord> = Vec::new();
    for chunk in bench.chunks(args.parallel.max(1)) {
        let results: Vec<_> = std::thread::scope(|s| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|conv| {
                    let pipeline = &pipeline;
                    s.spawn(move || run_conversation(pipeline, conv, &StepClock::default()))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("run thread panicked")).collect()
        });
        for (conv, r) in chunk.iter().zip(results) {
            records.extend(r.map_err(|e| {
                let mut err = CliError::from(e);
                err.message = format!("conversation {}: {}", conv.id, err.message);
                err
            })?);
        }
    }

    let mut log = Vec::new();
    write_records(&mut log, &records).map_err(|e| CliError::internal(e.to_string()))?;
    let log_path = out.write("runlog.jsonl", log)?;
    let metrics = run_metrics(&records);
    out.write_json("metrics.json", &metrics)?;
    println!(
        "{} turns over {} conversations -> {} (retrieval rate {:.3})",
        records.len(),
        bench.len(),
        log_path.display(),
        metrics.retrieval_rate
    );
    out.finish(
        "run",
        seed,
        json!({"conversations": bench.len(), "turns": records.len(), "backend": backend.name(), "config": config}),
    )
}

fn print_turn(r: &TurnResult, scores: bool) {
    let mut line = format!("[{}]", r.decision.choice.as_str());
    if let Some(q) = &r.query {
        line.push_str(&format!(" query: {}", q.combined));
    }
    if !r.retrieved.is_empty() {
        line.push_str(&format!(" | passages: {}", r.retrieved.ids().join(", ")));
    }
    if r.retriever_calls == 0 && !r.prior_passage_ids.is_empty() {
        line.push_str(&format!(" | reused: {}", r.prior_passage_ids.join(", ")));
    }
    println!("{line}");
    if scores {
        for (i, c) in r.candidates.iter().enumerate() {
            let mark = if i == r.selected_index { '*' } else { ' ' };
            let source = c.passage_id().unwrap_or("-");
            match &c.failure {
                Some(f) => println!(" {mark} #{i} {source}: failed ({f})"),
                None => {
                    let parts: Vec<String> = c
                        .segments
                        .iter()
                        .map(|s| {
                            let sc = &s.score;
                            format!(
                                "p={:.3} rel={} grd={} utl={:.3} = {:.3}",
                                sc.p_norm,
                                sc.s_rel.map_or("-".into(), |v| format!("{v:.3}")),
                                sc.s_grd.map_or("-".into(), |v| format!("{v:.3}")),
                                sc.s_utl,
                                sc.composite
                            )
                        })
                        .collect();
                    println!(" {mark} #{i} {source}: total {:.3} [{}]", c.total, parts.join("; "));
                }
            }
        }
    }
    println!("> {}", r.response_text());
}

pub fn chat(args: &ChatArgs, seed: Option<u64>) -> Result<()> {
    let config = load::pipeline_config(args.config.as_ref(), args.weights.as_deref(), seed)?;
    let corpus = load::corpus(&args.corpus.corpus)?;
    let retriever = load::retriever(config.retriever_kind, &args.corpus, &corpus)?;
    let backend = load::backend(&args.backend, seed)?;
    let pipeline = Pipeline::new(&config, backend.as_ref(), retriever.as_ref(), &corpus);
    let mut session = Conversation::new("chat");
    let stdin = std::io::stdin();
    let mut input = stdin.lock();
    loop {
        print!("you: ");
        let _ = std::io::stdout().flush();
        let mut line = String::new();
        if input.read_line(&mut line).map_err(|e| CliError::internal(e.to_string()))? == 0 {
            println!();
            return Ok(());
        }
        let text = line.trim();
        match text {
            "" => continue,
            ":quit" | ":q" => return Ok(()),
            _ => {}
        }
        match pipeline.run_turn(&mut session, text, &SystemClock, &mut |_| {}) {
            Ok(r) => print_turn(&r, args.scores),
            Err(e) => {
                CliError::from(e).report();
            }
        }
    }
}

pub fn eval_retrieval(args: &EvalRetrievalArgs, seed: Option<u64>) -> Result<()> {
    let reps: Vec<Representation> = args.representations.clone().unwrap_or_else(|| Representation::ALL.to_vec());
    let backend = load::backend_opt(&args.backend, seed)?;
    if backend.is_none() {
        if let Some(r) = reps.iter().find(|r| matches!(r, Representation::Rewrite | Representation::Summary)) {
            return Err(CliError::usage(format!(
                "representation {r} needs a backend: pass --script or --backend-url, or choose --representations"
            )));
        }
    }
    let corpus = load::corpus(&args.corpus.corpus)?;
    let bench = load::conversations(&args.bench)?;
    let mut retrievers: Vec<(_, Box<dyn Retriever>)> = Vec::new();
    for kind in &args.retrievers {
        retrievers.push((*kind, load::retriever(*kind, &args.corpus, &corpus)?));
    }
    let named: Vec<NamedRetriever<'_>> = retrievers.iter().map(|(k, r)| (*k, r.as_ref())).collect();
    let mut out = OutDir::prepare(&args.out)?;
    let report = retrieval_report(&bench, &reps, &named, backend.as_deref(), args.max_tokens).map_err(|e| match e {
        multirag_core::eval::ReportError::Backend { .. } => CliError::backend(e.to_string()),
        _ => CliError::data(e.to_string()),
    })?;
    let table = report.to_table();
    out.write_json("report.json", &report)?;
    out.write("report.txt", &table)?;
    print!("{table}");
    out.finish(
        "eval-retrieval",
        seed,
        json!({"backend": backend.map(|b| b.name()), "questions": report.rows.first().map(|r| r.n_questions)}),
    )
}

pub fn eval_critic(args: &EvalCriticArgs, seed: Option<u64>) -> Result<()> {
    let preds: Vec<CriticPrediction> = load::jsonl(&args.predictions)?;
    let rows = critic_accuracy(&preds).map_err(|e| CliError::data(format!("{}: {e}", args.predictions.display())))?;
    let mut out = OutDir::prepare(&args.out)?;
    let table = format!("{}\n* {}\n", critic_table(&rows), REFERENCE_FOOTNOTE);
    out.write_json(
        "critic.json",
        &json!({"version": REPORT_VERSION, "rows": rows, "footnote": REFERENCE_FOOTNOTE}),
    )?;
    out.write("critic.txt", &table)?;
    print!("{table}");
    out.finish("eval-critic", seed, json!({"records": preds.len()}))
}

fn write_dataset(out: &mut OutDir, name: &str, stats: &LabelStats, records: &[multirag_core::datagen::LabeledInstance]) -> Result<()> {
    let mut body = Vec::new();
    write_records(&mut body, records).map_err(|e| CliError::internal(e.to_string()))?;
    out.write(name, body)?;
    out.write_json("stats.json", stats)?;
    out.write("stats.txt", stats.to_table())?;
    Ok(())
}

pub fn datagen(args: &DatagenArgs, seed: Option<u64>) -> Result<()> {
    let instances: Vec<Instance> = load::jsonl(&args.instances)?;
    let judge = load::backend(&args.backend, seed)?;
    let mut out = OutDir::prepare(&args.out)?;
    let opts = CollectOptions {
        parallel: args.parallel.max(1),
        max_tokens: args.max_tokens,
        temperature: 0.0,
        seed,
    };
    match collect_labels(judge.as_ref(), args.task, &instances, &opts) {
        Ok(c) => {
            write_dataset(&mut out, "dataset.jsonl", &c.stats, &c.records)?;
            print!("{}", c.stats.to_table());
            out.finish(
                "datagen",
                seed,
                json!({"task": args.task, "judge": judge.name(), "instances": instances.len()}),
            )
        }
        Err(e) => {
            // Labels already paid for are kept; the run can resume from them.
            write_dataset(&mut out, "dataset.partial.jsonl", &e.partial.stats, &e.partial.records)?;
            out.keep();
            Err(CliError::backend(e.to_string()))
        }
    }
}

pub fn serve(args: &ServeArgs) -> Result<()> {
    let mut cfg = ServiceConfig::load(args.config.as_deref()).map_err(|e| CliError::data(e.to_string()))?;
    if let Some(v) = &args.listen {
        cfg.listen = v.clone();
    }
    if let Some(v) = &args.corpus {
        cfg.corpus = Some(v.clone());
    }
    if let Some(v) = &args.index {
        cfg.index = Some(if v.is_dir() { v.join(INDEX_FILE) } else { v.clone() });
    }
    if let Some(v) = &args.script {
        cfg.script = Some(v.clone());
    }
    if let Some(v) = &args.backend_url {
        cfg.backend_url = Some(v.clone());
    }
    if let Some(v) = &args.data_dir {
        cfg.data_dir = v.clone();
    }
    let _ = tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .try_init();
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::internal(e.to_string()))?;
    rt.block_on(multirag_service::serve(cfg)).map_err(|e| match e {
        multirag_service::ServiceError::Io(_) => CliError::internal(e.to_string()),
        _ => CliError::data(e.to_string()),
    })
}

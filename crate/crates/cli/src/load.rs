//! Reading inputs and building the pipeline's collaborators.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use multirag_core::backend::{LanguageModel, MockScript, RemoteBackend, RemoteConfig, ScriptedBackend};
use multirag_core::conversation::read_conversations;
use multirag_core::retrieval::{
    Bm25Index, Bm25Params, Corpus, DenseRetriever, HashingEmbedder, Retriever, RetrieverKind,
};
use multirag_core::{validate_config, Conversation, PipelineConfig, ScoringWeights};

use crate::args::{BackendArgs, CorpusArgs};
use crate::error::{CliError, Result};

pub const INDEX_FILE: &str = "index.bm25";
pub const DENSE_DIM: usize = multirag_service::DENSE_DIM;

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

pub fn corpus(path: &Path) -> Result<Corpus> {
    Corpus::read_jsonl(open(path)?).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

pub fn conversations(path: &Path) -> Result<Vec<Conversation>> {
    read_conversations(open(path)?).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

pub fn jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    multirag_core::jsonl::read_records(open(path)?).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn parse_weights(s: &str) -> Result<ScoringWeights> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| CliError::usage(format!("--weights {s:?}: {e}")))?;
    match parts[..] {
        [w1, w2, w3] => Ok(ScoringWeights::new(w1, w2, w3)),
        _ => Err(CliError::usage(format!("--weights expects w1,w2,w3, got {s:?}"))),
    }
}

/// Pipeline config from a TOML or JSON file, with weight and seed overrides,
/// validated.
pub fn pipeline_config(path: Option<&PathBuf>, weights: Option<&str>, seed: Option<u64>) -> Result<PipelineConfig> {
    let mut cfg = match path {
        None => PipelineConfig::default(),
        Some(p) => {
            let text = read_to_string(p)?;
            let parsed = if p.extension().is_some_and(|e| e == "json") {
                serde_json::from_str(&text).map_err(|e| e.to_string())
            } else {
                toml::from_str(&text).map_err(|e| e.to_string())
            };
            parsed.map_err(|e| CliError::data(format!("{}: {e}", p.display())))?
        }
    };
    if let Some(w) = weights {
        cfg.weights = parse_weights(w)?;
    }
    if seed.is_some() {
        cfg.seed = seed;
    }
    let check = validate_config(&cfg);
    if !check.is_ok() {
        return Err(CliError::data(format!("pipeline config: {check}")));
    }
    Ok(cfg)
}

/// The backend named by the flags, or `None` when neither flag is given.
pub fn backend_opt(args: &BackendArgs, seed: Option<u64>) -> Result<Option<Arc<dyn LanguageModel>>> {
    if let Some(path) = &args.script {
        let script = MockScript::read_jsonl(open(path)?).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        return Ok(Some(Arc::new(ScriptedBackend::named(script, format!("script:{}", path.display())))));
    }
    if let Some(url) = &args.backend_url {
        let config = RemoteConfig {
            base_url: url.clone(),
            timeout_ms: args.timeout_ms,
            retries: args.retries,
            seed,
            ..RemoteConfig::default()
        };
        return Ok(Some(Arc::new(RemoteBackend::new(config)?)));
    }
    Ok(None)
}

pub fn backend(args: &BackendArgs, seed: Option<u64>) -> Result<Arc<dyn LanguageModel>> {
    backend_opt(args, seed)?.ok_or_else(|| CliError::usage("a backend is required: pass --script or --backend-url"))
}

pub fn bm25(args: &CorpusArgs, corpus: &Corpus) -> Result<Bm25Index<f64>> {
    let index = match &args.index {
        Some(p) => {
            let file = if p.is_dir() { p.join(INDEX_FILE) } else { p.clone() };
            Bm25Index::load(open(&file)?).map_err(|e| CliError::data(format!("{}: {e}", file.display())))?
        }
        None => Bm25Index::build(corpus, Bm25Params::default()),
    };
    if index.doc_count() != corpus.len() || index.doc_ids().iter().any(|id| !corpus.contains(id)) {
        return Err(CliError::data("index does not match the corpus"));
    }
    Ok(index)
}

pub fn retriever(kind: RetrieverKind, args: &CorpusArgs, corpus: &Corpus) -> Result<Box<dyn Retriever>> {
    Ok(match kind {
        RetrieverKind::Bm25 => Box::new(bm25(args, corpus)?),
        RetrieverKind::Dense => Box::new(
            DenseRetriever::build(Box::new(HashingEmbedder::new(DENSE_DIM)), corpus)
                .map_err(|e| CliError::data(e.to_string()))?,
        ),
    })
}

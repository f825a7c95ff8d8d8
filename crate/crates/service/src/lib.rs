//! HTTP service exposing the pipeline as sessions.
//!
//! | Method | Path | |
//! |---|---|---|
//! | POST | `/sessions` | create a session; body is an optional object of config overrides |
//! | GET | `/sessions/{id}` | conversation, config and every turn result |
//! | POST | `/sessions/{id}/turns` | `{"text": ...}`; runs one turn and returns its result |
//! | GET | `/sessions/{id}/events` | NDJSON event stream: full replay, then live |
//! | GET | `/corpus/stats` | corpus and index summary |
//! | GET | `/healthz` | liveness |
//!
//! Errors are `{code, message, detail}`.

pub mod config;
pub mod error;
pub mod routes;
pub mod state;
pub mod store;

use std::fs::File;
use std::io::BufReader;
use std::sync::Arc;

use thiserror::Error;

use multirag_core::backend::{LanguageModel, MockScript, RemoteBackend, ScriptedBackend};
use multirag_core::retrieval::{
    Bm25Index, Bm25Params, Corpus, DenseRetriever, HashingEmbedder, Retriever, RetrieverKind,
};

pub use config::{ConfigError, ServiceConfig, ENV_VARS};
pub use error::{ApiError, ErrorBody};
pub use routes::router;
pub use state::{AppState, CorpusStats, Parts};
pub use store::{Session, SessionStore, StoreError, TurnRecord};

/// Dimension of the hashing embedder used for dense retrieval.
pub const DENSE_DIM: usize = 512;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Setup(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("server: {0}")]
    Io(#[from] std::io::Error),
}

fn open(path: &std::path::Path) -> Result<BufReader<File>, ServiceError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| ServiceError::Setup(format!("{}: {e}", path.display())))
}

/// Loads the corpus, index and backend named by `cfg` and recovers
/// persisted sessions.
pub fn build_state(cfg: &ServiceConfig) -> Result<(AppState, Vec<String>), ServiceError> {
    let corpus_path = cfg
        .corpus
        .as_ref()
        .ok_or_else(|| ServiceError::Setup("no corpus configured (MULTIRAG_CORPUS)".into()))?;
    let corpus = Corpus::read_jsonl(open(corpus_path)?)
        .map_err(|e| ServiceError::Setup(format!("{}: {e}", corpus_path.display())))?;

    let backend: Arc<dyn LanguageModel> = if let Some(path) = &cfg.script {
        let script = MockScript::read_jsonl(open(path)?)
            .map_err(|e| ServiceError::Setup(format!("{}: {e}", path.display())))?;
        Arc::new(ScriptedBackend::named(script, format!("script:{}", path.display())))
    } else if let Some(remote) = cfg.remote_config() {
        Arc::new(RemoteBackend::new(remote).map_err(|e| ServiceError::Setup(e.to_string()))?)
    } else {
        return Err(ServiceError::Setup(
            "no backend configured (MULTIRAG_SCRIPT or MULTIRAG_BACKEND_URL)".into(),
        ));
    };

    let (retriever, stats): (Arc<dyn Retriever>, CorpusStats) = match cfg.pipeline.retriever_kind {
        RetrieverKind::Bm25 => {
            let index: Bm25Index<f64> = match &cfg.index {
                Some(path) => Bm25Index::load(open(path)?)
                    .map_err(|e| ServiceError::Setup(format!("{}: {e}", path.display())))?,
                None => Bm25Index::build(&corpus, Bm25Params::default()),
            };
            if index.doc_count() != corpus.len() {
                return Err(ServiceError::Setup(format!(
                    "index covers {} passages but the corpus has {}",
                    index.doc_count(),
                    corpus.len()
                )));
            }
            let stats = CorpusStats {
                passages: corpus.len(),
                retriever: RetrieverKind::Bm25,
                index_terms: Some(index.vocabulary_size()),
                avg_doc_length: Some(index.avg_doc_length()),
            };
            (Arc::new(index), stats)
        }
        RetrieverKind::Dense => {
            let dense = DenseRetriever::build(Box::new(HashingEmbedder::new(DENSE_DIM)), &corpus)
                .map_err(|e| ServiceError::Setup(e.to_string()))?;
            let stats = CorpusStats {
                passages: corpus.len(),
                retriever: RetrieverKind::Dense,
                index_terms: None,
                avg_doc_length: None,
            };
            (Arc::new(dense), stats)
        }
    };

    let parts = Parts {
        corpus: Arc::new(corpus),
        retriever,
        backend,
        defaults: cfg.pipeline.clone(),
        store: SessionStore::open(&cfg.data_dir)?,
        stats,
    };
    Ok(AppState::new(parts)?)
}

/// Serves until `shutdown` resolves.
pub async fn serve_with_shutdown(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<(), ServiceError> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await?;
    Ok(())
}

/// Builds the state, binds `cfg.listen` and serves until Ctrl-C.
pub async fn serve(cfg: ServiceConfig) -> Result<(), ServiceError> {
    let (state, warnings) = tokio::task::spawn_blocking({
        let cfg = cfg.clone();
        move || build_state(&cfg)
    })
    .await
    .map_err(|e| ServiceError::Setup(e.to_string()))??;
    for w in warnings {
        tracing::warn!("{w}");
    }
    let listener = tokio::net::TcpListener::bind(&cfg.listen).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    serve_with_shutdown(listener, state, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}

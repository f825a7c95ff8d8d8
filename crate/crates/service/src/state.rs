//! Shared service state: the read-only corpus, retriever and backend, and
//! the live sessions.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::json;
use tokio::sync::broadcast;

use multirag_core::backend::{prompt_digest, LanguageModel};
use multirag_core::orchestrator::{Pipeline, SystemClock, TurnEvent, TurnResult};
use multirag_core::retrieval::{Corpus, Retriever, RetrieverKind};
use multirag_core::PipelineConfig;

use crate::error::ApiError;
use crate::store::{Manifest, Session, SessionStore, StoreError, TurnRecord, STORE_VERSION};

const CHANNEL_CAPACITY: usize = 1024;

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

fn event_line(e: &TurnEvent) -> String {
    serde_json::to_string(e).expect("events serialize")
}

struct Live {
    session: Session,
    /// Events of the turn in flight, for subscribers that join mid-turn.
    inflight: Vec<String>,
}

/// One session plus its event fan-out. `busy` serializes turns.
pub struct SessionHandle {
    live: Mutex<Live>,
    busy: AtomicBool,
    events: broadcast::Sender<String>,
}

/// Clears the busy flag when the turn ends, however it ends.
pub struct TurnPermit(Arc<SessionHandle>);

impl Drop for TurnPermit {
    fn drop(&mut self) {
        self.0.busy.store(false, Ordering::SeqCst);
    }
}

impl SessionHandle {
    fn new(session: Session) -> Self {
        Self {
            live: Mutex::new(Live {
                session,
                inflight: Vec::new(),
            }),
            busy: AtomicBool::new(false),
            events: broadcast::channel(CHANNEL_CAPACITY).0,
        }
    }

    pub fn snapshot(&self) -> Session {
        self.live.lock().expect("session lock").session.clone()
    }

    pub fn try_begin_turn(self: &Arc<Self>) -> Option<TurnPermit> {
        (!self.busy.swap(true, Ordering::SeqCst)).then(|| TurnPermit(self.clone()))
    }

    fn publish(&self, line: String) {
        let mut live = self.live.lock().expect("session lock");
        live.inflight.push(line.clone());
        let _ = self.events.send(line);
    }

    /// Events already emitted, in order, and a receiver for the rest. Both
    /// are taken under the session lock so nothing is missed or repeated.
    pub fn subscribe(&self) -> (Vec<String>, broadcast::Receiver<String>) {
        let live = self.live.lock().expect("session lock");
        let mut replay: Vec<String> = live
            .session
            .turn_results
            .iter()
            .flat_map(|r| r.events.iter().map(event_line))
            .collect();
        replay.extend(live.inflight.iter().cloned());
        (replay, self.events.subscribe())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub passages: usize,
    pub retriever: RetrieverKind,
    pub index_terms: Option<usize>,
    pub avg_doc_length: Option<f64>,
}

/// Everything the service needs to run turns.
pub struct Parts {
    pub corpus: Arc<Corpus>,
    pub retriever: Arc<dyn Retriever>,
    pub backend: Arc<dyn LanguageModel>,
    pub defaults: PipelineConfig,
    pub store: SessionStore,
    pub stats: CorpusStats,
}

struct Shared {
    parts: Parts,
    sessions: RwLock<HashMap<String, Arc<SessionHandle>>>,
}

#[derive(Clone)]
pub struct AppState {
    shared: Arc<Shared>,
}

impl AppState {
    /// Loads persisted sessions from the store. Returns the state and any
    /// recovery warnings.
    pub fn new(parts: Parts) -> Result<(Self, Vec<String>), StoreError> {
        let (sessions, warnings) = parts.store.load_all()?;
        let sessions = sessions
            .into_iter()
            .map(|s| (s.id.clone(), Arc::new(SessionHandle::new(s))))
            .collect();
        let state = Self {
            shared: Arc::new(Shared {
                parts,
                sessions: RwLock::new(sessions),
            }),
        };
        Ok((state, warnings))
    }

    pub fn stats(&self) -> &CorpusStats {
        &self.shared.parts.stats
    }

    pub fn backend_name(&self) -> String {
        self.shared.parts.backend.name()
    }

    pub fn session(&self, id: &str) -> Result<Arc<SessionHandle>, ApiError> {
        self.shared
            .sessions
            .read()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.shared.sessions.read().expect("session map lock").keys().cloned().collect();
        ids.sort();
        ids
    }

    /// Validates overrides, persists the manifest and registers the session.
    pub fn create_session(&self, overrides: &serde_json::Value) -> Result<Session, ApiError> {
        if !overrides.is_object() {
            return Err(ApiError::bad_request("session overrides must be a JSON object"));
        }
        let defaults = &self.shared.parts.defaults;
        let config = defaults
            .with_overrides(overrides)
            .map_err(|e| ApiError::validation(format!("invalid overrides: {e}")))?;
        let check = multirag_core::validate_config(&config);
        if !check.is_ok() {
            return Err(ApiError::validation("invalid pipeline config").with_detail(json!({ "violations": check.messages() })));
        }
        if config.retriever_kind != self.shared.parts.retriever.kind() {
            return Err(ApiError::validation(format!(
                "retriever {} is not loaded; this service runs {}",
                config.retriever_kind,
                self.shared.parts.retriever.kind()
            )));
        }
        let manifest = Manifest {
            version: STORE_VERSION,
            id: uuid::Uuid::new_v4().simple().to_string(),
            config_ref: prompt_digest(&serde_json::to_string(&config).expect("config serializes")),
            config,
            created_at: now_ms(),
        };
        self.shared
            .parts
            .store
            .create(&manifest)
            .map_err(|e| ApiError::internal(e.to_string()))?;
        let session = Session::from_manifest(manifest);
        self.shared
            .sessions
            .write()
            .expect("session map lock")
            .insert(session.id.clone(), Arc::new(SessionHandle::new(session.clone())));
        Ok(session)
    }

    /// Runs one pipeline turn. Blocking; call from a blocking task. The
    /// caller holds the session's [`TurnPermit`].
    pub fn run_turn(&self, handle: &SessionHandle, text: &str) -> Result<TurnResult, ApiError> {
        let parts = &self.shared.parts;
        let (mut conversation, config, id) = {
            let live = handle.live.lock().expect("session lock");
            (live.session.conversation.clone(), live.session.config.clone(), live.session.id.clone())
        };
        let turn_index = conversation.turns.len();
        let pipeline = Pipeline::new(&config, parts.backend.as_ref(), parts.retriever.as_ref(), &parts.corpus);
        let mut sink = |e: &TurnEvent| handle.publish(event_line(e));
        let outcome = pipeline
            .run_turn(&mut conversation, text, &SystemClock, &mut sink)
            .map_err(ApiError::from)
            .and_then(|result| {
                let n = conversation.turns.len();
                let record = TurnRecord {
                    user: conversation.turns[n - 2].clone(),
                    assistant: conversation.turns[n - 1].clone(),
                    result,
                    at: now_ms(),
                };
                parts
                    .store
                    .append(&id, &record)
                    .map_err(|e| ApiError::internal(format!("persisting turn: {e}")))?;
                Ok(record)
            });

        let mut live = handle.live.lock().expect("session lock");
        live.inflight.clear();
        match outcome {
            Ok(record) => {
                let result = record.result.clone();
                live.session.apply(record);
                Ok(result)
            }
            Err(e) => {
                let line = json!({
                    "type": "aborted",
                    "turn_index": turn_index,
                    "code": e.body.code,
                    "message": e.body.message,
                })
                .to_string();
                let _ = handle.events.send(line);
                Err(e)
            }
        }
    }
}

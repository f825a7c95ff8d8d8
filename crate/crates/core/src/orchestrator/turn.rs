use std::sync::atomic::{AtomicUsize, Ordering};

use super::beam::{beam_select, BeamNode};
use super::candidates::generate_candidates;
use super::clock::Clock;
use super::decide::decide_retrieval;
use super::summarize::summarize_for_retrieval;
use super::types::{CandidateResponse, Decision, EventKind, TurnError, TurnEvent, TurnResult};
use crate::backend::LanguageModel;
use crate::config::{validate_config, PipelineConfig};
use crate::conversation::{validate_conversation, Conversation, Passage, Role, Turn};
use crate::retrieval::{Corpus, RetrieveError, Retriever, RetrieverKind};
use crate::RankedList;

/// Wraps a retriever and counts calls.
pub struct CountingRetriever<R> {
    inner: R,
    calls: AtomicUsize,
}

impl<R: Retriever> CountingRetriever<R> {
    pub fn new(inner: R) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<R: Retriever> Retriever for CountingRetriever<R> {
    fn kind(&self) -> RetrieverKind {
        self.inner.kind()
    }

    fn retrieve(&self, query: &str, k: usize) -> Result<RankedList, RetrieveError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.retrieve(query, k)
    }
}

/// Ids of passages attached to the turns back to and including the
/// `window`-th most recent assistant turn, most recent first, deduplicated
/// and capped at `cap`.
pub fn prior_passage_ids(history: &Conversation, window: usize, cap: usize) -> Vec<String> {
    let mut ids: Vec<String> = Vec::new();
    let mut assistants = 0;
    for turn in history.turns.iter().rev() {
        if turn.role == Role::Assistant {
            if assistants == window {
                break;
            }
            assistants += 1;
        }
        for id in &turn.attached_passage_ids {
            if !ids.contains(id) {
                ids.push(id.clone());
            }
        }
    }
    ids.truncate(cap);
    ids
}

/// The collaborators of one pipeline turn.
pub struct Pipeline<'a> {
    pub config: &'a PipelineConfig,
    pub backend: &'a dyn LanguageModel,
    pub retriever: &'a dyn Retriever,
    pub corpus: &'a Corpus,
}

struct Emitter<'s> {
    turn_index: usize,
    clock: &'s dyn Clock,
    sink: &'s mut dyn FnMut(&TurnEvent),
    events: Vec<TurnEvent>,
}

impl Emitter<'_> {
    fn emit(&mut self, kind: EventKind) {
        let event = TurnEvent {
            turn_index: self.turn_index,
            seq: self.events.len(),
            t_ms: self.clock.now_ms(),
            kind,
        };
        (self.sink)(&event);
        self.events.push(event);
    }
}

impl<'a> Pipeline<'a> {
    pub fn new(
        config: &'a PipelineConfig,
        backend: &'a dyn LanguageModel,
        retriever: &'a dyn Retriever,
        corpus: &'a Corpus,
    ) -> Self {
        Self {
            config,
            backend,
            retriever,
            corpus,
        }
    }

    fn resolve(&self, ids: &[String]) -> Result<Vec<Passage>, TurnError> {
        ids.iter()
            .map(|id| {
                self.corpus
                    .get(id)
                    .cloned()
                    .ok_or_else(|| TurnError::UnknownPassage(id.clone()))
            })
            .collect()
    }

    /// Runs one turn for a plain user message. See [`Pipeline::run_user_turn`].
    pub fn run_turn(
        &self,
        session: &mut Conversation,
        user_message: &str,
        clock: &dyn Clock,
        sink: &mut dyn FnMut(&TurnEvent),
    ) -> Result<TurnResult, TurnError> {
        self.run_user_turn(session, Turn::user(user_message), clock, sink)
    }

    /// Appends `user_turn`, runs the pipeline and appends the selected
    /// answer. On error `session` is left untouched. Events reach `sink` as
    /// each stage completes and are also returned in the result.
    pub fn run_user_turn(
        &self,
        session: &mut Conversation,
        user_turn: Turn,
        clock: &dyn Clock,
        sink: &mut dyn FnMut(&TurnEvent),
    ) -> Result<TurnResult, TurnError> {
        let cfg = self.config;
        let check = validate_config(cfg);
        if !check.is_ok() {
            return Err(TurnError::InvalidSession(format!("config: {check}")));
        }
        if user_turn.role != Role::User {
            return Err(TurnError::InvalidSession("the new turn must be a user turn".into()));
        }
        if user_turn.text.trim().is_empty() {
            return Err(TurnError::EmptyMessage);
        }
        let check = validate_conversation(session);
        if !check.is_ok() {
            return Err(TurnError::InvalidSession(check.to_string()));
        }
        if session.ends_with_user() {
            return Err(TurnError::InvalidSession("session already ends with a user turn".into()));
        }

        let mut conv = session.clone();
        let turn_index = conv.turns.len();
        let user_text = user_turn.text.clone();
        conv.turns.push(user_turn);

        let mut em = Emitter {
            turn_index,
            clock,
            sink,
            events: Vec::new(),
        };

        let prior_ids = prior_passage_ids(&conv, cfg.continue_window, cfg.top_k);
        let prior = self.resolve(&prior_ids)?;
        let decision = decide_retrieval(&conv, &prior, self.backend)?;
        em.emit(EventKind::Decision {
            decision: decision.clone(),
        });

        let mut query = None;
        let mut retrieved = RankedList::default();
        let mut retriever_calls = 0;
        let passages = match decision.choice {
            Decision::Retrieve => {
                let q = summarize_for_retrieval(&conv, self.backend, cfg.summary_max_tokens)?;
                em.emit(EventKind::Query { query: q.clone() });
                retriever_calls += 1;
                retrieved = self.retriever.retrieve(&q.combined, cfg.top_k)?;
                em.emit(EventKind::Retrieved {
                    retrieved: retrieved.clone(),
                });
                query = Some(q);
                let ids: Vec<String> = retrieved.ids().into_iter().map(String::from).collect();
                self.resolve(&ids)?
            }
            Decision::ContinueToUseEvidence => prior,
            Decision::NoRetrieve => Vec::new(),
        };

        let candidates = generate_candidates(&conv, &passages, cfg, self.backend)?;
        for (index, candidate) in candidates.iter().enumerate() {
            em.emit(EventKind::Candidate {
                index,
                candidate: candidate.clone(),
            });
        }

        let live: Vec<usize> = (0..candidates.len()).filter(|i| !candidates[*i].is_failed()).collect();
        let roots: Vec<BeamNode<f64>> = live
            .iter()
            .map(|i| {
                let scores: Vec<f64> = candidates[*i].segments.iter().map(|s| s.score.composite).collect();
                BeamNode::chain(&scores)
            })
            .collect();
        let best = beam_select(&roots, cfg.beam_size).expect("at least one live candidate");
        let selected_index = live[best.path[0]];
        let selected: CandidateResponse = candidates[selected_index].clone();
        em.emit(EventKind::Selected {
            index: selected_index,
            text: selected.text.clone(),
        });

        let mut answer = Turn::assistant(selected.text.clone());
        if let Some(id) = selected.passage_id() {
            answer.attached_passage_ids = vec![id.to_string()];
        }
        conv.turns.push(answer);
        *session = conv;

        Ok(TurnResult {
            turn_index,
            user_text,
            decision,
            prior_passage_ids: prior_ids,
            query,
            retrieved,
            candidates,
            selected_index,
            selected,
            retriever_calls,
            events: em.events,
        })
    }
}

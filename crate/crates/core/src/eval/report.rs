use std::collections::BTreeSet;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{REFERENCE_FOOTNOTE, REPORT_VERSION};
use crate::backend::{BackendError, GenerationRequest, LanguageModel};
use crate::conversation::{Conversation, Role};
use crate::orchestrator::prompts::render_history;
use crate::orchestrator::{summarize_for_retrieval, TurnError};
use crate::retrieval::{hit_at_k, recall_at_k, RetrieveError, Retriever, RetrieverKind};

pub const TASK_REWRITE: &str = "### Task: rewrite";

/// How a conversation is turned into a search query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    LastTurn,
    FullConversation,
    Rewrite,
    Summary,
    GoldRewrite,
}

impl Representation {
    pub const ALL: [Representation; 5] = [
        Representation::LastTurn,
        Representation::FullConversation,
        Representation::Rewrite,
        Representation::Summary,
        Representation::GoldRewrite,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Representation::LastTurn => "last_turn",
            Representation::FullConversation => "full_conversation",
            Representation::Rewrite => "rewrite",
            Representation::Summary => "summary",
            Representation::GoldRewrite => "gold_rewrite",
        }
    }

    fn needs_backend(self) -> bool {
        matches!(self, Representation::Rewrite | Representation::Summary)
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Representation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Representation::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown representation {s:?}"))
    }
}

pub type NamedRetriever<'a> = (RetrieverKind, &'a dyn Retriever);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReportRow {
    pub representation: Representation,
    pub retriever: RetrieverKind,
    pub r_at_5: f64,
    pub r_at_10: f64,
    pub hit_at_5: f64,
    pub hit_at_10: f64,
    /// Questions the means are taken over.
    pub n_questions: usize,
    /// Questions left out of this row.
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub version: u32,
    pub rows: Vec<RetrievalReportRow>,
    pub warnings: Vec<String>,
    pub footnote: String,
}

impl RetrievalReport {
    pub fn row(&self, representation: Representation, retriever: RetrieverKind) -> Option<&RetrievalReportRow> {
        self.rows
            .iter()
            .find(|r| r.representation == representation && r.retriever == retriever)
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<18} {:<6} {:>6} {:>6} {:>6} {:>6} {:>5} {:>7}\n",
            "representation", "ret", "R@5", "R@10", "H@5", "H@10", "n", "skipped"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<18} {:<6} {:>6.3} {:>6.3} {:>6.3} {:>6.3} {:>5} {:>7}",
                r.representation.as_str(),
                r.retriever.to_string(),
                r.r_at_5,
                r.r_at_10,
                r.hit_at_5,
                r.hit_at_10,
                r.n_questions,
                r.skipped
            );
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        let _ = writeln!(out, "\n* {}", self.footnote);
        out
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("representation {0} needs a backend")]
    MissingBackend(Representation),
    #[error("{conversation} turn {turn}: {source}")]
    Backend {
        conversation: String,
        turn: usize,
        #[source]
        source: BackendError,
    },
    #[error("{conversation} turn {turn}: {message}")]
    Query {
        conversation: String,
        turn: usize,
        message: String,
    },
    #[error(transparent)]
    Retrieve(#[from] RetrieveError),
}

/// Prompt asking the backend for a self-contained rewrite of the last user
/// question.
pub fn rewrite_prompt(history: &Conversation) -> String {
    format!(
        "### Conversation History:\n{}\n{TASK_REWRITE}\nRewrite the last user question so it can be understood without the conversation.\n",
        render_history(history)
    )
}

struct Question {
    conversation: String,
    turn: usize,
    history: Conversation,
    gold: BTreeSet<String>,
    gold_rewrite: Option<String>,
}

fn questions(benchmark: &[Conversation], warnings: &mut Vec<String>) -> (Vec<Question>, usize) {
    let mut out = Vec::new();
    let mut skipped = 0;
    for conv in benchmark {
        for (i, turn) in conv.turns.iter().enumerate() {
            if turn.role != Role::User {
                continue;
            }
            let gold: BTreeSet<String> = turn.gold_passage_ids.iter().flatten().cloned().collect();
            if gold.is_empty() {
                skipped += 1;
                warnings.push(format!("{} turn {i}: no gold passages; question skipped", conv.id));
                continue;
            }
            let mut history = conv.prefix(i + 1);
            for t in &mut history.turns {
                t.gold_passage_ids = None;
                t.gold_rewrite = None;
            }
            out.push(Question {
                conversation: conv.id.clone(),
                turn: i,
                history,
                gold,
                gold_rewrite: turn.gold_rewrite.clone(),
            });
        }
    }
    out.sort_by(|a, b| (&a.conversation, a.turn).cmp(&(&b.conversation, b.turn)));
    (out, skipped)
}

fn query_for(
    q: &Question,
    rep: Representation,
    backend: Option<&dyn LanguageModel>,
    max_tokens: usize,
) -> Result<Option<String>, ReportError> {
    let backend_err = |source| ReportError::Backend {
        conversation: q.conversation.clone(),
        turn: q.turn,
        source,
    };
    Ok(Some(match rep {
        Representation::LastTurn => q.history.last_user_text().unwrap_or_default().to_string(),
        Representation::FullConversation => q
            .history
            .turns
            .iter()
            .map(|t| t.text.trim())
            .collect::<Vec<_>>()
            .join(" "),
        Representation::GoldRewrite => match &q.gold_rewrite {
            Some(s) => s.clone(),
            None => return Ok(None),
        },
        Representation::Rewrite => {
            let backend = backend.ok_or(ReportError::MissingBackend(rep))?;
            let req = GenerationRequest::new(rewrite_prompt(&q.history), max_tokens);
            backend.generate(&req).map_err(backend_err)?.text.trim().to_string()
        }
        Representation::Summary => {
            let backend = backend.ok_or(ReportError::MissingBackend(rep))?;
            match summarize_for_retrieval(&q.history, backend, max_tokens) {
                Ok(query) => query.combined,
                Err(TurnError::Backend(e)) => return Err(backend_err(e)),
                Err(e) => {
                    return Err(ReportError::Query {
                        conversation: q.conversation.clone(),
                        turn: q.turn,
                        message: e.to_string(),
                    })
                }
            }
        }
    }))
}

/// Mean recall and hit rate at 5 and 10 for every representation and
/// retriever, in the order given. Questions are user turns with gold
/// passages, evaluated in `(conversation id, turn)` order. `backend` is
/// needed for the rewrite and summary representations.
pub fn retrieval_report(
    benchmark: &[Conversation],
    representations: &[Representation],
    retrievers: &[NamedRetriever<'_>],
    backend: Option<&dyn LanguageModel>,
    max_tokens: usize,
) -> Result<RetrievalReport, ReportError> {
    let mut warnings = Vec::new();
    let (questions, no_gold) = questions(benchmark, &mut warnings);
    let mut rows = Vec::with_capacity(representations.len() * retrievers.len());
    for &rep in representations {
        if rep.needs_backend() && backend.is_none() && !questions.is_empty() {
            return Err(ReportError::MissingBackend(rep));
        }
        let mut queries = Vec::with_capacity(questions.len());
        let mut missing = 0;
        for q in &questions {
            match query_for(q, rep, backend, max_tokens)? {
                Some(text) => queries.push((q, text)),
                None => {
                    missing += 1;
                    warnings.push(format!("{} turn {}: no {rep}; question skipped for that row", q.conversation, q.turn));
                }
            }
        }
        for &(kind, retriever) in retrievers {
            let mut sums = [0.0; 4];
            for (q, text) in &queries {
                let ranked = retriever.retrieve(text, 10)?;
                let ids = ranked.ids();
                let gold = &q.gold;
                // Gold is non-empty by construction, so the metrics are defined.
                sums[0] += recall_at_k::<f64, _>(&ids, gold, 5).unwrap_or_default();
                sums[1] += recall_at_k::<f64, _>(&ids, gold, 10).unwrap_or_default();
                sums[2] += hit_at_k::<f64, _>(&ids, gold, 5).unwrap_or_default();
                sums[3] += hit_at_k::<f64, _>(&ids, gold, 10).unwrap_or_default();
            }
            let n = queries.len();
            let mean = |s: f64| if n == 0 { 0.0 } else { s / n as f64 };
            rows.push(RetrievalReportRow {
                representation: rep,
                retriever: kind,
                r_at_5: mean(sums[0]),
                r_at_10: mean(sums[1]),
                hit_at_5: mean(sums[2]),
                hit_at_10: mean(sums[3]),
                n_questions: n,
                skipped: no_gold + missing,
            });
        }
    }
    Ok(RetrievalReport {
        version: REPORT_VERSION,
        rows,
        warnings,
        footnote: REFERENCE_FOOTNOTE.to_string(),
    })
}

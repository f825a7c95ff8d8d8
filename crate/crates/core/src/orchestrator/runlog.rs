//! Line-delimited run log: one record per pipeline turn.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::clock::Clock;
use super::turn::Pipeline;
use super::types::{TurnError, TurnResult};
use crate::conversation::{Conversation, Role};
use crate::error::FormatError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub conversation_id: String,
    pub turn_index: usize,
    pub result: TurnResult,
}

pub fn read_runlog<R: BufRead>(reader: R) -> Result<Vec<RunRecord>, FormatError> {
    crate::jsonl::read_records(reader)
}

pub fn write_runlog<W: Write>(writer: W, records: &[RunRecord]) -> std::io::Result<()> {
    crate::jsonl::write_records(writer, records)
}

/// Runs the pipeline once per user turn of a benchmark conversation. Each
/// turn sees the benchmark's own earlier turns as history, not the
/// pipeline's earlier answers, so every turn is evaluated independently.
pub fn run_conversation(
    pipeline: &Pipeline<'_>,
    conv: &Conversation,
    clock: &dyn Clock,
) -> Result<Vec<RunRecord>, TurnError> {
    let mut out = Vec::new();
    for (i, turn) in conv.turns.iter().enumerate() {
        if turn.role != Role::User {
            continue;
        }
        let mut history = conv.prefix(i);
        let mut user = turn.clone();
        user.gold_passage_ids = None;
        user.gold_rewrite = None;
        let result = pipeline.run_user_turn(&mut history, user, clock, &mut |_| {})?;
        out.push(RunRecord {
            conversation_id: conv.id.clone(),
            turn_index: i,
            result,
        });
    }
    Ok(out)
}

//! The per-turn pipeline: retrieval decision, optional summarize-and-search,
//! per-passage candidate generation, reflection scoring and beam selection.

mod beam;
mod candidates;
mod clock;
mod decide;
pub mod prompts;
mod runlog;
mod summarize;
mod turn;
mod types;

pub use beam::{beam_select, max_width, BeamNode, BeamPath};
pub use candidates::{generate_candidates, score_group};
pub use clock::{Clock, StepClock, SystemClock};
pub use decide::decide_retrieval;
pub use runlog::{read_runlog, run_conversation, write_runlog, RunRecord};
pub use summarize::{parse_summary, summarize_for_retrieval};
pub use turn::{prior_passage_ids, CountingRetriever, Pipeline};
pub use types::{
    CandidateResponse, CandidateSegment, Decision, EventKind, RetrievalDecision, RetrievalQuery, TurnError,
    TurnEvent, TurnResult,
};

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::FormatError;
use crate::orchestrator::{read_runlog, Decision, RunRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DecisionHistogram {
    pub retrieve: usize,
    pub no_retrieve: usize,
    pub continue_to_use_evidence: usize,
}

impl DecisionHistogram {
    fn add(&mut self, d: Decision) {
        match d {
            Decision::Retrieve => self.retrieve += 1,
            Decision::NoRetrieve => self.no_retrieve += 1,
            Decision::ContinueToUseEvidence => self.continue_to_use_evidence += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.retrieve + self.no_retrieve + self.continue_to_use_evidence
    }
}

/// Aggregates over every turn that was the `question`-th user question of
/// its conversation (1-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrdinalMetrics {
    pub question: usize,
    pub turns: usize,
    pub retrieval_rate: f64,
    pub decisions: DecisionHistogram,
    /// Mean total score of the selected candidate.
    pub mean_selected_total: f64,
    /// Mean of the pipeline's own groundedness score over selected segments
    /// that had evidence. `None` when no such segment exists.
    pub mean_pipeline_s_grd: Option<f64>,
    pub mean_candidates: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub version: u32,
    pub turns: usize,
    /// Fraction of turns whose decision was Retrieve; 0 for an empty log.
    pub retrieval_rate: f64,
    pub decision_histogram: DecisionHistogram,
    pub per_turn: Vec<OrdinalMetrics>,
}

#[derive(Default)]
struct Acc {
    decisions: DecisionHistogram,
    total: f64,
    grd_sum: f64,
    grd_n: usize,
    candidates: usize,
}

/// Metrics over a run log. Records are grouped per conversation and ordered
/// by turn index to assign question ordinals.
pub fn run_metrics(records: &[RunRecord]) -> RunMetrics {
    let mut by_conv: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        by_conv.entry(r.conversation_id.as_str()).or_default().push(r);
    }
    let mut overall = DecisionHistogram::default();
    let mut ordinals: BTreeMap<usize, Acc> = BTreeMap::new();
    for recs in by_conv.values_mut() {
        recs.sort_by_key(|r| r.turn_index);
        for (i, r) in recs.iter().enumerate() {
            let res = &r.result;
            overall.add(res.decision.choice);
            let acc = ordinals.entry(i + 1).or_default();
            acc.decisions.add(res.decision.choice);
            acc.total += res.selected.total;
            acc.candidates += res.candidates.len();
            for seg in &res.selected.segments {
                if let Some(g) = seg.score.s_grd {
                    acc.grd_sum += g;
                    acc.grd_n += 1;
                }
            }
        }
    }
    let rate = |h: &DecisionHistogram| match h.total() {
        0 => 0.0,
        n => h.retrieve as f64 / n as f64,
    };
    let per_turn = ordinals
        .into_iter()
        .map(|(question, a)| {
            let n = a.decisions.total() as f64;
            OrdinalMetrics {
                question,
                turns: a.decisions.total(),
                retrieval_rate: rate(&a.decisions),
                decisions: a.decisions,
                mean_selected_total: a.total / n,
                mean_pipeline_s_grd: (a.grd_n > 0).then(|| a.grd_sum / a.grd_n as f64),
                mean_candidates: a.candidates as f64 / n,
            }
        })
        .collect();
    RunMetrics {
        version: super::REPORT_VERSION,
        turns: overall.total(),
        retrieval_rate: rate(&overall),
        decision_histogram: overall,
        per_turn,
    }
}

/// Parses a run log and computes its metrics. A malformed line fails with
/// its 1-based line number.
pub fn read_run_metrics<R: BufRead>(reader: R) -> Result<RunMetrics, FormatError> {
    Ok(run_metrics(&read_runlog(reader)?))
}

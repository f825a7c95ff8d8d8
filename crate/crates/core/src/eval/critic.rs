use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datagen::{CriticTask, Label};

/// Whether the critic saw retrieved passages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "with_passages")]
    WithPassages,
    #[serde(rename = "without_passages")]
    WithoutPassages,
    #[default]
    #[serde(rename = "n/a")]
    NotApplicable,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::WithPassages => "with_passages",
            Variant::WithoutPassages => "without_passages",
            Variant::NotApplicable => "n/a",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticPrediction {
    pub task: CriticTask,
    #[serde(default)]
    pub variant: Variant,
    pub predicted: String,
    pub gold: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticEvalRow {
    pub task: CriticTask,
    pub variant: Variant,
    pub accuracy: f64,
    pub correct: usize,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CriticError {
    #[error("record {index}: {which} label {value:?} is not in the {task} alphabet")]
    OutOfAlphabet {
        index: usize,
        task: CriticTask,
        which: &'static str,
        value: String,
    },
    #[error("record {index}: {task} has no closed label alphabet")]
    OpenTask { index: usize, task: CriticTask },
}

/// Accuracy per `(task, variant)`, rows in task then variant order.
pub fn critic_accuracy(predictions: &[CriticPrediction]) -> Result<Vec<CriticEvalRow>, CriticError> {
    let mut groups: BTreeMap<(CriticTask, Variant), (usize, usize)> = BTreeMap::new();
    for (index, p) in predictions.iter().enumerate() {
        if p.task == CriticTask::Summarization {
            return Err(CriticError::OpenTask { index, task: p.task });
        }
        let parse = |which: &'static str, value: &str| {
            Label::from_canonical(p.task, value).ok_or_else(|| CriticError::OutOfAlphabet {
                index,
                task: p.task,
                which,
                value: value.to_string(),
            })
        };
        let predicted = parse("predicted", &p.predicted)?;
        let gold = parse("gold", &p.gold)?;
        let slot = groups.entry((p.task, p.variant)).or_default();
        slot.1 += 1;
        if predicted == gold {
            slot.0 += 1;
        }
    }
    Ok(groups
        .into_iter()
        .map(|((task, variant), (correct, n))| CriticEvalRow {
            task,
            variant,
            accuracy: correct as f64 / n as f64,
            correct,
            n,
        })
        .collect())
}

pub fn critic_table(rows: &[CriticEvalRow]) -> String {
    let mut out = format!("{:<14} {:<18} {:>8} {:>8} {:>6}\n", "task", "variant", "accuracy", "correct", "n");
    for r in rows {
        let _ = writeln!(
            out,
            "{:<14} {:<18} {:>8.3} {:>8} {:>6}",
            r.task.as_str(),
            r.variant.as_str(),
            r.accuracy,
            r.correct,
            r.n
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pred(task: CriticTask, predicted: &str, gold: &str) -> CriticPrediction {
        CriticPrediction {
            task,
            variant: Variant::NotApplicable,
            predicted: predicted.into(),
            gold: gold.into(),
        }
    }

    #[test]
    fn all_correct() {
        let preds: Vec<_> = (0..10).map(|_| pred(CriticTask::Relevance, "[Relevant]", "[Relevant]")).collect();
        let rows = critic_accuracy(&preds).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!((rows[0].accuracy, rows[0].n), (1.0, 10));
    }

    #[test]
    fn half_correct() {
        let preds = vec![
            pred(CriticTask::Retrieval3, "[Retrieve]", "[Retrieve]"),
            pred(CriticTask::Retrieval3, "[No Retrieve]", "[Retrieve]"),
            pred(CriticTask::Retrieval3, "[Continue to Use Evidence]", "[Continue to Use Evidence]"),
            pred(CriticTask::Retrieval3, "[Retrieve]", "[No Retrieve]"),
        ];
        assert_eq!(critic_accuracy(&preds).unwrap()[0].accuracy, 0.5);
    }

    #[test]
    fn utility_levels_compare_exactly() {
        let preds = vec![pred(CriticTask::Utility, "4", "[Utility:4]"), pred(CriticTask::Utility, "[Utility:5]", "[Utility:4]")];
        let row = &critic_accuracy(&preds).unwrap()[0];
        assert_eq!((row.correct, row.n), (1, 2));
    }

    #[test]
    fn violation_names_record() {
        let preds = vec![pred(CriticTask::Relevance, "[Relevant]", "[Relevant]"), pred(CriticTask::Relevance, "[Utility:2]", "[Relevant]")];
        let err = critic_accuracy(&preds).unwrap_err();
        assert!(matches!(err, CriticError::OutOfAlphabet { index: 1, .. }));
        assert!(err.to_string().starts_with("record 1"));
    }

    #[test]
    fn variant_wire_names() {
        assert_eq!(serde_json::to_string(&Variant::NotApplicable).unwrap(), "\"n/a\"");
        let p: CriticPrediction =
            serde_json::from_str(r#"{"task":"groundedness","variant":"with_passages","predicted":"[No support]","gold":"[No support]"}"#).unwrap();
        assert_eq!(p.variant, Variant::WithPassages);
    }
}

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::label::{parse_judge_label, Label};
use super::task::CriticTask;
use super::templates::{render_prompt, template_hash, Instance, TEMPLATE_VERSION};
use crate::backend::{BackendError, GenerationRequest, LanguageModel};

/// One dataset record. Exactly one of `label` and `failure` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledInstance {
    pub task: CriticTask,
    #[serde(flatten)]
    pub instance: Instance,
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub raw_judge_output: String,
    pub template_hash: String,
    pub template_version: u32,
    pub judge: String,
}

impl LabeledInstance {
    pub fn is_labeled(&self) -> bool {
        self.label.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatRow {
    pub label: String,
    pub count: usize,
    pub percentage: f64,
}

/// Label distribution of one collection: one row per alphabet member,
/// percentages over the labeled records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelStats {
    pub task: CriticTask,
    pub instances: usize,
    pub labeled: usize,
    pub failed: usize,
    pub rows: Vec<StatRow>,
}

impl LabelStats {
    pub fn from_records(task: CriticTask, records: &[LabeledInstance]) -> Self {
        let labels: Vec<&str> = records.iter().filter_map(|r| r.label.as_deref()).collect();
        let labeled = labels.len();
        let rows = if labeled == 0 {
            Vec::new()
        } else {
            Label::alphabet(task)
                .into_iter()
                .map(|l| {
                    let name = l.canonical();
                    let count = labels.iter().filter(|x| **x == name).count();
                    StatRow {
                        label: name,
                        count,
                        percentage: count as f64 * 100.0 / labeled as f64,
                    }
                })
                .collect()
        };
        Self {
            task,
            instances: records.len(),
            labeled,
            failed: records.len() - labeled,
            rows,
        }
    }

    pub fn percentage(&self, label: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.label == label).map(|r| r.percentage)
    }

    /// Plain-text table with columns task, #instances, token, percentage.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<14} {:>10}  {:<28} {:>10}", "task", "#instances", "token", "percentage");
        let count = format!("{}", self.labeled);
        if self.rows.is_empty() {
            let _ = writeln!(out, "{:<14} {:>10}  {:<28} {:>10}", self.task.as_str(), count, "-", "-");
        }
        for (i, row) in self.rows.iter().enumerate() {
            let (task, n) = if i == 0 { (self.task.as_str(), count.as_str()) } else { ("", "") };
            let _ = writeln!(out, "{:<14} {:>10}  {:<28} {:>9.1}%", task, n, row.label, row.percentage);
        }
        let _ = writeln!(out, "failed: {} of {}", self.failed, self.instances);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Collection {
    pub records: Vec<LabeledInstance>,
    pub stats: LabelStats,
}

/// A backend error stopped collection. `partial` holds every record before
/// the failing instance.
#[derive(Debug, thiserror::Error)]
#[error("labeling stopped at instance {index}: {source}")]
pub struct CollectError {
    pub index: usize,
    pub source: BackendError,
    pub partial: Collection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectOptions {
    /// Concurrent judge calls.
    pub parallel: usize,
    pub max_tokens: usize,
    pub temperature: f64,
    pub seed: Option<u64>,
}

impl Default for CollectOptions {
    fn default() -> Self {
        Self {
            parallel: 1,
            max_tokens: 512,
            temperature: 0.0,
            seed: None,
        }
    }
}

fn label_one(
    judge: &dyn LanguageModel,
    task: CriticTask,
    instance: &Instance,
    opts: &CollectOptions,
) -> Result<LabeledInstance, BackendError> {
    let mut record = LabeledInstance {
        task,
        instance: instance.clone(),
        label: None,
        failure: None,
        raw_judge_output: String::new(),
        template_hash: template_hash(task),
        template_version: TEMPLATE_VERSION,
        judge: judge.name(),
    };
    let prompt = match render_prompt(task, instance) {
        Ok(p) => p,
        Err(e) => {
            record.failure = Some(e.to_string());
            return Ok(record);
        }
    };
    let mut req = GenerationRequest::new(prompt, opts.max_tokens);
    req.temperature = opts.temperature;
    req.seed = opts.seed;
    let reply = judge.generate(&req)?;
    match parse_judge_label(task, &reply.text) {
        Ok(label) => record.label = Some(label.canonical()),
        Err(e) => record.failure = Some(e.to_string()),
    }
    record.raw_judge_output = reply.text;
    Ok(record)
}

/// Renders, queries the judge and parses a label for every instance, in
/// input order. Unparseable replies become failure-marked records.
pub fn collect_labels(
    judge: &dyn LanguageModel,
    task: CriticTask,
    instances: &[Instance],
    opts: &CollectOptions,
) -> Result<Collection, CollectError> {
    let mut records = Vec::with_capacity(instances.len());
    for (chunk_no, chunk) in instances.chunks(opts.parallel.max(1)).enumerate() {
        let results: Vec<Result<LabeledInstance, BackendError>> = std::thread::scope(|s| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|inst| s.spawn(move || label_one(judge, task, inst, opts)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("labeling thread panicked"))
                .collect()
        });
        for (offset, result) in results.into_iter().enumerate() {
            match result {
                Ok(record) => records.push(record),
                Err(source) => {
                    let stats = LabelStats::from_records(task, &records);
                    return Err(CollectError {
                        index: chunk_no * opts.parallel.max(1) + offset,
                        source,
                        partial: Collection { records, stats },
                    });
                }
            }
        }
    }
    let stats = LabelStats::from_records(task, &records);
    Ok(Collection { records, stats })
}

//! Prompt templates, judge label collection and label statistics.

mod collect;
mod label;
mod task;
mod templates;

pub use collect::{
    collect_labels, CollectError, CollectOptions, Collection, LabelStats, LabeledInstance, StatRow,
};
pub use label::{parse_judge_label, Label, LabelParseError};
pub use task::{CriticTask, Field};
pub use templates::{render_prompt, template_hash, template_text, Instance, RenderError, TEMPLATE_VERSION};

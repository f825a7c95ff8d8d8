//! Deterministic scripted backend.
//!
//! A script is an ordered rule list. Each rule applies to one request kind
//! and matches when every needle occurs in the prompt (as a substring, or as
//! a regular expression when `regex` is set). The first matching rule wins; a
//! request no rule matches is an error.

use std::io::BufRead;
use std::sync::atomic::{AtomicUsize, Ordering};

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::types::{apply_limits, prompt_digest, BackendError, Generation, ScoreMap, ScoreRequest};
use super::{GenerationRequest, LanguageModel};

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("script line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct PromptMatcher {
    needles: Vec<String>,
    patterns: Option<Vec<Regex>>,
}

impl PromptMatcher {
    pub fn substrings<I, S>(needles: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            needles: needles.into_iter().map(Into::into).collect(),
            patterns: None,
        }
    }

    pub fn patterns<I, S>(patterns: I) -> Result<Self, regex::Error>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let needles: Vec<String> = patterns.into_iter().map(Into::into).collect();
        let compiled = needles.iter().map(|p| Regex::new(p)).collect::<Result<_, _>>()?;
        Ok(Self {
            needles,
            patterns: Some(compiled),
        })
    }

    pub fn matches(&self, prompt: &str) -> bool {
        match &self.patterns {
            Some(res) => res.iter().all(|re| re.is_match(prompt)),
            None => self.needles.iter().all(|n| prompt.contains(n.as_str())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MockPayload {
    Generate(Generation),
    Score(ScoreMap),
}

impl MockPayload {
    fn kind(&self) -> &'static str {
        match self {
            MockPayload::Generate(_) => "generate",
            MockPayload::Score(_) => "score",
        }
    }
}

#[derive(Debug, Clone)]
pub struct MockRule {
    pub matcher: PromptMatcher,
    pub payload: MockPayload,
}

/// On-disk rule record: `{match, regex?, kind, payload}`.
#[derive(Debug, Serialize, Deserialize)]
struct RuleRecord {
    #[serde(rename = "match")]
    matcher: MatchSpec,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    regex: bool,
    kind: String,
    payload: Value,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum MatchSpec {
    One(String),
    All(Vec<String>),
}

#[derive(Debug, Serialize, Deserialize)]
struct ScorePayload {
    #[serde(with = "crate::logprob::map")]
    scores: ScoreMap,
}

#[derive(Debug, Clone, Default)]
pub struct MockScript {
    rules: Vec<MockRule>,
}

impl MockScript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rules(&self) -> &[MockRule] {
        &self.rules
    }

    pub fn push(&mut self, rule: MockRule) {
        self.rules.push(rule);
    }

    /// Appends a generate rule matching prompts containing every needle.
    pub fn on_generate(mut self, needles: &[&str], generation: Generation) -> Self {
        self.rules.push(MockRule {
            matcher: PromptMatcher::substrings(needles.iter().copied()),
            payload: MockPayload::Generate(generation),
        });
        self
    }

    /// Appends a score rule matching prompts containing every needle.
    pub fn on_score(mut self, needles: &[&str], scores: &[(&str, f64)]) -> Self {
        self.rules.push(MockRule {
            matcher: PromptMatcher::substrings(needles.iter().copied()),
            payload: MockPayload::Score(scores.iter().map(|(k, v)| (k.to_string(), *v)).collect()),
        });
        self
    }

    pub fn extend(mut self, other: MockScript) -> Self {
        self.rules.extend(other.rules);
        self
    }

    /// Parses line-delimited rule records. Blank lines and lines starting with
    /// `#` are skipped.
    pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Self, ScriptError> {
        let mut script = MockScript::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let invalid = |message: String| ScriptError::Invalid {
                line: i + 1,
                message,
            };
            let record: RuleRecord = serde_json::from_str(trimmed).map_err(|e| invalid(e.to_string()))?;
            let needles = match record.matcher {
                MatchSpec::One(s) => vec![s],
                MatchSpec::All(v) => v,
            };
            let matcher = if record.regex {
                PromptMatcher::patterns(needles).map_err(|e| invalid(e.to_string()))?
            } else {
                PromptMatcher::substrings(needles)
            };
            let payload = match record.kind.as_str() {
                "generate" => {
                    let g: Generation =
                        serde_json::from_value(record.payload).map_err(|e| invalid(e.to_string()))?;
                    g.check().map_err(invalid)?;
                    MockPayload::Generate(g)
                }
                "score" => {
                    let p: ScorePayload =
                        serde_json::from_value(record.payload).map_err(|e| invalid(e.to_string()))?;
                    if let Some((k, v)) = p.scores.iter().find(|(_, v)| v.is_nan() || **v > 0.0) {
                        return Err(invalid(format!("score for {k:?} is {v}, expected a log-probability")));
                    }
                    MockPayload::Score(p.scores)
                }
                other => return Err(invalid(format!("unknown rule kind {other:?}"))),
            };
            script.rules.push(MockRule { matcher, payload });
        }
        Ok(script)
    }

    /// Serializes the script in the line-delimited rule format.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for rule in &self.rules {
            let payload = match &rule.payload {
                MockPayload::Generate(g) => serde_json::to_value(g),
                MockPayload::Score(s) => serde_json::to_value(ScorePayload { scores: s.clone() }),
            }
            .expect("payloads serialize");
            let record = RuleRecord {
                matcher: MatchSpec::All(rule.matcher.needles.clone()),
                regex: rule.matcher.patterns.is_some(),
                kind: rule.payload.kind().to_string(),
                payload,
            };
            out.push_str(&serde_json::to_string(&record).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    fn find(&self, kind: &str, prompt: &str) -> Option<&MockPayload> {
        self.rules
            .iter()
            .filter(|r| r.payload.kind() == kind)
            .find(|r| r.matcher.matches(prompt))
            .map(|r| &r.payload)
    }
}

/// Backend that answers from a [`MockScript`]. A pure function of
/// (script, request); the rule table is never mutated after construction.
#[derive(Debug)]
pub struct ScriptedBackend {
    script: MockScript,
    name: String,
    calls: AtomicUsize,
}

impl ScriptedBackend {
    pub fn new(script: MockScript) -> Self {
        Self::named(script, "scripted")
    }

    pub fn named(script: MockScript, name: impl Into<String>) -> Self {
        Self {
            script,
            name: name.into(),
            calls: AtomicUsize::new(0),
        }
    }

    /// Total requests served (including failed ones).
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl LanguageModel for ScriptedBackend {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn generate(&self, req: &GenerationRequest) -> Result<Generation, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        req.validate()?;
        match self.script.find("generate", &req.prompt) {
            Some(MockPayload::Generate(g)) => Ok(apply_limits(g.clone(), req)),
            _ => Err(BackendError::NoMatchingRule {
                kind: "generate".into(),
                digest: prompt_digest(&req.prompt),
            }),
        }
    }

    fn score_continuations(&self, req: &ScoreRequest) -> Result<ScoreMap, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        req.validate()?;
        match self.script.find("score", &req.prompt) {
            Some(MockPayload::Score(s)) => Ok(req.complete(s)),
            _ => Err(BackendError::NoMatchingRule {
                kind: "score".into(),
                digest: prompt_digest(&req.prompt),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::FinishReason;

    fn retrieval_candidates() -> Vec<String> {
        ["[Retrieve]", "[No Retrieve]", "[Continue to Use Evidence]"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    #[test]
    fn scripted_generation_is_echoed() {
        let g = Generation::from_tokens(&[("Paris", -0.1), (".", -0.05)]);
        let backend = ScriptedBackend::new(MockScript::new().on_generate(&["capital of France"], g.clone()));
        let out = backend
            .generate(&GenerationRequest::new("What is the capital of France?", 8))
            .unwrap();
        assert_eq!(out, g);
    }

    #[test]
    fn stop_sequences_apply() {
        let g = Generation::from_tokens(&[("one", -0.1), ("\n", -0.1), ("two", -0.1)]);
        let backend = ScriptedBackend::new(MockScript::new().on_generate(&["x"], g));
        let out = backend
            .generate(&GenerationRequest::new("x", 8).with_stop(["\n"]))
            .unwrap();
        assert_eq!(out.text, "one");
        assert_eq!(out.finish, FinishReason::Stop);
    }

    #[test]
    fn unmatched_prompt_names_digest() {
        let backend = ScriptedBackend::new(MockScript::new());
        let err = backend.generate(&GenerationRequest::new("hello", 8)).unwrap_err();
        assert_eq!(
            err,
            BackendError::NoMatchingRule {
                kind: "generate".into(),
                digest: prompt_digest("hello")
            }
        );
        assert!(err.to_string().contains(&prompt_digest("hello")));
    }

    #[test]
    fn scores_are_echoed_and_completed() {
        let script = MockScript::new().on_score(
            &["decide"],
            &[("[Retrieve]", -0.1), ("[No Retrieve]", -3.0), ("[Continue to Use Evidence]", -3.0)],
        );
        let backend = ScriptedBackend::new(script);
        let req = ScoreRequest::new("please decide", retrieval_candidates());
        let a = backend.score_continuations(&req).unwrap();
        assert_eq!(a["[Retrieve]"], -0.1);
        assert_eq!(a.len(), 3);
        let b = backend.score_continuations(&req).unwrap();
        assert_eq!(a, b);

        let single = backend
            .score_continuations(&ScoreRequest::new("decide", vec!["[Retrieve]".into()]))
            .unwrap();
        assert_eq!(single.len(), 1);

        let unknown = backend
            .score_continuations(&ScoreRequest::new("decide", vec!["[Other]".into()]))
            .unwrap();
        assert_eq!(unknown["[Other]"], f64::NEG_INFINITY);
    }

    #[test]
    fn first_match_wins_and_kinds_are_separate() {
        let script = MockScript::new()
            .on_score(&["a"], &[("x", -1.0)])
            .on_generate(&["a"], Generation::text_only("first"))
            .on_generate(&["a"], Generation::text_only("second"));
        let backend = ScriptedBackend::new(script);
        assert_eq!(backend.generate(&GenerationRequest::new("a", 4)).unwrap().text, "first");
        assert_eq!(backend.calls(), 1);
    }

    #[test]
    fn all_needles_must_match() {
        let script = MockScript::new().on_generate(&["alpha", "beta"], Generation::text_only("ok"));
        let backend = ScriptedBackend::new(script);
        assert!(backend.generate(&GenerationRequest::new("alpha only", 4)).is_err());
        assert!(backend.generate(&GenerationRequest::new("beta alpha", 4)).is_ok());
    }

    #[test]
    fn script_file_round_trip() {
        let text = r#"
# comments are allowed
{"match": "capital of France", "kind": "generate", "payload": {"text": "Paris.", "tokens": [{"t": "Paris", "lp": -0.1}, {"t": ".", "lp": -0.05}]}}
{"match": ["Task: decide", "^###"], "regex": true, "kind": "score", "payload": {"scores": {"[Retrieve]": -0.1, "[No Retrieve]": null}}}
"#;
        let script = MockScript::read_jsonl(text.as_bytes()).unwrap();
        assert_eq!(script.rules().len(), 2);
        let again = MockScript::read_jsonl(script.to_jsonl().as_bytes()).unwrap();
        assert_eq!(again.to_jsonl(), script.to_jsonl());

        let backend = ScriptedBackend::new(script);
        let s = backend
            .score_continuations(&ScoreRequest::new("### Task: decide", vec!["[No Retrieve]".into()]))
            .unwrap();
        assert_eq!(s["[No Retrieve]"], f64::NEG_INFINITY);
    }

    #[test]
    fn invalid_scripts_report_line() {
        let bad_tokens = r#"{"match": "x", "kind": "generate", "payload": {"text": "ab", "tokens": [{"t": "a", "lp": -1}]}}"#;
        assert!(matches!(
            MockScript::read_jsonl(bad_tokens.as_bytes()),
            Err(ScriptError::Invalid { line: 1, .. })
        ));
        let bad_kind = "\n{\"match\": \"x\", \"kind\": \"chat\", \"payload\": {}}";
        assert!(matches!(
            MockScript::read_jsonl(bad_kind.as_bytes()),
            Err(ScriptError::Invalid { line: 2, .. })
        ));
    }
}

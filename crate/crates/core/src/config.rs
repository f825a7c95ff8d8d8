//! Pipeline configuration and its validation.

use serde::{Deserialize, Serialize};

use crate::conversation::Validation;
use crate::reflection::{ScoringMode, ScoringWeights};
use crate::retrieval::RetrieverKind;

/// Knobs of one pipeline turn. Every field has a default so partial override
/// records (config files, session overrides) deserialize directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Passages retrieved per retriever call.
    pub top_k: usize,
    pub beam_size: usize,
    pub weights: ScoringWeights<f64>,
    /// Hard cap on segments kept per generated candidate.
    pub max_segments: usize,
    pub retriever_kind: RetrieverKind,
    pub scoring_mode: ScoringMode,
    /// Number of most recent assistant turns whose passages the
    /// continue-with-evidence path may reuse.
    pub continue_window: usize,
    /// `p_norm` used when the backend returns no token log-probabilities.
    pub p_fallback: f64,
    pub max_tokens: usize,
    pub summary_max_tokens: usize,
    pub temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            top_k: 5,
            beam_size: 2,
            weights: ScoringWeights::default(),
            max_segments: 8,
            retriever_kind: RetrieverKind::Bm25,
            scoring_mode: ScoringMode::MostDesirable,
            continue_window: 2,
            p_fallback: 0.5,
            max_tokens: 256,
            summary_max_tokens: 128,
            temperature: 0.0,
            seed: None,
        }
    }
}

impl PipelineConfig {
    /// Applies a JSON object of field overrides on top of `self`.
    pub fn with_overrides(&self, overrides: &serde_json::Value) -> Result<Self, serde_json::Error> {
        let mut base = serde_json::to_value(self)?;
        if let (Some(base), Some(over)) = (base.as_object_mut(), overrides.as_object()) {
            for (k, v) in over {
                match (base.get_mut(k), v) {
                    (Some(serde_json::Value::Object(inner)), serde_json::Value::Object(patch)) => {
                        for (ik, iv) in patch {
                            let key = match ik.as_str() {
                                "w1" => "relevance",
                                "w2" => "groundedness",
                                "w3" => "utility",
                                other => other,
                            };
                            inner.insert(key.to_string(), iv.clone());
                        }
                    }
                    _ => {
                        base.insert(k.clone(), v.clone());
                    }
                }
            }
        } else if !overrides.is_null() {
            return serde_json::from_value(overrides.clone());
        }
        serde_json::from_value(base)
    }
}

pub fn validate_config(cfg: &PipelineConfig) -> Validation {
    let mut out = Validation::default();
    if cfg.top_k < 1 {
        out.push(None, "top_k ≥ 1");
    }
    if cfg.beam_size < 1 {
        out.push(None, "beam_size ≥ 1");
    }
    if cfg.max_segments < 1 {
        out.push(None, "max_segments ≥ 1");
    }
    if !cfg.weights.is_finite() {
        out.push(None, "weights finite");
    }
    if !(0.0..=1.0).contains(&cfg.p_fallback) {
        out.push(None, "p_fallback in [0, 1]");
    }
    if cfg.max_tokens < 1 || cfg.summary_max_tokens < 1 {
        out.push(None, "max_tokens ≥ 1");
    }
    if !(cfg.temperature.is_finite() && cfg.temperature >= 0.0) {
        out.push(None, "temperature finite and ≥ 0");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn default_shape_is_valid() {
        let cfg = PipelineConfig {
            top_k: 5,
            beam_size: 2,
            weights: ScoringWeights::new(1.0, 1.0, 0.5),
            ..PipelineConfig::default()
        };
        assert!(validate_config(&cfg).is_ok());
    }

    #[test]
    fn zero_top_k_is_reported() {
        let cfg = PipelineConfig {
            top_k: 0,
            ..PipelineConfig::default()
        };
        assert_eq!(validate_config(&cfg).messages(), vec!["top_k ≥ 1"]);
    }

    #[test]
    fn nan_weight_is_reported() {
        let cfg = PipelineConfig {
            weights: ScoringWeights::new(f64::NAN, 1.0, 1.0),
            ..PipelineConfig::default()
        };
        assert_eq!(validate_config(&cfg).messages(), vec!["weights finite"]);
    }

    #[test]
    fn overrides_merge_and_reject_unknown_fields() {
        let base = PipelineConfig::default();
        let cfg = base.with_overrides(&json!({"top_k": 3, "weights": {"w3": 2.0}})).unwrap();
        assert_eq!(cfg.top_k, 3);
        assert_eq!(cfg.weights, ScoringWeights::new(1.0, 1.0, 2.0));
        assert_eq!(base.with_overrides(&json!({})).unwrap(), base);
        assert!(base.with_overrides(&json!({"topk": 3})).is_err());
    }
}

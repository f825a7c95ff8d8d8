//! Serde helpers for log-probabilities. JSON has no `-inf`, so the sentinel
//! travels as `null`.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub fn serialize<S: Serializer>(lp: &f64, serializer: S) -> Result<S::Ok, S::Error> {
    if lp.is_finite() {
        serializer.serialize_f64(*lp)
    } else {
        serializer.serialize_none()
    }
}

pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(deserializer)?.unwrap_or(f64::NEG_INFINITY))
}

/// Same convention for candidate-to-logprob maps.
pub mod map {
    use super::*;

    pub fn serialize<S: Serializer>(m: &BTreeMap<String, f64>, serializer: S) -> Result<S::Ok, S::Error> {
        let wire: BTreeMap<&str, Option<f64>> = m
            .iter()
            .map(|(k, v)| (k.as_str(), v.is_finite().then_some(*v)))
            .collect();
        wire.serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<BTreeMap<String, f64>, D::Error> {
        let wire = BTreeMap::<String, Option<f64>>::deserialize(deserializer)?;
        Ok(wire
            .into_iter()
            .map(|(k, v)| (k, v.unwrap_or(f64::NEG_INFINITY)))
            .collect())
    }
}

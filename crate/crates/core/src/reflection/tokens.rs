//! The reflection-token vocabulary.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Version of [`CANONICAL_TOKENS`]. Bump whenever a surface form changes.
pub const TOKEN_TABLE_VERSION: u32 = 1;

/// Canonical surface forms, grouped retrieval, relevance, groundedness, utility.
pub const CANONICAL_TOKENS: [&str; 13] = [
    "[Retrieve]",
    "[No Retrieve]",
    "[Continue to Use Evidence]",
    "[Relevant]",
    "[Non Relevant]",
    "[Fully supported]",
    "[Partially supported]",
    "[No support]",
    "[Utility:1]",
    "[Utility:2]",
    "[Utility:3]",
    "[Utility:4]",
    "[Utility:5]",
];

/// Alternative spellings accepted on input, mapped to their canonical token.
/// The labeling prompts use several of these.
pub const TOKEN_ALIASES: [(&str, ReflectionToken); 6] = [
    ("[Irrelevant]", ReflectionToken::NonRelevant),
    ("[No support / Contradictory]", ReflectionToken::NoSupport),
    ("[Retrieval]", ReflectionToken::Retrieve),
    ("[No Retrieval]", ReflectionToken::NoRetrieve),
    ("[Continue to use evidence]", ReflectionToken::ContinueToUseEvidence),
    ("[Fully Supported]", ReflectionToken::FullySupported),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReflectionToken {
    Retrieve,
    NoRetrieve,
    ContinueToUseEvidence,
    Relevant,
    NonRelevant,
    FullySupported,
    PartiallySupported,
    NoSupport,
    /// Utility level 1..=5.
    Utility(u8),
}

impl ReflectionToken {
    pub const ALL: [ReflectionToken; 13] = [
        ReflectionToken::Retrieve,
        ReflectionToken::NoRetrieve,
        ReflectionToken::ContinueToUseEvidence,
        ReflectionToken::Relevant,
        ReflectionToken::NonRelevant,
        ReflectionToken::FullySupported,
        ReflectionToken::PartiallySupported,
        ReflectionToken::NoSupport,
        ReflectionToken::Utility(1),
        ReflectionToken::Utility(2),
        ReflectionToken::Utility(3),
        ReflectionToken::Utility(4),
        ReflectionToken::Utility(5),
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReflectionToken::Retrieve => CANONICAL_TOKENS[0],
            ReflectionToken::NoRetrieve => CANONICAL_TOKENS[1],
            ReflectionToken::ContinueToUseEvidence => CANONICAL_TOKENS[2],
            ReflectionToken::Relevant => CANONICAL_TOKENS[3],
            ReflectionToken::NonRelevant => CANONICAL_TOKENS[4],
            ReflectionToken::FullySupported => CANONICAL_TOKENS[5],
            ReflectionToken::PartiallySupported => CANONICAL_TOKENS[6],
            ReflectionToken::NoSupport => CANONICAL_TOKENS[7],
            ReflectionToken::Utility(level @ 1..=5) => CANONICAL_TOKENS[7 + level as usize],
            ReflectionToken::Utility(_) => "[Utility:?]",
        }
    }

    pub fn group(self) -> TokenGroup {
        match self {
            ReflectionToken::Retrieve
            | ReflectionToken::NoRetrieve
            | ReflectionToken::ContinueToUseEvidence => TokenGroup::Retrieval,
            ReflectionToken::Relevant | ReflectionToken::NonRelevant => TokenGroup::Relevance,
            ReflectionToken::FullySupported
            | ReflectionToken::PartiallySupported
            | ReflectionToken::NoSupport => TokenGroup::Groundedness,
            ReflectionToken::Utility(_) => TokenGroup::Utility,
        }
    }

    /// Resolves a bracketed surface form, canonical or alias.
    pub fn from_surface(surface: &str) -> Option<Self> {
        if let Some(i) = CANONICAL_TOKENS.iter().position(|t| *t == surface) {
            return Some(Self::ALL[i]);
        }
        TOKEN_ALIASES
            .iter()
            .find(|(alias, _)| *alias == surface)
            .map(|(_, tok)| *tok)
    }
}

impl fmt::Display for ReflectionToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownToken(pub String);

impl fmt::Display for UnknownToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown reflection token {:?}", self.0)
    }
}

impl std::error::Error for UnknownToken {}

impl FromStr for ReflectionToken {
    type Err = UnknownToken;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_surface(s).ok_or_else(|| UnknownToken(s.to_string()))
    }
}

impl Serialize for ReflectionToken {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ReflectionToken {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The scored token groups. Groups are disjoint and cover the vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenGroup {
    /// The three-way retrieval decision.
    Retrieval,
    Relevance,
    Groundedness,
    Utility,
}

impl TokenGroup {
    pub const ALL: [TokenGroup; 4] = [
        TokenGroup::Retrieval,
        TokenGroup::Relevance,
        TokenGroup::Groundedness,
        TokenGroup::Utility,
    ];

    pub fn tokens(self) -> &'static [ReflectionToken] {
        let all = &ReflectionToken::ALL;
        match self {
            TokenGroup::Retrieval => &all[0..3],
            TokenGroup::Relevance => &all[3..5],
            TokenGroup::Groundedness => &all[5..8],
            TokenGroup::Utility => &all[8..13],
        }
    }

    /// The token whose probability is the group's score. The retrieval group
    /// is a decision and has none.
    pub fn most_desirable(self) -> Option<ReflectionToken> {
        match self {
            TokenGroup::Retrieval => None,
            TokenGroup::Relevance => Some(ReflectionToken::Relevant),
            TokenGroup::Groundedness => Some(ReflectionToken::FullySupported),
            TokenGroup::Utility => Some(ReflectionToken::Utility(5)),
        }
    }

    /// Canonical surface strings, in group order. These are the candidates
    /// sent to constrained scoring.
    pub fn surface_forms(self) -> Vec<String> {
        self.tokens().iter().map(|t| t.as_str().to_string()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups_partition_the_vocabulary() {
        let mut seen = Vec::new();
        for g in TokenGroup::ALL {
            for t in g.tokens() {
                assert_eq!(t.group(), g);
                assert!(!seen.contains(t));
                seen.push(*t);
            }
        }
        assert_eq!(seen.len(), CANONICAL_TOKENS.len());
    }

    #[test]
    fn surface_round_trip() {
        for t in ReflectionToken::ALL {
            assert_eq!(t.as_str().parse::<ReflectionToken>().unwrap(), t);
        }
        assert_eq!(
            "[Irrelevant]".parse::<ReflectionToken>().unwrap(),
            ReflectionToken::NonRelevant
        );
        assert!("[Utility:6]".parse::<ReflectionToken>().is_err());
    }

    #[test]
    fn serde_uses_surface_form() {
        let json = serde_json::to_string(&ReflectionToken::Utility(4)).unwrap();
        assert_eq!(json, "\"[Utility:4]\"");
        let back: ReflectionToken = serde_json::from_str(&json).unwrap();
        assert_eq!(back, ReflectionToken::Utility(4));
    }
}

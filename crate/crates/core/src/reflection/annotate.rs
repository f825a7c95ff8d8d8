//! Parsing generator output that carries inline reflection tokens.

use serde::{Deserialize, Serialize};

use super::tokens::{ReflectionToken, TokenGroup};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenMark {
    pub token: ReflectionToken,
    /// Byte offset of the opening bracket in the parsed input.
    pub position: usize,
}

/// One segment of annotated output. `start..end` is the byte span of the
/// segment in the parsed input, tokens included.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedSegment {
    pub text: String,
    pub tokens: Vec<TokenMark>,
    pub start: usize,
    pub end: usize,
}

impl AnnotatedSegment {
    fn empty(start: usize) -> Self {
        Self {
            text: String::new(),
            tokens: Vec::new(),
            start,
            end: start,
        }
    }

    pub fn has_token(&self, token: ReflectionToken) -> bool {
        self.tokens.iter().any(|m| m.token == token)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedOutput {
    pub segments: Vec<AnnotatedSegment>,
}

impl AnnotatedOutput {
    /// Segment texts concatenated: the response with tokens removed.
    pub fn plain_text(&self) -> String {
        self.segments.iter().map(|s| s.text.as_str()).collect()
    }

    pub fn token_count(&self) -> usize {
        self.segments.iter().map(|s| s.tokens.len()).sum()
    }
}

enum Piece<'a> {
    Literal(&'a str, usize),
    Token(ReflectionToken, usize, usize),
}

/// Splits `text` into literal runs and recognized tokens. Bracketed spans that
/// are not in the vocabulary stay literal.
fn pieces(text: &str) -> Vec<Piece<'_>> {
    let mut out = Vec::new();
    let mut cursor = 0;
    let mut search = 0;
    while let Some(rel) = text[search..].find('[') {
        let open = search + rel;
        let Some(close_rel) = text[open..].find(']') else {
            break;
        };
        let close = open + close_rel;
        match ReflectionToken::from_surface(&text[open..=close]) {
            Some(token) => {
                if open > cursor {
                    out.push(Piece::Literal(&text[cursor..open], cursor));
                }
                out.push(Piece::Token(token, open, close + 1));
                cursor = close + 1;
                search = cursor;
            }
            None => search = open + 1,
        }
    }
    if cursor < text.len() {
        out.push(Piece::Literal(&text[cursor..], cursor));
    }
    out
}

/// Lenient parse of annotated generator output.
///
/// A groundedness token closes the current segment. Utility tokens and
/// whitespace that follow it stay with the closed segment; any other text or
/// token opens the next one. Output with no groundedness token is a single
/// segment.
pub fn parse_annotated(text: &str) -> AnnotatedOutput {
    let mut segments = Vec::new();
    let mut current = AnnotatedSegment::empty(0);
    let mut closed = false;

    for piece in pieces(text) {
        match piece {
            Piece::Literal(s, at) => {
                if closed && !s.trim().is_empty() {
                    segments.push(std::mem::replace(&mut current, AnnotatedSegment::empty(at)));
                    closed = false;
                }
                current.text.push_str(s);
                current.end = at + s.len();
            }
            Piece::Token(token, at, end) => {
                let trailing = token.group() == TokenGroup::Utility;
                if closed && !trailing {
                    segments.push(std::mem::replace(&mut current, AnnotatedSegment::empty(at)));
                    closed = false;
                }
                current.tokens.push(TokenMark {
                    token,
                    position: at,
                });
                current.end = end;
                if token.group() == TokenGroup::Groundedness {
                    closed = true;
                }
            }
        }
    }
    segments.push(current);
    AnnotatedOutput { segments }
}

/// Removes recognized tokens until none remain, so re-parsing the result
/// always yields zero tokens.
pub fn strip_tokens(text: &str) -> String {
    let mut current = parse_annotated(text);
    loop {
        let plain = current.plain_text();
        if current.token_count() == 0 {
            return plain;
        }
        current = parse_annotated(&plain);
    }
}

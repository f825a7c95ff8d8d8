use std::collections::HashSet;

/// Lowercases and splits on every run of non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// [`tokenize`] with an optional stopword filter. The default has no stopwords.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tokenizer {
    stopwords: HashSet<String>,
}

impl Tokenizer {
    pub fn with_stopwords<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            stopwords: words.into_iter().map(|w| w.as_ref().to_lowercase()).collect(),
        }
    }

    pub fn stopwords(&self) -> impl Iterator<Item = &str> {
        self.stopwords.iter().map(String::as_str)
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let mut terms = tokenize(text);
        if !self.stopwords.is_empty() {
            terms.retain(|t| !self.stopwords.contains(t));
        }
        terms
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_on_punctuation_and_digits_survive() {
        assert_eq!(tokenize("Boer War, 1899-1902"), vec!["boer", "war", "1899", "1902"]);
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").is_empty());
        assert!(tokenize(" ,;- ").is_empty());
    }

    #[test]
    fn unicode_dash_splits() {
        assert_eq!(tokenize("Olmec—civilization"), vec!["olmec", "civilization"]);
    }

    #[test]
    fn stopwords_are_optional() {
        let t = Tokenizer::with_stopwords(["The"]);
        assert_eq!(t.tokenize("The Olmec"), vec!["olmec"]);
        assert_eq!(Tokenizer::default().tokenize("The Olmec"), vec!["the", "olmec"]);
    }
}

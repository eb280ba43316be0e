//! Pluggable tokenizers for token-count signals.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TokenizerError {
    #[error("cannot read vocabulary {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("vocabulary {0} contains no tokens")]
    Empty(String),
}

pub trait Tokenizer: Send + Sync {
    /// Stable name recorded alongside computed signals.
    fn identity(&self) -> &str;

    fn tokenize<'a>(&self, text: &'a str) -> Vec<&'a str>;

    fn count(&self, text: &str) -> usize {
        self.tokenize(text).len()
    }
}

/// Splits on runs of Unicode whitespace.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn identity(&self) -> &str {
        "whitespace"
    }

    fn tokenize<'a>(&self, text: &'a str) -> Vec<&'a str> {
        text.split_whitespace().collect()
    }

    fn count(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }
}

/// Greedy longest-match segmentation over a fixed subword vocabulary.
///
/// At each position the longest vocabulary entry that matches is taken; when
/// none matches, a single character becomes its own token.
#[derive(Debug, Clone)]
pub struct VocabTokenizer {
    identity: String,
    tokens: HashSet<String>,
    max_token_bytes: usize,
}

impl VocabTokenizer {
    pub fn new<I, S>(identity: impl Into<String>, tokens: I) -> Result<Self, TokenizerError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let identity = identity.into();
        let tokens: HashSet<String> = tokens
            .into_iter()
            .map(Into::into)
            .filter(|t: &String| !t.is_empty())
            .collect();
        if tokens.is_empty() {
            return Err(TokenizerError::Empty(identity));
        }
        let max_token_bytes = tokens.iter().map(String::len).max().unwrap_or(0);
        Ok(Self { identity, tokens, max_token_bytes })
    }

    /// Load a UTF-8 file with one token per line. Blank lines are ignored.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, TokenizerError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| TokenizerError::Read {
            path: path.display().to_string(),
            source,
        })?;
        let tokens = text.lines().map(|l| l.strip_suffix('\r').unwrap_or(l).to_owned());
        Self::new(format!("vocab:{}", path.display()), tokens)
    }

    pub fn vocabulary_size(&self) -> usize {
        self.tokens.len()
    }

    fn longest_match(&self, rest: &str) -> usize {
        let limit = self.max_token_bytes.min(rest.len());
        let mut ends: Vec<usize> = rest
            .char_indices()
            .map(|(i, c)| i + c.len_utf8())
            .take_while(|&e| e <= limit)
            .collect();
        while let Some(end) = ends.pop() {
            if self.tokens.contains(&rest[..end]) {
                return end;
            }
        }
        rest.chars().next().map_or(0, char::len_utf8)
    }
}

impl Tokenizer for VocabTokenizer {
    fn identity(&self) -> &str {
        &self.identity
    }

    fn tokenize<'a>(&self, text: &'a str) -> Vec<&'a str> {
        let mut out = Vec::new();
        let mut pos = 0;
        while pos < text.len() {
            let len = self.longest_match(&text[pos..]);
            out.push(&text[pos..pos + len]);
            pos += len;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whitespace_mode() {
        let t = WhitespaceTokenizer;
        assert_eq!(t.tokenize("a  b"), vec!["a", "b"]);
        assert!(t.tokenize("").is_empty());
        assert_eq!(t.count(" \u{3000}x\ty\n"), 2);
    }

    /// Every way to cut `text` into vocabulary tokens (or single characters).
    fn segmentations<'a>(text: &'a str, vocab: &[&str]) -> Vec<Vec<&'a str>> {
        if text.is_empty() {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for (i, c) in text.char_indices() {
            let end = i + c.len_utf8();
            let piece = &text[..end];
            if vocab.contains(&piece) || end == text[..].chars().next().unwrap().len_utf8() {
                for mut rest in segmentations(&text[end..], vocab) {
                    rest.insert(0, piece);
                    out.push(rest);
                }
            }
        }
        out
    }

    #[test]
    fn greedy_longest_match_picks_the_enumerated_greedy_choice() {
        let vocab = ["ab", "a", "b", "c"];
        let all = segmentations("abc", &vocab);
        assert_eq!(all.len(), 2); // [ab, c] and [a, b, c]
        // the greedy choice is the segmentation whose first token is longest,
        // breaking ties the same way at each later position
        let greedy = all
            .iter()
            .max_by_key(|s| s.iter().map(|t| t.len()).collect::<Vec<_>>())
            .unwrap();
        let tok = VocabTokenizer::new("t", vocab).unwrap();
        assert_eq!(tok.tokenize("abc"), *greedy);
        assert_eq!(tok.tokenize("abc"), vec!["ab", "c"]);
    }

    #[test]
    fn unknown_characters_fall_back_to_single_chars() {
        let tok = VocabTokenizer::new("t", ["hello", "he"]).unwrap();
        assert_eq!(tok.tokenize("hello,heéé"), vec!["hello", ",", "he", "é", "é"]);
        assert!(tok.tokenize("").is_empty());
    }

    #[test]
    fn loads_one_token_per_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.txt");
        fs::write(&path, "ab\r\na\n\nb\nc\n").unwrap();
        let tok = VocabTokenizer::from_file(&path).unwrap();
        assert_eq!(tok.vocabulary_size(), 4);
        assert!(tok.identity().starts_with("vocab:"));

        fs::write(&path, "\n\n").unwrap();
        assert!(matches!(VocabTokenizer::from_file(&path), Err(TokenizerError::Empty(_))));
        assert!(matches!(
            VocabTokenizer::from_file(dir.path().join("missing")),
            Err(TokenizerError::Read { .. })
        ));
    }
}

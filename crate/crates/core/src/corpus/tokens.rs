//! Token counting for chunk budgets.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use super::CorpusError;

/// Counts tokens in a piece of text.
///
/// Implementations must be deterministic, return 0 for the empty string, and
/// be subadditive across a single whitespace separator:
/// `count(a + " " + b) <= count(a) + count(b) + 1`.
pub trait TokenCounter: Send + Sync {
    fn name(&self) -> &str;
    fn count(&self, text: &str) -> usize;
}

/// One token per whitespace-delimited word.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceCounter;

impl TokenCounter for WhitespaceCounter {
    fn name(&self) -> &str {
        "whitespace"
    }

    fn count(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }
}

/// Greedy longest-match-first subword counter over a WordPiece vocabulary.
///
/// Text is lowercased (optional), split on whitespace, and punctuation is
/// broken out into standalone pieces before each word is matched against
/// the vocabulary with `##` continuation pieces. Words with no complete
/// segmentation count as a single unknown token.
#[derive(Debug, Clone)]
pub struct WordPieceCounter {
    name: String,
    vocab: HashSet<String>,
    lowercase: bool,
    max_word_chars: usize,
}

impl WordPieceCounter {
    pub fn new(name: impl Into<String>, vocab: impl IntoIterator<Item = String>, lowercase: bool) -> Self {
        Self {
            name: name.into(),
            vocab: vocab.into_iter().collect(),
            lowercase,
            max_word_chars: 100,
        }
    }

    /// Loads a vocabulary file with one piece per line.
    pub fn from_vocab_file(path: &Path, lowercase: bool) -> Result<Self, CorpusError> {
        let raw = fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let vocab = raw
            .lines()
            .map(|l| l.trim_end_matches('\r').to_string())
            .filter(|l| !l.is_empty());
        let name = format!(
            "wordpiece:{}",
            path.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default()
        );
        Ok(Self::new(name, vocab, lowercase))
    }

    pub fn vocab_len(&self) -> usize {
        self.vocab.len()
    }

    fn count_word(&self, word: &str) -> usize {
        let chars: Vec<char> = word.chars().collect();
        if chars.len() > self.max_word_chars {
            return 1;
        }
        let mut pieces = 0;
        let mut start = 0;
        let mut buf = String::new();
        while start < chars.len() {
            let mut end = chars.len();
            let mut found = false;
            while start < end {
                buf.clear();
                if start > 0 {
                    buf.push_str("##");
                }
                buf.extend(&chars[start..end]);
                if self.vocab.contains(buf.as_str()) {
                    found = true;
                    break;
                }
                end -= 1;
            }
            if !found {
                return 1;
            }
            pieces += 1;
            start = end;
        }
        pieces
    }
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation() || (!c.is_alphanumeric() && !c.is_whitespace() && !c.is_control())
}

impl TokenCounter for WordPieceCounter {
    fn name(&self) -> &str {
        &self.name
    }

    fn count(&self, text: &str) -> usize {
        let normalized;
        let text = if self.lowercase {
            normalized = text.to_lowercase();
            normalized.as_str()
        } else {
            text
        };
        let mut total = 0;
        for raw in text.split_whitespace() {
            let mut word_start = None;
            for (i, c) in raw.char_indices() {
                if is_punctuation(c) {
                    if let Some(s) = word_start.take() {
                        total += self.count_word(&raw[s..i]);
                    }
                    total += self.count_word(&raw[i..i + c.len_utf8()]);
                } else if word_start.is_none() {
                    word_start = Some(i);
                }
            }
            if let Some(s) = word_start {
                total += self.count_word(&raw[s..]);
            }
        }
        total
    }
}

//! Document length: lines, words, characters and tokens.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::MetricsError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthStats {
    pub lines: usize,
    pub tokens: usize,
    pub words: usize,
    pub chars: usize,
}

/// Which tokenizer counts tokens.
#[derive(Debug, Clone, Default)]
pub enum TokenizerSpec {
    /// Runs of letters/digits plus one token per punctuation character.
    #[default]
    Heuristic,
    Bpe(BpeTokenizer),
}

impl TokenizerSpec {
    pub fn count(&self, text: &str) -> usize {
        match self {
            TokenizerSpec::Heuristic => heuristic_tokens(text),
            TokenizerSpec::Bpe(b) => b.count(text),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TokenizerSpec::Heuristic => "heuristic",
            TokenizerSpec::Bpe(_) => "bpe",
        }
    }
}

pub fn length_stats(text: &str, tokenizer: &TokenizerSpec) -> LengthStats {
    LengthStats {
        lines: text.lines().count(),
        tokens: tokenizer.count(text),
        words: text.split_whitespace().count(),
        chars: text.chars().count(),
    }
}

fn heuristic_tokens(text: &str) -> usize {
    let mut n = 0;
    let mut in_word = false;
    for c in text.chars() {
        if c.is_alphanumeric() || c == '_' {
            if !in_word {
                n += 1;
                in_word = true;
            }
        } else {
            in_word = false;
            if !c.is_whitespace() {
                n += 1;
            }
        }
    }
    n
}

/// Byte-pair tokenizer driven by a merge table (`merges.txt` layout: one
/// space-separated pair per line, optional `#` header).
///
/// Text is pre-split into words that keep their leading space (written as
/// `Ġ`, as in the usual byte-level tables); each word starts as single
/// characters and pairs are merged by rank.
#[derive(Debug, Clone, Default)]
pub struct BpeTokenizer {
    ranks: HashMap<(String, String), usize>,
}

impl BpeTokenizer {
    pub fn from_merges(text: &str) -> Self {
        let mut ranks = HashMap::new();
        for line in text.lines() {
            if line.starts_with("#version") || line.trim().is_empty() {
                continue;
            }
            let mut it = line.split(' ');
            if let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) {
                let r = ranks.len();
                ranks.entry((a.to_string(), b.to_string())).or_insert(r);
            }
        }
        BpeTokenizer { ranks }
    }

    pub fn load(path: &Path) -> Result<Self, MetricsError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| MetricsError::Config(format!("cannot read merge table {}: {e}", path.display())))?;
        let t = Self::from_merges(&text);
        if t.ranks.is_empty() {
            return Err(MetricsError::Config(format!("merge table {} has no merges", path.display())));
        }
        Ok(t)
    }

    pub fn merges(&self) -> usize {
        self.ranks.len()
    }

    fn pieces(text: &str) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut cur = String::new();
        let mut kind = 0u8;
        for c in text.chars() {
            let k = if c.is_alphabetic() {
                1
            } else if c.is_numeric() {
                2
            } else if c == ' ' {
                3
            } else if c.is_whitespace() {
                4
            } else {
                5
            };
            // A single space attaches to the following word.
            let continues = k == kind || (kind == 3 && cur == "Ġ" && k != 3 && k != 4);
            if !cur.is_empty() && !continues {
                out.push(std::mem::take(&mut cur));
            }
            kind = k;
            cur.push(if c == ' ' {
                'Ġ'
            } else if c == '\n' {
                'Ċ'
            } else {
                c
            });
        }
        if !cur.is_empty() {
            out.push(cur);
        }
        out
    }

    fn word_tokens(&self, word: &str) -> usize {
        let mut parts: Vec<String> = word.chars().map(String::from).collect();
        loop {
            let best = parts
                .windows(2)
                .enumerate()
                .filter_map(|(i, w)| self.ranks.get(&(w[0].clone(), w[1].clone())).map(|&r| (r, i)))
                .min();
            let Some((_, i)) = best else { break };
            let merged = format!("{}{}", parts[i], parts[i + 1]);
            parts.splice(i..i + 2, [merged]);
        }
        parts.len()
    }

    pub fn count(&self, text: &str) -> usize {
        Self::pieces(text).iter().map(|w| self.word_tokens(w)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_small_texts() {
        let t = TokenizerSpec::Heuristic;
        assert_eq!(length_stats("", &t), LengthStats::default());
        let s = length_stats("a b\nc", &t);
        assert_eq!((s.lines, s.words, s.chars, s.tokens), (2, 3, 5, 3));
        assert_eq!(heuristic_tokens("<task name=\"A\"/>"), 9);
    }

    #[test]
    fn bpe_merges_reduce_tokens() {
        let empty = BpeTokenizer::from_merges("#version: 0.2\n");
        let merged = BpeTokenizer::from_merges("#version: 0.2\nt a\ns k\nta sk\nĠ task\n");
        assert_eq!(empty.count("task task"), 9);
        assert_eq!(merged.count("task task"), 2);
    }

    #[test]
    fn unreadable_table_is_a_config_error() {
        let err = BpeTokenizer::load(Path::new("/nonexistent/merges.txt")).unwrap_err();
        assert!(matches!(err, MetricsError::Config(_)));
    }
}

//! Evaluation measures: length, element coverage, element-count deltas and
//! PME similarity.

mod length;
mod matching;
mod similarity;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use length::{length_stats, BpeTokenizer, LengthStats, TokenizerSpec};
pub use matching::{
    cosine, greedy_match, lexical_similarity, semantic_match, similarity_matrix, stem, Backend, EmbeddingClient, Match,
    MatcherConfig,
};
pub use similarity::{dice, pme_similarity, CategoryScore, MatchedPair, SimilarityReport};

use crate::codecs::{capabilities, PmrDocument, PmrId};
use crate::model::{ElementType, ProcessModel};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("embedding service at {endpoint} unreachable: {message}")]
    Transport { endpoint: String, message: String },
    #[error("embedding service protocol error: {0}")]
    Protocol(String),
}

/// Length of an encoded document.
pub fn document_length(doc: &PmrDocument, tokenizer: &TokenizerSpec) -> LengthStats {
    length_stats(&doc.text, tokenizer)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub pmr: PmrId,
    pub representable: usize,
    pub total: usize,
    /// representable / total rounded to 4 decimals; 1.0 for an empty model.
    pub ratio: f64,
}

impl CoverageReport {
    pub fn ratio_text(&self) -> String {
        format!("{:.4}", self.ratio)
    }
}

pub fn round4(x: f64) -> f64 {
    (x * 10_000.0).round() / 10_000.0
}

pub fn element_coverage(model: &ProcessModel, pmr: PmrId) -> CoverageReport {
    let caps = capabilities(pmr);
    let counts = model.count_elements();
    let total = counts.total();
    let representable: usize = ElementType::ALL.iter().filter(|t| caps.supports(**t)).map(|t| counts.get(*t)).sum();
    let ratio = if total == 0 { 1.0 } else { round4(representable as f64 / total as f64) };
    CoverageReport { pmr, representable, total, ratio }
}

/// Signed per-type differences, generated minus gold.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountDelta {
    pub by_type: BTreeMap<ElementType, i64>,
    /// Tasks, events and gateways; sequence flows are reported apart.
    pub nodes: i64,
}

impl CountDelta {
    pub fn get(&self, t: ElementType) -> i64 {
        self.by_type.get(&t).copied().unwrap_or(0)
    }
}

pub fn element_count_delta(generated: &ProcessModel, gold: &ProcessModel) -> CountDelta {
    let (g, o) = (generated.count_elements(), gold.count_elements());
    let by_type = ElementType::ALL.iter().map(|&t| (t, g.get(t) as i64 - o.get(t) as i64)).collect();
    CountDelta { by_type, nodes: g.nodes() as i64 - o.nodes() as i64 }
}

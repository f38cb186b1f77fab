//! Label similarity backends and greedy 1-to-1 matching.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::model::normalize_label;

/// Client for an embedding service: POST a JSON array of strings, receive an
/// equally long array of float vectors. Vectors are cached per text.
#[derive(Debug, Clone)]
pub struct EmbeddingClient {
    pub endpoint: String,
    pub token: Option<String>,
    pub batch_size: usize,
    pub max_in_flight: usize,
    pub timeout: Duration,
    cache: Arc<Mutex<HashMap<String, Vec<f64>>>>,
}

impl EmbeddingClient {
    pub fn new(endpoint: impl Into<String>, token: Option<String>) -> Self {
        EmbeddingClient {
            endpoint: endpoint.into(),
            token,
            batch_size: 64,
            max_in_flight: 4,
            timeout: Duration::from_secs(60),
            cache: Arc::default(),
        }
    }

    fn request(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, MetricsError> {
        let agent: ureq::Agent = ureq::Agent::config_builder().timeout_global(Some(self.timeout)).build().into();
        let mut req = agent.post(&self.endpoint).header("Content-Type", "application/json");
        if let Some(t) = &self.token {
            req = req.header("Authorization", &format!("Bearer {t}"));
        }
        let transport =
            |e: ureq::Error| MetricsError::Transport { endpoint: self.endpoint.clone(), message: e.to_string() };
        let mut resp = req.send_json(texts).map_err(transport)?;
        let body: serde_json::Value = resp.body_mut().read_json().map_err(transport)?;
        // Either a bare array or {"embeddings": [...]} / {"data": [{"embedding": [...]}]}.
        let rows = match &body {
            serde_json::Value::Array(a) => a.clone(),
            serde_json::Value::Object(o) => match (o.get("embeddings"), o.get("data")) {
                (Some(serde_json::Value::Array(a)), _) => a.clone(),
                (_, Some(serde_json::Value::Array(a))) => {
                    a.iter().map(|d| d.get("embedding").cloned().unwrap_or(serde_json::Value::Null)).collect()
                }
                _ => return Err(MetricsError::Protocol("response holds no embedding array".into())),
            },
            _ => return Err(MetricsError::Protocol("response is not a JSON array".into())),
        };
        if rows.len() != texts.len() {
            return Err(MetricsError::Protocol(format!("sent {} texts, received {} vectors", texts.len(), rows.len())));
        }
        rows.iter()
            .map(|r| {
                r.as_array()
                    .and_then(|a| a.iter().map(serde_json::Value::as_f64).collect::<Option<Vec<f64>>>())
                    .ok_or_else(|| MetricsError::Protocol("vector is not an array of numbers".into()))
            })
            .collect()
    }

    /// Vectors for `texts` in input order.
    pub fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, MetricsError> {
        let missing: Vec<String> = {
            let cache = self.cache.lock().expect("embedding cache poisoned");
            let set: BTreeSet<&String> = texts.iter().filter(|t| !cache.contains_key(*t)).collect();
            set.into_iter().cloned().collect()
        };
        let batches: Vec<&[String]> = missing.chunks(self.batch_size.max(1)).collect();
        // Bounded parallelism: at most max_in_flight batches at a time.
        for wave in batches.chunks(self.max_in_flight.max(1)) {
            let results: Vec<Result<Vec<Vec<f64>>, MetricsError>> = wave.par_iter().map(|b| self.request(b)).collect();
            let mut cache = self.cache.lock().expect("embedding cache poisoned");
            for (batch, res) in wave.iter().zip(results) {
                for (t, v) in batch.iter().zip(res?) {
                    cache.insert(t.clone(), v);
                }
            }
        }
        let cache = self.cache.lock().expect("embedding cache poisoned");
        let out: Vec<Vec<f64>> = texts.iter().map(|t| cache[t].clone()).collect();
        if let Some(d) = out.first().map(Vec::len) {
            if let Some(bad) = out.iter().find(|v| v.len() != d) {
                return Err(MetricsError::Protocol(format!("vector dimensions differ: {d} and {}", bad.len())));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Default)]
pub enum Backend {
    Exact,
    #[default]
    Lexical,
    Embedding(EmbeddingClient),
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::Lexical => "lexical",
            Backend::Embedding(_) => "embedding",
        }
    }
}

#[derive(Debug, Clone)]
pub struct MatcherConfig {
    pub threshold: f64,
    pub backend: Backend,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        MatcherConfig { threshold: 0.7, backend: Backend::Lexical }
    }
}

impl MatcherConfig {
    pub fn new(threshold: f64, backend: Backend) -> Result<Self, MetricsError> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(MetricsError::InvalidThreshold(threshold));
        }
        Ok(MatcherConfig { threshold, backend })
    }

    pub fn exact() -> Self {
        MatcherConfig { threshold: 0.7, backend: Backend::Exact }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub i: usize,
    pub j: usize,
    pub similarity: f64,
}

/// Light suffix stripping, enough to conflate "approve", "approved",
/// "approves" and "approving".
pub fn stem(word: &str) -> String {
    let w = word.to_lowercase();
    for suffix in ["ing", "ed", "es", "s", "e"] {
        if let Some(base) = w.strip_suffix(suffix) {
            if base.chars().count() >= 3 && !(suffix == "s" && base.ends_with('s')) {
                return base.to_string();
            }
        }
    }
    w
}

fn stems(s: &str) -> BTreeSet<String> {
    s.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()).map(stem).collect()
}

fn exact_key(s: &str) -> String {
    normalize_label(s).to_lowercase()
}

/// Dice coefficient over stem sets; two stem-free strings compare by their
/// normalized text.
pub fn lexical_similarity(a: &str, b: &str) -> f64 {
    let (x, y) = (stems(a), stems(b));
    if x.is_empty() && y.is_empty() {
        return if exact_key(a) == exact_key(b) { 1.0 } else { 0.0 };
    }
    let common = x.intersection(&y).count();
    2.0 * common as f64 / (x.len() + y.len()) as f64
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

/// Pairwise similarities, `m[i][j]` for `xs[i]` against `ys[j]`.
pub fn similarity_matrix(xs: &[String], ys: &[String], backend: &Backend) -> Result<Vec<Vec<f64>>, MetricsError> {
    Ok(match backend {
        Backend::Exact => xs
            .iter()
            .map(|x| ys.iter().map(|y| if exact_key(x) == exact_key(y) { 1.0 } else { 0.0 }).collect())
            .collect(),
        Backend::Lexical => xs.iter().map(|x| ys.iter().map(|y| lexical_similarity(x, y)).collect()).collect(),
        Backend::Embedding(client) => {
            if xs.is_empty() || ys.is_empty() {
                return Ok(vec![vec![]; xs.len()]);
            }
            let all: Vec<String> = xs.iter().chain(ys).cloned().collect();
            let v = client.embed(&all)?;
            let (vx, vy) = v.split_at(xs.len());
            vx.iter().map(|a| vy.iter().map(|b| cosine(a, b)).collect()).collect()
        }
    })
}

/// Greedy best-first 1-to-1 selection over pairs with similarity at least
/// `threshold`. Ties are broken by the unordered pair of texts, so swapping
/// the two sides selects the mirrored pairs.
pub fn greedy_match(xs: &[String], ys: &[String], sim: &[Vec<f64>], threshold: f64) -> Vec<Match> {
    let mut cand: Vec<(f64, String, String, usize, usize)> = Vec::new();
    for (i, row) in sim.iter().enumerate() {
        for (j, &s) in row.iter().enumerate() {
            if s >= threshold {
                let (a, b) = (exact_key(&xs[i]), exact_key(&ys[j]));
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                cand.push((s, lo, hi, i, j));
            }
        }
    }
    cand.sort_by(|p, q| {
        q.0.total_cmp(&p.0).then_with(|| (&p.1, &p.2).cmp(&(&q.1, &q.2))).then((p.3, p.4).cmp(&(q.3, q.4)))
    });
    let mut used_x = vec![false; xs.len()];
    let mut used_y = vec![false; ys.len()];
    let mut out = Vec::new();
    for (s, _, _, i, j) in cand {
        if !used_x[i] && !used_y[j] {
            used_x[i] = true;
            used_y[j] = true;
            out.push(Match { i, j, similarity: s });
        }
    }
    out
}

pub fn semantic_match(xs: &[String], ys: &[String], cfg: &MatcherConfig) -> Result<Vec<Match>, MetricsError> {
    if !(0.0..=1.0).contains(&cfg.threshold) {
        return Err(MetricsError::InvalidThreshold(cfg.threshold));
    }
    let sim = similarity_matrix(xs, ys, &cfg.backend)?;
    Ok(greedy_match(xs, ys, &sim, cfg.threshold))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn exact_identity_and_miss() {
        let m = semantic_match(&s(&["approve order"]), &s(&["approve order"]), &MatcherConfig::exact()).unwrap();
        assert_eq!(m, vec![Match { i: 0, j: 0, similarity: 1.0 }]);
        assert!(semantic_match(&s(&["a"]), &s(&["b"]), &MatcherConfig::exact()).unwrap().is_empty());
    }

    #[test]
    fn stems_conflate_inflections() {
        assert_eq!(lexical_similarity("Approve invoice", "approved invoices"), 1.0);
        assert_eq!(stem("process"), "process");
        assert!(lexical_similarity("ship goods", "check stock") < 0.7);
    }

    #[test]
    fn threshold_out_of_range() {
        assert!(MatcherConfig::new(1.5, Backend::Exact).is_err());
    }

    #[test]
    fn unreachable_service_names_endpoint() {
        let mut c = EmbeddingClient::new("http://127.0.0.1:9/embed", None);
        c.timeout = Duration::from_secs(2);
        let cfg = MatcherConfig::new(0.7, Backend::Embedding(c)).unwrap();
        match semantic_match(&s(&["a"]), &s(&["b"]), &cfg) {
            Err(MetricsError::Transport { endpoint, .. }) => {
                assert!(endpoint.contains("127.0.0.1:9"))
            }
            other => panic!("{other:?}"),
        }
    }
}

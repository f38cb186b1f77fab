//! Element-level similarity of two PME bundles via Dice-Sørensen scores.
//!
//! Nodes are matched per category on rendered strings. A sequence flow
//! matches when both endpoints were matched to the other flow's endpoints
//! and the conditions agree (both absent, or similar enough).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::matching::{greedy_match, similarity_matrix, Match, MatcherConfig};
use super::MetricsError;
use crate::codecs::PmeBundle;
use crate::model::normalize_opt;

/// 2m / (a + b); two empty sides agree perfectly.
pub fn dice(matches: usize, a: usize, b: usize) -> f64 {
    if a + b == 0 {
        1.0
    } else {
        2.0 * matches as f64 / (a + b) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub generated: String,
    pub gold: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryScore {
    pub score: f64,
    pub matched: usize,
    pub generated: usize,
    pub gold: usize,
    pub pairs: Vec<MatchedPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    /// Pooled over tasks, events, gateways and sequence flows.
    pub overall: f64,
    pub tasks: CategoryScore,
    pub events: CategoryScore,
    pub gateways: CategoryScore,
    pub gateway_decisions: CategoryScore,
    pub gateway_types: CategoryScore,
    pub sequence_flows: CategoryScore,
}

impl SimilarityReport {
    /// (name, score) in a fixed order, for tables.
    pub fn scores(&self) -> [(&'static str, f64); 7] {
        [
            ("overall", self.overall),
            ("tasks", self.tasks.score),
            ("events", self.events.score),
            ("gateways", self.gateways.score),
            ("gateway_decisions", self.gateway_decisions.score),
            ("gateway_types", self.gateway_types.score),
            ("sequence_flows", self.sequence_flows.score),
        ]
    }
}

struct Item {
    id: String,
    text: String,
}

fn category(gen: &[Item], gold: &[Item], cfg: &MatcherConfig) -> Result<(CategoryScore, Vec<Match>), MetricsError> {
    let xs: Vec<String> = gen.iter().map(|i| i.text.clone()).collect();
    let ys: Vec<String> = gold.iter().map(|i| i.text.clone()).collect();
    let sim = similarity_matrix(&xs, &ys, &cfg.backend)?;
    let m = greedy_match(&xs, &ys, &sim, cfg.threshold);
    Ok((score_of(&m, &xs, &ys), m))
}

fn score_of(m: &[Match], xs: &[String], ys: &[String]) -> CategoryScore {
    CategoryScore {
        score: dice(m.len(), xs.len(), ys.len()),
        matched: m.len(),
        generated: xs.len(),
        gold: ys.len(),
        pairs: m
            .iter()
            .map(|p| MatchedPair { generated: xs[p.i].clone(), gold: ys[p.j].clone(), similarity: p.similarity })
            .collect(),
    }
}

fn tasks(b: &PmeBundle) -> Vec<Item> {
    b.tasks.iter().map(|t| Item { id: t.id.clone(), text: t.label.clone() }).collect()
}

fn events(b: &PmeBundle) -> Vec<Item> {
    b.events
        .iter()
        .map(|e| {
            let text = match normalize_opt(e.label.as_deref()) {
                Some(l) => format!("{} event {l}", e.position.as_str()),
                None => format!("{} event", e.position.as_str()),
            };
            Item { id: e.id.clone(), text }
        })
        .collect()
}

fn gateways(b: &PmeBundle) -> Vec<Item> {
    b.gateways
        .iter()
        .map(|g| {
            let text = match normalize_opt(g.decision.as_deref()) {
                Some(d) => format!("{} gateway {d}", g.gateway_type.as_str()),
                None => format!("{} gateway", g.gateway_type.as_str()),
            };
            Item { id: g.id.clone(), text }
        })
        .collect()
}

fn gateway_types(b: &PmeBundle) -> Vec<String> {
    b.gateways.iter().map(|g| format!("{} gateway", g.gateway_type.as_str())).collect()
}

fn decisions(b: &PmeBundle) -> Vec<String> {
    b.gateways.iter().filter_map(|g| normalize_opt(g.decision.as_deref())).collect()
}

fn flow_text(s: &str, t: &str, c: &Option<String>) -> String {
    match normalize_opt(c.as_deref()) {
        Some(c) => format!("{s} -> {t} [{c}]"),
        None => format!("{s} -> {t}"),
    }
}

pub fn pme_similarity(
    gen: &PmeBundle,
    gold: &PmeBundle,
    cfg: &MatcherConfig,
) -> Result<SimilarityReport, MetricsError> {
    if !(0.0..=1.0).contains(&cfg.threshold) {
        return Err(MetricsError::InvalidThreshold(cfg.threshold));
    }
    let mut node_map: HashMap<String, String> = HashMap::new();
    let mut node_cat = |g: Vec<Item>, o: Vec<Item>| -> Result<CategoryScore, MetricsError> {
        let (score, m) = category(&g, &o, cfg)?;
        for p in m {
            node_map.insert(g[p.i].id.clone(), o[p.j].id.clone());
        }
        Ok(score)
    };
    let tasks = node_cat(tasks(gen), tasks(gold))?;
    let events = node_cat(events(gen), events(gold))?;
    let gateways = node_cat(gateways(gen), gateways(gold))?;

    let (gt, ot) = (gateway_types(gen), gateway_types(gold));
    let gateway_types =
        score_of(&greedy_match(&gt, &ot, &similarity_matrix(&gt, &ot, &super::Backend::Exact)?, 1.0), &gt, &ot);
    let (gd, od) = (decisions(gen), decisions(gold));
    let dm = greedy_match(&gd, &od, &similarity_matrix(&gd, &od, &cfg.backend)?, cfg.threshold);
    let gateway_decisions = score_of(&dm, &gd, &od);

    // Flows: endpoint-derived candidates, conditions compared semantically.
    let gf: Vec<String> = gen.sequence_flows.iter().map(|f| flow_text(&f.source, &f.target, &f.condition)).collect();
    let of: Vec<String> = gold.sequence_flows.iter().map(|f| flow_text(&f.source, &f.target, &f.condition)).collect();
    let gc: Vec<String> =
        gen.sequence_flows.iter().map(|f| normalize_opt(f.condition.as_deref()).unwrap_or_default()).collect();
    let oc: Vec<String> =
        gold.sequence_flows.iter().map(|f| normalize_opt(f.condition.as_deref()).unwrap_or_default()).collect();
    let csim = similarity_matrix(&gc, &oc, &cfg.backend)?;
    let mut fsim = vec![vec![0.0; of.len()]; gf.len()];
    for (i, f) in gen.sequence_flows.iter().enumerate() {
        for (j, o) in gold.sequence_flows.iter().enumerate() {
            let ends = node_map.get(&f.source) == Some(&o.source) && node_map.get(&f.target) == Some(&o.target);
            if !ends {
                continue;
            }
            fsim[i][j] = match (gc[i].is_empty(), oc[j].is_empty()) {
                (true, true) => 1.0,
                (false, false) if csim[i][j] >= cfg.threshold => csim[i][j],
                _ => 0.0,
            };
        }
    }
    // A zero entry is never a match, whatever the threshold.
    let fm: Vec<Match> = greedy_match(&gf, &of, &fsim, cfg.threshold.max(f64::MIN_POSITIVE))
        .into_iter()
        .filter(|m| m.similarity > 0.0)
        .collect();
    let sequence_flows = score_of(&fm, &gf, &of);

    let pooled = [&tasks, &events, &gateways, &sequence_flows];
    let matched: usize = pooled.iter().map(|c| c.matched).sum();
    let a: usize = pooled.iter().map(|c| c.generated).sum();
    let b: usize = pooled.iter().map(|c| c.gold).sum();
    Ok(SimilarityReport {
        overall: dice(matched, a, b),
        tasks,
        events,
        gateways,
        gateway_decisions,
        gateway_types,
        sequence_flows,
    })
}

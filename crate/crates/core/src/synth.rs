//! Seeded random generators for process models and branch trees.
//!
//! Used by property tests, the acceptance suite and benchmarks. Generated
//! models are always well-formed; [`ModelProfile`] restricts the element mix
//! to what a given notation can carry.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{EventPosition, GatewayType, Lane, MessageFlow, Node, NodeKind, Pool, ProcessModel};
use crate::structure::{Branch, BranchTree};

const WORDS: &[&str] = &[
    "check", "order", "ship", "invoice", "approve", "reject", "customer", "payment", "review", "send", "receive",
    "goods", "request", "archive", "notify", "manager", "update", "stock", "prepare", "offer", "close", "case",
    "register", "claim", "validate", "data", "plan", "route",
];

/// Punctuation that exercises escaping in every textual notation.
const SPICE: &[&str] =
    &["?", "&", "\"quoted\"", "(draft)", "<ok>", "a|b", "#1", "it's", "{x}", "50%", "[v2]", ";", "é"];

fn phrase<R: Rng>(rng: &mut R, spicy: bool) -> String {
    let n = rng.gen_range(1..=3);
    let mut words: Vec<String> = (0..n).map(|_| WORDS.choose(rng).unwrap().to_string()).collect();
    if spicy && rng.gen_bool(0.25) {
        words.push(SPICE.choose(rng).unwrap().to_string());
    }
    if rng.gen_bool(0.2) {
        let w = &mut words[0];
        *w = w[..1].to_uppercase() + &w[1..];
    }
    words.join(" ")
}

/// Which elements a generated model may contain.
#[derive(Debug, Clone, Copy)]
pub struct ModelProfile {
    pub intermediate_events: bool,
    pub conditions: bool,
    pub decisions: bool,
    pub event_labels: bool,
    pub swimlanes: bool,
    pub message_flows: bool,
    /// Include punctuation in labels.
    pub spicy_labels: bool,
    pub max_tasks: usize,
}

impl ModelProfile {
    pub const FULL: ModelProfile = ModelProfile {
        intermediate_events: true,
        conditions: true,
        decisions: true,
        event_labels: true,
        swimlanes: true,
        message_flows: true,
        spicy_labels: true,
        max_tasks: 10,
    };

    /// Tasks, start/end events, exclusive/parallel gateways and sequence flows.
    pub const STANDARDIZED: ModelProfile = ModelProfile {
        intermediate_events: false,
        conditions: true,
        decisions: true,
        event_labels: false,
        swimlanes: false,
        message_flows: false,
        spicy_labels: true,
        max_tasks: 10,
    };
}

/// A random well-formed flow graph. Events respect their position: start
/// events have no incoming flow, end events no outgoing flow, intermediate
/// events both. Cycles, self loops and parallel flows may appear.
pub fn random_model<R: Rng>(rng: &mut R, profile: &ModelProfile) -> ProcessModel {
    let mut m = ProcessModel::new("Process_rand");
    let spicy = profile.spicy_labels;
    let label_opt = |rng: &mut R, p: f64| {
        if rng.gen_bool(p) {
            Some(phrase(rng, spicy))
        } else {
            None
        }
    };

    let n_tasks = rng.gen_range(0..=profile.max_tasks);
    let n_gw = rng.gen_range(0..=profile.max_tasks / 2);
    let n_starts = rng.gen_range(0..=2);
    let n_ends = rng.gen_range(0..=2);
    let n_inter = if profile.intermediate_events { rng.gen_range(0..=2) } else { 0 };
    let ev_p = if profile.event_labels { 0.6 } else { 0.0 };

    let mut inner: Vec<String> = Vec::new();
    for i in 0..n_tasks {
        let id = format!("Task_{i}");
        let label = label_opt(rng, 0.9);
        m.nodes.push(Node { id: id.clone(), kind: NodeKind::Task, label });
        inner.push(id);
    }
    for i in 0..n_gw {
        let id = format!("Gw_{i}");
        let ty = if rng.gen_bool(0.6) { GatewayType::Exclusive } else { GatewayType::Parallel };
        let label = if profile.decisions { label_opt(rng, 0.4) } else { None };
        m.nodes.push(Node::gateway(id.clone(), ty, label));
        inner.push(id);
    }
    for i in 0..n_inter {
        let id = format!("Ev_i{i}");
        let label = label_opt(rng, ev_p);
        m.nodes.push(Node::event(id.clone(), EventPosition::Intermediate, label));
        inner.push(id);
    }
    let mut starts = Vec::new();
    for i in 0..n_starts {
        let id = format!("Ev_s{i}");
        let label = label_opt(rng, ev_p);
        m.nodes.push(Node::event(id.clone(), EventPosition::Start, label));
        starts.push(id);
    }
    let mut ends = Vec::new();
    for i in 0..n_ends {
        let id = format!("Ev_e{i}");
        let label = label_opt(rng, ev_p);
        m.nodes.push(Node::event(id.clone(), EventPosition::End, label));
        ends.push(id);
    }
    m.nodes.shuffle(rng);

    if starts.is_empty() && inner.is_empty() {
        m.nodes.retain(|n| !ends.contains(&n.id));
        ends.clear();
    }

    let cond = |rng: &mut R| {
        if profile.conditions && rng.gen_bool(0.3) {
            Some(phrase(rng, spicy))
        } else {
            None
        }
    };
    let sources: Vec<String> = starts.iter().chain(inner.iter()).cloned().collect();
    let targets: Vec<String> = inner.iter().chain(ends.iter()).cloned().collect();
    // Every event gets its mandatory flows; intermediate events get both directions.
    let mut mandatory: Vec<(String, String)> = Vec::new();
    if !targets.is_empty() {
        for s in &starts {
            mandatory.push((s.clone(), targets.choose(rng).unwrap().clone()));
        }
    }
    if !sources.is_empty() {
        for e in &ends {
            mandatory.push((sources.choose(rng).unwrap().clone(), e.clone()));
        }
    }
    for ev in inner.iter().filter(|id| id.starts_with("Ev_i")) {
        mandatory.push((sources.choose(rng).unwrap().clone(), ev.clone()));
        mandatory.push((ev.clone(), targets.choose(rng).unwrap().clone()));
    }
    let extra = if sources.is_empty() || targets.is_empty() { 0 } else { rng.gen_range(0..=inner.len() + 2) };
    for _ in 0..extra {
        mandatory.push((sources.choose(rng).unwrap().clone(), targets.choose(rng).unwrap().clone()));
    }
    for (s, t) in mandatory {
        let c = cond(rng);
        m.add_flow(&s, &t, c);
    }

    if profile.swimlanes && rng.gen_bool(0.5) {
        let n_pools = rng.gen_range(1..=2);
        let mut ids: Vec<String> = m.nodes.iter().map(|n| n.id.clone()).collect();
        ids.shuffle(rng);
        let mut pools: Vec<Pool> = (0..n_pools)
            .map(|p| {
                let n_lanes = rng.gen_range(0..=2);
                Pool {
                    id: format!("Pool_{p}"),
                    name: phrase(rng, spicy),
                    lanes: (0..n_lanes)
                        .map(|l| Lane { id: format!("Lane_{p}_{l}"), name: phrase(rng, spicy), members: vec![] })
                        .collect(),
                    members: vec![],
                }
            })
            .collect();
        for id in ids {
            if rng.gen_bool(0.15) {
                continue;
            }
            let p = rng.gen_range(0..pools.len());
            let pool = &mut pools[p];
            if pool.lanes.is_empty() || rng.gen_bool(0.1) {
                pool.members.push(id);
            } else {
                let l = rng.gen_range(0..pool.lanes.len());
                pool.lanes[l].members.push(id);
            }
        }
        m.pools = pools;
        if profile.message_flows && m.pools.len() == 2 {
            let in_pool = |m: &ProcessModel, p: usize| -> Vec<String> { m.pools[p].all_members().cloned().collect() };
            let (a, b) = (in_pool(&m, 0), in_pool(&m, 1));
            let n_msg = rng.gen_range(0..=2);
            for i in 0..n_msg {
                let (mut src, mut dst) = (
                    a.choose(rng).cloned().unwrap_or_else(|| m.pools[0].id.clone()),
                    b.choose(rng).cloned().unwrap_or_else(|| m.pools[1].id.clone()),
                );
                if rng.gen_bool(0.5) {
                    std::mem::swap(&mut src, &mut dst);
                }
                let label = label_opt(rng, 0.5);
                m.message_flows.push(MessageFlow { id: format!("Msg_{i}"), source: src, target: dst, label });
            }
        }
    }
    debug_assert!(m.validate().is_empty(), "{:?}", m.validate());
    m
}

/// Which constructs a generated tree may contain.
#[derive(Debug, Clone, Copy)]
pub struct TreeProfile {
    pub conditions: bool,
    pub decisions: bool,
    pub event_labels: bool,
    pub intermediate_events: bool,
    pub loops: bool,
    pub empty_parallel_branches: bool,
    pub spicy_labels: bool,
    pub max_depth: usize,
}

impl TreeProfile {
    pub const FULL: TreeProfile = TreeProfile {
        conditions: true,
        decisions: true,
        event_labels: true,
        intermediate_events: true,
        loops: true,
        empty_parallel_branches: true,
        spicy_labels: true,
        max_depth: 3,
    };
}

/// A random valid branch tree (root is a sequence).
pub fn random_tree<R: Rng>(rng: &mut R, profile: &TreeProfile) -> BranchTree {
    let mut children = Vec::new();
    if profile.event_labels && rng.gen_bool(0.3) {
        children
            .push(BranchTree::Event { position: EventPosition::Start, label: Some(phrase(rng, profile.spicy_labels)) });
    }
    let n = rng.gen_range(0..=4);
    for _ in 0..n {
        children.push(random_item(rng, profile, profile.max_depth));
    }
    if profile.event_labels && rng.gen_bool(0.3) {
        children
            .push(BranchTree::Event { position: EventPosition::End, label: Some(phrase(rng, profile.spicy_labels)) });
    }
    BranchTree::Sequence { children }
}

fn random_body<R: Rng>(rng: &mut R, p: &TreeProfile, depth: usize, allow_empty: bool) -> Option<BranchTree> {
    let lo = if allow_empty { 0 } else { 1 };
    let n = rng.gen_range(lo..=3);
    match n {
        0 => None,
        1 => Some(random_item(rng, p, depth)),
        _ => Some(BranchTree::Sequence { children: (0..n).map(|_| random_item(rng, p, depth)).collect() }),
    }
}

fn random_item<R: Rng>(rng: &mut R, p: &TreeProfile, depth: usize) -> BranchTree {
    let s = p.spicy_labels;
    let opt = |rng: &mut R, on: bool, prob: f64| {
        if on && rng.gen_bool(prob) {
            Some(phrase(rng, s))
        } else {
            None
        }
    };
    let roll = if depth == 0 { 0 } else { rng.gen_range(0..10) };
    match roll {
        0..=4 => BranchTree::Activity { label: if rng.gen_bool(0.95) { Some(phrase(rng, s)) } else { None } },
        5 if p.intermediate_events => {
            BranchTree::Event { position: EventPosition::Intermediate, label: opt(rng, p.event_labels, 0.6) }
        }
        5..=7 => {
            let k = rng.gen_range(2..=3);
            let branches = (0..k)
                .map(|_| Branch::new(opt(rng, p.conditions, 0.6), random_body(rng, p, depth - 1, true)))
                .collect();
            BranchTree::Exclusive { decision: opt(rng, p.decisions, 0.5), branches, looping: false }
        }
        8 => {
            let k = rng.gen_range(2..=3);
            let branches =
                (0..k).map(|_| Branch::new(None, random_body(rng, p, depth - 1, p.empty_parallel_branches))).collect();
            BranchTree::Parallel { decision: opt(rng, p.decisions, 0.2), branches }
        }
        _ if p.loops => {
            let body = random_body(rng, p, depth - 1, true);
            let redo_needed = body.is_none();
            let mut branches = vec![Branch::new(opt(rng, p.conditions, 0.5), body)];
            if redo_needed || rng.gen_bool(0.6) {
                let redo = random_body(rng, p, depth - 1, !redo_needed);
                branches.push(Branch::new(opt(rng, p.conditions, 0.5), redo));
            }
            BranchTree::Exclusive { decision: opt(rng, p.decisions, 0.5), branches, looping: true }
        }
        _ => BranchTree::Activity { label: Some(phrase(rng, s)) },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_models_are_well_formed() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let m = random_model(&mut rng, &ModelProfile::FULL);
            assert_eq!(m.validate(), vec![]);
        }
    }

    #[test]
    fn generated_trees_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let t = random_tree(&mut rng, &TreeProfile::FULL);
            assert_eq!(t.check(), Vec::<String>::new(), "{t:?}");
        }
    }
}

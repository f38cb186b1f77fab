//! Layered left-to-right placement for the diagram section.
//!
//! Ranks come from the longest path over the sequence-flow graph with back
//! edges removed. Each lane (and each pool's lane-free area, and the area
//! outside every pool) is a horizontal band; inside a band, nodes of one rank
//! are stacked in cells of a fixed 150x120 grid and ordered by a few
//! barycenter sweeps. Everything is deterministic for a given model.

use std::collections::{BTreeMap, HashMap};

use crate::model::{Node, NodeKind, ProcessModel};

pub const CELL_W: i64 = 150;
pub const CELL_H: i64 = 120;
/// Width of the pool label strip on the left of each pool.
pub const POOL_HEADER: i64 = 30;
/// Width of the lane label strip inside a pool.
pub const LANE_HEADER: i64 = 30;
const MARGIN: i64 = 20;
const POOL_GAP: i64 = 30;
const EMPTY_POOL_H: i64 = 60;
const SWEEPS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Rect {
    pub x: i64,
    pub y: i64,
    pub width: i64,
    pub height: i64,
}

impl Rect {
    pub fn overlaps(&self, o: &Rect) -> bool {
        self.x < o.x + o.width && o.x < self.x + self.width && self.y < o.y + o.height && o.y < self.y + self.height
    }

    pub fn center(&self) -> (i64, i64) {
        (self.x + self.width / 2, self.y + self.height / 2)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LayoutPlan {
    pub nodes: BTreeMap<String, Rect>,
    /// Waypoints of every sequence flow and message flow.
    pub edges: BTreeMap<String, Vec<(i64, i64)>>,
    pub pools: BTreeMap<String, Rect>,
    pub lanes: BTreeMap<String, Rect>,
    /// Rank (column) of each node.
    pub ranks: BTreeMap<String, usize>,
}

impl LayoutPlan {
    /// Pairs of node ids whose boxes intersect.
    pub fn overlapping_nodes(&self) -> Vec<(String, String)> {
        let v: Vec<(&String, &Rect)> = self.nodes.iter().collect();
        let mut out = Vec::new();
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                if v[i].1.overlaps(v[j].1) {
                    out.push((v[i].0.clone(), v[j].0.clone()));
                }
            }
        }
        out
    }
}

pub fn node_size(n: &Node) -> (i64, i64) {
    match n.kind {
        NodeKind::Task => (100, 80),
        NodeKind::Event { .. } => (36, 36),
        NodeKind::Gateway { .. } => (50, 50),
    }
}

/// Longest-path ranks with DFS back edges ignored.
fn ranks(m: &ProcessModel, index: &HashMap<&str, usize>) -> Vec<usize> {
    let n = m.nodes.len();
    let mut succ = vec![Vec::new(); n];
    for f in &m.sequence_flows {
        if let (Some(&s), Some(&t)) = (index.get(f.source.as_str()), index.get(f.target.as_str())) {
            succ[s].push(t);
        }
    }
    // Roots: start events, then other sources, then anything left over.
    let mut indeg = vec![0usize; n];
    for s in &succ {
        for &t in s {
            indeg[t] += 1;
        }
    }
    let mut roots: Vec<usize> = (0..n)
        .filter(|&i| matches!(m.nodes[i].kind, NodeKind::Event { position: crate::model::EventPosition::Start }))
        .collect();
    let sources: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0 && !roots.contains(&i)).collect();
    roots.extend(sources);
    roots.extend(0..n);

    // Iterative DFS; state 1 = on stack, 2 = done.
    let mut state = vec![0u8; n];
    let mut dag = vec![Vec::new(); n];
    let mut order = Vec::with_capacity(n);
    for r in roots {
        if state[r] != 0 {
            continue;
        }
        let mut stack = vec![(r, 0usize)];
        state[r] = 1;
        while let Some(top) = stack.last_mut() {
            let v = top.0;
            if top.1 < succ[v].len() {
                let t = succ[v][top.1];
                top.1 += 1;
                match state[t] {
                    0 => {
                        dag[v].push(t);
                        state[t] = 1;
                        stack.push((t, 0));
                    }
                    2 => dag[v].push(t),
                    _ => {} // back edge
                }
            } else {
                state[v] = 2;
                order.push(v);
                stack.pop();
            }
        }
    }
    let mut rank = vec![0usize; n];
    for &v in order.iter().rev() {
        for &t in &dag[v] {
            rank[t] = rank[t].max(rank[v] + 1);
        }
    }
    rank
}

/// Band key: lane id, or pool id for lane-free pool members, or "" outside pools.
struct Band {
    key: String,
    pool: Option<String>,
    is_lane: bool,
}

pub fn layout(m: &ProcessModel) -> LayoutPlan {
    let index: HashMap<&str, usize> = m.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    let rank = ranks(m, &index);
    let max_rank = rank.iter().copied().max().unwrap_or(0);

    let mut bands: Vec<Band> = Vec::new();
    let mut band_of = vec![usize::MAX; m.nodes.len()];
    let pooled: HashMap<&str, &str> = m.pool_of_nodes();
    if m.nodes.iter().any(|n| !pooled.contains_key(n.id.as_str())) || m.pools.is_empty() {
        bands.push(Band { key: String::new(), pool: None, is_lane: false });
    }
    for p in &m.pools {
        for l in &p.lanes {
            bands.push(Band { key: l.id.clone(), pool: Some(p.id.clone()), is_lane: true });
            for mem in &l.members {
                if let Some(&i) = index.get(mem.as_str()) {
                    band_of[i] = bands.len() - 1;
                }
            }
        }
        if !p.members.is_empty() || p.lanes.is_empty() {
            bands.push(Band { key: p.id.clone(), pool: Some(p.id.clone()), is_lane: false });
            for mem in &p.members {
                if let Some(&i) = index.get(mem.as_str()) {
                    band_of[i] = bands.len() - 1;
                }
            }
        }
    }
    for b in band_of.iter_mut() {
        if *b == usize::MAX {
            *b = 0;
        }
    }

    // cells[band][rank] = ordered node indices
    let mut cells: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); max_rank + 1]; bands.len()];
    for (i, &b) in band_of.iter().enumerate() {
        cells[b][rank[i]].push(i);
    }

    let mut preds = vec![Vec::new(); m.nodes.len()];
    let mut succs = vec![Vec::new(); m.nodes.len()];
    for f in &m.sequence_flows {
        if let (Some(&s), Some(&t)) = (index.get(f.source.as_str()), index.get(f.target.as_str())) {
            preds[t].push(s);
            succs[s].push(t);
        }
    }
    let mut slot = vec![0usize; m.nodes.len()];
    let assign = |cells: &Vec<Vec<Vec<usize>>>, slot: &mut Vec<usize>| {
        for band in cells {
            for cell in band {
                for (k, &i) in cell.iter().enumerate() {
                    slot[i] = k;
                }
            }
        }
    };
    assign(&cells, &mut slot);
    for sweep in 0..SWEEPS {
        let forward = sweep % 2 == 0;
        let rank_order: Vec<usize> = if forward { (0..=max_rank).collect() } else { (0..=max_rank).rev().collect() };
        for r in rank_order {
            for band in cells.iter_mut() {
                let cell = &mut band[r];
                let key = |i: usize| -> f64 {
                    let nb = if forward { &preds[i] } else { &succs[i] };
                    let adj: Vec<usize> = nb.iter().copied().filter(|&j| band_of[j] == band_of[i]).collect();
                    if adj.is_empty() {
                        slot[i] as f64
                    } else {
                        adj.iter().map(|&j| slot[j] as f64).sum::<f64>() / adj.len() as f64
                    }
                };
                let mut keyed: Vec<(f64, usize, usize)> =
                    cell.iter().enumerate().map(|(k, &i)| (key(i), k, i)).collect();
                keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                *cell = keyed.into_iter().map(|(_, _, i)| i).collect();
                for (k, &i) in cell.iter().enumerate() {
                    slot[i] = k;
                }
            }
        }
    }

    let mut plan = LayoutPlan::default();
    let content_x = MARGIN + if m.pools.is_empty() { 0 } else { POOL_HEADER + LANE_HEADER };
    let content_w = (max_rank as i64 + 1) * CELL_W;
    let mut y = MARGIN;
    let mut current_pool: Option<String> = None;
    let mut pool_top = 0;
    let close_pool = |plan: &mut LayoutPlan, pool: &Option<String>, top: i64, bottom: i64| {
        if let Some(p) = pool {
            plan.pools.insert(
                p.clone(),
                Rect { x: MARGIN, y: top, width: POOL_HEADER + LANE_HEADER + content_w, height: bottom - top },
            );
        }
    };
    for (b, band) in bands.iter().enumerate() {
        if band.pool != current_pool {
            close_pool(&mut plan, &current_pool, pool_top, y);
            if b > 0 {
                y += POOL_GAP;
            }
            current_pool = band.pool.clone();
            pool_top = y;
        }
        let rows = cells[b].iter().map(Vec::len).max().unwrap_or(0) as i64;
        let height = if rows == 0 { EMPTY_POOL_H } else { rows * CELL_H };
        for (r, cell) in cells[b].iter().enumerate() {
            for (k, &i) in cell.iter().enumerate() {
                let (w, h) = node_size(&m.nodes[i]);
                let x = content_x + r as i64 * CELL_W + (CELL_W - w) / 2;
                let ny = y + k as i64 * CELL_H + (CELL_H - h) / 2;
                plan.nodes.insert(m.nodes[i].id.clone(), Rect { x, y: ny, width: w, height: h });
                plan.ranks.insert(m.nodes[i].id.clone(), r);
            }
        }
        if band.is_lane {
            plan.lanes
                .insert(band.key.clone(), Rect { x: MARGIN + POOL_HEADER, y, width: LANE_HEADER + content_w, height });
        }
        y += height;
    }
    close_pool(&mut plan, &current_pool, pool_top, y);

    for f in &m.sequence_flows {
        let (Some(s), Some(t)) = (plan.nodes.get(&f.source), plan.nodes.get(&f.target)) else {
            continue;
        };
        plan.edges.insert(f.id.clone(), route(s, t));
    }
    for f in &m.message_flows {
        let rect = |id: &str| plan.nodes.get(id).or_else(|| plan.pools.get(id)).copied();
        let (Some(s), Some(t)) = (rect(&f.source), rect(&f.target)) else {
            continue;
        };
        plan.edges.insert(f.id.clone(), route_vertical(&s, &t));
    }
    plan
}

fn route(s: &Rect, t: &Rect) -> Vec<(i64, i64)> {
    let (sx, sy) = s.center();
    let (tx, ty) = t.center();
    if t.x > s.x + s.width {
        let start = (s.x + s.width, sy);
        let end = (t.x, ty);
        if sy == ty {
            return vec![start, end];
        }
        let mid = (start.0 + end.0) / 2;
        return vec![start, (mid, sy), (mid, ty), end];
    }
    // Backwards or same column: run underneath both boxes.
    let below = (s.y + s.height).max(t.y + t.height) + 20;
    vec![(sx, s.y + s.height), (sx, below), (tx, below), (tx, t.y + t.height)]
}

fn route_vertical(s: &Rect, t: &Rect) -> Vec<(i64, i64)> {
    let (sx, _) = s.center();
    let (tx, _) = t.center();
    let (sy, ty) = if s.y < t.y { (s.y + s.height, t.y) } else { (s.y, t.y + t.height) };
    if sx == tx {
        vec![(sx, sy), (tx, ty)]
    } else {
        let mid = (sy + ty) / 2;
        vec![(sx, sy), (sx, mid), (tx, mid), (tx, ty)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EventPosition, GatewayType, Node};

    fn chain(n: usize) -> ProcessModel {
        let mut m = ProcessModel::new("chain");
        m.nodes.push(Node::event("s", EventPosition::Start, None));
        for i in 1..n - 1 {
            m.nodes.push(Node::task(format!("t{i}"), format!("Task {i}")));
        }
        m.nodes.push(Node::event("e", EventPosition::End, None));
        let ids: Vec<String> = m.nodes.iter().map(|n| n.id.clone()).collect();
        for w in ids.windows(2) {
            m.add_flow(&w[0], &w[1], None);
        }
        m
    }

    #[test]
    fn chain_takes_one_column_per_node() {
        let plan = layout(&chain(5));
        let ranks: std::collections::BTreeSet<usize> = plan.ranks.values().copied().collect();
        assert_eq!(ranks.len(), 5);
        let centers: std::collections::BTreeSet<i64> = plan.nodes.values().map(|r| r.center().1).collect();
        assert_eq!(centers.len(), 1);
        assert_eq!(plan.edges.len(), 4);
    }

    #[test]
    fn parallel_branches_share_a_column() {
        let mut m = ProcessModel::new("p");
        m.nodes.push(Node::gateway("g1", GatewayType::Parallel, None));
        m.nodes.push(Node::task("a", "A"));
        m.nodes.push(Node::task("b", "B"));
        m.nodes.push(Node::gateway("g2", GatewayType::Parallel, None));
        m.add_flow("g1", "a", None);
        m.add_flow("g1", "b", None);
        m.add_flow("a", "g2", None);
        m.add_flow("b", "g2", None);
        let plan = layout(&m);
        assert_eq!(plan.ranks["a"], plan.ranks["b"]);
        assert_ne!(plan.nodes["a"].y, plan.nodes["b"].y);
        assert!(plan.overlapping_nodes().is_empty());
    }

    #[test]
    fn cycles_do_not_hang() {
        let mut m = chain(4);
        m.add_flow("t2", "t1", None);
        let plan = layout(&m);
        assert!(plan.ranks["t2"] > plan.ranks["t1"]);
        assert_eq!(plan.edges.len(), 4);
    }
}

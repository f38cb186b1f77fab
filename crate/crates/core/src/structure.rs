//! Block-structure analysis.
//!
//! Converts flow graphs into nested [`BranchTree`]s by iterative graph
//! reduction and expands trees back into flow graphs. Branch-based notations
//! (BPMN text, JSON branches, POWL code) are only reachable through here.
//!
//! Reduction rules, applied until a fixpoint:
//!
//! * sequence: two fragments joined by their only connecting flow fuse;
//! * block: a split whose branches are empty or single fragments that all
//!   reconverge at one join of the same gateway type collapses into an
//!   exclusive or parallel block;
//! * loop: `xor-join -> body? -> xor-split` with one back path (optionally
//!   through a redo fragment) collapses into a looping exclusive block.
//!
//! Gateways with one incoming and one outgoing flow are dissolved first.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{normalize_opt, ElementType, EventPosition, GatewayType, Loss, Node, NodeKind, ProcessModel};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Branch {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<String>,
    /// `None` for a branch that goes straight from split to join.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<Box<BranchTree>>,
}

impl Branch {
    pub fn new(condition: Option<String>, body: Option<BranchTree>) -> Self {
        Branch { condition, body: body.map(Box::new) }
    }
}

/// Block-structured view of a process.
///
/// A looping `Exclusive` has one or two branches: the first holds the loop
/// body and the condition on the flow leaving the loop, the optional second
/// holds the redo path and the condition on the flow looping back.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BranchTree {
    Sequence {
        children: Vec<BranchTree>,
    },
    Activity {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    Event {
        position: EventPosition,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    Exclusive {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        decision: Option<String>,
        branches: Vec<Branch>,
        looping: bool,
    },
    Parallel {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        decision: Option<String>,
        branches: Vec<Branch>,
    },
}

impl BranchTree {
    pub fn seq(children: Vec<BranchTree>) -> Self {
        BranchTree::Sequence { children }
    }

    pub fn activity(label: impl Into<String>) -> Self {
        BranchTree::Activity { label: Some(label.into()) }
    }

    /// A step list as a tree: `None` when empty, the step itself when single.
    pub fn from_steps(mut steps: Vec<BranchTree>) -> Option<BranchTree> {
        match steps.len() {
            0 => None,
            1 => steps.pop(),
            _ => Some(BranchTree::Sequence { children: steps }),
        }
    }

    /// The tree as a list of steps.
    pub fn steps(&self) -> Vec<&BranchTree> {
        match self {
            BranchTree::Sequence { children } => children.iter().flat_map(|c| c.steps()).collect(),
            t => vec![t],
        }
    }

    /// Structural problems; empty for a valid tree.
    pub fn check(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.check_inner(true, &mut out);
        out
    }

    fn check_inner(&self, root: bool, out: &mut Vec<String>) {
        match self {
            BranchTree::Sequence { children } => {
                if children.is_empty() && !root {
                    out.push("empty sequence".into());
                }
                for (i, c) in children.iter().enumerate() {
                    if let BranchTree::Event { position, .. } = c {
                        let ok = match position {
                            EventPosition::Start => root && i == 0,
                            EventPosition::End => root && i + 1 == children.len(),
                            EventPosition::Intermediate => true,
                        };
                        if !ok {
                            out.push(format!("{} event marker out of place", position.as_str()));
                        }
                    } else {
                        c.check_inner(false, out);
                    }
                }
            }
            BranchTree::Activity { .. } => {}
            BranchTree::Event { position, .. } => {
                if *position != EventPosition::Intermediate {
                    out.push(format!("{} event marker out of place", position.as_str()));
                }
            }
            BranchTree::Exclusive { branches, looping, .. } => {
                let ok = if *looping { (1..=2).contains(&branches.len()) } else { branches.len() >= 2 };
                if !ok {
                    out.push(format!("exclusive block with {} branches", branches.len()));
                }
                for b in branches {
                    if let Some(body) = &b.body {
                        body.check_inner(false, out);
                    }
                }
            }
            BranchTree::Parallel { branches, .. } => {
                if branches.len() < 2 {
                    out.push(format!("parallel block with {} branches", branches.len()));
                }
                for b in branches {
                    if let Some(body) = &b.body {
                        body.check_inner(false, out);
                    }
                }
            }
        }
    }

    /// Number of activities, events and blocks in the tree.
    pub fn size(&self) -> usize {
        match self {
            BranchTree::Sequence { children } => children.iter().map(BranchTree::size).sum(),
            BranchTree::Activity { .. } | BranchTree::Event { .. } => 1,
            BranchTree::Exclusive { branches, .. } | BranchTree::Parallel { branches, .. } => {
                1 + branches.iter().filter_map(|b| b.body.as_ref()).map(|b| b.size()).sum::<usize>()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonConvertibleReason {
    MultipleStartEvents,
    MultipleEndEvents,
    MissingStartEvent,
    MissingEndEvent,
    Disconnected,
    UnmatchedGatewayPair,
    IrreducibleCycle,
    CrossingBranches,
    HasPools,
    HasMessageFlows,
}

impl NonConvertibleReason {
    pub fn as_str(self) -> &'static str {
        match self {
            NonConvertibleReason::MultipleStartEvents => "multiple_start_events",
            NonConvertibleReason::MultipleEndEvents => "multiple_end_events",
            NonConvertibleReason::MissingStartEvent => "missing_start_event",
            NonConvertibleReason::MissingEndEvent => "missing_end_event",
            NonConvertibleReason::Disconnected => "disconnected",
            NonConvertibleReason::UnmatchedGatewayPair => "unmatched_gateway_pair",
            NonConvertibleReason::IrreducibleCycle => "irreducible_cycle",
            NonConvertibleReason::CrossingBranches => "crossing_branches",
            NonConvertibleReason::HasPools => "has_pools",
            NonConvertibleReason::HasMessageFlows => "has_message_flows",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvertibilityVerdict {
    pub convertible: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<NonConvertibleReason>,
}

impl ConvertibilityVerdict {
    pub const CONVERTIBLE: ConvertibilityVerdict = ConvertibilityVerdict { convertible: true, reason: None };

    pub fn rejected(reason: NonConvertibleReason) -> Self {
        ConvertibilityVerdict { convertible: false, reason: Some(reason) }
    }
}

impl fmt::Display for ConvertibilityVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.reason {
            None => f.write_str("convertible"),
            Some(r) => f.write_str(r.as_str()),
        }
    }
}

/// Result of a successful reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchConversion {
    pub tree: BranchTree,
    /// Elements that the tree cannot carry (join labels, stray conditions,
    /// dissolved gateways).
    pub losses: Vec<Loss>,
}

pub fn verdict(model: &ProcessModel) -> ConvertibilityVerdict {
    match to_branch_tree(model) {
        Ok(_) => ConvertibilityVerdict::CONVERTIBLE,
        Err(v) => v,
    }
}

// ---------------------------------------------------------------------------
// Reduction
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum Work {
    Start { label: Option<String> },
    End { label: Option<String> },
    Frag(Vec<BranchTree>),
    Gateway { id: String, ty: GatewayType, decision: Option<String> },
}

#[derive(Debug, Clone)]
struct Edge {
    id: String,
    src: usize,
    dst: usize,
    cond: Option<String>,
}

struct Reducer {
    nodes: Vec<Option<Work>>,
    edges: Vec<Option<Edge>>,
    losses: Vec<Loss>,
    saw_type_mismatch: bool,
}

impl Reducer {
    fn outs(&self, v: usize) -> Vec<usize> {
        self.edges.iter().enumerate().filter_map(|(i, e)| e.as_ref().filter(|e| e.src == v).map(|_| i)).collect()
    }

    fn ins(&self, v: usize) -> Vec<usize> {
        self.edges.iter().enumerate().filter_map(|(i, e)| e.as_ref().filter(|e| e.dst == v).map(|_| i)).collect()
    }

    fn edge(&self, e: usize) -> &Edge {
        self.edges[e].as_ref().expect("live edge")
    }

    fn is_frag(&self, v: usize) -> bool {
        matches!(self.nodes[v], Some(Work::Frag(_)))
    }

    fn gateway(&self, v: usize) -> Option<(String, GatewayType, Option<String>)> {
        match &self.nodes[v] {
            Some(Work::Gateway { id, ty, decision }) => Some((id.clone(), *ty, decision.clone())),
            _ => None,
        }
    }

    fn take_frag(&mut self, v: usize) -> Vec<BranchTree> {
        match self.nodes[v].take() {
            Some(Work::Frag(items)) => items,
            other => panic!("expected fragment, found {other:?}"),
        }
    }

    fn drop_edge(&mut self, e: usize, context: &str) {
        if let Some(edge) = self.edges[e].take() {
            if edge.cond.is_some() {
                self.losses.push(Loss::new(ElementType::Condition, edge.id, format!("condition {context}")));
            }
        }
    }

    fn drop_gateway(&mut self, v: usize, context: &str) {
        if let Some(Work::Gateway { id, decision, .. }) = self.nodes[v].take() {
            if decision.is_some() {
                self.losses.push(Loss::new(ElementType::Decision, id, format!("decision on {context}")));
            }
        }
    }

    /// Single fragment with one flow in and one flow out, returning its out edge.
    fn single_frag(&self, v: usize) -> Option<usize> {
        if !self.is_frag(v) || self.ins(v).len() != 1 {
            return None;
        }
        match self.outs(v).as_slice() {
            [o] => Some(*o),
            _ => None,
        }
    }

    fn dissolve_degenerate(&mut self) -> bool {
        for v in 0..self.nodes.len() {
            let Some((id, ty, decision)) = self.gateway(v) else {
                continue;
            };
            let (ins, outs) = (self.ins(v), self.outs(v));
            if ins.len() != 1 || outs.len() != 1 || self.edge(ins[0]).src == v {
                continue;
            }
            let out = self.edges[outs[0]].take().expect("live edge");
            let inc = self.edges[ins[0]].as_mut().expect("live edge");
            inc.dst = out.dst;
            match (&inc.cond, out.cond) {
                (None, c) => inc.cond = c,
                (Some(_), Some(_)) => {
                    self.losses.push(Loss::new(ElementType::Condition, out.id, "condition behind dissolved gateway"))
                }
                (Some(_), None) => {}
            }
            let element = match ty {
                GatewayType::Exclusive => ElementType::ExclusiveGateway,
                GatewayType::Parallel => ElementType::ParallelGateway,
            };
            self.losses.push(Loss::new(
                element,
                id.clone(),
                "gateway with one incoming and one outgoing flow dissolved",
            ));
            if decision.is_some() {
                self.losses.push(Loss::new(ElementType::Decision, id, "decision on dissolved gateway"));
            }
            self.nodes[v] = None;
            return true;
        }
        false
    }

    fn fuse_sequence(&mut self) -> bool {
        for e in 0..self.edges.len() {
            let Some(edge) = &self.edges[e] else { continue };
            let (u, v) = (edge.src, edge.dst);
            if u == v || !self.is_frag(u) || !self.is_frag(v) {
                continue;
            }
            if self.outs(u).len() != 1 || self.ins(v).len() != 1 {
                continue;
            }
            self.drop_edge(e, "inside a sequence");
            let tail = self.take_frag(v);
            if let Some(Work::Frag(items)) = &mut self.nodes[u] {
                items.extend(tail);
            }
            for edge in self.edges.iter_mut().flatten() {
                if edge.src == v {
                    edge.src = u;
                }
            }
            return true;
        }
        false
    }

    fn collapse_block(&mut self) -> bool {
        for g in 0..self.nodes.len() {
            let Some((_, ty, decision)) = self.gateway(g) else {
                continue;
            };
            let outs = self.outs(g);
            if self.ins(g).len() != 1 || outs.len() < 2 {
                continue;
            }
            // (entry edge, fragment, edge into join)
            let mut branches: Vec<(usize, Option<(usize, usize)>)> = Vec::new();
            let mut join = None;
            let mut ok = true;
            for &e in &outs {
                let w = self.edge(e).dst;
                let (j, frag) = if self.gateway(w).is_some() {
                    (w, None)
                } else if let Some(o) = self.single_frag(w) {
                    (self.edge(o).dst, Some((w, o)))
                } else {
                    ok = false;
                    break;
                };
                if *join.get_or_insert(j) != j {
                    ok = false;
                    break;
                }
                branches.push((e, frag));
            }
            let Some(j) = join.filter(|_| ok) else {
                continue;
            };
            let Some((_, jty, _)) = self.gateway(j) else {
                continue;
            };
            if j == g || self.ins(j).len() != branches.len() || self.outs(j).len() != 1 {
                continue;
            }
            if jty != ty {
                self.saw_type_mismatch = true;
                continue;
            }
            let mut tree_branches = Vec::new();
            for (e, frag) in branches {
                let cond = self.edges[e].take().and_then(|edge| edge.cond);
                let body = match frag {
                    Some((w, o)) => {
                        self.drop_edge(o, "on a flow entering a join");
                        Some(wrap(self.take_frag(w)))
                    }
                    None => None,
                };
                tree_branches.push(Branch::new(normalize_opt(cond.as_deref()), body));
            }
            self.drop_gateway(j, "join gateway");
            for edge in self.edges.iter_mut().flatten() {
                if edge.src == j {
                    edge.src = g;
                }
            }
            let block = match ty {
                GatewayType::Exclusive => BranchTree::Exclusive { decision, branches: tree_branches, looping: false },
                GatewayType::Parallel => BranchTree::Parallel { decision, branches: tree_branches },
            };
            self.nodes[g] = Some(Work::Frag(vec![block]));
            return true;
        }
        false
    }

    fn collapse_loop(&mut self) -> bool {
        for j in 0..self.nodes.len() {
            if !matches!(self.gateway(j), Some((_, GatewayType::Exclusive, _))) {
                continue;
            }
            let (j_ins, j_outs) = (self.ins(j), self.outs(j));
            if j_ins.len() != 2 || j_outs.len() != 1 {
                continue;
            }
            // join -> body? -> split
            let first = self.edge(j_outs[0]).dst;
            let (s, body) = if self.gateway(first).is_some() {
                (first, None)
            } else if let Some(o) = self.single_frag(first) {
                (self.edge(o).dst, Some((first, o)))
            } else {
                continue;
            };
            if s == j || !matches!(self.gateway(s), Some((_, GatewayType::Exclusive, _))) {
                continue;
            }
            let s_outs = self.outs(s);
            if self.ins(s).len() != 1 || s_outs.len() != 2 {
                continue;
            }
            // back path: split -> redo? -> join
            let back_of = |this: &Self, e: usize| -> Option<Option<(usize, usize)>> {
                let w = this.edge(e).dst;
                if w == j {
                    Some(None)
                } else if let Some(o) = this.single_frag(w) {
                    (this.edge(o).dst == j).then_some(Some((w, o)))
                } else {
                    None
                }
            };
            let paths: Vec<_> = s_outs.iter().map(|&e| back_of(self, e)).collect();
            let (back, exit, redo) = match (&paths[0], &paths[1]) {
                (Some(r), None) => (s_outs[0], s_outs[1], *r),
                (None, Some(r)) => (s_outs[1], s_outs[0], *r),
                _ => continue,
            };
            let back_into_join = match redo {
                Some((_, o)) => o,
                None => back,
            };
            let Some(&entry) = j_ins.iter().find(|&&e| e != back_into_join) else {
                continue;
            };
            if self.edge(entry).src == s {
                continue;
            }

            let (_, _, decision) = self.gateway(s).expect("split gateway");
            self.drop_edge(j_outs[0], "between loop join and body");
            let body_tree = body.map(|(w, o)| {
                self.drop_edge(o, "between loop body and split");
                wrap(self.take_frag(w))
            });
            let back_cond = self.edges[back].take().and_then(|e| e.cond);
            let redo_tree = redo.map(|(w, o)| {
                self.drop_edge(o, "between redo path and loop join");
                wrap(self.take_frag(w))
            });
            let exit_cond = self.edges[exit].as_mut().and_then(|e| e.cond.take());
            let mut branches = vec![Branch::new(normalize_opt(exit_cond.as_deref()), body_tree)];
            let back_cond = normalize_opt(back_cond.as_deref());
            if back_cond.is_some() || redo_tree.is_some() {
                branches.push(Branch::new(back_cond, redo_tree));
            }
            self.drop_gateway(j, "loop join gateway");
            self.nodes[s] = None;
            if let Some(e) = self.edges[exit].as_mut() {
                e.src = j;
            }
            self.nodes[j] = Some(Work::Frag(vec![BranchTree::Exclusive { decision, branches, looping: true }]));
            return true;
        }
        false
    }

    fn has_cycle(&self) -> bool {
        // Kahn's algorithm over live nodes.
        let n = self.nodes.len();
        let mut indeg = vec![0usize; n];
        for e in self.edges.iter().flatten() {
            indeg[e.dst] += 1;
        }
        let mut stack: Vec<usize> = (0..n).filter(|&v| self.nodes[v].is_some() && indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = stack.pop() {
            seen += 1;
            for e in self.edges.iter().flatten().filter(|e| e.src == v) {
                indeg[e.dst] -= 1;
                if indeg[e.dst] == 0 {
                    stack.push(e.dst);
                }
            }
        }
        seen < self.nodes.iter().flatten().count()
    }
}

fn wrap(mut items: Vec<BranchTree>) -> BranchTree {
    if items.len() == 1 {
        items.pop().expect("one item")
    } else {
        BranchTree::Sequence { children: items }
    }
}

/// Reduce a flow graph to a branch tree, or explain why it is not block-structured.
pub fn to_branch_tree(model: &ProcessModel) -> Result<BranchConversion, ConvertibilityVerdict> {
    use NonConvertibleReason::*;
    let reject = |r| Err(ConvertibilityVerdict::rejected(r));
    if !model.pools.is_empty() {
        return reject(HasPools);
    }
    if !model.message_flows.is_empty() {
        return reject(HasMessageFlows);
    }
    let starts = model.nodes.iter().filter(|n| n.kind == NodeKind::Event { position: EventPosition::Start }).count();
    let ends = model.nodes.iter().filter(|n| n.kind == NodeKind::Event { position: EventPosition::End }).count();
    match starts {
        0 => return reject(MissingStartEvent),
        1 => {}
        _ => return reject(MultipleStartEvents),
    }
    match ends {
        0 => return reject(MissingEndEvent),
        1 => {}
        _ => return reject(MultipleEndEvents),
    }

    let index: std::collections::HashMap<&str, usize> =
        model.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    let mut reducer = Reducer {
        nodes: model.nodes.iter().map(|n| Some(initial(n))).collect(),
        edges: Vec::new(),
        losses: Vec::new(),
        saw_type_mismatch: false,
    };
    for f in &model.sequence_flows {
        let (Some(&src), Some(&dst)) = (index.get(f.source.as_str()), index.get(f.target.as_str())) else {
            return reject(Disconnected);
        };
        reducer.edges.push(Some(Edge { id: f.id.clone(), src, dst, cond: normalize_opt(f.condition.as_deref()) }));
    }

    for (v, node) in model.nodes.iter().enumerate() {
        let (i, o) = (reducer.ins(v).len(), reducer.outs(v).len());
        let shape_ok = match node.kind {
            NodeKind::Event { position: EventPosition::Start } => (i, o) == (0, 1),
            NodeKind::Event { position: EventPosition::End } => (i, o) == (1, 0),
            NodeKind::Gateway { .. } => i >= 1 && o >= 1,
            _ => i == 1 && o == 1,
        };
        if !shape_ok {
            let implicit_gateway = match node.kind {
                NodeKind::Event { position: EventPosition::Start } => o > 1,
                NodeKind::Event { position: EventPosition::End } => i > 1,
                NodeKind::Gateway { .. } => false,
                _ => i > 1 || o > 1,
            };
            return reject(if implicit_gateway { UnmatchedGatewayPair } else { Disconnected });
        }
    }

    let limit = model.nodes.len() * 4 + model.sequence_flows.len() + 4;
    for _ in 0..limit {
        let progressed = reducer.dissolve_degenerate()
            || reducer.fuse_sequence()
            || reducer.collapse_block()
            || reducer.collapse_loop();
        if !progressed {
            break;
        }
    }

    let live: Vec<usize> = (0..reducer.nodes.len()).filter(|&v| reducer.nodes[v].is_some()).collect();
    let live_edges: Vec<&Edge> = reducer.edges.iter().flatten().collect();
    let start = live.iter().copied().find(|&v| matches!(reducer.nodes[v], Some(Work::Start { .. })));
    let end = live.iter().copied().find(|&v| matches!(reducer.nodes[v], Some(Work::End { .. })));
    let (Some(start), Some(end)) = (start, end) else {
        return reject(Disconnected);
    };
    let body = live.iter().copied().find(|&v| v != start && v != end);
    let done = match body {
        None => live.len() == 2 && live_edges.len() == 1 && live_edges[0].src == start && live_edges[0].dst == end,
        Some(b) => {
            live.len() == 3
                && live_edges.len() == 2
                && reducer.is_frag(b)
                && live_edges.iter().any(|e| e.src == start && e.dst == b)
                && live_edges.iter().any(|e| e.src == b && e.dst == end)
        }
    };
    if !done {
        let reason = if reducer.has_cycle() {
            IrreducibleCycle
        } else if reducer.saw_type_mismatch {
            UnmatchedGatewayPair
        } else {
            CrossingBranches
        };
        return reject(reason);
    }

    let edge_ids: Vec<usize> = (0..reducer.edges.len()).filter(|&e| reducer.edges[e].is_some()).collect();
    for e in edge_ids {
        reducer.drop_edge(e, "on a flow leaving the start or entering the end event");
    }
    let mut children = Vec::new();
    if let Some(Work::Start { label: Some(l) }) = &reducer.nodes[start] {
        children.push(BranchTree::Event { position: EventPosition::Start, label: Some(l.clone()) });
    }
    if let Some(b) = body {
        children.extend(reducer.take_frag(b));
    }
    if let Some(Work::End { label: Some(l) }) = &reducer.nodes[end] {
        children.push(BranchTree::Event { position: EventPosition::End, label: Some(l.clone()) });
    }
    Ok(BranchConversion { tree: BranchTree::Sequence { children }, losses: reducer.losses })
}

fn initial(node: &Node) -> Work {
    let label = node.norm_label();
    match node.kind {
        NodeKind::Task => Work::Frag(vec![BranchTree::Activity { label }]),
        NodeKind::Event { position: EventPosition::Start } => Work::Start { label },
        NodeKind::Event { position: EventPosition::End } => Work::End { label },
        NodeKind::Event { position } => Work::Frag(vec![BranchTree::Event { position, label }]),
        NodeKind::Gateway { gateway_type } => Work::Gateway { id: node.id.clone(), ty: gateway_type, decision: label },
    }
}

// ---------------------------------------------------------------------------
// Expansion
// ---------------------------------------------------------------------------

struct Builder {
    model: ProcessModel,
    tasks: usize,
    events: usize,
    gateways: usize,
}

/// Entry node, exit node and the condition carried by the flow leaving the exit.
type Piece = Option<(String, String, Option<String>)>;

impl Builder {
    fn node(&mut self, kind: NodeKind, label: Option<String>) -> String {
        let id = match kind {
            NodeKind::Task => {
                self.tasks += 1;
                format!("Task_{}", self.tasks)
            }
            NodeKind::Event { .. } => {
                self.events += 1;
                format!("Event_{}", self.events)
            }
            NodeKind::Gateway { .. } => {
                self.gateways += 1;
                format!("Gateway_{}", self.gateways)
            }
        };
        self.model.nodes.push(Node { id: id.clone(), kind, label: normalize_opt(label.as_deref()) });
        id
    }

    fn flow(&mut self, from: &str, to: &str, cond: Option<String>) {
        self.model.add_flow(from, to, normalize_opt(cond.as_deref()));
    }

    fn sequence(&mut self, items: &[BranchTree]) -> Piece {
        let mut entry: Option<String> = None;
        let mut tail: Option<(String, Option<String>)> = None;
        for item in items {
            let Some((i, o, c)) = self.build(item) else {
                continue;
            };
            match tail.take() {
                Some((prev, cond)) => self.flow(&prev, &i, cond),
                None => entry = Some(i),
            }
            tail = Some((o, c));
        }
        let (exit, cond) = tail?;
        Some((entry.expect("entry set with tail"), exit, cond))
    }

    fn branch_into(&mut self, split: &str, join: &str, branch: &Branch) {
        match branch.body.as_deref().and_then(|b| self.build(b)) {
            Some((i, o, c)) => {
                self.flow(split, &i, branch.condition.clone());
                self.flow(&o, join, c);
            }
            None => self.flow(split, join, branch.condition.clone()),
        }
    }

    fn build(&mut self, tree: &BranchTree) -> Piece {
        match tree {
            BranchTree::Sequence { children } => self.sequence(children),
            BranchTree::Activity { label } => {
                let id = self.node(NodeKind::Task, label.clone());
                Some((id.clone(), id, None))
            }
            BranchTree::Event { position, label } => {
                let id = self.node(NodeKind::Event { position: *position }, label.clone());
                Some((id.clone(), id, None))
            }
            BranchTree::Parallel { decision, branches } => {
                let kind = NodeKind::Gateway { gateway_type: GatewayType::Parallel };
                let split = self.node(kind, decision.clone());
                let join = self.node(kind, None);
                for b in branches {
                    self.branch_into(&split, &join, b);
                }
                Some((split, join, None))
            }
            BranchTree::Exclusive { decision, branches, looping: false } => {
                let kind = NodeKind::Gateway { gateway_type: GatewayType::Exclusive };
                let split = self.node(kind, decision.clone());
                let join = self.node(kind, None);
                for b in branches {
                    self.branch_into(&split, &join, b);
                }
                Some((split, join, None))
            }
            BranchTree::Exclusive { decision, branches, looping: true } => {
                let kind = NodeKind::Gateway { gateway_type: GatewayType::Exclusive };
                let join = self.node(kind, None);
                let (exit_cond, body) = match branches.first() {
                    Some(b) => (b.condition.clone(), b.body.as_deref()),
                    None => (None, None),
                };
                let body = body.and_then(|b| self.build(b));
                let split = self.node(kind, decision.clone());
                match body {
                    Some((i, o, c)) => {
                        self.flow(&join, &i, None);
                        self.flow(&o, &split, c);
                    }
                    None => self.flow(&join, &split, None),
                }
                let redo = branches.get(1).cloned().unwrap_or(Branch { condition: None, body: None });
                match redo.body.as_deref().and_then(|b| self.build(b)) {
                    Some((i, o, c)) => {
                        self.flow(&split, &i, redo.condition.clone());
                        self.flow(&o, &join, c);
                    }
                    None => self.flow(&split, &join, redo.condition.clone()),
                }
                Some((join, split, exit_cond))
            }
        }
    }
}

/// Expand a tree into a flow graph with exactly one start and one end event.
pub fn expand(tree: &BranchTree) -> ProcessModel {
    let mut b = Builder { model: ProcessModel::new("Process_1"), tasks: 0, events: 0, gateways: 0 };
    let mut items: &[BranchTree] = match tree {
        BranchTree::Sequence { children } => children,
        other => std::slice::from_ref(other),
    };
    let mut start_label = None;
    let mut end_label = None;
    if let Some((BranchTree::Event { position: EventPosition::Start, label }, rest)) = items.split_first() {
        start_label = label.clone();
        items = rest;
    }
    if let Some((BranchTree::Event { position: EventPosition::End, label }, rest)) = items.split_last() {
        end_label = label.clone();
        items = rest;
    }
    let start = b.node(NodeKind::Event { position: EventPosition::Start }, start_label);
    let body = b.sequence(items);
    let end = b.node(NodeKind::Event { position: EventPosition::End }, end_label);
    match body {
        Some((i, o, c)) => {
            b.flow(&start, &i, None);
            b.flow(&o, &end, c);
        }
        None => b.flow(&start, &end, None),
    }
    b.model
}

// ---------------------------------------------------------------------------
// Canonical form
// ---------------------------------------------------------------------------

/// Canonical form: nested sequences flattened, single-item sequences
/// unwrapped, unordered branches sorted by structural key, implicit
/// unlabeled start/end markers removed, labels normalized. Idempotent.
pub fn canonicalize(tree: &BranchTree) -> BranchTree {
    let mut items = canon_items(tree);
    let is_implicit = |t: &BranchTree, pos: EventPosition| matches!(t, BranchTree::Event { position, label: None } if *position == pos);
    if items.first().is_some_and(|t| is_implicit(t, EventPosition::Start)) {
        items.remove(0);
    }
    if items.last().is_some_and(|t| is_implicit(t, EventPosition::End)) {
        items.pop();
    }
    BranchTree::Sequence { children: items }
}

fn canon_items(tree: &BranchTree) -> Vec<BranchTree> {
    match tree {
        BranchTree::Sequence { children } => children.iter().flat_map(canon_items).collect(),
        BranchTree::Activity { label } => vec![BranchTree::Activity { label: normalize_opt(label.as_deref()) }],
        BranchTree::Event { position, label } => {
            vec![BranchTree::Event { position: *position, label: normalize_opt(label.as_deref()) }]
        }
        BranchTree::Exclusive { decision, branches, looping } => {
            let mut branches: Vec<Branch> = branches.iter().map(canon_branch).collect();
            if *looping {
                if branches.len() == 2 && branches[1].condition.is_none() && branches[1].body.is_none() {
                    branches.pop();
                }
            } else {
                sort_branches(&mut branches);
            }
            vec![BranchTree::Exclusive { decision: normalize_opt(decision.as_deref()), branches, looping: *looping }]
        }
        BranchTree::Parallel { decision, branches } => {
            let mut branches: Vec<Branch> = branches.iter().map(canon_branch).collect();
            sort_branches(&mut branches);
            vec![BranchTree::Parallel { decision: normalize_opt(decision.as_deref()), branches }]
        }
    }
}

fn canon_branch(b: &Branch) -> Branch {
    let items = b.body.as_deref().map(canon_items).unwrap_or_default();
    let body = match items.len() {
        0 => None,
        1 => items.into_iter().next(),
        _ => Some(BranchTree::Sequence { children: items }),
    };
    Branch::new(normalize_opt(b.condition.as_deref()), body)
}

fn sort_branches(branches: &mut [Branch]) {
    branches.sort_by_cached_key(|b| serde_json::to_string(b).expect("branch serializes"));
}


#[cfg(test)]
mod roundtrip {
    use super::*;
    use crate::synth::{random_tree, TreeProfile};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_trees_survive_expand_and_reduce() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for i in 0..2000 {
            let t = random_tree(&mut rng, &TreeProfile::FULL);
            let m = expand(&t);
            assert!(m.validate().is_empty());
            let conv = to_branch_tree(&m).unwrap_or_else(|v| panic!("case {i}: {v} for {t:?}"));
            assert_eq!(canonicalize(&conv.tree), canonicalize(&t), "case {i}");
            assert!(conv.losses.is_empty(), "case {i}: {:?}", conv.losses);
        }
    }

    #[test]
    fn canonicalize_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..500 {
            let c = canonicalize(&random_tree(&mut rng, &TreeProfile::FULL));
            assert_eq!(canonicalize(&c), c);
        }
    }
}

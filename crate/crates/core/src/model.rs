//! Canonical process-model graph.
//!
//! Every codec in this crate reads from and writes to [`ProcessModel`]. The
//! model is a plain value: nodes, sequence flows, pools with lanes, and
//! message flows, all addressed by opaque string identifiers.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Position of an event in the flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventPosition {
    Start,
    Intermediate,
    End,
}

impl EventPosition {
    pub fn as_str(self) -> &'static str {
        match self {
            EventPosition::Start => "start",
            EventPosition::Intermediate => "intermediate",
            EventPosition::End => "end",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "start" | "startevent" | "start_event" => Some(EventPosition::Start),
            "intermediate" | "intermediateevent" | "intermediate_event" => Some(EventPosition::Intermediate),
            "end" | "endevent" | "end_event" => Some(EventPosition::End),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GatewayType {
    Exclusive,
    Parallel,
}

impl GatewayType {
    pub fn as_str(self) -> &'static str {
        match self {
            GatewayType::Exclusive => "exclusive",
            GatewayType::Parallel => "parallel",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exclusive" | "xor" | "exclusivegateway" | "exclusive_gateway" => Some(GatewayType::Exclusive),
            "parallel" | "and" | "parallelgateway" | "parallel_gateway" => Some(GatewayType::Parallel),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeKind {
    Task,
    Event { position: EventPosition },
    Gateway { gateway_type: GatewayType },
}

/// A flow node. For gateways the label is the gateway's decision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Node {
    pub fn task(id: impl Into<String>, label: impl Into<String>) -> Self {
        Node { id: id.into(), kind: NodeKind::Task, label: Some(label.into()) }
    }

    pub fn event(id: impl Into<String>, position: EventPosition, label: Option<String>) -> Self {
        Node { id: id.into(), kind: NodeKind::Event { position }, label }
    }

    pub fn gateway(id: impl Into<String>, gateway_type: GatewayType, decision: Option<String>) -> Self {
        Node { id: id.into(), kind: NodeKind::Gateway { gateway_type }, label: decision }
    }

    pub fn element_type(&self) -> ElementType {
        match self.kind {
            NodeKind::Task => ElementType::Task,
            NodeKind::Event { position: EventPosition::Start } => ElementType::StartEvent,
            NodeKind::Event { position: EventPosition::Intermediate } => ElementType::IntermediateEvent,
            NodeKind::Event { position: EventPosition::End } => ElementType::EndEvent,
            NodeKind::Gateway { gateway_type: GatewayType::Exclusive } => ElementType::ExclusiveGateway,
            NodeKind::Gateway { gateway_type: GatewayType::Parallel } => ElementType::ParallelGateway,
        }
    }

    pub fn is_gateway(&self) -> bool {
        matches!(self.kind, NodeKind::Gateway { .. })
    }

    /// Normalized label, `None` when absent or blank.
    pub fn norm_label(&self) -> Option<String> {
        normalize_opt(self.label.as_deref())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceFlow {
    pub id: String,
    pub source: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lane {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub members: Vec<String>,
}

/// A pool. `members` lists nodes placed directly in the pool (outside any
/// lane); nodes inside a lane are listed only by that lane.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pool {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub lanes: Vec<Lane>,
    #[serde(default)]
    pub members: Vec<String>,
}

impl Pool {
    /// All nodes of the pool, lane members first.
    pub fn all_members(&self) -> impl Iterator<Item = &String> {
        self.lanes.iter().flat_map(|l| l.members.iter()).chain(self.members.iter())
    }
}

/// A message flow between nodes (or black-box pools) of different pools.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageFlow {
    pub id: String,
    pub source: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessModel {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub nodes: Vec<Node>,
    #[serde(default)]
    pub sequence_flows: Vec<SequenceFlow>,
    #[serde(default)]
    pub pools: Vec<Pool>,
    #[serde(default)]
    pub message_flows: Vec<MessageFlow>,
}

/// The countable element types of a process model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementType {
    Task,
    StartEvent,
    IntermediateEvent,
    EndEvent,
    ExclusiveGateway,
    ParallelGateway,
    SequenceFlow,
    Condition,
    Decision,
    Pool,
    Lane,
    MessageFlow,
}

impl ElementType {
    pub const ALL: [ElementType; 12] = [
        ElementType::Task,
        ElementType::StartEvent,
        ElementType::IntermediateEvent,
        ElementType::EndEvent,
        ElementType::ExclusiveGateway,
        ElementType::ParallelGateway,
        ElementType::SequenceFlow,
        ElementType::Condition,
        ElementType::Decision,
        ElementType::Pool,
        ElementType::Lane,
        ElementType::MessageFlow,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ElementType::Task => "task",
            ElementType::StartEvent => "start_event",
            ElementType::IntermediateEvent => "intermediate_event",
            ElementType::EndEvent => "end_event",
            ElementType::ExclusiveGateway => "exclusive_gateway",
            ElementType::ParallelGateway => "parallel_gateway",
            ElementType::SequenceFlow => "sequence_flow",
            ElementType::Condition => "condition",
            ElementType::Decision => "decision",
            ElementType::Pool => "pool",
            ElementType::Lane => "lane",
            ElementType::MessageFlow => "message_flow",
        }
    }
}

impl fmt::Display for ElementType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Trim and collapse internal whitespace. Case is preserved.
pub fn normalize_label(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// [`normalize_label`], mapping blank strings to `None`.
pub fn normalize_opt(s: Option<&str>) -> Option<String> {
    s.map(normalize_label).filter(|s| !s.is_empty())
}

/// True for identifiers in the canonical alphabet `[A-Za-z_][A-Za-z0-9_-]*`.
pub fn is_valid_identifier(id: &str) -> bool {
    let mut chars = id.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Map an arbitrary string onto the canonical identifier alphabet.
pub fn sanitize_identifier(raw: &str) -> String {
    let mut out: String =
        raw.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' }).collect();
    if !out.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_') {
        out.insert(0, '_');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    DuplicateId { id: String },
    InvalidIdentifier { id: String },
    DanglingSequenceFlow { flow: String, endpoint: String },
    DanglingMessageFlow { flow: String, endpoint: String },
    MessageFlowWithinPool { flow: String, pool: String },
    DanglingPoolMember { container: String, node: String },
    NodeInMultipleContainers { node: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateId { id } => write!(f, "duplicate identifier `{id}`"),
            Violation::InvalidIdentifier { id } => {
                write!(f, "identifier `{id}` outside [A-Za-z_][A-Za-z0-9_-]*")
            }
            Violation::DanglingSequenceFlow { flow, endpoint } => {
                write!(f, "sequence flow `{flow}` references unknown node `{endpoint}`")
            }
            Violation::DanglingMessageFlow { flow, endpoint } => {
                write!(f, "message flow `{flow}` references unknown node `{endpoint}`")
            }
            Violation::MessageFlowWithinPool { flow, pool } => {
                write!(f, "message flow `{flow}` connects two elements of pool `{pool}`")
            }
            Violation::DanglingPoolMember { container, node } => {
                write!(f, "`{container}` lists unknown node `{node}`")
            }
            Violation::NodeInMultipleContainers { node } => {
                write!(f, "node `{node}` is assigned to more than one lane or pool")
            }
        }
    }
}

impl ProcessModel {
    pub fn new(id: impl Into<String>) -> Self {
        ProcessModel { id: id.into(), ..Default::default() }
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
            && self.sequence_flows.is_empty()
            && self.pools.is_empty()
            && self.message_flows.is_empty()
    }

    pub fn add_flow(&mut self, source: &str, target: &str, condition: Option<String>) -> String {
        let id = format!("Flow_{}", self.sequence_flows.len() + 1);
        self.sequence_flows.push(SequenceFlow {
            id: id.clone(),
            source: source.to_string(),
            target: target.to_string(),
            condition,
        });
        id
    }

    /// Map of node id to the id of the pool containing it.
    pub fn pool_of_nodes(&self) -> HashMap<&str, &str> {
        let mut out = HashMap::new();
        for pool in &self.pools {
            for m in pool.all_members() {
                out.insert(m.as_str(), pool.id.as_str());
            }
        }
        out
    }

    /// Map of node id to the id of the lane containing it.
    pub fn lane_of_nodes(&self) -> HashMap<&str, &str> {
        let mut out = HashMap::new();
        for lane in self.pools.iter().flat_map(|p| p.lanes.iter()) {
            for m in &lane.members {
                out.insert(m.as_str(), lane.id.as_str());
            }
        }
        out
    }

    pub fn in_degree(&self, id: &str) -> usize {
        self.sequence_flows.iter().filter(|f| f.target == id).count()
    }

    pub fn out_degree(&self, id: &str) -> usize {
        self.sequence_flows.iter().filter(|f| f.source == id).count()
    }

    /// Returns every invariant violation; empty iff the model is well-formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        let all_ids = self
            .nodes
            .iter()
            .map(|n| &n.id)
            .chain(self.sequence_flows.iter().map(|f| &f.id))
            .chain(self.pools.iter().map(|p| &p.id))
            .chain(self.pools.iter().flat_map(|p| p.lanes.iter().map(|l| &l.id)))
            .chain(self.message_flows.iter().map(|f| &f.id));
        for id in all_ids {
            if !seen.insert(id.as_str()) {
                out.push(Violation::DuplicateId { id: id.clone() });
            } else if !is_valid_identifier(id) {
                out.push(Violation::InvalidIdentifier { id: id.clone() });
            }
        }

        let node_ids: HashSet<&str> = self.nodes.iter().map(|n| n.id.as_str()).collect();
        for f in &self.sequence_flows {
            for endpoint in [&f.source, &f.target] {
                if !node_ids.contains(endpoint.as_str()) {
                    out.push(Violation::DanglingSequenceFlow { flow: f.id.clone(), endpoint: endpoint.clone() });
                }
            }
        }

        let mut assigned: HashSet<&str> = HashSet::new();
        for pool in &self.pools {
            let containers =
                pool.lanes.iter().map(|l| (&l.id, &l.members)).chain(std::iter::once((&pool.id, &pool.members)));
            for (container, members) in containers {
                for m in members {
                    if !node_ids.contains(m.as_str()) {
                        out.push(Violation::DanglingPoolMember { container: container.clone(), node: m.clone() });
                    } else if !assigned.insert(m.as_str()) {
                        out.push(Violation::NodeInMultipleContainers { node: m.clone() });
                    }
                }
            }
        }

        let pool_ids: HashSet<&str> = self.pools.iter().map(|p| p.id.as_str()).collect();
        let pool_of = self.pool_of_nodes();
        for f in &self.message_flows {
            let mut dangling = false;
            for endpoint in [&f.source, &f.target] {
                if !node_ids.contains(endpoint.as_str()) && !pool_ids.contains(endpoint.as_str()) {
                    dangling = true;
                    out.push(Violation::DanglingMessageFlow { flow: f.id.clone(), endpoint: endpoint.clone() });
                }
            }
            if dangling || self.pools.is_empty() {
                continue;
            }
            let owner = |e: &str| -> Option<String> {
                if pool_ids.contains(e) {
                    Some(e.to_string())
                } else {
                    pool_of.get(e).map(|p| p.to_string())
                }
            };
            if let (Some(a), Some(b)) = (owner(&f.source), owner(&f.target)) {
                if a == b {
                    out.push(Violation::MessageFlowWithinPool { flow: f.id.clone(), pool: a });
                }
            }
        }
        out
    }

    pub fn is_well_formed(&self) -> bool {
        self.validate().is_empty()
    }

    pub fn count_elements(&self) -> ElementCounts {
        let mut counts = ElementCounts::default();
        for n in &self.nodes {
            counts.add(n.element_type(), 1);
            if n.is_gateway() && n.norm_label().is_some() {
                counts.add(ElementType::Decision, 1);
            }
        }
        for f in &self.sequence_flows {
            counts.add(ElementType::SequenceFlow, 1);
            if normalize_opt(f.condition.as_deref()).is_some() {
                counts.add(ElementType::Condition, 1);
            }
        }
        for p in &self.pools {
            counts.add(ElementType::Pool, 1);
            counts.add(ElementType::Lane, p.lanes.len());
        }
        counts.add(ElementType::MessageFlow, self.message_flows.len());
        counts
    }

    /// Structural equality up to an identifier-renaming bijection.
    pub fn canonical_equal(&self, other: &ProcessModel) -> bool {
        crate::iso::canonical_equal(self, other)
    }
}

/// Per-type element counts with the aggregates used in reports.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementCounts(pub BTreeMap<ElementType, usize>);

impl ElementCounts {
    fn add(&mut self, t: ElementType, n: usize) {
        *self.0.entry(t).or_insert(0) += n;
    }

    pub fn get(&self, t: ElementType) -> usize {
        self.0.get(&t).copied().unwrap_or(0)
    }

    pub fn tasks(&self) -> usize {
        self.get(ElementType::Task)
    }

    pub fn events(&self) -> usize {
        self.get(ElementType::StartEvent) + self.get(ElementType::IntermediateEvent) + self.get(ElementType::EndEvent)
    }

    pub fn gateways(&self) -> usize {
        self.get(ElementType::ExclusiveGateway) + self.get(ElementType::ParallelGateway)
    }

    /// Tasks + events + gateways.
    pub fn nodes(&self) -> usize {
        self.tasks() + self.events() + self.gateways()
    }

    /// Pools and lanes together.
    pub fn swimlanes(&self) -> usize {
        self.get(ElementType::Pool) + self.get(ElementType::Lane)
    }

    pub fn total(&self) -> usize {
        self.0.values().sum()
    }
}

/// An element that a conversion could not carry over.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Loss {
    pub element: ElementType,
    pub id: String,
    pub reason: String,
}

impl Loss {
    pub fn new(element: ElementType, id: impl Into<String>, reason: impl Into<String>) -> Self {
        Loss { element, id: id.into(), reason: reason.into() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn linear() -> ProcessModel {
        let mut m = ProcessModel::new("p");
        m.nodes.push(Node::event("s", EventPosition::Start, None));
        m.nodes.push(Node::task("t", "Check order"));
        m.nodes.push(Node::event("e", EventPosition::End, None));
        m.add_flow("s", "t", None);
        m.add_flow("t", "e", None);
        m
    }

    #[test]
    fn minimal_model_is_well_formed() {
        assert_eq!(linear().validate(), vec![]);
    }

    #[test]
    fn dangling_flow_reported_once() {
        let mut m = linear();
        m.sequence_flows.push(SequenceFlow {
            id: "f9".into(),
            source: "t".into(),
            target: "X".into(),
            condition: None,
        });
        assert_eq!(m.validate(), vec![Violation::DanglingSequenceFlow { flow: "f9".into(), endpoint: "X".into() }]);
    }

    #[test]
    fn duplicate_node_id_reported_once() {
        let mut m = linear();
        m.nodes.push(Node::task("t", "again"));
        assert_eq!(m.validate(), vec![Violation::DuplicateId { id: "t".into() }]);
    }

    #[test]
    fn message_flow_inside_one_pool_is_rejected() {
        let mut m = linear();
        m.pools.push(Pool {
            id: "P".into(),
            name: "Shop".into(),
            lanes: vec![],
            members: vec!["s".into(), "t".into(), "e".into()],
        });
        m.message_flows.push(MessageFlow { id: "m1".into(), source: "t".into(), target: "e".into(), label: None });
        assert_eq!(m.validate(), vec![Violation::MessageFlowWithinPool { flow: "m1".into(), pool: "P".into() }]);
    }

    #[test]
    fn node_in_two_lanes_is_rejected() {
        let mut m = linear();
        m.pools.push(Pool {
            id: "P".into(),
            name: "Shop".into(),
            lanes: vec![
                Lane { id: "L1".into(), name: "a".into(), members: vec!["t".into()] },
                Lane { id: "L2".into(), name: "b".into(), members: vec!["t".into()] },
            ],
            members: vec![],
        });
        assert_eq!(m.validate(), vec![Violation::NodeInMultipleContainers { node: "t".into() }]);
    }

    #[test]
    fn empty_model_counts_zero() {
        let c = ProcessModel::new("x").count_elements();
        assert_eq!(c.total(), 0);
        assert_eq!(c.nodes(), 0);
    }

    #[test]
    fn counts_diamond() {
        let mut m = ProcessModel::new("p");
        m.nodes.push(Node::event("s", EventPosition::Start, None));
        m.nodes.push(Node::gateway("g1", GatewayType::Exclusive, None));
        m.nodes.push(Node::task("a", "A"));
        m.nodes.push(Node::task("b", "B"));
        m.nodes.push(Node::gateway("g2", GatewayType::Exclusive, None));
        m.nodes.push(Node::event("e", EventPosition::End, None));
        for (s, t) in [("s", "g1"), ("g1", "a"), ("g1", "b"), ("a", "g2"), ("b", "g2"), ("g2", "e")] {
            m.add_flow(s, t, None);
        }
        let c = m.count_elements();
        assert_eq!(c.get(ElementType::Task), 2);
        assert_eq!(c.get(ElementType::StartEvent), 1);
        assert_eq!(c.get(ElementType::EndEvent), 1);
        assert_eq!(c.get(ElementType::ExclusiveGateway), 2);
        assert_eq!(c.get(ElementType::SequenceFlow), 6);
        assert_eq!(c.nodes(), 6);
        assert_eq!(c.get(ElementType::Condition), 0);
    }

    #[test]
    fn label_normalization_collapses_whitespace() {
        assert_eq!(normalize_label("  ship\t\n order "), "ship order");
        assert_eq!(normalize_opt(Some("   ")), None);
        assert_eq!(normalize_label("Ship Order"), "Ship Order");
    }

    #[test]
    fn identifier_alphabet() {
        assert!(is_valid_identifier("Task_1-a"));
        assert!(!is_valid_identifier("1abc"));
        assert!(!is_valid_identifier("a.b"));
        assert!(is_valid_identifier(&sanitize_identifier("9 lives.x")));
    }
}

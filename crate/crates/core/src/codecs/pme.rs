//! Process model elements: six flat lists.
//!
//! Nodes carry their container as optional `lane` / `pool` references, and
//! events carry an explicit `position`. Flow ids are optional.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::CodecError;
use crate::model::{
    normalize_opt, EventPosition, GatewayType, Lane, MessageFlow, Node, NodeKind, Pool, ProcessModel, SequenceFlow,
};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PmeTask {
    pub id: String,
    #[serde(default)]
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lane: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PmeEvent {
    pub id: String,
    #[serde(alias = "type")]
    pub position: EventPosition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lane: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PmeGateway {
    pub id: String,
    #[serde(rename = "type")]
    pub gateway_type: GatewayType,
    #[serde(default, skip_serializing_if = "Option::is_none", alias = "label")]
    pub decision: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lane: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PmeLane {
    pub id: String,
    #[serde(default)]
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PmeSwimlane {
    pub id: String,
    #[serde(default)]
    pub pool: String,
    #[serde(default)]
    pub lanes: Vec<PmeLane>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PmeSequenceFlow {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub source: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PmeMessageFlow {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub source: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PmeBundle {
    #[serde(default)]
    pub tasks: Vec<PmeTask>,
    #[serde(default)]
    pub events: Vec<PmeEvent>,
    #[serde(default)]
    pub gateways: Vec<PmeGateway>,
    #[serde(default)]
    pub swimlanes: Vec<PmeSwimlane>,
    #[serde(default)]
    pub sequence_flows: Vec<PmeSequenceFlow>,
    #[serde(default)]
    pub message_flows: Vec<PmeMessageFlow>,
}

pub fn to_pme(m: &ProcessModel) -> PmeBundle {
    let lane_of = m.lane_of_nodes();
    let pool_of = m.pool_of_nodes();
    let lane = |id: &str| lane_of.get(id).map(|s| s.to_string());
    // A node inside a lane is located by the lane alone.
    let pool = |id: &str| {
        if lane_of.contains_key(id) {
            None
        } else {
            pool_of.get(id).map(|s| s.to_string())
        }
    };
    let mut b = PmeBundle::default();
    for n in &m.nodes {
        match n.kind {
            NodeKind::Task => b.tasks.push(PmeTask {
                id: n.id.clone(),
                label: n.label.clone().unwrap_or_default(),
                lane: lane(&n.id),
                pool: pool(&n.id),
            }),
            NodeKind::Event { position } => b.events.push(PmeEvent {
                id: n.id.clone(),
                position,
                label: n.label.clone(),
                lane: lane(&n.id),
                pool: pool(&n.id),
            }),
            NodeKind::Gateway { gateway_type } => b.gateways.push(PmeGateway {
                id: n.id.clone(),
                gateway_type,
                decision: n.label.clone(),
                lane: lane(&n.id),
                pool: pool(&n.id),
            }),
        }
    }
    for p in &m.pools {
        b.swimlanes.push(PmeSwimlane {
            id: p.id.clone(),
            pool: p.name.clone(),
            lanes: p.lanes.iter().map(|l| PmeLane { id: l.id.clone(), name: l.name.clone() }).collect(),
        });
    }
    for f in &m.sequence_flows {
        b.sequence_flows.push(PmeSequenceFlow {
            id: Some(f.id.clone()),
            source: f.source.clone(),
            target: f.target.clone(),
            condition: f.condition.clone(),
        });
    }
    for f in &m.message_flows {
        b.message_flows.push(PmeMessageFlow {
            id: Some(f.id.clone()),
            source: f.source.clone(),
            target: f.target.clone(),
            label: f.label.clone(),
        });
    }
    b
}

pub fn from_pme(b: &PmeBundle) -> Result<ProcessModel, CodecError> {
    let mut m = ProcessModel::new("Process_1");
    let mut pools: Vec<Pool> = b
        .swimlanes
        .iter()
        .map(|s| Pool {
            id: s.id.clone(),
            name: s.pool.clone(),
            lanes: s
                .lanes
                .iter()
                .map(|l| Lane { id: l.id.clone(), name: l.name.clone(), members: Vec::new() })
                .collect(),
            members: Vec::new(),
        })
        .collect();
    let mut lane_index: HashMap<String, (usize, usize)> = HashMap::new();
    let mut pool_index: HashMap<String, usize> = HashMap::new();
    for (pi, p) in pools.iter().enumerate() {
        pool_index.insert(p.id.clone(), pi);
        for (li, l) in p.lanes.iter().enumerate() {
            lane_index.insert(l.id.clone(), (pi, li));
        }
    }
    let place = |pools: &mut Vec<Pool>, id: &str, lane: &Option<String>, pool: &Option<String>, kind: &str| {
        if let Some(l) = lane {
            let &(pi, li) = lane_index.get(l).ok_or_else(|| CodecError::Resolution {
                reference: l.clone(),
                context: format!("lane of {kind} `{id}`"),
            })?;
            if let Some(p) = pool {
                if pools[pi].id != *p {
                    return Err(CodecError::Resolution {
                        reference: p.clone(),
                        context: format!("pool of {kind} `{id}` does not contain lane `{l}`"),
                    });
                }
            }
            pools[pi].lanes[li].members.push(id.to_string());
        } else if let Some(p) = pool {
            let &pi = pool_index.get(p).ok_or_else(|| CodecError::Resolution {
                reference: p.clone(),
                context: format!("pool of {kind} `{id}`"),
            })?;
            pools[pi].members.push(id.to_string());
        }
        Ok(())
    };
    for t in &b.tasks {
        m.nodes.push(Node { id: t.id.clone(), kind: NodeKind::Task, label: normalize_opt(Some(&t.label)) });
        place(&mut pools, &t.id, &t.lane, &t.pool, "task")?;
    }
    for e in &b.events {
        m.nodes.push(Node::event(e.id.clone(), e.position, e.label.clone()));
        place(&mut pools, &e.id, &e.lane, &e.pool, "event")?;
    }
    for g in &b.gateways {
        m.nodes.push(Node::gateway(g.id.clone(), g.gateway_type, g.decision.clone()));
        place(&mut pools, &g.id, &g.lane, &g.pool, "gateway")?;
    }
    m.pools = pools;
    let nodes: HashSet<&str> = m.nodes.iter().map(|n| n.id.as_str()).collect();
    let pool_ids: HashSet<&str> = m.pools.iter().map(|p| p.id.as_str()).collect();
    let mut used: HashSet<String> = HashSet::new();
    let mut flow_id = |given: &Option<String>, prefix: &str, k: usize| -> String {
        let base = given.clone().filter(|s| !s.trim().is_empty()).unwrap_or_else(|| format!("{prefix}_{k}"));
        let mut id = base.clone();
        let mut n = 2;
        while !used.insert(id.clone()) {
            id = format!("{base}_{n}");
            n += 1;
        }
        id
    };
    let mut flows = Vec::new();
    for (k, f) in b.sequence_flows.iter().enumerate() {
        for end in [&f.source, &f.target] {
            if !nodes.contains(end.as_str()) {
                return Err(CodecError::Resolution {
                    reference: end.clone(),
                    context: format!("sequence flow {} -> {}", f.source, f.target),
                });
            }
        }
        flows.push(SequenceFlow {
            id: flow_id(&f.id, "Flow", k + 1),
            source: f.source.clone(),
            target: f.target.clone(),
            condition: f.condition.clone(),
        });
    }
    let mut messages = Vec::new();
    for (k, f) in b.message_flows.iter().enumerate() {
        for end in [&f.source, &f.target] {
            if !nodes.contains(end.as_str()) && !pool_ids.contains(end.as_str()) {
                return Err(CodecError::Resolution {
                    reference: end.clone(),
                    context: format!("message flow {} -> {}", f.source, f.target),
                });
            }
        }
        messages.push(MessageFlow {
            id: flow_id(&f.id, "MessageFlow", k + 1),
            source: f.source.clone(),
            target: f.target.clone(),
            label: f.label.clone(),
        });
    }
    m.sequence_flows = flows;
    m.message_flows = messages;
    Ok(m)
}

pub(crate) fn write(m: &ProcessModel) -> String {
    let mut s = serde_json::to_string_pretty(&to_pme(m)).expect("bundle serializes");
    s.push('\n');
    s
}

pub(crate) fn parse_bundle(text: &str) -> Result<PmeBundle, CodecError> {
    let value: serde_json::Value = serde_json::from_str(text.trim()).map_err(|e| CodecError::Syntax {
        position: crate::error::Position { line: e.line(), column: e.column() },
        message: e.to_string(),
        expected: "a JSON object".into(),
    })?;
    let value = unwrap_container(value);
    if !value.is_object() {
        return Err(CodecError::Schema { path: "$".into(), message: "expected an object with six lists".into() });
    }
    serde_json::from_value(value).map_err(|e| CodecError::Schema { path: "$".into(), message: e.to_string() })
}

/// Accept `{"process": {...six lists...}}` style wrappers.
fn unwrap_container(v: serde_json::Value) -> serde_json::Value {
    const KEYS: [&str; 6] = ["tasks", "events", "gateways", "swimlanes", "sequence_flows", "message_flows"];
    match v {
        serde_json::Value::Object(ref o) if o.len() == 1 && !KEYS.iter().any(|k| o.contains_key(*k)) => {
            let inner = o.values().next().cloned().unwrap();
            if inner.is_object() {
                inner
            } else {
                v
            }
        }
        v => v,
    }
}

pub(crate) fn read(text: &str) -> Result<ProcessModel, CodecError> {
    from_pme(&parse_bundle(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_model_gives_six_empty_lists() {
        let b = to_pme(&ProcessModel::new("p"));
        assert_eq!(b, PmeBundle::default());
        let v: serde_json::Value = serde_json::to_value(&b).unwrap();
        assert_eq!(v.as_object().unwrap().len(), 6);
    }

    #[test]
    fn one_pool_two_lanes() {
        let mut m = ProcessModel::new("p");
        m.nodes.push(Node::task("a", "A"));
        m.nodes.push(Node::task("b", "B"));
        m.pools.push(Pool {
            id: "P".into(),
            name: "Shop".into(),
            lanes: vec![
                Lane { id: "L1".into(), name: "Clerk".into(), members: vec!["a".into()] },
                Lane { id: "L2".into(), name: "Boss".into(), members: vec!["b".into()] },
            ],
            members: vec![],
        });
        let b = to_pme(&m);
        assert_eq!(b.swimlanes.len(), 1);
        assert_eq!(b.swimlanes[0].lanes.iter().map(|l| l.name.as_str()).collect::<Vec<_>>(), ["Clerk", "Boss"]);
        assert!(from_pme(&b).unwrap().canonical_equal(&m));
    }

    #[test]
    fn dangling_flow_is_a_resolution_error() {
        let text = r#"{"tasks":[{"id":"a","label":"A"}],"sequence_flows":[{"source":"a","target":"zz"}]}"#;
        assert!(matches!(read(text), Err(CodecError::Resolution { .. })));
    }
}

//! Simplified XML: BPMN process content without namespaces, diagram data or
//! incoming/outgoing bookkeeping.
//!
//! ```xml
//! <process id="p" name="Order">
//!   <startEvent id="s"/>
//!   <task id="t" name="Check order"/>
//!   <exclusiveGateway id="g" name="In stock?"/>
//!   <sequenceFlow source="s" target="t"/>
//!   <sequenceFlow source="g" target="t" condition="no"/>
//!   <pool id="P" name="Shop" ref="x">
//!     <lane id="L" name="Clerk" ref="s t g"/>
//!   </pool>
//!   <messageFlow source="t" target="Q" name="order"/>
//! </process>
//! ```

use crate::codecs::graph::GraphBuilder;
use crate::codecs::xmlw::{xml_error, XmlWriter};
use crate::codecs::Warnings;
use crate::error::CodecError;
use crate::model::{normalize_opt, EventPosition, GatewayType, Lane, Node, NodeKind, Pool, ProcessModel};

pub fn write(m: &ProcessModel) -> String {
    let mut w = XmlWriter::new(false);
    let mut attrs = vec![("id", m.id.as_str())];
    if let Some(name) = m.name.as_deref() {
        attrs.push(("name", name));
    }
    w.open("process", &attrs);
    for n in &m.nodes {
        let tag = match n.kind {
            NodeKind::Task => "task",
            NodeKind::Event { position: EventPosition::Start } => "startEvent",
            NodeKind::Event { position: EventPosition::Intermediate } => "intermediateEvent",
            NodeKind::Event { position: EventPosition::End } => "endEvent",
            NodeKind::Gateway { gateway_type: GatewayType::Exclusive } => "exclusiveGateway",
            NodeKind::Gateway { gateway_type: GatewayType::Parallel } => "parallelGateway",
        };
        let mut a = vec![("id", n.id.as_str())];
        if let Some(l) = n.label.as_deref() {
            a.push(("name", l));
        }
        w.empty(tag, &a);
    }
    for f in &m.sequence_flows {
        let mut a = vec![("source", f.source.as_str()), ("target", f.target.as_str())];
        if let Some(c) = f.condition.as_deref() {
            a.push(("condition", c));
        }
        w.empty("sequenceFlow", &a);
    }
    for p in &m.pools {
        let refs = p.members.join(" ");
        let mut a = vec![("id", p.id.as_str()), ("name", p.name.as_str())];
        if !p.members.is_empty() {
            a.push(("ref", refs.as_str()));
        }
        if p.lanes.is_empty() {
            w.empty("pool", &a);
            continue;
        }
        w.open("pool", &a);
        for l in &p.lanes {
            let refs = l.members.join(" ");
            w.empty("lane", &[("id", l.id.as_str()), ("name", l.name.as_str()), ("ref", refs.as_str())]);
        }
        w.close();
    }
    for f in &m.message_flows {
        let mut a = vec![("source", f.source.as_str()), ("target", f.target.as_str())];
        if let Some(l) = f.label.as_deref() {
            a.push(("name", l));
        }
        w.empty("messageFlow", &a);
    }
    w.finish()
}

fn label_of(e: &roxmltree::Node) -> Option<String> {
    normalize_opt(e.attribute("name").or_else(|| e.attribute("label")))
}

fn refs(e: &roxmltree::Node) -> Vec<String> {
    e.attribute("ref").or_else(|| e.attribute("refs")).unwrap_or("").split_whitespace().map(str::to_string).collect()
}

pub(crate) fn read(text: &str, w: &mut Warnings) -> Result<ProcessModel, CodecError> {
    let doc = roxmltree::Document::parse(text.trim()).map_err(xml_error)?;
    let root = doc.root_element();
    let process = if root.tag_name().name() == "process" {
        root
    } else {
        root.descendants()
            .find(|e| e.tag_name().name() == "process")
            .ok_or_else(|| CodecError::Schema { path: "/".into(), message: "no <process> element".into() })?
    };
    let mut g = GraphBuilder::new(process.attribute("id").unwrap_or("Process_1"));
    g.model.name = normalize_opt(process.attribute("name"));
    let mut auto = 0usize;
    let mut fresh_id = |e: &roxmltree::Node, prefix: &str| -> String {
        match e.attribute("id") {
            Some(id) if !id.trim().is_empty() => id.trim().to_string(),
            _ => {
                auto += 1;
                format!("{prefix}_{auto}")
            }
        }
    };
    for e in process.children().filter(|e| e.is_element()) {
        let tag = e.tag_name().name();
        let kind = match tag {
            "task" | "userTask" | "serviceTask" | "manualTask" => Some(NodeKind::Task),
            "startEvent" => Some(NodeKind::Event { position: EventPosition::Start }),
            "intermediateEvent" | "intermediateCatchEvent" | "intermediateThrowEvent" => {
                Some(NodeKind::Event { position: EventPosition::Intermediate })
            }
            "endEvent" => Some(NodeKind::Event { position: EventPosition::End }),
            "exclusiveGateway" => Some(NodeKind::Gateway { gateway_type: GatewayType::Exclusive }),
            "parallelGateway" => Some(NodeKind::Gateway { gateway_type: GatewayType::Parallel }),
            _ => None,
        };
        if let Some(kind) = kind {
            let id = fresh_id(&e, "Node");
            g.declare(Node { id, kind, label: label_of(&e) });
            continue;
        }
        match tag {
            "sequenceFlow" => {
                let (Some(s), Some(t)) = (
                    e.attribute("source").or(e.attribute("sourceRef")),
                    e.attribute("target").or(e.attribute("targetRef")),
                ) else {
                    w.warn("sequenceFlow without source or target ignored")?;
                    continue;
                };
                g.edge(s.trim(), t.trim(), e.attribute("condition").or(e.attribute("name")).map(str::to_string));
            }
            "messageFlow" => {
                let (Some(s), Some(t)) = (
                    e.attribute("source").or(e.attribute("sourceRef")),
                    e.attribute("target").or(e.attribute("targetRef")),
                ) else {
                    w.warn("messageFlow without source or target ignored")?;
                    continue;
                };
                g.message(s.trim(), t.trim(), label_of(&e));
            }
            "pool" => {
                let id = fresh_id(&e, "Pool");
                let mut pool = Pool {
                    name: e.attribute("name").unwrap_or("").trim().to_string(),
                    id,
                    lanes: Vec::new(),
                    members: refs(&e),
                };
                for l in e.children().filter(|c| c.is_element()) {
                    if l.tag_name().name() != "lane" {
                        w.warn(format!("unexpected <{}> inside pool ignored", l.tag_name().name()))?;
                        continue;
                    }
                    pool.lanes.push(Lane {
                        id: fresh_id(&l, "Lane"),
                        name: l.attribute("name").unwrap_or("").trim().to_string(),
                        members: refs(&l),
                    });
                }
                g.model.pools.push(pool);
            }
            other => w.warn(format!("unknown element <{other}> ignored"))?,
        }
    }
    let model = g.finish(w)?;
    Ok(model)
}

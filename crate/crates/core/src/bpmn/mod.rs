//! BPMN 2.0 XML reading and writing.
//!
//! Only the element kinds of [`ProcessModel`] are modelled. Task subtypes are
//! read as tasks, event definitions are dropped, and artifacts such as data
//! objects and text annotations are kept in a side channel that a preserving
//! serialization writes back. Everything that does not survive is listed in
//! [`ParsedBpmn::notes`].

mod layout;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

pub use layout::{layout, node_size, LayoutPlan, Rect};

use crate::codecs::xmlw::{escape, xml_error, XmlWriter};
use crate::codecs::IdAlloc;
use crate::error::CodecError;
use crate::model::{
    normalize_opt, sanitize_identifier, EventPosition, GatewayType, Lane, MessageFlow, Node, NodeKind, Pool,
    ProcessModel, SequenceFlow,
};

pub const MODEL_NS: &str = "http://www.omg.org/spec/BPMN/20100524/MODEL";
pub const BPMNDI_NS: &str = "http://www.omg.org/spec/BPMN/20100524/DI";
pub const DC_NS: &str = "http://www.omg.org/spec/DD/20100524/DC";
pub const DI_NS: &str = "http://www.omg.org/spec/DD/20100524/DI";
pub const XSI_NS: &str = "http://www.w3.org/2001/XMLSchema-instance";
const TARGET_NS: &str = "urn:pmrkit:model";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpmnDocument {
    pub xml_text: String,
    pub has_diagram_section: bool,
    pub source_path: Option<String>,
}

impl BpmnDocument {
    pub fn from_text(xml_text: String, source_path: Option<String>) -> Self {
        let has_diagram_section = xml_text.contains("BPMNDiagram");
        BpmnDocument { xml_text, has_diagram_section, source_path }
    }
}

/// Something read but not carried into the model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseNote {
    pub element: String,
    pub id: Option<String>,
    pub message: String,
}

impl fmt::Display for ParseNote {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.id {
            Some(id) => write!(f, "<{}> `{id}`: {}", self.element, self.message),
            None => write!(f, "<{}>: {}", self.element, self.message),
        }
    }
}

/// An artifact kept verbatim (re-serialized with this module's prefixes).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Preserved {
    /// Pool the artifact belonged to; `None` for the pool-free process or
    /// the collaboration.
    pub pool: Option<String>,
    pub xml: String,
}

#[derive(Debug, Clone)]
pub struct ParsedBpmn {
    pub model: ProcessModel,
    /// Lossy readings: coerced subtypes, ignored elements, dropped flows.
    pub notes: Vec<ParseNote>,
    pub preserved: Vec<Preserved>,
    /// Number of diagram-interchange elements skipped.
    pub diagram_elements: usize,
}

const TASK_KINDS: [&str; 10] = [
    "task",
    "userTask",
    "serviceTask",
    "manualTask",
    "scriptTask",
    "sendTask",
    "receiveTask",
    "businessRuleTask",
    "callActivity",
    "subProcess",
];
const ARTIFACTS: [&str; 9] = [
    "dataObject",
    "dataObjectReference",
    "dataStoreReference",
    "dataStore",
    "textAnnotation",
    "association",
    "group",
    "category",
    "property",
];
const UNSUPPORTED_GATEWAYS: [&str; 3] = ["inclusiveGateway", "complexGateway", "eventBasedGateway"];

struct Reader<'a> {
    text: &'a str,
    notes: Vec<ParseNote>,
    preserved: Vec<Preserved>,
    model: ProcessModel,
    /// Original id -> sanitized id.
    ids: HashMap<String, String>,
    dropped: HashSet<String>,
}

fn name<'a>(e: roxmltree::Node<'a, '_>) -> &'a str {
    e.tag_name().name()
}

fn children<'a, 'i>(e: roxmltree::Node<'a, 'i>) -> impl Iterator<Item = roxmltree::Node<'a, 'i>> {
    e.children().filter(|c| c.is_element())
}

impl<'a> Reader<'a> {
    fn note(&mut self, e: roxmltree::Node, message: impl Into<String>) {
        self.notes.push(ParseNote {
            element: name(e).to_string(),
            id: e.attribute("id").map(str::to_string),
            message: message.into(),
        });
    }

    fn id(&mut self, raw: &str) -> String {
        let raw = raw.trim();
        if let Some(id) = self.ids.get(raw) {
            return id.clone();
        }
        let id = sanitize_identifier(raw);
        self.ids.insert(raw.to_string(), id.clone());
        id
    }

    fn element_id(&mut self, e: roxmltree::Node, fallback: &str) -> String {
        match e.attribute("id") {
            Some(raw) => self.id(raw),
            None => {
                let n = self.ids.len() + 1;
                let id = format!("{fallback}_{n}");
                self.note(e, format!("missing id, assigned `{id}`"));
                id
            }
        }
    }

    fn preserve(&mut self, e: roxmltree::Node, pool: &Option<String>) {
        self.preserved.push(Preserved { pool: pool.clone(), xml: reserialize(e) });
        self.note(e, "artifact kept out of the model");
    }

    /// Read one `<process>`; returns the ids of the nodes it declares.
    fn process(&mut self, p: roxmltree::Node, pool: &Option<String>) -> Result<(Vec<String>, Vec<Lane>), CodecError> {
        let mut members = Vec::new();
        let mut lanes = Vec::new();
        let mut flows = Vec::new();
        for e in children(p) {
            let tag = name(e);
            match tag {
                "laneSet" => self.lane_set(e, &mut lanes),
                "sequenceFlow" => flows.push(e),
                t if TASK_KINDS.contains(&t) => {
                    let id = self.element_id(e, "Task");
                    if t != "task" {
                        self.note(e, "read as a plain task");
                    }
                    if t == "subProcess" && children(e).any(|c| !matches!(name(c), "incoming" | "outgoing")) {
                        self.note(e, "sub-process content ignored");
                    }
                    let label = normalize_opt(e.attribute("name"));
                    self.model.nodes.push(Node { id: id.clone(), kind: NodeKind::Task, label });
                    members.push(id);
                    for c in children(e) {
                        if matches!(name(c), "dataInputAssociation" | "dataOutputAssociation") {
                            self.note(c, "data association ignored");
                        }
                    }
                }
                "startEvent" | "endEvent" | "intermediateCatchEvent" | "intermediateThrowEvent" => {
                    let id = self.element_id(e, "Event");
                    let position = match tag {
                        "startEvent" => EventPosition::Start,
                        "endEvent" => EventPosition::End,
                        _ => EventPosition::Intermediate,
                    };
                    for c in children(e) {
                        if name(c).ends_with("EventDefinition") {
                            self.note(c, "event definition ignored");
                        }
                    }
                    let label = normalize_opt(e.attribute("name"));
                    self.model.nodes.push(Node::event(id.clone(), position, label));
                    members.push(id);
                }
                "exclusiveGateway" | "parallelGateway" => {
                    let id = self.element_id(e, "Gateway");
                    let gt = if tag == "exclusiveGateway" { GatewayType::Exclusive } else { GatewayType::Parallel };
                    let decision = normalize_opt(e.attribute("name"));
                    self.model.nodes.push(Node::gateway(id.clone(), gt, decision));
                    members.push(id);
                }
                t if UNSUPPORTED_GATEWAYS.contains(&t) => {
                    return Err(CodecError::UnsupportedElement {
                        element: t.to_string(),
                        id: e.attribute("id").unwrap_or("").to_string(),
                    });
                }
                t if ARTIFACTS.contains(&t) => self.preserve(e, pool),
                "documentation" | "extensionElements" | "ioSpecification" => {}
                _ => {
                    if let Some(raw) = e.attribute("id") {
                        self.dropped.insert(raw.trim().to_string());
                    }
                    self.note(e, "unsupported element ignored");
                }
            }
        }
        for f in flows {
            self.sequence_flow(f);
        }
        Ok((members, lanes))
    }

    fn lane_set(&mut self, set: roxmltree::Node, lanes: &mut Vec<Lane>) {
        for l in children(set).filter(|c| name(*c) == "lane") {
            let id = self.element_id(l, "Lane");
            let mut members = Vec::new();
            for c in children(l) {
                match name(c) {
                    "flowNodeRef" => {
                        if let Some(t) = c.text() {
                            members.push(self.id(t));
                        }
                    }
                    "childLaneSet" => {
                        self.note(c, "nested lanes flattened");
                        self.lane_set(c, lanes);
                    }
                    _ => {}
                }
            }
            lanes.push(Lane { id, name: normalize_opt(l.attribute("name")).unwrap_or_default(), members });
        }
    }

    fn sequence_flow(&mut self, f: roxmltree::Node) {
        let (Some(s), Some(t)) = (f.attribute("sourceRef"), f.attribute("targetRef")) else {
            self.note(f, "flow without sourceRef/targetRef dropped");
            return;
        };
        if self.dropped.contains(s.trim()) || self.dropped.contains(t.trim()) {
            self.note(f, "flow touching an ignored element dropped");
            return;
        }
        let id = self.element_id(f, "Flow");
        let expr = children(f).find(|c| name(*c) == "conditionExpression").and_then(|c| normalize_opt(c.text()));
        let condition = normalize_opt(f.attribute("name")).or(expr);
        let (source, target) = (self.id(s), self.id(t));
        self.model.sequence_flows.push(SequenceFlow { id, source, target, condition });
    }
}

/// Serialize a subtree with the prefixes this module writes.
fn reserialize(e: roxmltree::Node) -> String {
    fn prefix(ns: Option<&str>) -> Option<&'static str> {
        match ns {
            Some(MODEL_NS) | None => Some(""),
            Some(BPMNDI_NS) => Some("bpmndi:"),
            Some(DC_NS) => Some("dc:"),
            Some(DI_NS) => Some("di:"),
            Some(XSI_NS) => Some("xsi:"),
            _ => None,
        }
    }
    fn walk(e: roxmltree::Node, out: &mut String) {
        let Some(p) = prefix(e.tag_name().namespace()) else {
            return;
        };
        let tag = format!("{p}{}", e.tag_name().name());
        out.push('<');
        out.push_str(&tag);
        for a in e.attributes() {
            if let Some(ap) = prefix(a.namespace()) {
                out.push_str(&format!(" {ap}{}=\"{}\"", a.name(), escape(a.value())));
            }
        }
        let kids: Vec<_> = e.children().filter(|c| c.is_element() || c.is_text()).collect();
        if kids.iter().all(|c| c.is_text() && c.text().unwrap_or("").trim().is_empty()) {
            out.push_str("/>");
            return;
        }
        out.push('>');
        for c in kids {
            if c.is_text() {
                out.push_str(&escape(c.text().unwrap_or("").trim()));
            } else {
                walk(c, out);
            }
        }
        out.push_str(&format!("</{tag}>"));
    }
    let mut out = String::new();
    walk(e, &mut out);
    out
}

/// Parse BPMN 2.0 XML into a model.
pub fn parse(text: &str) -> Result<ParsedBpmn, CodecError> {
    let doc = roxmltree::Document::parse(text.trim_start_matches('\u{feff}').trim()).map_err(xml_error)?;
    let root = doc.root_element();
    if name(root) != "definitions" {
        return Err(CodecError::Schema {
            path: "/".into(),
            message: format!("root element is <{}>, expected <definitions>", name(root)),
        });
    }
    let mut r = Reader {
        text,
        notes: Vec::new(),
        preserved: Vec::new(),
        model: ProcessModel::default(),
        ids: HashMap::new(),
        dropped: HashSet::new(),
    };
    if root.tag_name().namespace() != Some(MODEL_NS) {
        r.notes.push(ParseNote {
            element: "definitions".into(),
            id: None,
            message: "not in the BPMN 2.0 model namespace".into(),
        });
    }
    let mut diagram_elements = 0;
    let processes: Vec<_> = children(root).filter(|c| name(*c) == "process").collect();
    let collaboration = children(root).find(|c| name(*c) == "collaboration");

    // Participants decide which process becomes which pool.
    let mut pool_of_process: HashMap<String, usize> = HashMap::new();
    if let Some(c) = collaboration {
        for p in children(c).filter(|p| name(*p) == "participant") {
            let id = r.element_id(p, "Pool");
            let pool = Pool {
                id,
                name: normalize_opt(p.attribute("name")).unwrap_or_default(),
                lanes: Vec::new(),
                members: Vec::new(),
            };
            if let Some(pr) = p.attribute("processRef") {
                pool_of_process.insert(pr.trim().to_string(), r.model.pools.len());
            }
            r.model.pools.push(pool);
        }
    }
    for p in &processes {
        let raw = p.attribute("id").unwrap_or("").trim().to_string();
        let pool_idx = pool_of_process.get(&raw).copied();
        let pool_id = pool_idx.map(|i| r.model.pools[i].id.clone());
        let (members, lanes) = r.process(*p, &pool_id)?;
        match pool_idx {
            Some(i) => {
                let in_lane: HashSet<&String> = lanes.iter().flat_map(|l| l.members.iter()).collect();
                let direct: Vec<String> = members.iter().filter(|m| !in_lane.contains(m)).cloned().collect();
                let pool = &mut r.model.pools[i];
                pool.members = direct;
                pool.lanes = lanes;
            }
            None if !lanes.is_empty() => {
                // Lanes need a pool; use the process itself.
                r.notes.push(ParseNote {
                    element: "process".into(),
                    id: Some(raw.clone()),
                    message: "lanes outside a participant read as a pool".into(),
                });
                let in_lane: HashSet<&String> = lanes.iter().flat_map(|l| l.members.iter()).collect();
                let direct: Vec<String> = members.iter().filter(|m| !in_lane.contains(m)).cloned().collect();
                let id = r.id(if raw.is_empty() { "Process" } else { &raw });
                let name = normalize_opt(p.attribute("name")).unwrap_or_default();
                r.model.pools.push(Pool { id, name, lanes, members: direct });
            }
            None => {}
        }
    }
    if let Some(c) = collaboration {
        for e in children(c) {
            match name(e) {
                "participant" => {}
                "messageFlow" => {
                    let (Some(s), Some(t)) = (e.attribute("sourceRef"), e.attribute("targetRef")) else {
                        r.note(e, "message flow without sourceRef/targetRef dropped");
                        continue;
                    };
                    if r.dropped.contains(s.trim()) || r.dropped.contains(t.trim()) {
                        r.note(e, "message flow touching an ignored element dropped");
                        continue;
                    }
                    let id = r.element_id(e, "MessageFlow");
                    let (source, target) = (r.id(s), r.id(t));
                    let label = normalize_opt(e.attribute("name"));
                    r.model.message_flows.push(MessageFlow { id, source, target, label });
                }
                t if ARTIFACTS.contains(&t) => r.preserve(e, &None),
                "documentation" | "extensionElements" => {}
                _ => r.note(e, "unsupported element ignored"),
            }
        }
    }
    for e in children(root) {
        match name(e) {
            "process" | "collaboration" => {}
            "BPMNDiagram" => diagram_elements += e.descendants().filter(|d| d.is_element()).count(),
            "documentation" | "extensionElements" | "message" | "itemDefinition" => {}
            t if ARTIFACTS.contains(&t) => r.preserve(e, &None),
            _ => r.note(e, "unsupported element ignored"),
        }
    }

    let model_id = root
        .attribute("id")
        .map(sanitize_identifier)
        .or_else(|| processes.first().and_then(|p| p.attribute("id")).map(sanitize_identifier))
        .unwrap_or_else(|| "Definitions".to_string());
    r.model.id = model_id;
    r.model.name = normalize_opt(root.attribute("name"))
        .or_else(|| processes.first().and_then(|p| normalize_opt(p.attribute("name"))));
    let _ = r.text;
    Ok(ParsedBpmn { model: r.model, notes: r.notes, preserved: r.preserved, diagram_elements })
}

/// Parse a [`BpmnDocument`], discarding notes.
pub fn parse_bpmn(doc: &BpmnDocument) -> Result<ProcessModel, CodecError> {
    parse(&doc.xml_text).map(|p| p.model)
}

#[derive(Debug, Clone)]
pub struct SerializeOptions {
    pub include_diagram: bool,
    /// Write back preserved artifacts.
    pub preserving: bool,
    pub preserved: Vec<Preserved>,
}

impl Default for SerializeOptions {
    fn default() -> Self {
        SerializeOptions { include_diagram: true, preserving: false, preserved: Vec::new() }
    }
}

fn node_tag(n: &Node) -> &'static str {
    match n.kind {
        NodeKind::Task => "task",
        NodeKind::Event { position: EventPosition::Start } => "startEvent",
        NodeKind::Event { position: EventPosition::Intermediate } => "intermediateThrowEvent",
        NodeKind::Event { position: EventPosition::End } => "endEvent",
        NodeKind::Gateway { gateway_type: GatewayType::Exclusive } => "exclusiveGateway",
        NodeKind::Gateway { gateway_type: GatewayType::Parallel } => "parallelGateway",
    }
}

/// Serialize a well-formed model.
pub fn serialize(model: &ProcessModel, opts: &SerializeOptions) -> BpmnDocument {
    let mut alloc = IdAlloc::default();
    for id in model
        .nodes
        .iter()
        .map(|n| &n.id)
        .chain(model.sequence_flows.iter().map(|f| &f.id))
        .chain(model.pools.iter().map(|p| &p.id))
        .chain(model.pools.iter().flat_map(|p| p.lanes.iter().map(|l| &l.id)))
        .chain(model.message_flows.iter().map(|f| &f.id))
    {
        alloc.reserve(id);
    }
    let def_id = alloc.fresh(&format!("Definitions_{}", sanitize_identifier(&model.id)));
    let has_collab = !model.pools.is_empty() || !model.message_flows.is_empty();
    let collab_id = alloc.fresh("Collaboration_1");

    let pool_of = model.pool_of_nodes();
    let by_id: HashMap<&str, &Node> = model.nodes.iter().map(|n| (n.id.as_str(), n)).collect();
    let free: Vec<&Node> = model.nodes.iter().filter(|n| !pool_of.contains_key(n.id.as_str())).collect();

    // Processes: one per pool with content, plus one for pool-free nodes.
    let mut processes: Vec<(Option<&Pool>, String)> = Vec::new();
    if !free.is_empty() || model.pools.is_empty() {
        let base = if model.pools.is_empty() { sanitize_identifier(&model.id) } else { "Process".to_string() };
        processes.push((None, alloc.fresh(&format!("Process_{base}"))));
    }
    let mut process_of_pool: BTreeMap<&str, String> = BTreeMap::new();
    for p in &model.pools {
        if p.lanes.is_empty() && p.members.is_empty() {
            continue;
        }
        let pid = alloc.fresh(&format!("Process_{}", p.id));
        process_of_pool.insert(p.id.as_str(), pid.clone());
        processes.push((Some(p), pid));
    }

    let mut w = XmlWriter::new(true);
    let mut root_attrs: Vec<(&str, &str)> = vec![("xmlns", MODEL_NS)];
    if opts.include_diagram {
        root_attrs.extend([("xmlns:bpmndi", BPMNDI_NS), ("xmlns:dc", DC_NS), ("xmlns:di", DI_NS)]);
    }
    let any_condition = model.sequence_flows.iter().any(|f| normalize_opt(f.condition.as_deref()).is_some());
    if any_condition {
        root_attrs.push(("xmlns:xsi", XSI_NS));
    }
    root_attrs.push(("id", &def_id));
    if let Some(n) = &model.name {
        root_attrs.push(("name", n));
    }
    root_attrs.push(("targetNamespace", TARGET_NS));
    w.open("definitions", &root_attrs);

    let preserved_for = |pool: Option<&str>| -> Vec<&str> {
        if !opts.preserving {
            return Vec::new();
        }
        opts.preserved.iter().filter(|p| p.pool.as_deref() == pool).map(|p| p.xml.as_str()).collect()
    };

    if has_collab {
        w.open("collaboration", &[("id", &collab_id)]);
        for p in &model.pools {
            let mut attrs = vec![("id", p.id.as_str())];
            if !p.name.is_empty() {
                attrs.push(("name", &p.name));
            }
            if let Some(pid) = process_of_pool.get(p.id.as_str()) {
                attrs.push(("processRef", pid));
            }
            w.empty("participant", &attrs);
        }
        for f in &model.message_flows {
            let mut attrs = vec![("id", f.id.as_str()), ("sourceRef", &f.source), ("targetRef", &f.target)];
            if let Some(l) = &f.label {
                attrs.push(("name", l));
            }
            w.empty("messageFlow", &attrs);
        }
        // Pool-free artifacts go with the pool-free process when there is one.
        if free.is_empty() && !model.pools.is_empty() {
            for x in preserved_for(None) {
                w.raw(x);
            }
        }
        w.close();
    }

    for (pool, pid) in &processes {
        let nodes: Vec<&Node> = match pool {
            None => free.clone(),
            Some(p) => p.all_members().filter_map(|m| by_id.get(m.as_str()).copied()).collect(),
        };
        let ids: HashSet<&str> = nodes.iter().map(|n| n.id.as_str()).collect();
        let mut attrs = vec![("id", pid.as_str()), ("isExecutable", "false")];
        if pool.is_none() && !has_collab {
            if let Some(n) = &model.name {
                attrs.push(("name", n));
            }
        }
        w.open("process", &attrs);
        if let Some(p) = pool {
            if !p.lanes.is_empty() {
                let ls = alloc.fresh(&format!("LaneSet_{}", p.id));
                w.open("laneSet", &[("id", &ls)]);
                for l in &p.lanes {
                    let mut attrs = vec![("id", l.id.as_str())];
                    if !l.name.is_empty() {
                        attrs.push(("name", &l.name));
                    }
                    if l.members.is_empty() {
                        w.empty("lane", &attrs);
                        continue;
                    }
                    w.open("lane", &attrs);
                    for m in &l.members {
                        w.text_element("flowNodeRef", &[], m);
                    }
                    w.close();
                }
                w.close();
            }
        }
        for n in &nodes {
            let mut attrs = vec![("id", n.id.as_str())];
            if let Some(l) = &n.label {
                attrs.push(("name", l));
            }
            w.empty(node_tag(n), &attrs);
        }
        for f in model.sequence_flows.iter().filter(|f| ids.contains(f.source.as_str())) {
            let mut attrs = vec![("id", f.id.as_str()), ("sourceRef", &f.source), ("targetRef", &f.target)];
            match normalize_opt(f.condition.as_deref()) {
                Some(c) => {
                    attrs.push(("name", f.condition.as_deref().unwrap_or_default()));
                    w.open("sequenceFlow", &attrs);
                    w.text_element("conditionExpression", &[("xsi:type", "tFormalExpression")], &c);
                    w.close();
                }
                None => w.empty("sequenceFlow", &attrs),
            }
        }
        let key = pool.map(|p| p.id.as_str());
        for x in preserved_for(key) {
            w.raw(x);
        }
        w.close();
    }

    if opts.include_diagram {
        let plan = layout(model);
        let plane_el = if has_collab { collab_id.clone() } else { processes[0].1.clone() };
        let diagram = alloc.fresh("BPMNDiagram_1");
        let plane = alloc.fresh("BPMNPlane_1");
        w.open("bpmndi:BPMNDiagram", &[("id", &diagram)]);
        w.open("bpmndi:BPMNPlane", &[("id", &plane), ("bpmnElement", &plane_el)]);
        let shape = |w: &mut XmlWriter, alloc: &mut IdAlloc, el: &str, r: &Rect, horizontal: bool| {
            let id = alloc.fresh(&format!("{el}_di"));
            let mut attrs = vec![("id", id.as_str()), ("bpmnElement", el)];
            if horizontal {
                attrs.push(("isHorizontal", "true"));
            }
            w.open("bpmndi:BPMNShape", &attrs);
            let (x, y, wd, h) = (r.x.to_string(), r.y.to_string(), r.width.to_string(), r.height.to_string());
            w.empty("dc:Bounds", &[("x", &x), ("y", &y), ("width", &wd), ("height", &h)]);
            w.close();
        };
        for p in &model.pools {
            if let Some(r) = plan.pools.get(&p.id) {
                shape(&mut w, &mut alloc, &p.id, r, true);
            }
            for l in &p.lanes {
                if let Some(r) = plan.lanes.get(&l.id) {
                    shape(&mut w, &mut alloc, &l.id, r, true);
                }
            }
        }
        for n in &model.nodes {
            shape(&mut w, &mut alloc, &n.id, &plan.nodes[&n.id], false);
        }
        for id in model.sequence_flows.iter().map(|f| &f.id).chain(model.message_flows.iter().map(|f| &f.id)) {
            let Some(points) = plan.edges.get(id) else {
                continue;
            };
            let di = alloc.fresh(&format!("{id}_di"));
            w.open("bpmndi:BPMNEdge", &[("id", &di), ("bpmnElement", id)]);
            for (x, y) in points {
                w.empty("di:waypoint", &[("x", &x.to_string()), ("y", &y.to_string())]);
            }
            w.close();
        }
        w.close();
        w.close();
    }
    w.close();
    BpmnDocument { xml_text: w.finish(), has_diagram_section: opts.include_diagram, source_path: None }
}

/// Serialize with default options except for the diagram flag.
pub fn serialize_bpmn(model: &ProcessModel, include_diagram: bool) -> BpmnDocument {
    serialize(model, &SerializeOptions { include_diagram, ..Default::default() })
}

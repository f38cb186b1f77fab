//! Codecs for the nine process model representations.
//!
//! Every codec targets [`ProcessModel`]. Graph-based notations are encoded
//! from a projection of the model onto their supported element types;
//! branch-based notations go through [`crate::structure`] first.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bpmn;
use crate::error::CodecError;
use crate::model::{ElementType, EventPosition, Loss, NodeKind, ProcessModel, SequenceFlow};
use crate::structure::{self, BranchTree, ConvertibilityVerdict, NonConvertibleReason};

pub mod bpmn_text;
mod graph;
pub mod graphviz;
pub mod json_branches;
pub mod mermaid;
pub mod pme;
pub mod powl;
pub mod sxml;
pub(crate) mod xmlw;

pub use pme::{from_pme, to_pme, PmeBundle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PmrId {
    Bpmn,
    BpmnProcess,
    Graphviz,
    Mermaid,
    Pme,
    SimplifiedXml,
    PowlCode,
    BpmnText,
    JsonBranches,
}

impl PmrId {
    pub const ALL: [PmrId; 9] = [
        PmrId::Bpmn,
        PmrId::BpmnProcess,
        PmrId::Graphviz,
        PmrId::Mermaid,
        PmrId::Pme,
        PmrId::SimplifiedXml,
        PmrId::PowlCode,
        PmrId::BpmnText,
        PmrId::JsonBranches,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PmrId::Bpmn => "bpmn",
            PmrId::BpmnProcess => "bpmn_process",
            PmrId::Graphviz => "graphviz",
            PmrId::Mermaid => "mermaid",
            PmrId::Pme => "pme",
            PmrId::SimplifiedXml => "simplified_xml",
            PmrId::PowlCode => "powl_code",
            PmrId::BpmnText => "bpmn_text",
            PmrId::JsonBranches => "json_branches",
        }
    }

    /// File extension without the leading dot.
    pub fn extension(self) -> &'static str {
        match self {
            PmrId::Bpmn | PmrId::BpmnProcess => "bpmn",
            PmrId::Graphviz => "dot",
            PmrId::Mermaid => "mmd",
            PmrId::Pme => "pme.json",
            PmrId::SimplifiedXml => "sxml",
            PmrId::PowlCode => "powl.py",
            PmrId::BpmnText => "bpmntext.xml",
            PmrId::JsonBranches => "branches.json",
        }
    }

    /// File name of this notation's document inside a case directory.
    pub fn file_name(self) -> String {
        format!("{}.{}", self.as_str(), self.extension())
    }

    pub fn is_branch_based(self) -> bool {
        capabilities(self).branch_based
    }

    /// Guess the notation from a file name.
    pub fn from_path(path: &str) -> Option<PmrId> {
        let name = path.rsplit(['/', '\\']).next().unwrap_or(path).to_ascii_lowercase();
        if let Some(stem) = name.split('.').next() {
            if let Ok(p) = stem.parse() {
                return Some(p);
            }
        }
        let by_ext = [
            (".pme.json", PmrId::Pme),
            (".branches.json", PmrId::JsonBranches),
            (".bpmntext.xml", PmrId::BpmnText),
            (".powl.py", PmrId::PowlCode),
            (".py", PmrId::PowlCode),
            (".sxml", PmrId::SimplifiedXml),
            (".mmd", PmrId::Mermaid),
            (".dot", PmrId::Graphviz),
            (".gv", PmrId::Graphviz),
            (".bpmn", PmrId::Bpmn),
        ];
        by_ext.iter().find(|(ext, _)| name.ends_with(ext)).map(|(_, p)| *p)
    }
}

impl fmt::Display for PmrId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PmrId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        let p = match key.as_str() {
            "bpmn" => PmrId::Bpmn,
            "bpmn_process" => PmrId::BpmnProcess,
            "graphviz" | "dot" => PmrId::Graphviz,
            "mermaid" => PmrId::Mermaid,
            "pme" => PmrId::Pme,
            "simplified_xml" | "sxml" => PmrId::SimplifiedXml,
            "powl_code" | "powl" => PmrId::PowlCode,
            "bpmn_text" => PmrId::BpmnText,
            "json_branches" => PmrId::JsonBranches,
            _ => return Err(format!("unknown PMR `{s}`")),
        };
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PmrCapabilities {
    pub pmr: PmrId,
    pub supported: BTreeSet<ElementType>,
    pub graph_based: bool,
    pub branch_based: bool,
    pub has_generation_schema: bool,
}

impl PmrCapabilities {
    pub fn supports(&self, t: ElementType) -> bool {
        self.supported.contains(&t)
    }
}

pub fn capabilities(pmr: PmrId) -> PmrCapabilities {
    use ElementType::*;
    let excluded: &[ElementType] = match pmr {
        PmrId::Bpmn | PmrId::BpmnProcess | PmrId::Pme | PmrId::SimplifiedXml => &[],
        PmrId::Graphviz | PmrId::Mermaid => &[Pool, Lane, MessageFlow],
        PmrId::BpmnText | PmrId::JsonBranches => &[IntermediateEvent, Pool, Lane, MessageFlow],
        PmrId::PowlCode => &[Condition, IntermediateEvent, Pool, Lane, MessageFlow],
    };
    let branch_based = matches!(pmr, PmrId::BpmnText | PmrId::JsonBranches | PmrId::PowlCode);
    PmrCapabilities {
        pmr,
        supported: ElementType::ALL.iter().copied().filter(|t| !excluded.contains(t)).collect(),
        graph_based: !branch_based,
        branch_based,
        has_generation_schema: matches!(pmr, PmrId::Pme | PmrId::JsonBranches),
    }
}

/// A model serialized in one notation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PmrDocument {
    pub pmr: PmrId,
    pub text: String,
    /// Elements of the source model the notation could not carry.
    pub loss_report: Vec<Loss>,
    /// Identifiers rewritten on encode (original -> encoded).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub id_map: BTreeMap<String, String>,
}

impl PmrDocument {
    pub fn is_lossless(&self) -> bool {
        self.loss_report.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DecodeOptions {
    /// Turn recoverable problems (undeclared endpoints, ignored statements)
    /// into errors.
    pub strict: bool,
}

impl DecodeOptions {
    pub const LENIENT: DecodeOptions = DecodeOptions { strict: false };
    pub const STRICT: DecodeOptions = DecodeOptions { strict: true };
}

/// A decoded model plus the problems that were recovered from.
#[derive(Debug, Clone)]
pub struct Decoded {
    pub model: ProcessModel,
    pub warnings: Vec<String>,
}

/// Collects recoverable problems during decoding.
#[derive(Debug, Default)]
pub(crate) struct Warnings {
    strict: bool,
    pub(crate) list: Vec<String>,
}

impl Warnings {
    pub(crate) fn new(opts: &DecodeOptions) -> Self {
        Warnings { strict: opts.strict, list: Vec::new() }
    }

    pub(crate) fn warn(&mut self, msg: impl Into<String>) -> Result<(), CodecError> {
        let msg = msg.into();
        if self.strict {
            return Err(CodecError::Strict(msg));
        }
        log::debug!("decode warning: {msg}");
        self.list.push(msg);
        Ok(())
    }
}

pub fn encode(model: &ProcessModel, pmr: PmrId) -> Result<PmrDocument, CodecError> {
    let violations = model.validate();
    if let Some(v) = violations.first() {
        return Err(CodecError::IllFormed(v.to_string()));
    }
    let caps = capabilities(pmr);
    if caps.branch_based {
        let (tree, losses) = branch_tree_for(model, pmr)?;
        let text = match pmr {
            PmrId::BpmnText => bpmn_text::write(&tree),
            PmrId::JsonBranches => json_branches::write(&tree),
            PmrId::PowlCode => {
                let (text, mut extra) = powl::write(&tree);
                let mut all = losses;
                all.append(&mut extra);
                return Ok(PmrDocument { pmr, text, loss_report: all, id_map: BTreeMap::new() });
            }
            _ => unreachable!(),
        };
        return Ok(PmrDocument { pmr, text, loss_report: losses, id_map: BTreeMap::new() });
    }
    let (projected, losses) = project(model, &caps);
    let (text, id_map) = match pmr {
        PmrId::Bpmn => (bpmn::serialize(&projected, &bpmn::SerializeOptions::default()).xml_text, BTreeMap::new()),
        PmrId::BpmnProcess => (
            bpmn::serialize(&projected, &bpmn::SerializeOptions { include_diagram: false, ..Default::default() })
                .xml_text,
            BTreeMap::new(),
        ),
        PmrId::Graphviz => graphviz::write(&projected),
        PmrId::Mermaid => mermaid::write(&projected),
        PmrId::Pme => (pme::write(&projected), BTreeMap::new()),
        PmrId::SimplifiedXml => (sxml::write(&projected), BTreeMap::new()),
        _ => unreachable!(),
    };
    Ok(PmrDocument { pmr, text, loss_report: losses, id_map })
}

/// Lenient decode.
pub fn decode(text: &str, pmr: PmrId) -> Result<ProcessModel, CodecError> {
    decode_with(text, pmr, &DecodeOptions::LENIENT).map(|d| d.model)
}

pub fn decode_document(doc: &PmrDocument) -> Result<ProcessModel, CodecError> {
    decode(&doc.text, doc.pmr)
}

pub fn decode_with(text: &str, pmr: PmrId, opts: &DecodeOptions) -> Result<Decoded, CodecError> {
    if text.trim().is_empty() {
        return Err(CodecError::Empty);
    }
    let mut w = Warnings::new(opts);
    let model = match pmr {
        PmrId::Bpmn | PmrId::BpmnProcess => {
            let parsed = bpmn::parse(text)?;
            for note in &parsed.notes {
                w.warn(note.to_string())?;
            }
            parsed.model
        }
        PmrId::Graphviz => graphviz::read(text, &mut w)?,
        PmrId::Mermaid => mermaid::read(text, &mut w)?,
        PmrId::Pme => pme::read(text)?,
        PmrId::SimplifiedXml => sxml::read(text, &mut w)?,
        PmrId::PowlCode => structure::expand(&powl::read(text, &mut w)?),
        PmrId::BpmnText => structure::expand(&bpmn_text::read(text, &mut w)?),
        PmrId::JsonBranches => structure::expand(&json_branches::read(text)?),
    };
    if let Some(v) = model.validate().first() {
        return Err(CodecError::IllFormed(v.to_string()));
    }
    Ok(Decoded { model, warnings: w.list })
}

/// Block tree of `model` restricted to what `pmr` can carry.
pub fn branch_tree_for(model: &ProcessModel, pmr: PmrId) -> Result<(BranchTree, Vec<Loss>), CodecError> {
    if !model.pools.is_empty() {
        return Err(CodecError::NotConvertible(ConvertibilityVerdict::rejected(NonConvertibleReason::HasPools)));
    }
    if !model.message_flows.is_empty() {
        return Err(CodecError::NotConvertible(ConvertibilityVerdict::rejected(NonConvertibleReason::HasMessageFlows)));
    }
    let caps = capabilities(pmr);
    let (mut projected, mut losses) = project(model, &caps);
    // Branch notations have no event elements; only the implied start and
    // end survive.
    for n in &mut projected.nodes {
        if let NodeKind::Event { position } = n.kind {
            if n.norm_label().is_some() {
                losses.push(Loss::new(n.element_type(), n.id.clone(), format!("{} event label", position.as_str())));
            }
            n.label = None;
        }
    }
    let conv = structure::to_branch_tree(&projected).map_err(CodecError::NotConvertible)?;
    losses.extend(conv.losses);
    Ok((conv.tree, losses))
}

/// What `decode(encode(model, pmr))` should be equal to.
pub fn expected_roundtrip(model: &ProcessModel, pmr: PmrId) -> Result<ProcessModel, CodecError> {
    let caps = capabilities(pmr);
    if caps.branch_based {
        let (tree, _) = branch_tree_for(model, pmr)?;
        let tree = if pmr == PmrId::PowlCode { powl::restrict(&tree).0 } else { tree };
        Ok(structure::expand(&tree))
    } else {
        Ok(project(model, &caps).0)
    }
}

/// Encode, decode and compare against [`expected_roundtrip`].
pub fn roundtrip_holds(model: &ProcessModel, pmr: PmrId) -> Result<bool, CodecError> {
    let doc = encode(model, pmr)?;
    let back = decode_with(&doc.text, pmr, &DecodeOptions::STRICT)?.model;
    Ok(back.canonical_equal(&expected_roundtrip(model, pmr)?))
}

/// Drop the elements `caps` does not support, recording each as a loss.
///
/// Lanes dissolve into their pool; intermediate events are bypassed by
/// connecting their predecessors to their successors.
pub fn project(model: &ProcessModel, caps: &PmrCapabilities) -> (ProcessModel, Vec<Loss>) {
    let mut m = model.clone();
    let mut losses = Vec::new();
    if !caps.supports(ElementType::MessageFlow) {
        for f in m.message_flows.drain(..) {
            losses.push(Loss::new(ElementType::MessageFlow, f.id, "message flows not supported"));
        }
    }
    if !caps.supports(ElementType::Pool) {
        for p in m.pools.drain(..) {
            for l in &p.lanes {
                losses.push(Loss::new(ElementType::Lane, l.id.clone(), "swimlanes not supported"));
            }
            losses.push(Loss::new(ElementType::Pool, p.id, "swimlanes not supported"));
        }
    } else if !caps.supports(ElementType::Lane) {
        for p in &mut m.pools {
            for l in p.lanes.drain(..) {
                losses.push(Loss::new(ElementType::Lane, l.id.clone(), "lanes not supported"));
                p.members.extend(l.members);
            }
        }
    }
    if !caps.supports(ElementType::IntermediateEvent) {
        let ids: Vec<String> = m
            .nodes
            .iter()
            .filter(|n| n.kind == (NodeKind::Event { position: EventPosition::Intermediate }))
            .map(|n| n.id.clone())
            .collect();
        for id in ids {
            bypass_node(&mut m, &id, &mut losses);
            losses.push(Loss::new(ElementType::IntermediateEvent, id, "intermediate events not supported"));
        }
    }
    if !caps.supports(ElementType::Condition) {
        for f in &mut m.sequence_flows {
            if f.condition.take().is_some_and(|c| !c.trim().is_empty()) {
                losses.push(Loss::new(ElementType::Condition, f.id.clone(), "conditions not supported"));
            }
        }
    }
    if !caps.supports(ElementType::Decision) {
        for n in &mut m.nodes {
            if n.is_gateway() && n.label.take().is_some_and(|c| !c.trim().is_empty()) {
                losses.push(Loss::new(ElementType::Decision, n.id.clone(), "decisions not supported"));
            }
        }
    }
    (m, losses)
}

/// Remove node `id`, connecting each predecessor to each successor. The
/// condition of the incoming flow wins over the outgoing one.
pub fn bypass_node(m: &mut ProcessModel, id: &str, losses: &mut Vec<Loss>) {
    let (removed, kept): (Vec<SequenceFlow>, Vec<SequenceFlow>) =
        m.sequence_flows.drain(..).partition(|f| f.source == id || f.target == id);
    m.sequence_flows = kept;
    m.nodes.retain(|n| n.id != id);
    for p in &mut m.pools {
        p.members.retain(|x| x != id);
        for l in &mut p.lanes {
            l.members.retain(|x| x != id);
        }
    }
    let incoming: Vec<&SequenceFlow> = removed.iter().filter(|f| f.target == id && f.source != id).collect();
    let outgoing: Vec<&SequenceFlow> = removed.iter().filter(|f| f.source == id && f.target != id).collect();
    let mut ids = IdAlloc::default();
    for f in m.sequence_flows.iter().chain(removed.iter()) {
        ids.reserve(&f.id);
    }
    let mut reused = BTreeSet::new();
    for i in &incoming {
        for (j, o) in outgoing.iter().enumerate() {
            let has = |c: &Option<String>| c.as_deref().is_some_and(|c| !c.trim().is_empty());
            let condition = if has(&i.condition) {
                if has(&o.condition) {
                    losses.push(Loss::new(
                        ElementType::Condition,
                        o.id.clone(),
                        format!("dropped while bypassing {id}"),
                    ));
                }
                i.condition.clone()
            } else {
                o.condition.clone()
            };
            // The first bypass flow keeps the incoming flow's id.
            let fid = if j == 0 {
                reused.insert(i.id.clone());
                i.id.clone()
            } else {
                ids.fresh(&format!("{}_{}", i.id, o.id))
            };
            m.sequence_flows.push(SequenceFlow {
                id: fid,
                source: i.source.clone(),
                target: o.target.clone(),
                condition,
            });
        }
    }
    for f in &removed {
        if !reused.contains(&f.id) {
            losses.push(Loss::new(ElementType::SequenceFlow, f.id.clone(), format!("attached to removed node {id}")));
        }
    }
}

/// Deduplicating identifier allocator.
#[derive(Debug, Default)]
pub(crate) struct IdAlloc {
    used: BTreeSet<String>,
}

impl IdAlloc {
    pub(crate) fn reserve(&mut self, id: &str) {
        self.used.insert(id.to_string());
    }

    /// `base` if free, else `base_2`, `base_3`, ...
    pub(crate) fn fresh(&mut self, base: &str) -> String {
        if self.used.insert(base.to_string()) {
            return base.to_string();
        }
        let mut k = 2;
        loop {
            let cand = format!("{base}_{k}");
            if self.used.insert(cand.clone()) {
                return cand;
            }
            k += 1;
        }
    }
}

/// Infer an event position from flow degrees.
pub(crate) fn position_from_degree(indeg: usize, outdeg: usize) -> EventPosition {
    if indeg == 0 {
        EventPosition::Start
    } else if outdeg == 0 {
        EventPosition::End
    } else {
        EventPosition::Intermediate
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GatewayType, Node};

    #[test]
    fn nine_notations_in_table_order() {
        assert_eq!(PmrId::ALL.len(), 9);
        for p in PmrId::ALL {
            assert_eq!(p.as_str().parse::<PmrId>().unwrap(), p);
            let c = capabilities(p);
            assert!(c.graph_based ^ c.branch_based, "{p}");
        }
    }

    #[test]
    fn capability_table() {
        for p in [PmrId::Bpmn, PmrId::BpmnProcess, PmrId::Pme, PmrId::SimplifiedXml] {
            assert_eq!(capabilities(p).supported.len(), 12);
        }
        let powl = capabilities(PmrId::PowlCode);
        assert!(!powl.supports(ElementType::Condition));
        assert!(!powl.supports(ElementType::IntermediateEvent));
        assert!(capabilities(PmrId::JsonBranches).has_generation_schema);
        assert!(!capabilities(PmrId::Mermaid).supports(ElementType::Lane));
    }

    #[test]
    fn file_names_map_back() {
        for p in PmrId::ALL {
            assert_eq!(PmrId::from_path(&format!("case_1/{}", p.file_name())), Some(p));
        }
        assert_eq!(PmrId::from_path("x/model.mmd"), Some(PmrId::Mermaid));
    }

    #[test]
    fn bypass_keeps_chain_shape() {
        let mut m = ProcessModel::new("p");
        m.nodes.push(Node::event("s", EventPosition::Start, None));
        m.nodes.push(Node::event("i", EventPosition::Intermediate, Some("wait".into())));
        m.nodes.push(Node::gateway("g", GatewayType::Exclusive, None));
        m.add_flow("s", "i", None);
        m.add_flow("i", "g", None);
        let mut losses = Vec::new();
        bypass_node(&mut m, "i", &mut losses);
        assert!(m.is_well_formed());
        assert_eq!(m.sequence_flows.len(), 1);
        assert_eq!((m.sequence_flows[0].source.as_str(), m.sequence_flows[0].target.as_str()), ("s", "g"));
        assert_eq!(losses.len(), 1);
    }
}

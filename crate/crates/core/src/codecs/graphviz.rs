//! Graphviz DOT.
//!
//! Node ids are derived from labels. Shapes: `box` tasks, `diamond`
//! gateways (parallel ones labeled `+` with the decision as `xlabel`),
//! `circle` start events, dashed `circle` intermediate events and
//! `doublecircle` end events. Conditions are edge labels.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;
use std::sync::OnceLock;

use crate::codecs::graph::GraphBuilder;
use crate::codecs::{position_from_degree, IdAlloc, Warnings};
use crate::error::CodecError;
use crate::model::{normalize_opt, sanitize_identifier, EventPosition, GatewayType, Node, NodeKind, ProcessModel};

const KEYWORDS: [&str; 6] = ["node", "edge", "graph", "digraph", "subgraph", "strict"];

/// Label-derived DOT identifier over `[A-Za-z0-9_]`.
fn dot_id_base(label: Option<&str>, fallback: &str) -> String {
    let mut out = String::new();
    for c in label.unwrap_or("").chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c);
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    let mut out = out.trim_matches('_').to_string();
    if out.is_empty() {
        out = fallback.to_string();
    }
    if out.starts_with(|c: char| c.is_ascii_digit()) {
        out.insert_str(0, "n_");
    }
    if KEYWORDS.contains(&out.to_ascii_lowercase().as_str()) {
        out.push_str("_node");
    }
    out
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub(crate) fn write(m: &ProcessModel) -> (String, BTreeMap<String, String>) {
    let mut alloc = IdAlloc::default();
    let mut ids: HashMap<&str, String> = HashMap::new();
    let mut id_map = BTreeMap::new();
    for n in &m.nodes {
        let fallback = match n.kind {
            NodeKind::Task => "task",
            NodeKind::Event { position } => position.as_str(),
            NodeKind::Gateway { gateway_type: GatewayType::Exclusive } => "xor",
            NodeKind::Gateway { gateway_type: GatewayType::Parallel } => "and",
        };
        let id = alloc.fresh(&dot_id_base(n.norm_label().as_deref(), fallback));
        if id != n.id {
            id_map.insert(n.id.clone(), id.clone());
        }
        ids.insert(&n.id, id);
    }
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", dot_id_base(Some(&m.id), "process"));
    out.push_str("  rankdir=LR;\n");
    for n in &m.nodes {
        let label = n.label.as_deref().unwrap_or("");
        let attrs = match n.kind {
            NodeKind::Task => format!("shape=box, label={}", quote(label)),
            NodeKind::Event { position: EventPosition::Start } => format!("shape=circle, label={}", quote(label)),
            NodeKind::Event { position: EventPosition::Intermediate } => {
                format!("shape=circle, style=dashed, label={}", quote(label))
            }
            NodeKind::Event { position: EventPosition::End } => format!("shape=doublecircle, label={}", quote(label)),
            NodeKind::Gateway { gateway_type } => {
                let marker = match gateway_type {
                    GatewayType::Parallel => Some("+"),
                    GatewayType::Exclusive if is_marker(label) => Some("X"),
                    GatewayType::Exclusive => None,
                };
                match (marker, n.label.as_deref()) {
                    (Some(mk), Some(d)) => {
                        format!("shape=diamond, label={}, xlabel={}", quote(mk), quote(d))
                    }
                    (Some(mk), None) => format!("shape=diamond, label={}", quote(mk)),
                    (None, _) => format!("shape=diamond, label={}", quote(label)),
                }
            }
        };
        let _ = writeln!(out, "  {} [{attrs}];", ids[n.id.as_str()]);
    }
    for f in &m.sequence_flows {
        let _ = write!(out, "  {} -> {}", ids[f.source.as_str()], ids[f.target.as_str()]);
        if let Some(c) = f.condition.as_deref() {
            let _ = write!(out, " [label={}]", quote(c));
        }
        out.push_str(";\n");
    }
    out.push_str("}\n");
    (out, id_map)
}

fn is_marker(label: &str) -> bool {
    matches!(label.trim().to_ascii_lowercase().as_str(), "+" | "x" | "×" | "and" | "xor")
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Id(String),
    Html(String),
    Punct(char),
    Arrow,
    Other(char),
}

/// Tokens from `from` up to the brace closing the first graph body.
fn tokenize(text: &str, from: usize) -> Result<Vec<(Tok, usize)>, CodecError> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = from;
    let mut line_start = true;
    let mut depth = 0usize;
    while i < b.len() {
        let c = b[i];
        if c == b'\n' {
            line_start = true;
            i += 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if line_start && c == b'#' {
            while i < b.len() && b[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        line_start = false;
        if c == b'/' && b.get(i + 1) == Some(&b'/') {
            while i < b.len() && b[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c == b'/' && b.get(i + 1) == Some(&b'*') {
            let end =
                text[i + 2..].find("*/").ok_or_else(|| CodecError::syntax(text, i, "unterminated comment", "*/"))?;
            i += end + 4;
            continue;
        }
        let start = i;
        match c {
            b'"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    let Some(ch) = text[i..].chars().next() else {
                        return Err(CodecError::syntax(text, start, "unterminated string", "\""));
                    };
                    match ch {
                        '"' => {
                            i += 1;
                            break;
                        }
                        '\\' => {
                            let next = text[i + 1..].chars().next();
                            match next {
                                Some('"') => s.push('"'),
                                Some('\\') => s.push('\\'),
                                Some('n' | 'l' | 'r') => s.push('\n'),
                                Some('\n') => {}
                                Some(o) => {
                                    s.push('\\');
                                    s.push(o);
                                }
                                None => return Err(CodecError::syntax(text, start, "unterminated string", "\"")),
                            }
                            i += 1 + next.map_or(0, char::len_utf8);
                        }
                        ch => {
                            s.push(ch);
                            i += ch.len_utf8();
                        }
                    }
                }
                out.push((Tok::Id(s), start));
            }
            b'<' => {
                let mut depth = 0usize;
                let mut j = i;
                while j < b.len() {
                    match b[j] {
                        b'<' => depth += 1,
                        b'>' => {
                            depth -= 1;
                            if depth == 0 {
                                break;
                            }
                        }
                        _ => {}
                    }
                    j += 1;
                }
                if j >= b.len() {
                    return Err(CodecError::syntax(text, start, "unterminated HTML label", ">"));
                }
                out.push((Tok::Html(text[i + 1..j].to_string()), start));
                i = j + 1;
            }
            b'-' if b.get(i + 1) == Some(&b'>') || b.get(i + 1) == Some(&b'-') => {
                out.push((Tok::Arrow, start));
                i += 2;
            }
            b'{' | b'}' | b'[' | b']' | b';' | b',' | b'=' | b':' | b'+' => {
                out.push((Tok::Punct(c as char), start));
                i += 1;
                if c == b'{' {
                    depth += 1;
                } else if c == b'}' {
                    depth = depth.saturating_sub(1);
                    if depth == 0 {
                        break;
                    }
                }
            }
            _ => {
                let mut j = if c == b'-' { i + 1 } else { i };
                for ch in text[j..].chars() {
                    if ch.is_alphanumeric() || ch == '_' || ch == '.' {
                        j += ch.len_utf8();
                    } else {
                        break;
                    }
                }
                if j == i || (c == b'-' && j == i + 1) {
                    let ch = text[i..].chars().next().unwrap();
                    out.push((Tok::Other(ch), start));
                    i += ch.len_utf8();
                    continue;
                }
                out.push((Tok::Id(text[i..j].to_string()), start));
                i = j;
            }
        }
    }
    Ok(out)
}

fn strip_html(s: &str) -> String {
    let mut out = String::new();
    let mut depth = 0;
    for c in s.chars() {
        match c {
            '<' => depth += 1,
            '>' if depth > 0 => depth -= 1,
            c if depth == 0 => out.push(c),
            _ => {}
        }
    }
    out.replace("&amp;", "&").replace("&lt;", "<").replace("&gt;", ">").replace("&quot;", "\"")
}

type Attrs = Vec<(String, String)>;

#[derive(Default)]
struct DotGraph {
    /// Declared nodes in order of first declaration, with merged attributes.
    nodes: Vec<(String, Attrs)>,
    node_index: HashMap<String, usize>,
    edges: Vec<(String, String, Attrs)>,
}

struct Parser<'a> {
    text: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
    graph: DotGraph,
    node_defaults: Vec<Attrs>,
    edge_defaults: Vec<Attrs>,
    /// Whether the last endpoint parsed was a subgraph.
    is_subgraph_result: bool,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(_, o)| *o).unwrap_or(self.text.len())
    }

    fn err(&self, msg: &str, expected: &str) -> CodecError {
        CodecError::syntax(self.text, self.offset(), msg, expected)
    }

    fn eat(&mut self, p: char) -> bool {
        if self.peek() == Some(&Tok::Punct(p)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: char) -> Result<(), CodecError> {
        if self.eat(p) {
            Ok(())
        } else {
            Err(self.err("unexpected token", &format!("`{p}`")))
        }
    }

    fn keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Id(s)) if s.eq_ignore_ascii_case(kw))
    }

    fn id(&mut self) -> Result<String, CodecError> {
        match self.peek().cloned() {
            Some(Tok::Id(mut s)) => {
                self.pos += 1;
                while self.peek() == Some(&Tok::Punct('+')) {
                    if let Some(Tok::Id(more)) = self.toks.get(self.pos + 1).map(|(t, _)| t.clone()) {
                        s.push_str(&more);
                        self.pos += 2;
                    } else {
                        break;
                    }
                }
                Ok(s)
            }
            Some(Tok::Html(s)) => {
                self.pos += 1;
                Ok(strip_html(&s))
            }
            _ => Err(self.err("unexpected token", "an identifier")),
        }
    }

    fn graph(&mut self) -> Result<(), CodecError> {
        // Skip any prose or tokens before the graph keyword.
        while self.pos < self.toks.len()
            && !(self.keyword("digraph") || self.keyword("graph") || self.keyword("strict"))
        {
            self.pos += 1;
        }
        if self.pos >= self.toks.len() {
            self.pos = 0;
            return Err(self.err("no graph found", "`digraph`"));
        }
        if self.keyword("strict") {
            self.pos += 1;
        }
        if !(self.keyword("digraph") || self.keyword("graph")) {
            return Err(self.err("unexpected token", "`digraph`"));
        }
        self.pos += 1;
        if !matches!(self.peek(), Some(Tok::Punct('{'))) {
            self.id()?;
        }
        self.expect('{')?;
        self.node_defaults.push(Vec::new());
        self.edge_defaults.push(Vec::new());
        self.stmt_list()?;
        self.expect('}')?;
        Ok(())
    }

    fn stmt_list(&mut self) -> Result<(), CodecError> {
        loop {
            match self.peek() {
                None | Some(Tok::Punct('}')) => return Ok(()),
                Some(Tok::Punct(';')) | Some(Tok::Punct(',')) => {
                    self.pos += 1;
                }
                _ => self.stmt()?,
            }
        }
    }

    fn attr_list(&mut self) -> Result<Attrs, CodecError> {
        let mut attrs = Vec::new();
        while self.eat('[') {
            loop {
                if self.eat(']') {
                    break;
                }
                if self.eat(',') || self.eat(';') {
                    continue;
                }
                let k = self.id()?;
                let v = if self.eat('=') { self.id()? } else { "true".to_string() };
                attrs.push((k.to_ascii_lowercase(), v));
            }
        }
        Ok(attrs)
    }

    fn stmt(&mut self) -> Result<(), CodecError> {
        if self.keyword("node") || self.keyword("edge") || (self.keyword("graph") && !self.is_assignment()) {
            let which = match self.peek() {
                Some(Tok::Id(s)) => s.to_ascii_lowercase(),
                _ => unreachable!(),
            };
            self.pos += 1;
            let attrs = self.attr_list()?;
            match which.as_str() {
                "node" => self.node_defaults.last_mut().unwrap().extend(attrs),
                "edge" => self.edge_defaults.last_mut().unwrap().extend(attrs),
                _ => {}
            }
            return Ok(());
        }
        if self.is_assignment() {
            self.id()?;
            self.expect('=')?;
            self.id()?;
            return Ok(());
        }
        let mut left = self.endpoint()?;
        let mut saw_edge = false;
        let mut pairs = Vec::new();
        while matches!(self.peek(), Some(Tok::Arrow)) {
            self.pos += 1;
            let right = self.endpoint()?;
            for a in &left {
                for b in &right {
                    pairs.push((a.clone(), b.clone()));
                }
            }
            left = right;
            saw_edge = true;
        }
        let attrs = self.attr_list()?;
        if saw_edge {
            let mut merged = self.edge_defaults.iter().flatten().cloned().collect::<Attrs>();
            merged.extend(attrs);
            for (a, b) in pairs {
                self.graph.edges.push((a, b, merged.clone()));
            }
        } else if let [single] = left.as_slice() {
            if !self.is_subgraph_result {
                let mut merged = self.node_defaults.iter().flatten().cloned().collect::<Attrs>();
                merged.extend(attrs);
                self.declare(single.clone(), merged);
            }
        }
        self.is_subgraph_result = false;
        Ok(())
    }

    fn is_assignment(&self) -> bool {
        matches!(self.toks.get(self.pos + 1), Some((Tok::Punct('='), _)))
    }

    fn declare(&mut self, id: String, attrs: Attrs) {
        match self.graph.node_index.get(&id) {
            Some(&i) => self.graph.nodes[i].1.extend(attrs),
            None => {
                self.graph.node_index.insert(id.clone(), self.graph.nodes.len());
                self.graph.nodes.push((id, attrs));
            }
        }
    }

    /// A node id (with optional port) or a subgraph; returns the node ids.
    fn endpoint(&mut self) -> Result<Vec<String>, CodecError> {
        if self.keyword("subgraph") || matches!(self.peek(), Some(Tok::Punct('{'))) {
            if self.keyword("subgraph") {
                self.pos += 1;
                if !matches!(self.peek(), Some(Tok::Punct('{'))) {
                    self.id()?;
                }
            }
            self.expect('{')?;
            let before: Vec<String> = self.graph.nodes.iter().map(|(n, _)| n.clone()).collect();
            let edges_before = self.graph.edges.len();
            self.node_defaults.push(self.node_defaults.last().cloned().unwrap_or_default());
            self.edge_defaults.push(self.edge_defaults.last().cloned().unwrap_or_default());
            self.stmt_list()?;
            self.node_defaults.pop();
            self.edge_defaults.pop();
            self.expect('}')?;
            let mut members: Vec<String> =
                self.graph.nodes.iter().map(|(n, _)| n.clone()).filter(|n| !before.contains(n)).collect();
            for (a, b, _) in &self.graph.edges[edges_before..] {
                for x in [a, b] {
                    if !members.contains(x) {
                        members.push(x.clone());
                    }
                }
            }
            self.is_subgraph_result = true;
            return Ok(members);
        }
        let id = self.id()?;
        if self.eat(':') {
            self.id()?;
            if self.eat(':') {
                self.id()?;
            }
        }
        self.is_subgraph_result = false;
        Ok(vec![id])
    }
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, toks: Vec<(Tok, usize)>) -> Self {
        Parser {
            text,
            toks,
            pos: 0,
            graph: DotGraph::default(),
            node_defaults: Vec::new(),
            edge_defaults: Vec::new(),
            is_subgraph_result: false,
        }
    }
}

fn graph_start(text: &str) -> Option<usize> {
    static RE: OnceLock<regex::Regex> = OnceLock::new();
    let re = RE.get_or_init(|| {
        regex::Regex::new(r#"(?mi)(?:^|[\s`])((?:strict\s+)?(?:di)?graph)(?:\s+(?:"[^"\n]*"|[\w.]+))?\s*\{"#).unwrap()
    });
    re.captures(text).map(|c| c.get(1).unwrap().start())
}

fn attr<'x>(attrs: &'x Attrs, key: &str) -> Option<&'x str> {
    attrs.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

pub(crate) fn read(text: &str, w: &mut Warnings) -> Result<ProcessModel, CodecError> {
    let from = graph_start(text).ok_or_else(|| CodecError::syntax(text, 0, "no graph found", "`digraph`"))?;
    let toks = tokenize(text, from)?;
    let mut p = Parser::new(text, toks);
    p.graph()?;
    let graph = p.graph;

    // Canonical ids for DOT ids.
    let mut alloc = IdAlloc::default();
    let mut canon: HashMap<String, String> = HashMap::new();
    let mut canon_of = |raw: &str, alloc: &mut IdAlloc| -> String {
        canon.entry(raw.to_string()).or_insert_with(|| alloc.fresh(&sanitize_identifier(raw))).clone()
    };
    let mut indeg: HashMap<&str, usize> = HashMap::new();
    let mut outdeg: HashMap<&str, usize> = HashMap::new();
    for (a, b, _) in &graph.edges {
        *outdeg.entry(a).or_default() += 1;
        *indeg.entry(b).or_default() += 1;
    }
    let mut g = GraphBuilder::new("Process_1");
    for (raw, attrs) in &graph.nodes {
        let id = canon_of(raw, &mut alloc);
        let label = attr(attrs, "label").map(str::to_string).unwrap_or_else(|| raw.clone());
        let shape = attr(attrs, "shape").unwrap_or("box").to_ascii_lowercase();
        let dashed = attr(attrs, "style").is_some_and(|s| s.contains("dashed") || s.contains("dotted"));
        let (i, o) = (indeg.get(raw.as_str()).copied().unwrap_or(0), outdeg.get(raw.as_str()).copied().unwrap_or(0));
        let kind = match shape.as_str() {
            "diamond" | "mdiamond" => {
                let parallel = matches!(label.trim().to_ascii_lowercase().as_str(), "+" | "and");
                let gateway_type = if parallel { GatewayType::Parallel } else { GatewayType::Exclusive };
                let decision = if is_marker(&label) { attr(attrs, "xlabel").map(str::to_string) } else { Some(label) };
                g.declare(Node::gateway(id, gateway_type, normalize_opt(decision.as_deref())));
                continue;
            }
            "doublecircle" | "msquare" => NodeKind::Event { position: EventPosition::End },
            "circle" | "point" => {
                let position = if dashed { EventPosition::Intermediate } else { position_from_degree(i, o) };
                NodeKind::Event { position }
            }
            _ => NodeKind::Task,
        };
        g.declare(Node { id, kind, label: normalize_opt(Some(&label)) });
    }
    for (a, b, attrs) in &graph.edges {
        let (ca, cb) = (canon_of(a, &mut alloc), canon_of(b, &mut alloc));
        let cond = attr(attrs, "label").or_else(|| attr(attrs, "xlabel")).map(str::to_string);
        g.edge(&ca, &cb, cond);
    }
    g.finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EventPosition;

    fn linear() -> ProcessModel {
        let mut m = ProcessModel::new("p");
        m.nodes.push(Node::event("s", EventPosition::Start, None));
        m.nodes.push(Node::task("t", "Check order"));
        m.nodes.push(Node::task("t2", "Check order"));
        m.nodes.push(Node::event("e", EventPosition::End, None));
        m.add_flow("s", "t", None);
        m.add_flow("t", "t2", Some("ok".into()));
        m.add_flow("t2", "e", None);
        m
    }

    #[test]
    fn ids_come_from_labels_and_stay_unique() {
        let (text, map) = write(&linear());
        assert!(text.contains("Check_order [shape=box"));
        assert!(text.contains("Check_order_2 [shape=box"));
        assert_eq!(map["t"], "Check_order");
        let back = read(&text, &mut Warnings::default()).unwrap();
        assert!(back.canonical_equal(&linear()));
    }

    #[test]
    fn lenient_on_llm_style_dot() {
        let text = r#"Sure! Here it is:
digraph G {
  node [shape=box];
  start [shape=circle label="Start"];
  start -> "Receive order" -> check;
  check [shape=diamond, label="In stock?"];
  check -> ship [label="yes"];
  check -> end_ [label = "no"];
  ship -> end_;
  end_ [shape=doublecircle];
}"#;
        let mut w = Warnings::default();
        let m = read(text, &mut w).unwrap();
        assert!(m.is_well_formed());
        assert_eq!(m.count_elements().get(crate::model::ElementType::ExclusiveGateway), 1);
        // "Receive order" and ship were never declared.
        assert_eq!(w.list.len(), 2);
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = read("digraph { a -> ; }", &mut Warnings::default()).unwrap_err();
        assert!(matches!(err, CodecError::Syntax { position, .. } if position.line == 1));
    }
}

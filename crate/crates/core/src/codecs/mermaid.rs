//! Mermaid flowcharts.
//!
//! Header `flowchart TD`; tasks `id[label]`, events `id((label))`,
//! exclusive gateways `id{decision}`, parallel gateways `id{{decision}}`,
//! edges `a -->|condition| b`. Event positions follow from flow degrees.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;
use std::sync::OnceLock;

use regex::Regex;

use crate::codecs::graph::GraphBuilder;
use crate::codecs::{position_from_degree, IdAlloc, Warnings};
use crate::error::CodecError;
use crate::model::{normalize_opt, sanitize_identifier, EventPosition, GatewayType, Node, NodeKind, ProcessModel};

const RESERVED: [&str; 12] = [
    "end",
    "graph",
    "flowchart",
    "subgraph",
    "click",
    "style",
    "class",
    "classdef",
    "linkstyle",
    "direction",
    "call",
    "href",
];

fn mermaid_id(raw: &str) -> String {
    let mut out: String = raw.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect();
    if out.is_empty() {
        out.push('n');
    }
    if RESERVED.contains(&out.to_ascii_lowercase().as_str()) || out.starts_with(|c: char| c.is_ascii_digit()) {
        out.push('_');
    }
    out
}

/// Label text, quoted when it contains characters with syntactic meaning.
fn label_text(label: Option<&str>) -> String {
    let Some(l) = label.filter(|l| !l.trim().is_empty()) else {
        return " ".to_string();
    };
    let plain = l.chars().all(|c| c.is_alphanumeric() || " _.,?!'-:".contains(c)) && l.trim() == l;
    if plain {
        return l.to_string();
    }
    let mut out = String::from("\"");
    for c in l.chars() {
        match c {
            '"' => out.push_str("#quot;"),
            '#' => out.push_str("#35;"),
            '|' => out.push_str("#124;"),
            ';' => out.push_str("#59;"),
            '\n' => out.push(' '),
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
        let id = alloc.fresh(&mermaid_id(&n.id));
        if id != n.id {
            id_map.insert(n.id.clone(), id.clone());
        }
        ids.insert(&n.id, id);
    }
    let mut out = String::from("flowchart TD\n");
    for n in &m.nodes {
        let text = label_text(n.label.as_deref());
        let (open, close) = match n.kind {
            NodeKind::Task => ("[", "]"),
            NodeKind::Event { .. } => ("((", "))"),
            NodeKind::Gateway { gateway_type: GatewayType::Exclusive } => ("{", "}"),
            NodeKind::Gateway { gateway_type: GatewayType::Parallel } => ("{{", "}}"),
        };
        let _ = writeln!(out, "  {}{open}{text}{close}", ids[n.id.as_str()]);
    }
    for f in &m.sequence_flows {
        let (a, b) = (&ids[f.source.as_str()], &ids[f.target.as_str()]);
        match f.condition.as_deref().filter(|c| !c.trim().is_empty()) {
            Some(c) => {
                let c = label_text(Some(c));
                let _ = writeln!(out, "  {a} -->|{c}| {b}");
            }
            None => {
                let _ = writeln!(out, "  {a} --> {b}");
            }
        }
    }
    (out, id_map)
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    Task,
    Event,
    EndEvent,
    Diamond,
    Hexagon,
}

/// (open, close, shape), longest openers first.
const SHAPES: [(&str, &str, Shape); 14] = [
    ("(((", ")))", Shape::EndEvent),
    ("((", "))", Shape::Event),
    ("([", "])", Shape::Task),
    ("[[", "]]", Shape::Task),
    ("[(", ")]", Shape::Task),
    ("[/", "/]", Shape::Task),
    ("[\\", "\\]", Shape::Task),
    ("[/", "\\]", Shape::Task),
    ("[\\", "/]", Shape::Task),
    ("{{", "}}", Shape::Hexagon),
    ("{", "}", Shape::Diamond),
    (">", "]", Shape::Task),
    ("(", ")", Shape::Task),
    ("[", "]", Shape::Task),
];

fn decode_entities(s: &str) -> String {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"#(\d+|[a-zA-Z]+);|&(\w+);|<br\s*/?>").unwrap());
    re.replace_all(s, |c: &regex::Captures| {
        if c[0].starts_with('<') {
            return " ".to_string();
        }
        let name = c.get(1).or_else(|| c.get(2)).unwrap().as_str();
        if let Ok(n) = name.parse::<u32>() {
            return char::from_u32(n).map(String::from).unwrap_or_default();
        }
        match name {
            "quot" => "\"".into(),
            "amp" => "&".into(),
            "lt" => "<".into(),
            "gt" => ">".into(),
            "apos" => "'".into(),
            "nbsp" => " ".into(),
            _ => c[0].to_string(),
        }
    })
    .into_owned()
}

fn unquote(s: &str) -> String {
    let t = s.trim();
    let t = if t.len() >= 2 && t.starts_with('"') && t.ends_with('"') { &t[1..t.len() - 1] } else { t };
    decode_entities(t)
}

struct NodeRef {
    id: String,
    shape: Option<(Shape, String)>,
}

struct Line<'a> {
    text: &'a str,
    pos: usize,
    /// Offset of the line within the whole document.
    base: usize,
}

impl<'a> Line<'a> {
    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        let r = self.rest();
        self.pos += r.len() - r.trim_start().len();
    }

    fn node_ref(&mut self, doc: &str) -> Result<NodeRef, CodecError> {
        self.skip_ws();
        let id_len: usize =
            self.rest().chars().take_while(|c| c.is_alphanumeric() || *c == '_').map(char::len_utf8).sum();
        if id_len == 0 {
            return Err(CodecError::syntax(doc, self.base + self.pos, "missing node id", "a node id"));
        }
        let id = self.rest()[..id_len].to_string();
        self.pos += id_len;
        let mut shape = None;
        for (open, close, kind) in SHAPES {
            if !self.rest().starts_with(open) {
                continue;
            }
            let body_start = self.pos + open.len();
            let body = &self.text[body_start..];
            // Quoted labels may contain the closing delimiter.
            let trimmed = body.trim_start();
            let lead = body.len() - trimmed.len();
            let end = if let Some(inner) = trimmed.strip_prefix('"') {
                inner.find('"').and_then(|q| {
                    let after = lead + 1 + q + 1;
                    body[after..].find(close).map(|c| after + c)
                })
            } else {
                body.find(close)
            };
            let Some(end) = end else {
                return Err(CodecError::syntax(doc, self.base + self.pos, "unclosed node shape", format!("`{close}`")));
            };
            shape = Some((kind, unquote(&body[..end])));
            self.pos = body_start + end + close.len();
            break;
        }
        if self.rest().starts_with(":::") {
            self.pos += 3;
            let n: usize = self
                .rest()
                .chars()
                .take_while(|c| c.is_alphanumeric() || *c == '_' || *c == '-')
                .map(char::len_utf8)
                .sum();
            self.pos += n;
        }
        Ok(NodeRef { id, shape })
    }

    /// A link operator with its optional text.
    fn link(&mut self) -> Option<Option<String>> {
        static PLAIN: OnceLock<Regex> = OnceLock::new();
        static INLINE: OnceLock<Regex> = OnceLock::new();
        static PIPE: OnceLock<Regex> = OnceLock::new();
        let plain = PLAIN.get_or_init(|| {
            Regex::new(r"^<?(?:-{2,}>|-{3,}|={2,}>|={3,}|-\.+->|-\.+-|-{2,}[ox]\b|={2,}[ox]\b|~~~)").unwrap()
        });
        let inline = INLINE.get_or_init(|| {
            Regex::new(r"^<?(?:--|==|-\.)\s+(.*?)\s*(?:-{2,}>|-{3,}|={2,}>|={3,}|\.-+>|\.-+)").unwrap()
        });
        let pipe = PIPE.get_or_init(|| Regex::new(r"^\s*\|([^|]*)\|").unwrap());
        self.skip_ws();
        let rest = self.rest();
        if let Some(m) = plain.find(rest) {
            self.pos += m.end();
            if let Some(c) = pipe.captures(self.rest()) {
                let text = unquote(&c[1]);
                self.pos += c.get(0).unwrap().end();
                return Some(Some(text));
            }
            return Some(None);
        }
        if let Some(c) = inline.captures(rest) {
            let text = unquote(&c[1]);
            self.pos += c.get(0).unwrap().end();
            return Some(Some(text));
        }
        None
    }
}

#[derive(Default)]
struct Decl {
    shape: Option<(Shape, String)>,
}

pub(crate) fn read(text: &str, w: &mut Warnings) -> Result<ProcessModel, CodecError> {
    static HEADER: OnceLock<Regex> = OnceLock::new();
    let header = HEADER.get_or_init(|| Regex::new(r"(?m)^\s*(?:flowchart|graph)\b[^\n;]*").unwrap());
    let Some(h) = header.find(text) else {
        return Err(CodecError::syntax(text, 0, "missing flowchart header", "`flowchart TD`"));
    };
    let mut decls: Vec<(String, Decl)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut edges: Vec<(String, String, Option<String>)> = Vec::new();
    let mut declare = |r: &NodeRef, decls: &mut Vec<(String, Decl)>| {
        let i = *index.entry(r.id.clone()).or_insert_with(|| {
            decls.push((r.id.clone(), Decl::default()));
            decls.len() - 1
        });
        if let Some(s) = &r.shape {
            let d = &mut decls[i].1;
            let fill = match &d.shape {
                None => true,
                Some((_, l)) => l.trim().is_empty() && !s.1.trim().is_empty(),
            };
            if fill {
                d.shape = Some(s.clone());
            }
        }
    };

    let mut offset = h.end();
    for raw_line in text[h.end()..].split_inclusive('\n') {
        let line_base = offset;
        offset += raw_line.len();
        for stmt in statements(raw_line) {
            let base = line_base + (stmt.as_ptr() as usize - raw_line.as_ptr() as usize);
            let s = stmt.trim();
            if s.is_empty() || s.starts_with("%%") {
                continue;
            }
            if s.starts_with("```") {
                // A closing fence ends the diagram.
                if !decls.is_empty() || !edges.is_empty() {
                    break;
                }
                continue;
            }
            let first = s.split_whitespace().next().unwrap_or("").to_ascii_lowercase();
            if matches!(
                first.as_str(),
                "subgraph" | "end" | "classdef" | "class" | "style" | "linkstyle" | "click" | "direction"
            ) {
                continue;
            }
            let lead = stmt.len() - stmt.trim_start().len();
            let mut line = Line { text: s, pos: 0, base: base + lead };
            let mut left = group(&mut line, text)?;
            for r in &left {
                declare(r, &mut decls);
            }
            loop {
                line.skip_ws();
                if line.rest().is_empty() {
                    break;
                }
                let Some(label) = line.link() else {
                    return Err(CodecError::syntax(
                        text,
                        line.base + line.pos,
                        "unexpected text",
                        "a link such as `-->`",
                    ));
                };
                let right = group(&mut line, text)?;
                for r in &right {
                    declare(r, &mut decls);
                }
                for a in &left {
                    for b in &right {
                        edges.push((a.id.clone(), b.id.clone(), label.clone()));
                    }
                }
                left = right;
            }
        }
    }

    let mut alloc = IdAlloc::default();
    let mut canon: HashMap<String, String> = HashMap::new();
    for (id, _) in &decls {
        let c = alloc.fresh(&sanitize_identifier(id));
        canon.insert(id.clone(), c);
    }
    let mut indeg: HashMap<&str, usize> = HashMap::new();
    let mut outdeg: HashMap<&str, usize> = HashMap::new();
    for (a, b, _) in &edges {
        *outdeg.entry(a).or_default() += 1;
        *indeg.entry(b).or_default() += 1;
    }
    let mut g = GraphBuilder::new("Process_1");
    for (id, d) in &decls {
        let Some((shape, label)) = &d.shape else {
            continue;
        };
        let cid = canon[id].clone();
        let label = normalize_opt(Some(label));
        let marker = |l: &Option<String>| {
            l.as_deref().is_some_and(|l| matches!(l.to_ascii_lowercase().as_str(), "+" | "and" | "x" | "xor" | "×"))
        };
        let node = match shape {
            Shape::Task => Node { id: cid, kind: NodeKind::Task, label },
            Shape::EndEvent => Node::event(cid, EventPosition::End, label),
            Shape::Event => {
                let (i, o) =
                    (indeg.get(id.as_str()).copied().unwrap_or(0), outdeg.get(id.as_str()).copied().unwrap_or(0));
                Node::event(cid, position_from_degree(i, o), label)
            }
            Shape::Diamond | Shape::Hexagon => {
                let parallel = *shape == Shape::Hexagon
                    || label.as_deref().is_some_and(|l| matches!(l.to_ascii_lowercase().as_str(), "+" | "and"));
                let t = if parallel { GatewayType::Parallel } else { GatewayType::Exclusive };
                Node::gateway(cid, t, if marker(&label) { None } else { label })
            }
        };
        g.declare(node);
    }
    for (a, b, c) in edges {
        g.edge(&canon[&a], &canon[&b], c);
    }
    g.finish(w)
}

/// `a & b & c`
/// Split a line on `;` outside quotes, `|...|` link text and `#name;` entities.
fn statements(line: &str) -> Vec<&str> {
    let bytes = line.as_bytes();
    let mut out = Vec::new();
    let (mut start, mut quoted, mut piped) = (0, false, false);
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'"' => quoted = !quoted,
            b'|' if !quoted => piped = !piped,
            b'#' => {
                let n = bytes[i + 1..].iter().take_while(|b| b.is_ascii_alphanumeric()).count();
                if n > 0 && bytes.get(i + 1 + n) == Some(&b';') {
                    i += n + 2;
                    continue;
                }
            }
            b';' if !quoted && !piped => {
                out.push(&line[start..i]);
                start = i + 1;
            }
            _ => {}
        }
        i += 1;
    }
    out.push(&line[start..]);
    out
}

fn group(line: &mut Line, doc: &str) -> Result<Vec<NodeRef>, CodecError> {
    let mut out = vec![line.node_ref(doc)?];
    loop {
        line.skip_ws();
        if line.rest().starts_with('&') {
            line.pos += 1;
            out.push(line.node_ref(doc)?);
        } else {
            return Ok(out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear() -> ProcessModel {
        let mut m = ProcessModel::new("p");
        m.nodes.push(Node::event("s", EventPosition::Start, None));
        m.nodes.push(Node::task("t", "Check order"));
        m.nodes.push(Node::event("e", EventPosition::End, None));
        m.add_flow("s", "t", None);
        m.add_flow("t", "e", None);
        m
    }

    #[test]
    fn minimal_encoding() {
        let (text, _) = write(&linear());
        assert!(text.starts_with("flowchart TD\n"));
        assert_eq!(text.matches("(( ))").count(), 2);
        assert_eq!(text.matches("[Check order]").count(), 1);
        assert_eq!(text.matches("-->").count(), 2);
        assert!(read(&text, &mut Warnings::default()).unwrap().canonical_equal(&linear()));
    }

    #[test]
    fn undeclared_endpoint_becomes_unlabeled_task() {
        let text = "flowchart LR\n  A((start)) --> B[Do it]\n  B --> C\n  C --> D(((end)))\n";
        let mut w = Warnings::default();
        let m = read(text, &mut w).unwrap();
        assert!(m.is_well_formed());
        assert_eq!(w.list.len(), 1);
        let c = m.node("C").unwrap();
        assert_eq!((c.kind, c.label.clone()), (NodeKind::Task, None));
        assert!(read(text, &mut Warnings::new(&crate::codecs::DecodeOptions::STRICT)).is_err());
    }

    #[test]
    fn link_variants() {
        let text = "graph TD\nA[a] -- yes --> B[b]\nA -.-> C[c] & D[d]\nB ==>|\"x #quot;y#quot;\"| C\nC --- D;D-->E[e]";
        let m = read(text, &mut Warnings::default()).unwrap();
        assert_eq!(m.sequence_flows.len(), 6);
        assert_eq!(m.sequence_flows[0].condition.as_deref(), Some("yes"));
        assert_eq!(m.sequence_flows[3].condition.as_deref(), Some("x \"y\""));
    }

    #[test]
    fn reserved_ids_are_renamed() {
        let mut m = linear();
        m.nodes[2].id = "end".into();
        m.sequence_flows[1].target = "end".into();
        let (text, map) = write(&m);
        assert_eq!(map["end"], "end_");
        assert!(read(&text, &mut Warnings::default()).unwrap().canonical_equal(&m));
    }
}

//! Minimal indented XML writer.

use std::fmt::Write;

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            '\t' => out.push_str("&#9;"),
            c => out.push(c),
        }
    }
    out
}

pub(crate) struct XmlWriter {
    out: String,
    stack: Vec<String>,
    indent: &'static str,
}

impl XmlWriter {
    pub(crate) fn new(declaration: bool) -> Self {
        let mut out = String::new();
        if declaration {
            out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        }
        XmlWriter { out, stack: Vec::new(), indent: "  " }
    }

    fn pad(&mut self) {
        for _ in 0..self.stack.len() {
            self.out.push_str(self.indent);
        }
    }

    fn tag(&mut self, name: &str, attrs: &[(&str, &str)]) {
        self.pad();
        self.out.push('<');
        self.out.push_str(name);
        for (k, v) in attrs {
            let _ = write!(self.out, " {k}=\"{}\"", escape(v));
        }
    }

    pub(crate) fn open(&mut self, name: &str, attrs: &[(&str, &str)]) {
        self.tag(name, attrs);
        self.out.push_str(">\n");
        self.stack.push(name.to_string());
    }

    pub(crate) fn empty(&mut self, name: &str, attrs: &[(&str, &str)]) {
        self.tag(name, attrs);
        self.out.push_str("/>\n");
    }

    pub(crate) fn text_element(&mut self, name: &str, attrs: &[(&str, &str)], text: &str) {
        self.tag(name, attrs);
        let _ = writeln!(self.out, ">{}</{name}>", escape(text));
    }

    /// Raw, already serialized markup on its own line.
    pub(crate) fn raw(&mut self, xml: &str) {
        self.pad();
        self.out.push_str(xml);
        self.out.push('\n');
    }

    pub(crate) fn close(&mut self) {
        let name = self.stack.pop().expect("close without open");
        self.pad();
        let _ = writeln!(self.out, "</{name}>");
    }

    pub(crate) fn finish(mut self) -> String {
        while !self.stack.is_empty() {
            self.close();
        }
        self.out
    }
}

/// Convert a roxmltree error into a positioned codec error.
pub(crate) fn xml_error(e: roxmltree::Error) -> crate::error::CodecError {
    let pos = e.pos();
    crate::error::CodecError::Xml {
        position: crate::error::Position { line: pos.row as usize, column: pos.col as usize },
        message: e.to_string(),
    }
}

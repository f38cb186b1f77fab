//! Prompt assembly from a versioned template set.
//!
//! A prompt is the system text plus a user text made of three parts: the
//! shared preamble (description and modeling instructions, identical for
//! every notation) and the notation's formatting section with one worked
//! example rendered from a built-in model.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::LlmError;
use crate::codecs::{encode, PmrId};
use crate::model::{EventPosition, GatewayType, Node, ProcessModel};

pub const BUILTIN_VERSION: &str = "v1";

const BUILTIN: [(&str, &str); 13] = [
    ("system.md", include_str!("../../templates/v1/system.md")),
    ("preamble.md", include_str!("../../templates/v1/preamble.md")),
    ("instructions/standardized.md", include_str!("../../templates/v1/instructions/standardized.md")),
    ("instructions/full.md", include_str!("../../templates/v1/instructions/full.md")),
    ("formats/bpmn.md", include_str!("../../templates/v1/formats/bpmn.md")),
    ("formats/bpmn_process.md", include_str!("../../templates/v1/formats/bpmn_process.md")),
    ("formats/graphviz.md", include_str!("../../templates/v1/formats/graphviz.md")),
    ("formats/mermaid.md", include_str!("../../templates/v1/formats/mermaid.md")),
    ("formats/pme.md", include_str!("../../templates/v1/formats/pme.md")),
    ("formats/simplified_xml.md", include_str!("../../templates/v1/formats/simplified_xml.md")),
    ("formats/powl_code.md", include_str!("../../templates/v1/formats/powl_code.md")),
    ("formats/bpmn_text.md", include_str!("../../templates/v1/formats/bpmn_text.md")),
    ("formats/json_branches.md", include_str!("../../templates/v1/formats/json_branches.md")),
];

const FULL_OPEN: &str = "<!-- full -->";
const FULL_CLOSE: &str = "<!-- /full -->";

/// Template files keyed by path relative to the version directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    pub version: String,
    files: BTreeMap<String, String>,
}

impl TemplateSet {
    pub fn builtin() -> Self {
        TemplateSet {
            version: BUILTIN_VERSION.to_string(),
            files: BUILTIN.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }

    /// Load `<root>/<version>/`. Files that are absent surface as
    /// configuration errors when a prompt needs them.
    pub fn load(root: &Path, version: &str) -> Result<Self, LlmError> {
        let dir = root.join(version);
        if !dir.is_dir() {
            return Err(LlmError::Config(format!("template directory {} does not exist", dir.display())));
        }
        let mut files = BTreeMap::new();
        for (name, _) in BUILTIN {
            let path = dir.join(name);
            if path.is_file() {
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| LlmError::Config(format!("cannot read {}: {e}", path.display())))?;
                files.insert(name.to_string(), text);
            }
        }
        Ok(TemplateSet { version: version.to_string(), files })
    }

    fn get(&self, name: &str) -> Result<&str, LlmError> {
        self.files
            .get(name)
            .map(String::as_str)
            .ok_or_else(|| LlmError::Config(format!("template {name} missing from set {}", self.version)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub pmr: PmrId,
    pub standardized: bool,
    pub template_version: String,
    pub system_text: String,
    pub user_text: String,
    /// Byte length of the shared prefix of `user_text`.
    pub preamble_len: usize,
    /// Hex SHA-256 over notation, system and user text.
    pub fingerprint: String,
}

impl PromptBundle {
    pub fn preamble(&self) -> &str {
        &self.user_text[..self.preamble_len]
    }

    pub fn format_section(&self) -> &str {
        &self.user_text[self.preamble_len..]
    }
}

/// The order process every formatting section illustrates.
pub fn example_model() -> ProcessModel {
    let mut m = ProcessModel::new("order_process");
    m.nodes = vec![
        Node::event("start", EventPosition::Start, Some("Order received".into())),
        Node::task("check_stock", "Check stock"),
        Node::gateway("in_stock", GatewayType::Exclusive, Some("Items in stock?".into())),
        Node::gateway("fork", GatewayType::Parallel, None),
        Node::task("ship_goods", "Ship goods"),
        Node::task("send_invoice", "Send invoice"),
        Node::gateway("join", GatewayType::Parallel, None),
        Node::task("notify_customer", "Notify customer"),
        Node::gateway("merge", GatewayType::Exclusive, None),
        Node::event("end", EventPosition::End, Some("Order handled".into())),
    ];
    for (s, t, c) in [
        ("start", "check_stock", None),
        ("check_stock", "in_stock", None),
        ("in_stock", "fork", Some("yes")),
        ("fork", "ship_goods", None),
        ("fork", "send_invoice", None),
        ("ship_goods", "join", None),
        ("send_invoice", "join", None),
        ("join", "merge", None),
        ("in_stock", "notify_customer", Some("no")),
        ("notify_customer", "merge", None),
        ("merge", "end", None),
    ] {
        m.add_flow(s, t, c.map(String::from));
    }
    m
}

fn render_example(pmr: PmrId, standardized: bool) -> Result<String, LlmError> {
    let doc = encode(&example_model(), pmr).map_err(|e| LlmError::Config(format!("example model for {pmr}: {e}")))?;
    let mut text = doc.text.trim_end().to_string();
    if pmr == PmrId::Pme && standardized {
        // Empty container lists would still name them.
        let mut v: serde_json::Value = serde_json::from_str(&text).expect("encoder emits JSON");
        if let Some(o) = v.as_object_mut() {
            o.retain(|_, x| !x.as_array().is_some_and(Vec::is_empty));
        }
        text = serde_json::to_string_pretty(&v).expect("value serializes");
    }
    Ok(text)
}

/// Keep or drop the `<!-- full -->` blocks.
fn select_blocks(text: &str, standardized: bool) -> String {
    let mut out = String::new();
    let mut inside = false;
    for line in text.split_inclusive('\n') {
        match line.trim() {
            FULL_OPEN => inside = true,
            FULL_CLOSE => inside = false,
            _ if inside && standardized => {}
            _ => out.push_str(line),
        }
    }
    out
}

fn fingerprint(pmr: PmrId, system: &str, user: &str) -> String {
    let mut h = Sha256::new();
    for part in [pmr.as_str(), system, user] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn build_prompt(description: &str, pmr: PmrId, standardized: bool) -> Result<PromptBundle, LlmError> {
    build_prompt_with(&TemplateSet::builtin(), description, pmr, standardized)
}

pub fn build_prompt_with(
    templates: &TemplateSet,
    description: &str,
    pmr: PmrId,
    standardized: bool,
) -> Result<PromptBundle, LlmError> {
    let description = description.trim();
    if description.is_empty() {
        return Err(LlmError::Precondition("process description is empty".into()));
    }
    let system_text = templates.get("system.md")?.trim_end().to_string();
    let instructions =
        templates.get(if standardized { "instructions/standardized.md" } else { "instructions/full.md" })?;
    let format = templates.get(&format!("formats/{}.md", pmr.as_str()))?;
    if format.matches("{example}").count() != 1 {
        return Err(LlmError::Config(format!("formats/{pmr}.md must contain exactly one {{example}} slot")));
    }

    let mut user_text = templates.get("preamble.md")?.replace("{description}", description);
    user_text = user_text.trim_end().to_string() + "\n\n";
    user_text.push_str(select_blocks(instructions, standardized).trim_end());
    user_text.push_str("\n\n");
    let preamble_len = user_text.len();
    let example = render_example(pmr, standardized)?;
    user_text.push_str(select_blocks(format, standardized).trim_end().replace("{example}", &example).as_str());
    user_text.push('\n');

    Ok(PromptBundle {
        pmr,
        standardized,
        template_version: templates.version.clone(),
        fingerprint: fingerprint(pmr, &system_text, &user_text),
        system_text,
        user_text,
        preamble_len,
    })
}

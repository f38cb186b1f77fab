//! Pulling the model text out of a chat response.

use std::sync::LazyLock;

use regex::Regex;

use super::LlmError;
use crate::codecs::PmrId;

struct Block {
    text: String,
}

/// Fenced blocks in order; an unclosed final fence runs to the end.
fn fenced_blocks(raw: &str) -> Vec<Block> {
    let mut out = Vec::new();
    let mut open: Option<(char, usize, String)> = None;
    for line in raw.lines() {
        let t = line.trim_start();
        match &mut open {
            None => {
                let Some(c) = t.chars().next().filter(|c| *c == '`' || *c == '~') else {
                    continue;
                };
                let n = t.chars().take_while(|x| *x == c).count();
                if n < 3 {
                    continue;
                }
                let rest = &t[n..];
                // ```x ... ``` on one line.
                if let Some(pos) = rest.find(&c.to_string().repeat(n)) {
                    let inner = rest[..pos].trim();
                    let inner = inner.split_once(char::is_whitespace).map_or("", |(_, b)| b);
                    out.push(Block { text: inner.to_string() });
                    continue;
                }
                open = Some((c, n, String::new()));
            }
            Some((c, n, body)) => {
                let fence = c.to_string().repeat(*n);
                let tt = t.trim_end();
                if tt.starts_with(&fence) && tt.chars().all(|x| x == *c) {
                    out.push(Block { text: std::mem::take(body) });
                    open = None;
                } else if let Some(head) = line.trim_end().strip_suffix(fence.as_str()) {
                    body.push_str(head);
                    body.push('\n');
                    out.push(Block { text: std::mem::take(body) });
                    open = None;
                } else {
                    body.push_str(line);
                    body.push('\n');
                }
            }
        }
    }
    if let Some((_, _, body)) = open {
        out.push(Block { text: body });
    }
    out
}

static DOT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\b(strict\s+)?(di)?graph\s*[\w\x22]*\s*\{").unwrap());
static MERMAID: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?m)^\s*(flowchart|graph)\b").unwrap());
static BPMN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<\?xml|<(\w+:)?definitions\b").unwrap());
static BPMN_END: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"</(\w+:)?definitions\s*>").unwrap());
static PROCESS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<\?xml|<process\b").unwrap());
static POWL_START: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?m)^(from\s+\S+\s+import\b|import\s+\w|\w+\s*=\s*ModelGenerator\b)").unwrap());
static POWL_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(\s*$|\s*#|\s+\S|\s*[)\]},]|\s*(from|import)\s|\s*[A-Za-z_]\w*\s*=|\s*[A-Za-z_][\w.]*\()").unwrap()
});
static MERMAID_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(-->|---|==>|-\.|\[|\(|\{|^\s*(end|subgraph|classDef|class|style|linkStyle|direction)\b|^\s*%%|;\s*$)")
        .unwrap()
});

fn slice_to_last<'a>(raw: &'a str, start: usize, close: &str) -> Option<&'a str> {
    let end = raw[start..].rfind(close)? + start + close.len();
    Some(&raw[start..end])
}

fn balanced_json(raw: &str, opens: &[char]) -> Option<String> {
    let start = raw.find(|c| opens.contains(&c))?;
    let close = if raw[start..].starts_with('[') { ']' } else { '}' };
    let end = raw.rfind(close)?;
    (end > start).then(|| raw[start..=end].to_string())
}

fn by_anchor(raw: &str, pmr: PmrId) -> Option<String> {
    match pmr {
        PmrId::Graphviz => {
            let m = DOT.find(raw)?;
            slice_to_last(raw, m.start(), "}").map(String::from)
        }
        PmrId::Mermaid => {
            let m = MERMAID.find(raw)?;
            let lines: Vec<&str> = raw[m.start()..].lines().collect();
            let keep = lines.iter().rposition(|l| MERMAID_LINE.is_match(l)).map_or(1, |k| k + 1);
            Some(lines[..keep].join("\n"))
        }
        PmrId::Bpmn | PmrId::BpmnProcess => {
            let start = BPMN.find(raw)?.start();
            let end = BPMN_END.find_iter(raw).last().filter(|e| e.end() > start)?.end();
            Some(raw[start..end].to_string())
        }
        PmrId::SimplifiedXml | PmrId::BpmnText => {
            let start = PROCESS.find(raw)?.start();
            slice_to_last(raw, start, "</process>").map(String::from)
        }
        PmrId::Pme => balanced_json(raw, &['{']),
        PmrId::JsonBranches => balanced_json(raw, &['[', '{']),
        PmrId::PowlCode => {
            let m = POWL_START.find(raw)?;
            let lines: Vec<&str> = raw[m.start()..].lines().collect();
            let cut = lines.iter().position(|l| !POWL_LINE.is_match(l)).unwrap_or(lines.len());
            Some(lines[..cut].join("\n"))
        }
    }
}

/// The model text inside a chat response: the last fenced block with
/// content, otherwise the span between the notation's anchors.
pub fn extract_model_text(raw: &str, pmr: PmrId) -> Result<String, LlmError> {
    if let Some(b) = fenced_blocks(raw).into_iter().rev().find(|b| !b.text.trim().is_empty()) {
        return Ok(b.text.trim().to_string());
    }
    by_anchor(raw, pmr)
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .ok_or_else(|| LlmError::Extraction(format!("no {pmr} model found in the response")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn last_fence_wins() {
        let raw = "Here is the model:\n```mermaid\nflowchart TD\n  a --> b\n```\nand again\n~~~\nflowchart LR\n  c --> d\n~~~\nDone.";
        assert_eq!(extract_model_text(raw, PmrId::Mermaid).unwrap(), "flowchart LR\n  c --> d");
        let glued = "```mermaid\nflowchart TD\n  a --> b```";
        assert_eq!(extract_model_text(glued, PmrId::Mermaid).unwrap(), "flowchart TD\n  a --> b");
        let open = "Sure!\n```json\n[{\"type\": \"task\", \"name\": \"A\"}]\n";
        assert_eq!(extract_model_text(open, PmrId::JsonBranches).unwrap(), "[{\"type\": \"task\", \"name\": \"A\"}]");
    }

    #[test]
    fn anchors_without_fences() {
        let dot = "The graph follows. digraph G {\n a -> b\n}\nHope this helps.";
        assert_eq!(extract_model_text(dot, PmrId::Graphviz).unwrap(), "digraph G {\n a -> b\n}");
        let mmd = "Model:\nflowchart TD\n  a[A] --> b[B]\n\nThe flow starts with A.";
        assert_eq!(extract_model_text(mmd, PmrId::Mermaid).unwrap(), "flowchart TD\n  a[A] --> b[B]");
        let xml = "ok <?xml version=\"1.0\"?><definitions><process/></definitions> thanks";
        assert!(extract_model_text(xml, PmrId::Bpmn).unwrap().ends_with("</definitions>"));
        let sx = "Result: <process><task id=\"a\" name=\"A\"/></process>.";
        assert_eq!(
            extract_model_text(sx, PmrId::SimplifiedXml).unwrap(),
            "<process><task id=\"a\" name=\"A\"/></process>"
        );
        let py = "Code:\ngen = ModelGenerator()\na = gen.activity(\"A\")\nfinal_model = a\nThis builds A.";
        assert_eq!(
            extract_model_text(py, PmrId::PowlCode).unwrap(),
            "gen = ModelGenerator()\na = gen.activity(\"A\")\nfinal_model = a"
        );
        let pme = "JSON: {\"tasks\": []} end";
        assert_eq!(extract_model_text(pme, PmrId::Pme).unwrap(), "{\"tasks\": []}");
    }

    #[test]
    fn prose_has_no_candidate() {
        for p in PmrId::ALL {
            assert!(matches!(
                extract_model_text("I cannot draw this process, sorry.", p),
                Err(LlmError::Extraction(_))
            ));
        }
    }
}

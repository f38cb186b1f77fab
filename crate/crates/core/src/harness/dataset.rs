//! Dataset ingestion.
//!
//! Normative layout: one directory per case holding `description.txt` and
//! `model.bpmn`, plus an optional `manifest.json` (`{"source": "pet7"}`).
//! A root-level `manifest.json` may map case ids to source tags instead.
//! A flat directory of `<id>.txt` / `<id>.bpmn` pairs is accepted as well.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::bpmn;
use crate::model::ProcessModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceTag {
    Mangler,
    PmoBenchmark,
    Pet7,
    BpmnResearch,
    Ccc19,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetCase {
    pub id: String,
    pub description: String,
    pub gold_text: String,
    pub gold: ProcessModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceTag>,
    /// Parser notes for the gold document (dropped or downgraded elements).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseError {
    pub case_id: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub root: PathBuf,
    pub cases: Vec<DatasetCase>,
    pub errors: Vec<CaseError>,
}

impl Dataset {
    pub fn case(&self, id: &str) -> Option<&DatasetCase> {
        self.cases.iter().find(|c| c.id == id)
    }
}

struct Candidate {
    id: String,
    description: PathBuf,
    model: PathBuf,
    manifest: Option<PathBuf>,
}

#[derive(Deserialize)]
struct CaseManifest {
    source: Option<String>,
}

fn parse_source(raw: &str) -> Result<SourceTag, String> {
    serde_json::from_value(serde_json::Value::String(raw.trim().to_ascii_lowercase()))
        .map_err(|_| format!("unknown source tag `{raw}`"))
}

fn candidates(root: &Path) -> Result<Vec<Candidate>, HarnessError> {
    let entries = std::fs::read_dir(root).map_err(|e| HarnessError::io(root, e))?;
    let mut dirs = Vec::new();
    let mut files = BTreeMap::<String, (Option<PathBuf>, Option<PathBuf>)>::new();
    for entry in entries {
        let entry = entry.map_err(|e| HarnessError::io(root, e))?;
        let path = entry.path();
        let name = entry.file_name().to_string_lossy().to_string();
        if name.starts_with('.') {
            continue;
        }
        if path.is_dir() {
            dirs.push((name, path));
        } else if let Some(stem) = name.strip_suffix(".txt") {
            files.entry(stem.to_string()).or_default().0 = Some(path);
        } else if let Some(stem) = name.strip_suffix(".bpmn") {
            files.entry(stem.to_string()).or_default().1 = Some(path);
        }
    }
    let mut out: Vec<Candidate> = dirs
        .into_iter()
        .map(|(id, dir)| Candidate {
            id,
            description: dir.join("description.txt"),
            model: dir.join("model.bpmn"),
            manifest: Some(dir.join("manifest.json")).filter(|p| p.is_file()),
        })
        .collect();
    if out.is_empty() {
        // Flat layout; a lone half of a pair becomes a case-level error.
        out = files
            .into_iter()
            .map(|(id, (txt, bpmn))| Candidate {
                description: txt.unwrap_or_else(|| root.join(format!("{id}.txt"))),
                model: bpmn.unwrap_or_else(|| root.join(format!("{id}.bpmn"))),
                id,
                manifest: None,
            })
            .collect();
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

fn root_sources(root: &Path) -> Result<BTreeMap<String, String>, HarnessError> {
    let path = root.join("manifest.json");
    if !path.is_file() {
        return Ok(BTreeMap::new());
    }
    let v: serde_json::Value = super::read_json(&path)?;
    let map = v.get("cases").unwrap_or(&v);
    let obj = map.as_object().ok_or_else(|| HarnessError::Json {
        path: path.clone(),
        message: "expected an object mapping case ids to source tags".into(),
    })?;
    Ok(obj
        .iter()
        .filter_map(|(k, v)| {
            let tag = v.as_str().or_else(|| v.get("source").and_then(serde_json::Value::as_str))?;
            Some((k.clone(), tag.to_string()))
        })
        .collect())
}

fn load_case(c: &Candidate, tag: Option<&String>) -> Result<DatasetCase, String> {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()));
    let description = read(&c.description)?.trim().to_string();
    if description.is_empty() {
        return Err(format!("{} is empty", c.description.display()));
    }
    let gold_text = read(&c.model)?;
    let parsed = bpmn::parse(&gold_text).map_err(|e| format!("gold model does not parse: {e}"))?;
    if let Some(v) = parsed.model.validate().first() {
        return Err(format!("gold model is not well-formed: {v}"));
    }
    let mut source = tag.map(|t| parse_source(t)).transpose()?;
    if let Some(m) = &c.manifest {
        let text = read(m)?;
        let cm: CaseManifest = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", m.display()))?;
        if let Some(s) = cm.source {
            source = Some(parse_source(&s)?);
        }
    }
    Ok(DatasetCase {
        id: c.id.clone(),
        description,
        gold_text,
        gold: parsed.model,
        source,
        notes: parsed.notes.iter().map(ToString::to_string).collect(),
    })
}

/// Load every case under `root`, sorted by id. Broken cases are reported
/// in `errors` and do not affect the others.
pub fn ingest(root: &Path) -> Result<Dataset, HarnessError> {
    if !root.exists() {
        return Err(HarnessError::NotFound(root.to_path_buf()));
    }
    let list = candidates(root)?;
    if list.is_empty() {
        return Err(HarnessError::EmptyDataset(root.to_path_buf()));
    }
    let tags = root_sources(root)?;
    let known: BTreeSet<&str> = list.iter().map(|c| c.id.as_str()).collect();
    for id in tags.keys().filter(|k| !known.contains(k.as_str())) {
        log::warn!("manifest names unknown case `{id}`");
    }
    let results: Vec<Result<DatasetCase, CaseError>> = list
        .par_iter()
        .map(|c| load_case(c, tags.get(&c.id)).map_err(|message| CaseError { case_id: c.id.clone(), message }))
        .collect();
    let mut cases = Vec::new();
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok(c) => cases.push(c),
            Err(e) => {
                log::warn!("case {}: {}", e.case_id, e.message);
                errors.push(e);
            }
        }
    }
    Ok(Dataset { root: root.to_path_buf(), cases, errors })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::bpmn::serialize_bpmn;
    use crate::model::{EventPosition, Node};

    pub(crate) fn linear(id: &str, tasks: &[&str]) -> ProcessModel {
        let mut m = ProcessModel::new(id);
        m.nodes.push(Node::event("start", EventPosition::Start, None));
        let mut prev = "start".to_string();
        for (k, t) in tasks.iter().enumerate() {
            let tid = format!("t{k}");
            m.nodes.push(Node::task(tid.clone(), *t));
            m.add_flow(&prev, &tid, None);
            prev = tid;
        }
        m.nodes.push(Node::event("end", EventPosition::End, None));
        m.add_flow(&prev, "end", None);
        m
    }

    pub(crate) fn write_case(root: &Path, id: &str, model: &ProcessModel) {
        let dir = root.join(id);
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("description.txt"), format!("Process {id}: do the tasks in order.")).unwrap();
        std::fs::write(dir.join("model.bpmn"), serialize_bpmn(model, true).xml_text).unwrap();
    }

    #[test]
    fn three_cases_sorted() {
        let dir = tempfile::tempdir().unwrap();
        for id in ["c3", "c1", "c2"] {
            write_case(dir.path(), id, &linear(id, &["A", "B"]));
        }
        std::fs::write(dir.path().join("c2/manifest.json"), r#"{"source": "pet7"}"#).unwrap();
        let d = ingest(dir.path()).unwrap();
        let ids: Vec<&str> = d.cases.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids, ["c1", "c2", "c3"]);
        assert_eq!(d.case("c2").unwrap().source, Some(SourceTag::Pet7));
        assert!(d.errors.is_empty());
    }

    #[test]
    fn broken_cases_are_isolated() {
        let dir = tempfile::tempdir().unwrap();
        write_case(dir.path(), "ok", &linear("ok", &["A"]));
        write_case(dir.path(), "nodesc", &linear("nodesc", &["A"]));
        std::fs::remove_file(dir.path().join("nodesc/description.txt")).unwrap();
        write_case(dir.path(), "badxml", &linear("badxml", &["A"]));
        std::fs::write(dir.path().join("badxml/model.bpmn"), "<definitions").unwrap();
        std::fs::write(dir.path().join("manifest.json"), r#"{"ok": "ccc19"}"#).unwrap();
        let d = ingest(dir.path()).unwrap();
        assert_eq!(d.cases.len(), 1);
        assert_eq!(d.cases[0].source, Some(SourceTag::Ccc19));
        let bad: Vec<&str> = d.errors.iter().map(|e| e.case_id.as_str()).collect();
        assert_eq!(bad, ["badxml", "nodesc"]);
    }

    #[test]
    fn empty_or_missing_dataset_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(ingest(dir.path()), Err(HarnessError::EmptyDataset(_))));
        assert!(matches!(ingest(&dir.path().join("nope")), Err(HarnessError::NotFound(_))));
    }

    #[test]
    fn flat_pairs() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.txt"), "Do A.").unwrap();
        std::fs::write(dir.path().join("a.bpmn"), serialize_bpmn(&linear("a", &["A"]), false).xml_text).unwrap();
        std::fs::write(dir.path().join("b.txt"), "Do B.").unwrap();
        let d = ingest(dir.path()).unwrap();
        assert_eq!(d.cases.len(), 1);
        assert_eq!(d.errors[0].case_id, "b");
    }
}

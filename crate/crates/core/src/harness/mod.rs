//! Dataset pipeline: ingest cases, convert gold models into every notation,
//! measure the ground truth, run generations and score them.

mod convert;
mod dataset;
mod evaluate;
mod ground_truth;
mod run;
mod table;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::codecs::PmrId;
use crate::llm::LlmError;
use crate::metrics::MetricsError;

pub use convert::{convert_all, Conversion, ConvertibilitySummary, Exclusion, RoundTripLog};
pub use dataset::{ingest, CaseError, Dataset, DatasetCase, SourceTag};
pub use evaluate::{
    evaluate_generated, evaluate_models, CaseOutcome, EvalInput, EvaluationReport, EvaluationRow, Generated,
    PmrEvaluation,
};
pub use ground_truth::{report_ground_truth, CountMeans, CoverageMeans, GroundTruthReport, LengthMeans, LengthRow};
pub use run::{generate_run, load_records, record_path, RunItem, RunItemStatus, RunOptions, RunSummary};
pub use table::{Cell, Table};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0} does not exist")]
    NotFound(PathBuf),
    #[error("dataset at {0} holds no cases")]
    EmptyDataset(PathBuf),
    #[error("round trip failed for case `{case}` in {pmr}: {detail}")]
    RoundTrip { case: String, pmr: PmrId, detail: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{}: invalid JSON: {message}", path.display())]
    Json { path: PathBuf, message: String },
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.to_path_buf(), source }
    }

    /// True for failures of a remote service rather than of the data.
    pub fn is_transport(&self) -> bool {
        matches!(
            self,
            HarnessError::Llm(LlmError::Transport { .. } | LlmError::Api { .. } | LlmError::Protocol(_))
                | HarnessError::Metrics(MetricsError::Transport { .. } | MetricsError::Protocol(_))
        )
    }

    pub fn is_config(&self) -> bool {
        matches!(
            self,
            HarnessError::Config(_)
                | HarnessError::Llm(LlmError::Config(_) | LlmError::Precondition(_))
                | HarnessError::Metrics(MetricsError::Config(_) | MetricsError::InvalidThreshold(_))
        )
    }
}

/// Write via a temporary file in the same directory, then rename.
pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<(), HarnessError> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| HarnessError::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| HarnessError::io(path, e))?;
    tmp.persist(path).map_err(|e| HarnessError::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Json { path: path.to_path_buf(), message: e.to_string() })
}

pub(crate) fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for x in xs {
        sum += x;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Matcher settings as recorded in a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatcherRef {
    pub backend: String,
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
}

/// Generation settings as recorded in a manifest; the API key is never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRef {
    pub api_base: String,
    pub model: String,
    pub temperature: f64,
    pub top_p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    pub template_version: String,
    pub standardized: bool,
}

/// Provenance of one run; every report names the manifest it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub command: String,
    pub tool_version: String,
    pub dataset_path: PathBuf,
    pub pmrs: Vec<PmrId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matcher: Option<MatcherRef>,
    pub tokenizer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation: Option<GenerationRef>,
    pub started_at: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finished_at: Option<String>,
}

impl RunManifest {
    pub fn new(command: &str, dataset_path: &Path, pmrs: &[PmrId], tokenizer: &str) -> Self {
        let mut m = RunManifest {
            run_id: String::new(),
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            dataset_path: dataset_path.to_path_buf(),
            pmrs: pmrs.to_vec(),
            matcher: None,
            tokenizer: tokenizer.to_string(),
            generation: None,
            started_at: humantime::format_rfc3339_seconds(SystemTime::now()).to_string(),
            finished_at: None,
        };
        m.run_id = m.settings_id();
        m
    }

    /// `<command>-<digest>`, the digest covering every setting but the
    /// timestamps, so identical runs cite identical ids.
    pub fn settings_id(&self) -> String {
        let mut v = serde_json::to_value(self).expect("manifest serializes");
        if let Some(o) = v.as_object_mut() {
            for k in ["run_id", "started_at", "finished_at"] {
                o.remove(k);
            }
        }
        let digest = Sha256::digest(v.to_string().as_bytes());
        let hex: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
        format!("{}-{hex}", self.command)
    }

    /// Stamp the end time and refresh the id after settings were filled in.
    pub fn finish(&mut self) {
        self.run_id = self.settings_id();
        self.finished_at = Some(humantime::format_rfc3339_seconds(SystemTime::now()).to_string());
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, HarnessError> {
        let path = dir.join("manifest.json");
        write_json(&path, self)?;
        Ok(path)
    }
}

/// Write `<stem>.csv`, `<stem>.json` and `<stem>.txt` for a report. The
/// JSON keeps the tables too, so a report can be re-rendered later.
pub fn write_report<T: Serialize>(
    dir: &Path,
    stem: &str,
    report: &T,
    tables: &[Table],
    manifest: &RunManifest,
) -> Result<(), HarnessError> {
    let json = serde_json::json!({ "kind": stem, "manifest": manifest.run_id, "report": report, "tables": tables });
    write_json(&dir.join(format!("{stem}.json")), &json)?;
    let mut csv = String::new();
    let mut text = format!("run {}\n\n", manifest.run_id);
    for (k, t) in tables.iter().enumerate() {
        if k > 0 {
            csv.push('\n');
            text.push('\n');
        }
        csv.push_str(&t.to_csv());
        text.push_str(&t.render());
    }
    atomic_write(&dir.join(format!("{stem}.csv")), csv.as_bytes())?;
    atomic_write(&dir.join(format!("{stem}.txt")), text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b.txt");
        atomic_write(&p, b"one").unwrap();
        atomic_write(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn manifest_ids_follow_settings_only() {
        let a = RunManifest::new("evaluate", Path::new("/d"), &PmrId::ALL, "heuristic");
        let b = RunManifest::new("stats", Path::new("/d"), &PmrId::ALL, "heuristic");
        assert_ne!(a.run_id, b.run_id);
        assert!(a.run_id.starts_with("evaluate-"));
        let mut c = a.clone();
        c.started_at = "2000-01-01T00:00:00Z".into();
        c.finish();
        assert_eq!(a.run_id, c.run_id);
        c.matcher = Some(MatcherRef { backend: "exact".into(), threshold: 0.7, endpoint: None });
        c.finish();
        assert_ne!(a.run_id, c.run_id);
    }
}

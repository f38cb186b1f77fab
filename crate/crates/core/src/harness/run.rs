//! Generation runs: one chat completion per (case, notation), persisted as
//! `<run>/<case>/<pmr>.record.json` next to the prompt that produced it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{read_json, write_json, Dataset, HarnessError};
use crate::codecs::PmrId;
use crate::llm::{build_prompt_with, generate, GenerationConfig, GenerationRecord, LlmError, ParseStatus, TemplateSet};

pub fn record_path(run_dir: &Path, case_id: &str, pmr: PmrId) -> PathBuf {
    run_dir.join(case_id).join(format!("{}.record.json", pmr.as_str()))
}

fn prompt_path(run_dir: &Path, case_id: &str, pmr: PmrId) -> PathBuf {
    run_dir.join(case_id).join(format!("{}.prompt.json", pmr.as_str()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunItemStatus {
    Generated,
    Skipped,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunItem {
    pub case_id: String,
    pub pmr: PmrId,
    pub status: RunItemStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse_status: Option<ParseStatus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default)]
    pub transport: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub items: Vec<RunItem>,
    pub generated: usize,
    pub skipped: usize,
    pub failed: usize,
}

impl RunSummary {
    /// Nothing generated and every failure came from the service.
    pub fn service_unavailable(&self) -> bool {
        self.generated == 0
            && self.failed > 0
            && self.items.iter().all(|i| i.status != RunItemStatus::Failed || i.transport)
    }
}

/// Settings of one generation run.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub cfg: GenerationConfig,
    pub templates: TemplateSet,
    pub standardized: bool,
    /// Upper bound on concurrent requests.
    pub max_in_flight: usize,
    /// Regenerate even when a record already exists.
    pub overwrite: bool,
}

impl RunOptions {
    pub fn new(cfg: GenerationConfig) -> Self {
        RunOptions { cfg, templates: TemplateSet::builtin(), standardized: true, max_in_flight: 4, overwrite: false }
    }
}

/// Prompt and call the model for every case and notation, writing one record
/// per pair under `run_dir`.
pub fn generate_run(
    dataset: &Dataset,
    pmrs: &[PmrId],
    run_dir: &Path,
    opts: &RunOptions,
) -> Result<RunSummary, HarnessError> {
    let RunOptions { cfg, templates, standardized, max_in_flight, overwrite } = opts;
    let (standardized, max_in_flight, overwrite) = (*standardized, *max_in_flight, *overwrite);
    cfg.validate()?;
    let mut jobs = Vec::new();
    for case in &dataset.cases {
        for &pmr in pmrs {
            let bundle = build_prompt_with(templates, &case.description, pmr, standardized)?;
            jobs.push((case.id.as_str(), bundle));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(max_in_flight.max(1))
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start request pool: {e}")))?;
    let items: Vec<Result<RunItem, HarnessError>> = pool.install(|| {
        jobs.par_iter()
            .map(|(case_id, bundle)| {
                let path = record_path(run_dir, case_id, bundle.pmr);
                let item = |status, parse_status, error: Option<String>, transport| RunItem {
                    case_id: case_id.to_string(),
                    pmr: bundle.pmr,
                    status,
                    parse_status,
                    error,
                    transport,
                };
                if !overwrite && path.is_file() {
                    return Ok(item(RunItemStatus::Skipped, None, None, false));
                }
                write_json(&prompt_path(run_dir, case_id, bundle.pmr), bundle)?;
                match generate(case_id, bundle, cfg) {
                    Ok(rec) => {
                        write_json(&path, &rec)?;
                        Ok(item(RunItemStatus::Generated, Some(rec.parse_status), rec.parse_error, false))
                    }
                    Err(e) => {
                        log::warn!("{case_id}/{}: {e}", bundle.pmr);
                        let transport = matches!(e, LlmError::Transport { .. } | LlmError::Api { .. });
                        Ok(item(RunItemStatus::Failed, None, Some(e.to_string()), transport))
                    }
                }
            })
            .collect()
    });
    let items = items.into_iter().collect::<Result<Vec<_>, _>>()?;
    let count = |s: RunItemStatus| items.iter().filter(|i| i.status == s).count();
    Ok(RunSummary {
        generated: count(RunItemStatus::Generated),
        skipped: count(RunItemStatus::Skipped),
        failed: count(RunItemStatus::Failed),
        items,
    })
}

/// Every record under `run_dir`, keyed by (case, notation).
pub fn load_records(run_dir: &Path) -> Result<BTreeMap<(String, PmrId), GenerationRecord>, HarnessError> {
    let mut out = BTreeMap::new();
    let entries = std::fs::read_dir(run_dir).map_err(|e| HarnessError::io(run_dir, e))?;
    for entry in entries {
        let dir = entry.map_err(|e| HarnessError::io(run_dir, e))?.path();
        if !dir.is_dir() {
            continue;
        }
        for f in std::fs::read_dir(&dir).map_err(|e| HarnessError::io(&dir, e))? {
            let path = f.map_err(|e| HarnessError::io(&dir, e))?.path();
            if path.to_string_lossy().ends_with(".record.json") {
                let rec: GenerationRecord = read_json(&path)?;
                out.insert((rec.case_id.clone(), rec.pmr), rec);
            }
        }
    }
    Ok(out)
}

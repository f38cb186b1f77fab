//! Scoring generated models against the ground truth: element-count deltas
//! and PME similarity, with unparsable output scored as an empty model.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mean, read_json, record_path, CaseError, DatasetCase, HarnessError, Table};
use crate::codecs::{decode, expected_roundtrip, to_pme, PmrId};
use crate::error::CodecError;
use crate::llm::{assess, GenerationRecord, ParseStatus};
use crate::metrics::{element_count_delta, pme_similarity, CountDelta, MatcherConfig};
use crate::model::{ElementType, ProcessModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseOutcome {
    Valid,
    ExtractionFailed,
    DecodeFailed,
}

impl CaseOutcome {
    pub fn is_invalid(self) -> bool {
        self != CaseOutcome::Valid
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRow {
    pub case_id: String,
    pub pmr: PmrId,
    pub outcome: CaseOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub deltas: CountDelta,
    pub similarity: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmrEvaluation {
    pub pmr: PmrId,
    pub cases: usize,
    pub invalid: usize,
    pub invalid_rate: f64,
    pub mean_delta: BTreeMap<ElementType, f64>,
    pub mean_delta_nodes: f64,
    pub similarity: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub backend: String,
    pub threshold: f64,
    pub rows: Vec<EvaluationRow>,
    pub per_pmr: Vec<PmrEvaluation>,
    pub skipped: Vec<CaseError>,
}

/// What a generated document turned into.
#[derive(Debug, Clone)]
pub struct Generated {
    pub model: Option<ProcessModel>,
    pub outcome: CaseOutcome,
    pub error: Option<String>,
}

impl Generated {
    pub fn from_model(m: ProcessModel) -> Self {
        Generated { model: Some(m), outcome: CaseOutcome::Valid, error: None }
    }

    /// Lenient decode of already extracted text.
    pub fn from_text(text: &str, pmr: PmrId) -> Self {
        match decode(text, pmr) {
            Ok(m) => Generated::from_model(m),
            Err(e) => Generated { model: None, outcome: CaseOutcome::DecodeFailed, error: Some(e.to_string()) },
        }
    }

    /// Extraction from a chat reply, then a lenient decode.
    pub fn from_reply(content: &str, pmr: PmrId) -> Self {
        match assess(content, pmr) {
            (Some(text), ParseStatus::Ok, _) => Generated::from_text(&text, pmr),
            (_, ParseStatus::ExtractionFailed, e) => {
                Generated { model: None, outcome: CaseOutcome::ExtractionFailed, error: e }
            }
            (_, _, e) => Generated { model: None, outcome: CaseOutcome::DecodeFailed, error: e },
        }
    }
}

/// One scoring job.
#[derive(Debug, Clone)]
pub struct EvalInput {
    pub case_id: String,
    pub pmr: PmrId,
    pub generated: Generated,
    pub gold: ProcessModel,
}

fn score(input: &EvalInput, cfg: &MatcherConfig) -> Result<EvaluationRow, HarnessError> {
    let empty = ProcessModel::new("empty");
    let gen = input.generated.model.as_ref().unwrap_or(&empty);
    let sim = pme_similarity(&to_pme(gen), &to_pme(&input.gold), cfg)?;
    Ok(EvaluationRow {
        case_id: input.case_id.clone(),
        pmr: input.pmr,
        outcome: input.generated.outcome,
        error: input.generated.error.clone(),
        deltas: element_count_delta(gen, &input.gold),
        similarity: sim.scores().iter().map(|(k, v)| (k.to_string(), *v)).collect(),
    })
}

/// Score prepared inputs; rows come back sorted by (case, notation).
pub fn evaluate_models(inputs: &[EvalInput], cfg: &MatcherConfig) -> Result<EvaluationReport, HarnessError> {
    let mut rows = inputs.par_iter().map(|i| score(i, cfg)).collect::<Result<Vec<_>, _>>()?;
    rows.sort_by(|a, b| (&a.case_id, a.pmr).cmp(&(&b.case_id, b.pmr)));
    let mut pmrs: Vec<PmrId> = rows.iter().map(|r| r.pmr).collect();
    pmrs.sort();
    pmrs.dedup();
    let per_pmr = pmrs
        .into_iter()
        .map(|pmr| {
            let rs: Vec<&EvaluationRow> = rows.iter().filter(|r| r.pmr == pmr).collect();
            let invalid = rs.iter().filter(|r| r.outcome.is_invalid()).count();
            let names = rs.first().map(|r| r.similarity.keys().cloned().collect::<Vec<_>>()).unwrap_or_default();
            PmrEvaluation {
                pmr,
                cases: rs.len(),
                invalid,
                invalid_rate: invalid as f64 / rs.len() as f64,
                mean_delta: ElementType::ALL
                    .iter()
                    .map(|&t| (t, mean(rs.iter().map(|r| r.deltas.get(t) as f64))))
                    .collect(),
                mean_delta_nodes: mean(rs.iter().map(|r| r.deltas.nodes as f64)),
                similarity: names.into_iter().map(|n| (n.clone(), mean(rs.iter().map(|r| r.similarity[&n])))).collect(),
            }
        })
        .collect();
    Ok(EvaluationReport {
        backend: cfg.backend.name().to_string(),
        threshold: cfg.threshold,
        rows,
        per_pmr,
        skipped: Vec::new(),
    })
}

fn generated_for(run_dir: &Path, case_id: &str, pmr: PmrId) -> Result<Option<Generated>, HarnessError> {
    let rec = record_path(run_dir, case_id, pmr);
    if rec.is_file() {
        // Replay extraction from the stored reply rather than trusting the record.
        let r: GenerationRecord = read_json(&rec)?;
        return Ok(Some(Generated::from_reply(&r.content, pmr)));
    }
    let dir = run_dir.join(case_id);
    let reply = dir.join(format!("{}.response.txt", pmr.as_str()));
    if reply.is_file() {
        let text = std::fs::read_to_string(&reply).map_err(|e| HarnessError::io(&reply, e))?;
        return Ok(Some(Generated::from_reply(&text, pmr)));
    }
    let doc = dir.join(pmr.file_name());
    if doc.is_file() {
        let text = std::fs::read_to_string(&doc).map_err(|e| HarnessError::io(&doc, e))?;
        return Ok(Some(Generated::from_text(&text, pmr)));
    }
    Ok(None)
}

/// Score the outputs under `run_dir` for every case and notation. A case
/// without output or without a ground truth in that notation is skipped
/// with a warning.
pub fn evaluate_generated(
    run_dir: &Path,
    cases: &[DatasetCase],
    pmrs: &[PmrId],
    cfg: &MatcherConfig,
) -> Result<EvaluationReport, HarnessError> {
    if !run_dir.is_dir() {
        return Err(HarnessError::NotFound(run_dir.to_path_buf()));
    }
    let mut inputs = Vec::new();
    let mut skipped = Vec::new();
    for case in cases {
        for &pmr in pmrs {
            let skip = |message: String| {
                log::warn!("{} {pmr}: {message}", case.id);
                CaseError { case_id: case.id.clone(), message: format!("{pmr}: {message}") }
            };
            let gold = match expected_roundtrip(&case.gold, pmr) {
                Ok(g) => g,
                Err(CodecError::NotConvertible(v)) => {
                    skipped.push(skip(format!("no ground truth ({v})")));
                    continue;
                }
                Err(e) => {
                    skipped.push(skip(format!("no ground truth ({e})")));
                    continue;
                }
            };
            match generated_for(run_dir, &case.id, pmr)? {
                Some(generated) => inputs.push(EvalInput { case_id: case.id.clone(), pmr, generated, gold }),
                None => skipped.push(skip("no generated output".into())),
            }
        }
    }
    let mut report = evaluate_models(&inputs, cfg)?;
    report.skipped = skipped;
    Ok(report)
}

const SIMILARITY_ORDER: [&str; 7] =
    ["overall", "tasks", "events", "gateways", "gateway_decisions", "gateway_types", "sequence_flows"];

impl EvaluationReport {
    pub fn tables(&self) -> Vec<Table> {
        let mut headers = vec!["pmr", "cases", "invalid_rate"];
        headers.extend(ElementType::ALL.iter().map(|t| t.as_str()));
        headers.push("nodes");
        let mut deltas = Table::new("Mean element-count delta (generated - gold)", &headers);
        for p in &self.per_pmr {
            let mut row = vec![p.pmr.as_str().into(), p.cases.into(), p.invalid_rate.into()];
            row.extend(ElementType::ALL.iter().map(|t| p.mean_delta[t].into()));
            row.push(p.mean_delta_nodes.into());
            deltas.push(row);
        }
        let mut headers = vec!["pmr", "cases"];
        headers.extend(SIMILARITY_ORDER);
        let mut sim = Table::new(
            format!("Mean PME similarity (backend {}, threshold {})", self.backend, self.threshold),
            &headers,
        );
        for p in &self.per_pmr {
            let mut row = vec![p.pmr.as_str().into(), p.cases.into()];
            row.extend(SIMILARITY_ORDER.iter().map(|k| p.similarity.get(*k).copied().into()));
            sim.push(row);
        }
        vec![deltas, sim]
    }
}

#[cfg(test)]
mod tests {
    use super::super::dataset::tests::linear;
    use super::*;
    use crate::codecs::encode;

    fn case(id: &str) -> DatasetCase {
        DatasetCase {
            id: id.into(),
            description: "d".into(),
            gold_text: String::new(),
            gold: linear(id, &["Check order", "Ship order"]),
            source: None,
            notes: vec![],
        }
    }

    #[test]
    fn gold_as_generated_scores_one() {
        let dir = tempfile::tempdir().unwrap();
        let cases = [case("a"), case("b")];
        for c in &cases {
            for p in PmrId::ALL {
                let d = encode(&c.gold, p).unwrap();
                std::fs::create_dir_all(dir.path().join(&c.id)).unwrap();
                std::fs::write(dir.path().join(&c.id).join(p.file_name()), d.text).unwrap();
            }
        }
        let r = evaluate_generated(dir.path(), &cases, &PmrId::ALL, &MatcherConfig::default()).unwrap();
        assert_eq!(r.rows.len(), 18);
        for p in &r.per_pmr {
            assert_eq!(p.invalid, 0);
            assert!(p.similarity.values().all(|v| *v == 1.0), "{:?}", p);
            assert!(p.mean_delta.values().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn unparsable_output_counts_as_invalid_and_empty() {
        let dir = tempfile::tempdir().unwrap();
        let cases = [case("a")];
        std::fs::create_dir_all(dir.path().join("a")).unwrap();
        std::fs::write(dir.path().join("a/mermaid.response.txt"), "I am unable to help.").unwrap();
        std::fs::write(dir.path().join("a").join(PmrId::Graphviz.file_name()), "digraph { a -> }").unwrap();
        let r = evaluate_generated(
            dir.path(),
            &cases,
            &[PmrId::Graphviz, PmrId::Mermaid, PmrId::Pme],
            &MatcherConfig::default(),
        )
        .unwrap();
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.skipped.len(), 1);
        for row in &r.rows {
            assert!(row.outcome.is_invalid());
            assert_eq!(row.similarity["overall"], 0.0);
            assert_eq!(row.deltas.get(ElementType::Task), -2);
        }
        assert!(r.per_pmr.iter().all(|p| p.invalid_rate == 1.0));
    }
}

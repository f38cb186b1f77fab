//! Ground-truth conversion of gold models into every notation.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{atomic_write, CaseError, DatasetCase, HarnessError};
use crate::codecs::{decode_with, encode, expected_roundtrip, DecodeOptions, PmrDocument, PmrId};
use crate::error::CodecError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub case_id: String,
    pub pmr: PmrId,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundTripLog {
    pub case_id: String,
    pub pmr: PmrId,
    pub passed: bool,
    /// Elements dropped by the notation (expected, not failures).
    pub losses: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvertibilitySummary {
    pub pmr: PmrId,
    pub total: usize,
    pub converted: usize,
    pub excluded: usize,
    pub excluded_fraction: f64,
    pub reasons: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conversion {
    pub pmrs: Vec<PmrId>,
    /// case id -> notation -> document.
    pub documents: BTreeMap<String, BTreeMap<PmrId, PmrDocument>>,
    pub exclusions: Vec<Exclusion>,
    pub roundtrips: Vec<RoundTripLog>,
    pub errors: Vec<CaseError>,
    pub summary: Vec<ConvertibilitySummary>,
}

impl Conversion {
    pub fn document(&self, case_id: &str, pmr: PmrId) -> Option<&PmrDocument> {
        self.documents.get(case_id).and_then(|d| d.get(&pmr))
    }

    /// Cases with a document in `pmr`.
    pub fn included(&self, pmr: PmrId) -> Vec<&str> {
        self.documents.iter().filter(|(_, d)| d.contains_key(&pmr)).map(|(c, _)| c.as_str()).collect()
    }
}

enum Outcome {
    Doc(PmrDocument, RoundTripLog),
    Excluded(Exclusion),
    Failed(CaseError),
    Broken(HarnessError),
}

fn convert_one(case: &DatasetCase, pmr: PmrId) -> Outcome {
    let doc = match encode(&case.gold, pmr) {
        Ok(d) => d,
        Err(CodecError::NotConvertible(v)) => {
            return Outcome::Excluded(Exclusion { case_id: case.id.clone(), pmr, reason: v.to_string() })
        }
        Err(e) => return Outcome::Failed(CaseError { case_id: case.id.clone(), message: format!("{pmr}: {e}") }),
    };
    let broken = |detail: String| Outcome::Broken(HarnessError::RoundTrip { case: case.id.clone(), pmr, detail });
    let expected = match expected_roundtrip(&case.gold, pmr) {
        Ok(m) => m,
        Err(e) => return broken(format!("projection failed: {e}")),
    };
    match decode_with(&doc.text, pmr, &DecodeOptions::STRICT) {
        Ok(d) if d.model.canonical_equal(&expected) => {
            log::debug!("round trip ok: {} {pmr}", case.id);
            let log = RoundTripLog { case_id: case.id.clone(), pmr, passed: true, losses: doc.loss_report.len() };
            Outcome::Doc(doc, log)
        }
        Ok(_) => broken("decoded model differs from the projected gold model".into()),
        Err(e) => broken(format!("re-decoding failed: {e}")),
    }
}

/// Encode every case in every notation, verify each document decodes back
/// to the projected gold model and, with `out_dir`, write
/// `<out_dir>/<case>/<pmr file>`. A round-trip failure aborts the run.
pub fn convert_all(cases: &[DatasetCase], pmrs: &[PmrId], out_dir: Option<&Path>) -> Result<Conversion, HarnessError> {
    let jobs: Vec<(&DatasetCase, PmrId)> = cases.iter().flat_map(|c| pmrs.iter().map(move |p| (c, *p))).collect();
    let outcomes: Vec<Outcome> = jobs.par_iter().map(|(c, p)| convert_one(c, *p)).collect();

    let mut conv = Conversion {
        pmrs: pmrs.to_vec(),
        documents: BTreeMap::new(),
        exclusions: Vec::new(),
        roundtrips: Vec::new(),
        errors: Vec::new(),
        summary: Vec::new(),
    };
    for ((case, _), o) in jobs.iter().zip(outcomes) {
        match o {
            Outcome::Doc(doc, log) => {
                conv.roundtrips.push(log);
                conv.documents.entry(case.id.clone()).or_default().insert(doc.pmr, doc);
            }
            Outcome::Excluded(x) => {
                log::info!("{} excluded from {}: {}", x.case_id, x.pmr, x.reason);
                conv.exclusions.push(x);
            }
            Outcome::Failed(e) => conv.errors.push(e),
            Outcome::Broken(e) => return Err(e),
        }
    }
    for &pmr in pmrs {
        let reasons = conv.exclusions.iter().filter(|x| x.pmr == pmr).fold(BTreeMap::new(), |mut m, x| {
            *m.entry(x.reason.clone()).or_insert(0) += 1;
            m
        });
        let excluded: usize = reasons.values().sum();
        let converted = conv.included(pmr).len();
        let total = cases.len();
        conv.summary.push(ConvertibilitySummary {
            pmr,
            total,
            converted,
            excluded,
            excluded_fraction: if total == 0 { 0.0 } else { excluded as f64 / total as f64 },
            reasons,
        });
    }
    if let Some(out) = out_dir {
        let files: Vec<(std::path::PathBuf, &str)> = conv
            .documents
            .iter()
            .flat_map(|(case, docs)| {
                docs.values().map(move |d| (out.join(case).join(d.pmr.file_name()), d.text.as_str()))
            })
            .collect();
        files.par_iter().try_for_each(|(path, text)| atomic_write(path, text.as_bytes()))?;
    }
    Ok(conv)
}

#[cfg(test)]
mod tests {
    use super::super::dataset::tests::linear;
    use super::*;
    use crate::model::{Lane, Pool};

    fn case(id: &str, gold: crate::model::ProcessModel) -> DatasetCase {
        DatasetCase {
            id: id.into(),
            description: "d".into(),
            gold_text: String::new(),
            gold,
            source: None,
            notes: vec![],
        }
    }

    #[test]
    fn linear_case_in_all_notations() {
        let dir = tempfile::tempdir().unwrap();
        let conv = convert_all(&[case("c1", linear("c1", &["A", "B"]))], &PmrId::ALL, Some(dir.path())).unwrap();
        assert_eq!(conv.roundtrips.len(), 9);
        assert!(conv.roundtrips.iter().all(|r| r.passed));
        for p in PmrId::ALL {
            assert!(dir.path().join("c1").join(p.file_name()).is_file(), "{p}");
        }
    }

    #[test]
    fn pooled_case_is_excluded_from_branch_notations() {
        let mut m = linear("p", &["A"]);
        m.pools = vec![
            Pool {
                id: "p1".into(),
                name: "Clerk".into(),
                lanes: vec![Lane { id: "l1".into(), name: "Desk".into(), members: vec!["start".into(), "t0".into()] }],
                members: vec!["end".into()],
            },
            Pool { id: "p2".into(), name: "Customer".into(), lanes: vec![], members: vec![] },
        ];
        let conv = convert_all(&[case("p", m)], &PmrId::ALL, None).unwrap();
        let excluded: Vec<PmrId> = conv.exclusions.iter().map(|x| x.pmr).collect();
        assert_eq!(excluded, [PmrId::PowlCode, PmrId::BpmnText, PmrId::JsonBranches]);
        assert!(conv.exclusions.iter().all(|x| x.reason == "has_pools"));
        let s = conv.summary.iter().find(|s| s.pmr == PmrId::BpmnText).unwrap();
        assert_eq!((s.converted, s.excluded), (0, 1));
        assert_eq!(conv.documents["p"].len(), 6);
    }
}

//! Ground-truth statistics: document lengths against the BPMN baseline,
//! element coverage and element counts per notation.
//!
//! Every aggregate is the arithmetic mean over the cases that have a
//! document in that notation; for branch notations this is the convertible
//! subset, and its size is reported next to the numbers. Relative length
//! deltas compare the subset's mean with the BPMN mean over the same subset.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{mean, Cell, Conversion, DatasetCase, Table};
use crate::codecs::{decode, PmrId};
use crate::metrics::{element_coverage, length_stats, LengthStats, TokenizerSpec};
use crate::model::{ElementType, ProcessModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthRow {
    pub case_id: String,
    pub pmr: PmrId,
    pub length: LengthStats,
    /// Percent change against the case's BPMN document, per
    /// (lines, tokens, words, chars).
    pub delta_pct: Option<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthMeans {
    pub pmr: PmrId,
    pub cases: usize,
    pub mean: [f64; 4],
    /// Mean BPMN length over the same cases.
    pub baseline: Option<[f64; 4]>,
    pub delta_abs: Option<[f64; 4]>,
    /// `delta_abs` relative to `baseline`, in percent.
    pub delta_pct: Option<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageMeans {
    pub pmr: PmrId,
    pub cases: usize,
    /// Over the included cases.
    pub ratio: f64,
    /// Over every ingested case, convertible or not.
    pub ratio_all: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountMeans {
    /// `None` for the gold models themselves.
    pub pmr: Option<PmrId>,
    pub cases: usize,
    pub mean: BTreeMap<ElementType, f64>,
    pub nodes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthReport {
    pub tokenizer: String,
    pub case_count: usize,
    pub lengths: Vec<LengthRow>,
    pub length_means: Vec<LengthMeans>,
    pub coverage: Vec<CoverageMeans>,
    pub counts: Vec<CountMeans>,
    pub convertibility: Vec<super::ConvertibilitySummary>,
}

fn as_array(s: &LengthStats) -> [f64; 4] {
    [s.lines as f64, s.tokens as f64, s.words as f64, s.chars as f64]
}

fn delta(x: &LengthStats, base: &LengthStats) -> Option<[f64; 4]> {
    let (x, b) = (as_array(x), as_array(base));
    if b.contains(&0.0) {
        return None;
    }
    Some(std::array::from_fn(|k| (x[k] - b[k]) / b[k] * 100.0))
}

fn count_means(pmr: Option<PmrId>, models: &[ProcessModel]) -> CountMeans {
    let counts: Vec<_> = models.iter().map(ProcessModel::count_elements).collect();
    CountMeans {
        pmr,
        cases: models.len(),
        mean: ElementType::ALL.iter().map(|&t| (t, mean(counts.iter().map(|c| c.get(t) as f64)))).collect(),
        nodes: mean(counts.iter().map(|c| c.nodes() as f64)),
    }
}

pub fn report_ground_truth(cases: &[DatasetCase], conv: &Conversion, tokenizer: &TokenizerSpec) -> GroundTruthReport {
    let mut lengths = Vec::new();
    for case in cases {
        let Some(docs) = conv.documents.get(&case.id) else {
            continue;
        };
        let base = docs.get(&PmrId::Bpmn).map(|d| length_stats(&d.text, tokenizer));
        for pmr in &conv.pmrs {
            if let Some(d) = docs.get(pmr) {
                let length = length_stats(&d.text, tokenizer);
                let delta_pct = base.as_ref().and_then(|b| delta(&length, b));
                lengths.push(LengthRow { case_id: case.id.clone(), pmr: *pmr, length, delta_pct });
            }
        }
    }

    let mut length_means = Vec::new();
    let mut coverage = Vec::new();
    let mut counts = vec![count_means(None, &cases.iter().map(|c| c.gold.clone()).collect::<Vec<_>>())];
    for &pmr in &conv.pmrs {
        let rows: Vec<&LengthRow> = lengths.iter().filter(|r| r.pmr == pmr).collect();
        let mean_of = |rs: &[&LengthRow]| -> [f64; 4] {
            std::array::from_fn(|k| mean(rs.iter().map(|r| as_array(&r.length)[k])))
        };
        let base_rows: Vec<&LengthRow> =
            lengths.iter().filter(|b| b.pmr == PmrId::Bpmn && rows.iter().any(|r| r.case_id == b.case_id)).collect();
        let m = mean_of(&rows);
        // Relative to the baseline mean of the same subset (ratio of means).
        let baseline = (!rows.is_empty() && base_rows.len() == rows.len()).then(|| mean_of(&base_rows));
        let delta_abs = baseline.map(|b| std::array::from_fn(|k| m[k] - b[k]));
        let delta_pct =
            baseline.filter(|b| !b.contains(&0.0)).map(|b| std::array::from_fn(|k| (m[k] - b[k]) / b[k] * 100.0));
        length_means.push(LengthMeans { pmr, cases: rows.len(), mean: m, baseline, delta_abs, delta_pct });

        let included: Vec<&DatasetCase> = cases.iter().filter(|c| conv.document(&c.id, pmr).is_some()).collect();
        coverage.push(CoverageMeans {
            pmr,
            cases: included.len(),
            ratio: mean(included.iter().map(|c| element_coverage(&c.gold, pmr).ratio)),
            ratio_all: mean(cases.iter().map(|c| element_coverage(&c.gold, pmr).ratio)),
        });

        let decoded: Vec<ProcessModel> =
            included.iter().filter_map(|c| decode(&conv.document(&c.id, pmr)?.text, pmr).ok()).collect();
        counts.push(count_means(Some(pmr), &decoded));
    }

    GroundTruthReport {
        tokenizer: tokenizer.name().to_string(),
        case_count: cases.len(),
        lengths,
        length_means,
        coverage,
        counts,
        convertibility: conv.summary.clone(),
    }
}

fn subset(cases: usize, total: usize) -> String {
    if cases == total {
        "all".into()
    } else {
        format!("convertible ({cases}/{total})")
    }
}

impl GroundTruthReport {
    pub fn tables(&self) -> Vec<Table> {
        let n = self.case_count;
        let mut len = Table::new(
            format!("Document length (tokenizer: {})", self.tokenizer),
            &[
                "pmr",
                "subset",
                "cases",
                "lines",
                "tokens",
                "words",
                "chars",
                "d_lines_pct",
                "d_lines",
                "d_tokens_pct",
                "d_tokens",
                "d_words_pct",
                "d_words",
                "d_chars_pct",
                "d_chars",
            ],
        );
        for m in &self.length_means {
            let mut row: Vec<Cell> = vec![m.pmr.as_str().into(), subset(m.cases, n).into(), m.cases.into()];
            row.extend(m.mean.iter().map(|v| Cell::Num(*v)));
            for k in 0..4 {
                row.push(m.delta_pct.map(|d| d[k]).into());
                row.push(m.delta_abs.map(|d| d[k]).into());
            }
            len.push(row);
        }

        let mut cov = Table::new("Element coverage", &["pmr", "subset", "cases", "coverage", "coverage_all_cases"]);
        for c in &self.coverage {
            cov.push(vec![
                c.pmr.as_str().into(),
                subset(c.cases, n).into(),
                c.cases.into(),
                c.ratio.into(),
                c.ratio_all.into(),
            ]);
        }

        let mut headers = vec!["model", "cases"];
        headers.extend(ElementType::ALL.iter().map(|t| t.as_str()));
        headers.push("nodes");
        let mut cnt = Table::new("Mean element counts", &headers);
        for c in &self.counts {
            let mut row: Vec<Cell> = vec![c.pmr.map_or("gold", |p| p.as_str()).into(), c.cases.into()];
            row.extend(ElementType::ALL.iter().map(|t| Cell::Num(c.mean[t])));
            row.push(c.nodes.into());
            cnt.push(row);
        }

        let mut conv =
            Table::new("Convertibility", &["pmr", "total", "converted", "excluded", "excluded_pct", "reasons"]);
        for s in &self.convertibility {
            let reasons: Vec<String> = s.reasons.iter().map(|(r, k)| format!("{r}:{k}")).collect();
            conv.push(vec![
                s.pmr.as_str().into(),
                s.total.into(),
                s.converted.into(),
                s.excluded.into(),
                Cell::Num(s.excluded_fraction * 100.0),
                reasons.join(" ").into(),
            ]);
        }
        vec![len, cov, cnt, conv]
    }
}

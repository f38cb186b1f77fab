//! Subcommand implementations. Each returns the process exit code.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};

use pmr_core::codecs::{decode_with, encode, roundtrip_holds, DecodeOptions};
use pmr_core::error::CodecError;
use pmr_core::harness::{
    self, convert_all, evaluate_generated, generate_run, ingest, report_ground_truth, Cell, Dataset, GenerationRef,
    HarnessError, MatcherRef, RunItemStatus, RunManifest, RunOptions, Table,
};
use pmr_core::llm::LlmError;
use pmr_core::metrics::{element_coverage, Backend, MatcherConfig, MetricsError};
use pmr_core::{PmrId, ProcessModel};

use crate::config::{FileConfig, ProcessEnv};
use crate::{Cli, Command, DatasetCommand, ReportFormat};

pub const EXIT_DATA: u8 = 2;
pub const EXIT_TRANSPORT: u8 = 3;

/// Marks an error as a usage or configuration problem.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(e: anyhow::Error) -> anyhow::Error {
    anyhow::Error::new(UsageError(format!("{e:#}")))
}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<UsageError>() {
            return 1;
        }
        if let Some(h) = cause.downcast_ref::<HarnessError>() {
            return if h.is_transport() {
                EXIT_TRANSPORT
            } else if h.is_config() {
                1
            } else {
                EXIT_DATA
            };
        }
        if let Some(l) = cause.downcast_ref::<LlmError>() {
            return match l {
                LlmError::Transport { .. } | LlmError::Api { .. } | LlmError::Protocol(_) => EXIT_TRANSPORT,
                LlmError::Config(_) | LlmError::Precondition(_) => 1,
                LlmError::Extraction(_) => EXIT_DATA,
            };
        }
        if let Some(m) = cause.downcast_ref::<MetricsError>() {
            return match m {
                MetricsError::Transport { .. } | MetricsError::Protocol(_) => EXIT_TRANSPORT,
                _ => 1,
            };
        }
    }
    EXIT_DATA
}

pub fn run(cli: &Cli) -> Result<u8> {
    let file = FileConfig::locate(cli.config.as_deref(), &ProcessEnv).map_err(usage)?;
    match &cli.command {
        Command::Convert(a) => convert(a),
        Command::Validate(a) => validate(a),
        Command::Dataset(DatasetCommand::ConvertAll(a)) => convert_all_cmd(a),
        Command::Dataset(DatasetCommand::Stats(a)) => stats(&file, a),
        Command::Dataset(DatasetCommand::Coverage(a)) => coverage(a),
        Command::Generate(a) => generate(&file, a),
        Command::Evaluate(a) => evaluate(&file, a),
        Command::Report(a) => report(a),
    }
}

fn read_input(path: &Path, from: Option<PmrId>) -> Result<(String, PmrId)> {
    let pmr = match from.or_else(|| PmrId::from_path(&path.to_string_lossy())) {
        Some(p) => p,
        None => return Err(usage(anyhow::anyhow!("cannot tell the notation of {}; pass --from", path.display()))),
    };
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).context("cannot read standard input")?;
        s
    } else {
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?
    };
    Ok((text, pmr))
}

fn decode_input(text: &str, pmr: PmrId, strict: bool) -> Result<ProcessModel> {
    let opts = if strict { DecodeOptions::STRICT } else { DecodeOptions::LENIENT };
    let decoded = decode_with(text, pmr, &opts).with_context(|| format!("cannot decode {pmr} input"))?;
    for w in &decoded.warnings {
        eprintln!("warning: {w}");
    }
    Ok(decoded.model)
}

fn convert(a: &crate::ConvertArgs) -> Result<u8> {
    let (text, from) = read_input(&a.input, a.from)?;
    let model = decode_input(&text, from, a.strict)?;
    let doc = encode(&model, a.to).with_context(|| format!("cannot encode as {}", a.to))?;
    for loss in &doc.loss_report {
        eprintln!("dropped {} `{}`: {}", loss.element.as_str(), loss.id, loss.reason);
    }
    match &a.output {
        Some(p) => harness::atomic_write(p, doc.text.as_bytes())?,
        None => std::io::stdout().write_all(doc.text.as_bytes())?,
    }
    Ok(0)
}

fn validate(a: &crate::ValidateArgs) -> Result<u8> {
    let (text, from) = read_input(&a.input, a.from)?;
    let model = decode_input(&text, from, a.strict)?;
    let counts = model.count_elements();
    println!(
        "{}: {from}, {} nodes, {} sequence flows, well-formed",
        a.input.display(),
        counts.nodes(),
        counts.get(pmr_core::ElementType::SequenceFlow)
    );
    let mut failed = false;
    for pmr in a.targets.resolve() {
        let status = match roundtrip_holds(&model, pmr) {
            Ok(true) => {
                let losses = encode(&model, pmr).map(|d| d.loss_report.len()).unwrap_or(0);
                if losses == 0 {
                    "ok".to_string()
                } else {
                    format!("ok ({losses} element(s) not representable)")
                }
            }
            Ok(false) => {
                failed = true;
                "FAILED: decoded model differs".to_string()
            }
            Err(CodecError::NotConvertible(v)) => format!("not convertible ({v})"),
            Err(e) => {
                failed = true;
                format!("FAILED: {e}")
            }
        };
        println!("  {:<15} {status}", pmr.as_str());
    }
    Ok(if failed { EXIT_DATA } else { 0 })
}

fn load_dataset(path: &Path) -> Result<Dataset> {
    let d = ingest(path)?;
    for e in &d.errors {
        eprintln!("warning: case {}: {}", e.case_id, e.message);
    }
    log::info!("{} case(s) loaded, {} rejected", d.cases.len(), d.errors.len());
    if d.cases.is_empty() {
        bail!(HarnessError::EmptyDataset(path.to_path_buf()));
    }
    Ok(d)
}

fn print_tables(tables: &[Table]) {
    let mut out = String::new();
    for (k, t) in tables.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        out.push_str(&t.render());
    }
    print!("{out}");
}

fn convert_all_cmd(a: &crate::ConvertAllArgs) -> Result<u8> {
    let d = load_dataset(&a.dataset)?;
    let pmrs = a.pmrs.resolve();
    let mut manifest = RunManifest::new("convert-all", &a.dataset, &pmrs, "none");
    let conv = convert_all(&d.cases, &pmrs, Some(&a.out))?;
    for e in &conv.errors {
        eprintln!("warning: case {}: {}", e.case_id, e.message);
    }
    let mut t = Table::new("Conversion", &["pmr", "documents", "excluded", "excluded_pct"]);
    for s in &conv.summary {
        t.push(vec![
            s.pmr.as_str().into(),
            s.converted.into(),
            s.excluded.into(),
            Cell::Num(s.excluded_fraction * 100.0),
        ]);
    }
    print_tables(std::slice::from_ref(&t));
    println!("{} round trips verified", conv.roundtrips.len());
    manifest.finish();
    manifest.write(&a.out)?;
    let summary = serde_json::json!({
        "summary": conv.summary,
        "exclusions": conv.exclusions,
        "roundtrips": conv.roundtrips,
        "errors": conv.errors,
        "ingest_errors": d.errors,
    });
    harness::write_report(&a.out, "conversion", &summary, &[t], &manifest)?;
    Ok(0)
}

fn stats(file: &FileConfig, a: &crate::StatsArgs) -> Result<u8> {
    let tokenizer = file.tokenizer(a.merges.as_deref()).map_err(usage)?;
    let d = load_dataset(&a.dataset)?;
    let pmrs = a.pmrs.resolve();
    let conv = convert_all(&d.cases, &pmrs, None)?;
    let report = report_ground_truth(&d.cases, &conv, &tokenizer);
    let tables = report.tables();
    print_tables(&tables);
    if let Some(out) = &a.out {
        let mut manifest = RunManifest::new("stats", &a.dataset, &pmrs, tokenizer.name());
        manifest.finish();
        manifest.write(out)?;
        harness::write_report(out, "ground_truth", &report, &tables, &manifest)?;
    }
    Ok(0)
}

fn coverage(a: &crate::CoverageArgs) -> Result<u8> {
    let d = load_dataset(&a.dataset)?;
    let pmrs = a.pmrs.resolve();
    let mut headers = vec!["case", "elements"];
    headers.extend(pmrs.iter().map(|p| p.as_str()));
    let mut t = Table::new("Element coverage", &headers);
    let mut sums = vec![0.0; pmrs.len()];
    for c in &d.cases {
        let mut row: Vec<Cell> = vec![c.id.as_str().into(), c.gold.count_elements().total().into()];
        for (k, &p) in pmrs.iter().enumerate() {
            let r = element_coverage(&c.gold, p).ratio;
            sums[k] += r;
            row.push(r.into());
        }
        t.push(row);
    }
    let mut mean_row: Vec<Cell> = vec!["mean".into(), Cell::Empty];
    mean_row.extend(sums.iter().map(|s| Cell::Num(s / d.cases.len() as f64)));
    t.push(mean_row);
    print_tables(std::slice::from_ref(&t));
    if let Some(out) = &a.out {
        let mut manifest = RunManifest::new("coverage", &a.dataset, &pmrs, "none");
        manifest.finish();
        manifest.write(out)?;
        harness::write_report(out, "coverage", &t, std::slice::from_ref(&t), &manifest)?;
    }
    Ok(0)
}

fn generate(file: &FileConfig, a: &crate::GenerateArgs) -> Result<u8> {
    let mut cfg = file.generation(&ProcessEnv);
    if let Some(m) = &a.model {
        cfg.model = m.clone();
    }
    if let Some(b) = &a.api_base {
        cfg.api_base = b.clone();
    }
    cfg.validate().map_err(|e| usage(e.into()))?;
    let templates = file.templates(a.templates.as_deref(), a.template_version.as_deref()).map_err(usage)?;
    let d = load_dataset(&a.dataset)?;
    let pmrs = a.pmrs.resolve();
    let mut manifest = RunManifest::new("generate", &a.dataset, &pmrs, "none");
    manifest.generation = Some(GenerationRef {
        api_base: cfg.api_base.clone(),
        model: cfg.model.clone(),
        temperature: cfg.temperature,
        top_p: cfg.top_p,
        top_k: cfg.top_k,
        max_tokens: cfg.max_tokens,
        template_version: templates.version.clone(),
        standardized: !a.full,
    });
    let opts = RunOptions {
        cfg,
        templates,
        standardized: !a.full,
        max_in_flight: a.max_in_flight.unwrap_or_else(|| file.max_in_flight()),
        overwrite: a.overwrite,
    };
    let summary = generate_run(&d, &pmrs, &a.run, &opts)?;
    manifest.finish();
    manifest.write(&a.run)?;
    harness::write_json(&a.run.join("run_summary.json"), &summary)?;
    println!("{} generated, {} skipped, {} failed", summary.generated, summary.skipped, summary.failed);
    for i in summary.items.iter().filter(|i| i.status == RunItemStatus::Failed) {
        eprintln!("failed: {} {}: {}", i.case_id, i.pmr, i.error.as_deref().unwrap_or(""));
    }
    Ok(if summary.failed == 0 {
        0
    } else if summary.items.iter().all(|i| i.status != RunItemStatus::Failed || i.transport) {
        EXIT_TRANSPORT
    } else {
        EXIT_DATA
    })
}

fn matcher_ref(m: &MatcherConfig) -> MatcherRef {
    MatcherRef {
        backend: m.backend.name().to_string(),
        threshold: m.threshold,
        endpoint: match &m.backend {
            Backend::Embedding(c) => Some(c.endpoint.clone()),
            _ => None,
        },
    }
}

fn evaluate(file: &FileConfig, a: &crate::EvaluateArgs) -> Result<u8> {
    let matcher = file.matcher(&ProcessEnv, a.backend.as_deref(), a.threshold).map_err(usage)?;
    let d = load_dataset(&a.dataset)?;
    let pmrs = a.pmrs.resolve();
    let report = evaluate_generated(&a.run, &d.cases, &pmrs, &matcher)?;
    for s in &report.skipped {
        eprintln!("skipped: case {}: {}", s.case_id, s.message);
    }
    let tables = report.tables();
    print_tables(&tables);
    let out = a.out.as_deref().unwrap_or(&a.run);
    let mut manifest = RunManifest::new("evaluate", &a.dataset, &pmrs, "none");
    manifest.matcher = Some(matcher_ref(&matcher));
    manifest.finish();
    manifest.write(out)?;
    harness::write_report(out, "evaluation", &report, &tables, &manifest)?;
    Ok(0)
}

fn report(a: &crate::ReportArgs) -> Result<u8> {
    let v: serde_json::Value = harness::read_json(&a.report)?;
    let tables: Vec<Table> = serde_json::from_value(v.get("tables").cloned().unwrap_or_default())
        .with_context(|| format!("{} holds no report tables", a.report.display()))?;
    match a.format {
        ReportFormat::Text => {
            if let Some(id) = v.get("manifest").and_then(|m| m.as_str()) {
                println!("run {id}\n");
            }
            print_tables(&tables);
        }
        ReportFormat::Csv => {
            let parts: Vec<String> = tables.iter().map(Table::to_csv).collect();
            print!("{}", parts.join("\n"));
        }
    }
    Ok(0)
}

//! `pmrkit`: convert, validate and evaluate process model documents.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 transport error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pmr_core::PmrId;

#[derive(Debug, Parser)]
#[command(name = "pmrkit", version, about = "Process model representation toolkit")]
pub struct Cli {
    /// Settings file (TOML). Defaults to $PMRKIT_CONFIG, then ./pmrkit.toml.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// More log output; repeat for more.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert one document between notations.
    Convert(ConvertArgs),
    /// Decode a document and check it round-trips through each notation.
    Validate(ValidateArgs),
    /// Dataset-wide operations.
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Prompt a chat model for every case and notation.
    Generate(GenerateArgs),
    /// Score a run directory against the dataset's gold models.
    Evaluate(EvaluateArgs),
    /// Re-render the tables of a saved JSON report.
    Report(ReportArgs),
}

#[derive(Debug, Subcommand)]
pub enum DatasetCommand {
    /// Write every gold model in every notation, verifying round trips.
    ConvertAll(ConvertAllArgs),
    /// Ground-truth length, element-count and convertibility tables.
    Stats(StatsArgs),
    /// Element coverage per case and notation.
    Coverage(CoverageArgs),
}

fn parse_pmr(s: &str) -> Result<PmrId, String> {
    s.parse().map_err(|_| {
        let names: Vec<&str> = PmrId::ALL.iter().map(|p| p.as_str()).collect();
        format!("unknown notation `{s}` (one of {})", names.join(", "))
    })
}

#[derive(Debug, Clone, Args)]
pub struct PmrSet {
    /// Notations, comma separated; all nine by default.
    #[arg(long, value_delimiter = ',', value_parser = parse_pmr)]
    pub pmrs: Vec<PmrId>,
}

impl PmrSet {
    pub fn resolve(&self) -> Vec<PmrId> {
        if self.pmrs.is_empty() {
            PmrId::ALL.to_vec()
        } else {
            let mut v = self.pmrs.clone();
            v.sort();
            v.dedup();
            v
        }
    }
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// Input file, or `-` for standard input.
    pub input: PathBuf,
    /// Input notation; guessed from the file name when omitted.
    #[arg(long, value_parser = parse_pmr)]
    pub from: Option<PmrId>,
    #[arg(long, value_parser = parse_pmr)]
    pub to: PmrId,
    /// Output file; standard output when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Reject documents that need recovery (undeclared nodes, ignored lines).
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub input: PathBuf,
    #[arg(long, value_parser = parse_pmr)]
    pub from: Option<PmrId>,
    #[command(flatten)]
    pub targets: PmrSet,
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct ConvertAllArgs {
    pub dataset: PathBuf,
    /// Output directory for `<case>/<pmr file>` documents.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub pmrs: PmrSet,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    pub dataset: PathBuf,
    /// Write CSV, JSON and text reports plus a manifest here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub pmrs: PmrSet,
    /// BPE merge table for token counts.
    #[arg(long)]
    pub merges: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub pmrs: PmrSet,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    pub dataset: PathBuf,
    /// Run directory receiving prompts and records.
    #[arg(long)]
    pub run: PathBuf,
    #[command(flatten)]
    pub pmrs: PmrSet,
    /// Allow pools, lanes, message flows and intermediate events.
    #[arg(long)]
    pub full: bool,
    #[arg(long)]
    pub templates: Option<PathBuf>,
    #[arg(long)]
    pub template_version: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub api_base: Option<String>,
    #[arg(long)]
    pub max_in_flight: Option<usize>,
    /// Regenerate pairs that already have a record.
    #[arg(long)]
    pub overwrite: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    pub run: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    /// Report directory; the run directory by default.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub pmrs: PmrSet,
    /// exact, lexical or embedding.
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum ReportFormat {
    Text,
    Csv,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    pub report: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    pub format: ReportFormat,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}

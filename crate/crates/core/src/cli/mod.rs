//! Command-line entry points. [`run`] parses arguments, executes one
//! subcommand and returns the process exit status.

mod commands;
mod evaluate;

pub use evaluate::{evaluate, PerturbedInput, RunConfig, RunInput};

use crate::error::{Error, Result};
use crate::metrics::Unit;
use crate::model::{Normalizer, Ontology};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "dst-robust", version, about = "Robustness evaluation for dialogue state tracking")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score prediction files and write a metric report.
    Evaluate(EvaluateArgs),
    /// Build a perturbed copy of a corpus.
    #[command(subcommand)]
    Perturb(PerturbCommand),
    /// Check that paraphrased turns keep their gold slot values.
    ValidateParaphrases(ParaphraseArgs),
    /// Sample few-shot train/valid/test splits.
    Fewshot(FewshotArgs),
    /// Merge metric reports and print the aggregate table.
    Report(ReportArgs),
    /// Flag user turns that need coreference resolution, by regex.
    TagCoref(TagCorefArgs),
}

#[derive(Debug, Subcommand)]
pub enum PerturbCommand {
    /// Replace named entities with random strings of the same shape.
    ScrambleNe(ScrambleArgs),
    /// Insert fillers, repetitions, restarts and self-repairs into user turns.
    Disfluency(DisfluencyArgs),
}

/// Ontology selection shared by all commands that parse belief states.
#[derive(Debug, Clone, Default, Args)]
pub struct OntologyArgs {
    /// Ontology JSON (defaults to the built-in MultiWOZ ontology).
    #[arg(long)]
    pub ontology: Option<PathBuf>,
    /// Value alias table, a JSON object mapping variant to canonical form.
    #[arg(long)]
    pub aliases: Option<PathBuf>,
    /// Override the named-entity slots, as DOMAIN:SLOT (repeatable).
    #[arg(long = "ne-slot", value_name = "DOMAIN:SLOT")]
    pub ne_slots: Vec<String>,
}

impl OntologyArgs {
    pub fn is_default(&self) -> bool {
        self.ontology.is_none() && self.aliases.is_none() && self.ne_slots.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Table,
    Json,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Run configuration JSON; replaces all input flags.
    #[arg(long, conflicts_with_all = ["corpus", "pred", "perturbed", "pert_pred", "manifest"])]
    pub config: Option<PathBuf>,
    /// Original corpus.
    #[arg(long, required_unless_present = "config")]
    pub corpus: Option<PathBuf>,
    /// Predictions on the original corpus for one run, as LABEL=PATH.
    #[arg(long, value_name = "LABEL=PATH")]
    pub pred: Vec<String>,
    /// Perturbed corpus, as KIND=PATH with KIND one of named_entity,
    /// paraphrase, disfluency.
    #[arg(long, value_name = "KIND=PATH")]
    pub perturbed: Vec<String>,
    /// Predictions on a perturbed corpus, as KIND:LABEL=PATH.
    #[arg(long = "pert-pred", value_name = "KIND:LABEL=PATH")]
    pub pert_pred: Vec<String>,
    /// Perturbation manifest, as KIND=PATH.
    #[arg(long, value_name = "KIND=PATH")]
    pub manifest: Vec<String>,
    #[arg(long, default_value = "model")]
    pub model: String,
    #[arg(long, value_enum)]
    pub unit: Option<UnitArg>,
    /// Directory for report.json and report.txt.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// What to print on stdout.
    #[arg(long, value_enum, default_value = "table")]
    pub format: OutputFormat,
    #[command(flatten)]
    pub ontology: OntologyArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnitArg {
    Turn,
    Dialogue,
}

impl From<UnitArg> for Unit {
    fn from(u: UnitArg) -> Self {
        match u {
            UnitArg::Turn => Unit::Turn,
            UnitArg::Dialogue => Unit::Dialogue,
        }
    }
}

#[derive(Debug, Args)]
pub struct ScrambleArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub ontology: OntologyArgs,
}

#[derive(Debug, Args)]
pub struct DisfluencyArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Disfluency configuration JSON (defaults to the shipped one).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub ontology: OntologyArgs,
}

#[derive(Debug, Args)]
pub struct ParaphraseArgs {
    /// Original corpus.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Corpus with paraphrased user turns and the same dialogue ids.
    #[arg(long)]
    pub paraphrases: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub ontology: OntologyArgs,
}

#[derive(Debug, Args)]
pub struct FewshotArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub ontology: OntologyArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report files written by `evaluate`.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    /// Include one row per run above each aggregate row.
    #[arg(long)]
    pub per_run: bool,
    /// Also write the merged reports as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct TagCorefArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output corpus path.
    #[arg(long)]
    pub out: PathBuf,
    /// Regex pattern (repeatable); defaults to the built-in patterns.
    #[arg(long = "pattern")]
    pub patterns: Vec<String>,
    #[command(flatten)]
    pub ontology: OntologyArgs,
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit status: 0 on success, 1 on usage errors, 2 on data errors. Errors
/// are reported on `stderr` as a human-readable line followed by one JSON
/// record.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{}", e.render());
                return 0;
            }
            let _ = write!(stderr, "{}", e.render());
            let err = Error::Usage(e.kind().to_string());
            let _ = writeln!(stderr, "{}", err.to_record());
            return err.exit_code();
        }
    };
    match execute(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(err) => {
            let _ = writeln!(stderr, "error: {err}");
            let _ = writeln!(stderr, "{}", err.to_record());
            err.exit_code()
        }
    }
}

fn execute(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match command {
        Command::Evaluate(a) => evaluate::cmd_evaluate(a, stdout),
        Command::Perturb(PerturbCommand::ScrambleNe(a)) => commands::cmd_scramble(a, stdout, stderr),
        Command::Perturb(PerturbCommand::Disfluency(a)) => commands::cmd_disfluency(a, stdout),
        Command::ValidateParaphrases(a) => commands::cmd_validate_paraphrases(a, stdout),
        Command::Fewshot(a) => commands::cmd_fewshot(a, stdout),
        Command::Report(a) => commands::cmd_report(a, stdout),
        Command::TagCoref(a) => commands::cmd_tag_coref(a, stdout),
    }
}

/// Splits `DOMAIN:SLOT`.
fn parse_ne_slot(s: &str) -> Result<(String, String)> {
    match s.split_once(':') {
        Some((d, t)) if !d.trim().is_empty() && !t.trim().is_empty() => {
            Ok((d.trim().to_string(), t.trim().to_string()))
        }
        _ => Err(Error::Usage(format!("--ne-slot expects DOMAIN:SLOT, got {s:?}"))),
    }
}

/// Builds the ontology from a file or the built-in default, then applies
/// aliases and named-entity overrides.
pub fn build_ontology(
    ontology: Option<&Path>,
    aliases: Option<&Path>,
    ne_slots: &[String],
) -> Result<Ontology> {
    let mut ont = match ontology {
        Some(p) => Ontology::load(p)?,
        None => Ontology::multiwoz(),
    };
    if let Some(p) = aliases {
        ont = ont.with_normalizer(Normalizer::load(p)?);
    }
    if !ne_slots.is_empty() {
        let slots = ne_slots
            .iter()
            .map(|s| parse_ne_slot(s))
            .collect::<Result<Vec<_>>>()?;
        ont = ont.with_named_entity_slots(slots)?;
    }
    Ok(ont)
}

impl OntologyArgs {
    pub fn build(&self) -> Result<Ontology> {
        build_ontology(self.ontology.as_deref(), self.aliases.as_deref(), &self.ne_slots)
    }

    /// Hash of the ontology selection, by file content.
    fn hash(&self) -> Result<serde_json::Value> {
        Ok(serde_json::json!({
            "ontology": optional_file_hash(self.ontology.as_deref())?,
            "aliases": optional_file_hash(self.aliases.as_deref())?,
            "ne_slots": self.ne_slots,
        }))
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| crate::ingest::LoadError::io(path, e).into())
}

fn file_hash(path: &Path) -> Result<String> {
    Ok(crate::hashing::sha256_hex(read_file(path)?))
}

fn optional_file_hash(path: Option<&Path>) -> Result<Option<String>> {
    path.map(file_hash).transpose()
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| Error::Write {
            path: dir.display().to_string(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| Error::Write {
        path: path.display().to_string(),
        source,
    })
}

fn print(stdout: &mut dyn Write, text: &str) -> Result<()> {
    stdout.write_all(text.as_bytes()).map_err(|source| Error::Write {
        path: "<stdout>".into(),
        source,
    })
}

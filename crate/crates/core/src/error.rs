use crate::ingest::{AlignError, CorefError, LoadError};
use crate::metrics::{MetricError, ReportError};
use crate::model::{AliasError, OntologyError};
use crate::perturb::PerturbError;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Exit status for a command that rejected its arguments.
pub const EXIT_USAGE: i32 = 1;
/// Exit status for a command whose inputs failed to load or validate.
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error(transparent)]
    Alias(#[from] AliasError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error(transparent)]
    Coref(#[from] CorefError),
    #[error(transparent)]
    Perturb(#[from] PerturbError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable identifier used in machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Load(_) => "load",
            Self::Ontology(_) => "ontology",
            Self::Alias(_) => "alias",
            Self::Metric(_) => "metric",
            Self::Align(_) => "alignment",
            Self::Coref(_) => "coref",
            Self::Perturb(_) => "perturb",
            Self::Report(ReportError::SchemaMismatch(_)) => "schema_mismatch",
            Self::Report(_) => "report",
            Self::Config(_) => "config",
            Self::Usage(_) => "usage",
            Self::Write { .. } => "write",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        }
    }

    pub fn to_record(&self) -> serde_json::Value {
        serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        })
    }
}

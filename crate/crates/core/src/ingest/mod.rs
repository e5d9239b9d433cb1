//! Corpus, prediction and manifest loading; original/perturbed pairing.

mod align;
mod coref;
mod corpus;
mod manifest;
mod predictions;

pub use align::{align_pairs, align_pairs_lenient, AlignError, Alignment, GoldMismatch, PairedSample, SampleSide};
pub use coref::{heuristic_coref_tag, CorefError, COREF_TAGGING_NOTE, DEFAULT_COREF_PATTERNS};
pub use corpus::{Corpus, StateChange, StateChangeKind};
pub use manifest::PerturbationManifest;
pub use predictions::PredictionSet;

use crate::model::ParseError;
use std::fmt;
use thiserror::Error;

/// Identifies a user turn: `(dialogue_id, turn_index)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub struct TurnKey {
    pub dialogue_id: String,
    pub turn_index: usize,
}

impl TurnKey {
    pub fn new(dialogue_id: impl Into<String>, turn_index: usize) -> Self {
        Self {
            dialogue_id: dialogue_id.into(),
            turn_index,
        }
    }
}

impl fmt::Display for TurnKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.dialogue_id, self.turn_index)
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Schema { message: String, line: Option<usize> },
    #[error("bad belief string in dialogue {dialogue_id} turn {turn_index}: {source}")]
    Parse {
        dialogue_id: String,
        turn_index: usize,
        #[source]
        source: ParseError,
    },
    #[error("bad belief string at line {line}: {source}")]
    PredictionParse {
        line: usize,
        #[source]
        source: ParseError,
    },
    #[error("duplicate prediction for {key} at line {line}")]
    DuplicateKey { key: TurnKey, line: usize },
}

impl LoadError {
    pub(crate) fn schema(message: impl Into<String>) -> Self {
        Self::Schema {
            message: message.into(),
            line: None,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

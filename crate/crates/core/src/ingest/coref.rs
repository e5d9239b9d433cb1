use super::Corpus;
use regex::{Regex, RegexSet};
use thiserror::Error;

/// Patterns for explicit cross-domain references such as
/// "same day as the restaurant booking".
pub const DEFAULT_COREF_PATTERNS: &[&str] = &[
    r"(?i)\bsame\s+(?:\w+\s+){0,3}as\b",
    r"(?i)\bthe\s+same\s+(?:day|area|price\s*range|group|people|number\s+of\s+people|time)\b",
];

/// Note attached to corpora tagged by [`heuristic_coref_tag`].
pub const COREF_TAGGING_NOTE: &str =
    "requires_coref set by regex heuristic: flagged turns are precise, unflagged turns may still need coreference";

#[derive(Debug, Error)]
pub enum CorefError {
    #[error("no coreference patterns given")]
    NoPatterns,
    #[error("bad pattern {pattern:?}: {source}")]
    BadPattern {
        pattern: String,
        #[source]
        source: regex::Error,
    },
}

/// Flags user turns whose text matches any of `patterns`. Existing flags are
/// never cleared.
pub fn heuristic_coref_tag<S: AsRef<str>>(
    corpus: &Corpus,
    patterns: &[S],
) -> Result<Corpus, CorefError> {
    if patterns.is_empty() {
        return Err(CorefError::NoPatterns);
    }
    for p in patterns {
        Regex::new(p.as_ref()).map_err(|source| CorefError::BadPattern {
            pattern: p.as_ref().to_string(),
            source,
        })?;
    }
    let set = RegexSet::new(patterns.iter().map(AsRef::as_ref)).map_err(|source| {
        CorefError::BadPattern {
            pattern: patterns
                .iter()
                .map(AsRef::as_ref)
                .collect::<Vec<_>>()
                .join(" | "),
            source,
        }
    })?;
    let mut out = corpus.clone();
    for d in &mut out.dialogues {
        for t in d.turns.iter_mut().filter(|t| t.is_user()) {
            if !t.requires_coref && set.is_match(&t.text) {
                t.requires_coref = true;
            }
        }
    }
    if !out.notes.iter().any(|n| n == COREF_TAGGING_NOTE) {
        out.notes.push(COREF_TAGGING_NOTE.to_string());
    }
    Ok(out)
}

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

/// Minimal value canonicalisation: lowercase, trim and collapse internal
/// whitespace to single spaces. No alias table is applied.
pub fn normalize_value(raw: &str) -> String {
    raw.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Error)]
pub enum AliasError {
    #[error("alias table contains a cycle through {0:?}")]
    Cycle(String),
    #[error("alias for {0:?} normalises to an empty value")]
    Empty(String),
    #[error("cannot read alias table {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed alias table: {0}")]
    Json(#[from] serde_json::Error),
}

/// Value normaliser with an optional whole-value alias table
/// (e.g. `"centre" -> "center"`).
///
/// Alias chains are resolved at construction so that normalisation stays
/// idempotent.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Normalizer {
    aliases: BTreeMap<String, String>,
}

impl Normalizer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_aliases<I, K, V>(aliases: I) -> Result<Self, AliasError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let raw: BTreeMap<String, String> = aliases
            .into_iter()
            .map(|(k, v)| (normalize_value(k.as_ref()), normalize_value(v.as_ref())))
            .collect();
        let mut resolved = BTreeMap::new();
        for key in raw.keys() {
            let mut target = key.clone();
            let mut steps = 0;
            while let Some(next) = raw.get(&target) {
                if *next == target {
                    break;
                }
                target = next.clone();
                steps += 1;
                if steps > raw.len() {
                    return Err(AliasError::Cycle(key.clone()));
                }
            }
            if target.is_empty() {
                return Err(AliasError::Empty(key.clone()));
            }
            if target != *key {
                resolved.insert(key.clone(), target);
            }
        }
        Ok(Self { aliases: resolved })
    }

    /// Reads a JSON object of `alias -> canonical` pairs.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, AliasError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| AliasError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let map: BTreeMap<String, String> = serde_json::from_str(&text)?;
        Self::with_aliases(map)
    }

    pub fn aliases(&self) -> &BTreeMap<String, String> {
        &self.aliases
    }

    pub fn normalize(&self, raw: &str) -> String {
        let base = normalize_value(raw);
        match self.aliases.get(&base) {
            Some(target) => target.clone(),
            None => base,
        }
    }
}

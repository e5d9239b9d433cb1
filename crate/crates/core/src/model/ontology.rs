use super::normalize::{normalize_value, Normalizer};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

const DEFAULT_ONTOLOGY: &str = include_str!("../../data/ontology.json");

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("cannot read ontology {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed ontology: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid ontology: {0}")]
    Invalid(String),
}

/// Per-slot metadata.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotDescriptor {
    /// Values are named entities (names, places) expected to be copied from the dialogue.
    #[serde(default)]
    pub named_entity: bool,
    /// Values come from a closed set and need not appear verbatim in text.
    #[serde(default)]
    pub categorical: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<String>>,
}

/// Domains and slot types known to the harness.
///
/// Slot type identifiers may contain spaces (`"book people"`); flat belief
/// strings are split against this table by longest match.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ontology {
    domains: BTreeMap<String, BTreeMap<String, SlotDescriptor>>,
    normalizer: Normalizer,
    max_slot_tokens: usize,
}

impl Ontology {
    pub fn new(
        domains: BTreeMap<String, BTreeMap<String, SlotDescriptor>>,
    ) -> Result<Self, OntologyError> {
        let mut normalized: BTreeMap<String, BTreeMap<String, SlotDescriptor>> = BTreeMap::new();
        for (domain, slots) in domains {
            let domain_key = normalize_value(&domain);
            if domain_key.is_empty() || domain_key.contains(' ') {
                return Err(OntologyError::Invalid(format!(
                    "domain {domain:?} must be a single nonempty token"
                )));
            }
            let entry = normalized.entry(domain_key.clone()).or_default();
            if !entry.is_empty() {
                return Err(OntologyError::Invalid(format!("duplicate domain {domain_key:?}")));
            }
            for (slot, desc) in slots {
                let slot_key = normalize_value(&slot);
                if slot_key.is_empty() {
                    return Err(OntologyError::Invalid(format!(
                        "empty slot type in domain {domain_key:?}"
                    )));
                }
                if entry.insert(slot_key.clone(), desc).is_some() {
                    return Err(OntologyError::Invalid(format!(
                        "duplicate slot type {slot_key:?} in domain {domain_key:?}"
                    )));
                }
            }
        }
        let max_slot_tokens = normalized
            .values()
            .flat_map(|slots| slots.keys())
            .map(|s| s.split(' ').count())
            .max()
            .unwrap_or(0);
        Ok(Self {
            domains: normalized,
            normalizer: Normalizer::default(),
            max_slot_tokens,
        })
    }

    pub fn from_json_str(json: &str) -> Result<Self, OntologyError> {
        Self::new(serde_json::from_str(json)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, OntologyError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| OntologyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    /// The shipped ontology: attraction, hotel, restaurant, taxi and train
    /// plus hospital and police.
    pub fn multiwoz() -> Self {
        Self::from_json_str(DEFAULT_ONTOLOGY).expect("shipped ontology is valid")
    }

    pub fn with_normalizer(mut self, normalizer: Normalizer) -> Self {
        self.normalizer = normalizer;
        self
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    /// Replaces the named-entity flags: exactly the listed `(domain, slot_type)`
    /// pairs become named-entity slots.
    pub fn with_named_entity_slots<I, D, S>(mut self, slots: I) -> Result<Self, OntologyError>
    where
        I: IntoIterator<Item = (D, S)>,
        D: AsRef<str>,
        S: AsRef<str>,
    {
        let wanted: Vec<(String, String)> = slots
            .into_iter()
            .map(|(d, s)| (normalize_value(d.as_ref()), normalize_value(s.as_ref())))
            .collect();
        for (d, s) in &wanted {
            if self.slot(d, s).is_none() {
                return Err(OntologyError::Invalid(format!("unknown slot {d} {s}")));
            }
        }
        for (domain, slots) in &mut self.domains {
            for (slot, desc) in slots.iter_mut() {
                desc.named_entity = wanted.iter().any(|(d, s)| d == domain && s == slot);
            }
        }
        Ok(self)
    }

    pub fn has_domain(&self, domain: &str) -> bool {
        self.domains.contains_key(domain)
    }

    pub fn domains(&self) -> impl Iterator<Item = &str> {
        self.domains.keys().map(String::as_str)
    }

    pub fn slots(&self, domain: &str) -> Option<&BTreeMap<String, SlotDescriptor>> {
        self.domains.get(domain)
    }

    pub fn slot(&self, domain: &str, slot_type: &str) -> Option<&SlotDescriptor> {
        self.domains.get(domain)?.get(slot_type)
    }

    /// All `(domain, slot_type, descriptor)` entries in sorted order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str, &SlotDescriptor)> {
        self.domains.iter().flat_map(|(d, slots)| {
            slots.iter().map(move |(s, desc)| (d.as_str(), s.as_str(), desc))
        })
    }

    pub fn is_named_entity(&self, domain: &str, slot_type: &str) -> bool {
        self.slot(domain, slot_type).is_some_and(|d| d.named_entity)
    }

    pub fn is_categorical(&self, domain: &str, slot_type: &str) -> bool {
        self.slot(domain, slot_type).is_some_and(|d| d.categorical)
    }

    /// Largest number of whitespace tokens in any slot type identifier.
    pub fn max_slot_tokens(&self) -> usize {
        self.max_slot_tokens
    }

    /// True when no slot type of a domain is a token prefix of another one in
    /// the same domain. Rendering then always round-trips through parsing.
    pub fn is_prefix_free(&self) -> bool {
        self.domains.values().all(|slots| {
            slots.keys().all(|a| {
                slots
                    .keys()
                    .all(|b| a == b || !b.starts_with(&format!("{a} ")))
            })
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.domains).expect("ontology serialises")
    }
}

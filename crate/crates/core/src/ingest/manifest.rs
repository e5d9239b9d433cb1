use super::LoadError;
use crate::perturb::{EntityMap, PerturbationKind};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Describes how a perturbed corpus was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationManifest {
    pub kind: PerturbationKind,
    /// Original entity to replacement, for named-entity corpora.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity_map: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word_increase_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probability_scale: Option<f64>,
}

impl PerturbationManifest {
    pub fn new(kind: PerturbationKind) -> Self {
        Self {
            kind,
            entity_map: None,
            seed: None,
            config_hash: None,
            source_hash: None,
            word_increase_ratio: None,
            probability_scale: None,
        }
    }

    pub fn from_json_str(json: &str) -> Result<Self, LoadError> {
        serde_json::from_str(json).map_err(|e| LoadError::schema(format!("manifest: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LoadError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| LoadError::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("manifest serialises");
        out.push('\n');
        out
    }

    pub fn entity_map(&self) -> Option<EntityMap> {
        self.entity_map
            .as_ref()
            .map(|m| EntityMap::from_entries(m.clone(), self.seed.unwrap_or(0)))
    }
}

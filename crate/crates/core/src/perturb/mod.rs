//! Perturbed test-set generation, paraphrase validation and few-shot splits.
//!
//! All generators are pure functions of their input, configuration and seed.
//! Randomness per dialogue comes from a generator seeded by
//! `(seed, dialogue_id)`, so results do not depend on processing order.

mod disfluency;
mod fewshot;
mod paraphrase;
mod scramble;

pub use disfluency::{
    insert_disfluencies, strip_insertions, DisfluencyConfig, DisfluencyKind, DisfluencyOutput,
    DisfluencyProbabilities, DisfluencyStats, DistractorSource, InsertionRecord, SelfRepair,
};
pub use fewshot::{sample_fewshot, sample_fewshot_with, DomainQuota, FewShotPlan, FewShotSplits, Shortfall, FEWSHOT_DOMAINS};
pub use paraphrase::{
    replacement_rate, validate_paraphrase_pairs, InvalidPair, InvalidReason, ParaphraseReport,
};
pub use scramble::{scramble_entities, EntityMap, ScrambleOutput, ScrambleReport};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use thiserror::Error;

/// The perturbation a paired test set was built with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    NamedEntity,
    Paraphrase,
    Disfluency,
}

impl PerturbationKind {
    pub const ALL: [PerturbationKind; 3] = [Self::NamedEntity, Self::Paraphrase, Self::Disfluency];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::NamedEntity => "named_entity",
            Self::Paraphrase => "paraphrase",
            Self::Disfluency => "disfluency",
        }
    }
}

impl fmt::Display for PerturbationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PerturbationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown perturbation kind {s:?}"))
    }
}

#[derive(Debug, Error)]
pub enum PerturbError {
    #[error("no collision-free replacement for entity {entity:?} after {attempts} attempts")]
    Collision { entity: String, attempts: usize },
    #[error("word-increase ratio {achieved:.4} cannot reach target {target:.4} within {tolerance:.4}")]
    TargetUnreachable {
        target: f64,
        tolerance: f64,
        achieved: f64,
    },
    #[error("self-repair scheduled in dialogue {dialogue_id} turn {turn_index} but no alternative value exists for {slot}")]
    NoDistractor {
        dialogue_id: String,
        turn_index: usize,
        slot: String,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("not enough single-domain dialogues: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join(", "))]
    InsufficientDialogues(Vec<Shortfall>),
}

/// Generator for one dialogue, derived from the run seed and the dialogue id.
pub(crate) fn dialogue_rng(seed: u64, dialogue_id: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(dialogue_id.as_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 32];
    bytes.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(bytes)
}

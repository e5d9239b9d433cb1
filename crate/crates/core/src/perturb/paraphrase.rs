use super::PerturbationKind;
use crate::ingest::{PairedSample, TurnKey};
use crate::model::text::{text_contains_value, tokenize};
use crate::model::{Ontology, DONTCARE};
use serde::Serialize;
use std::collections::HashSet;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum InvalidReason {
    WrongKind { kind: PerturbationKind },
    GoldMismatch,
    MissingValue {
        domain: String,
        slot_type: String,
        value: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InvalidPair {
    pub key: TurnKey,
    pub reasons: Vec<InvalidReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParaphraseReport {
    pub pairs: usize,
    pub valid: usize,
    pub invalid: Vec<InvalidPair>,
    /// Mean over pairs of the share of original words missing from the paraphrase.
    pub mean_replacement_rate: Option<f64>,
}

/// Share of the original's word tokens that do not occur in the paraphrase.
pub fn replacement_rate(original: &str, paraphrase: &str) -> f64 {
    let words = |s: &str| -> Vec<String> {
        tokenize(s)
            .into_iter()
            .filter(|t| t.chars().any(char::is_alphanumeric))
            .collect()
    };
    let orig = words(original);
    if orig.is_empty() {
        return 0.0;
    }
    let para: HashSet<String> = words(paraphrase).into_iter().collect();
    orig.iter().filter(|w| !para.contains(*w)).count() as f64 / orig.len() as f64
}

/// Checks that paraphrased turns keep the gold state and still state every
/// non-categorical value the original turn stated.
pub fn validate_paraphrase_pairs(pairs: &[PairedSample], ontology: &Ontology) -> ParaphraseReport {
    let mut invalid = Vec::new();
    let mut rate_sum = 0.0;
    for pair in pairs {
        let mut reasons = Vec::new();
        if pair.kind != PerturbationKind::Paraphrase {
            reasons.push(InvalidReason::WrongKind { kind: pair.kind });
        }
        if pair.original.gold != pair.perturbed.gold {
            reasons.push(InvalidReason::GoldMismatch);
        }
        for (k, v) in pair.original.gold.iter() {
            if v == DONTCARE || ontology.is_categorical(&k.domain, &k.slot_type) {
                continue;
            }
            if text_contains_value(&pair.original.utterance, v)
                && !text_contains_value(&pair.perturbed.utterance, v)
            {
                reasons.push(InvalidReason::MissingValue {
                    domain: k.domain.clone(),
                    slot_type: k.slot_type.clone(),
                    value: v.to_string(),
                });
            }
        }
        rate_sum += replacement_rate(&pair.original.utterance, &pair.perturbed.utterance);
        if !reasons.is_empty() {
            invalid.push(InvalidPair {
                key: pair.original.key(),
                reasons,
            });
        }
    }
    ParaphraseReport {
        pairs: pairs.len(),
        valid: pairs.len() - invalid.len(),
        invalid,
        mean_replacement_rate: (!pairs.is_empty()).then(|| rate_sum / pairs.len() as f64),
    }
}

use super::{Fraction, MetricError};
use crate::ingest::{Corpus, PredictionSet};
use crate::model::text::{contains_subsequence, tokenize};
use crate::model::{Ontology, DONTCARE};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// One predicted named-entity value and whether the dialogue history contains it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NohfEvent {
    pub dialogue_id: String,
    pub turn_index: usize,
    pub domain: String,
    pub slot_type: String,
    pub value: String,
    pub grounded: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NohfCounts {
    /// Predicted entity values found in the history.
    pub grounded: u64,
    /// All predicted entity values.
    pub predicted: u64,
}

impl NohfCounts {
    pub fn fraction(&self) -> Option<Fraction> {
        Fraction::new(self.grounded, self.predicted)
    }
}

/// Every predicted named-entity triple (excluding `dontcare`) for turns of
/// `corpus`, checked by token-subsequence search against the normalised
/// history up to and including the predicted turn. Records for unknown turns
/// are skipped.
pub fn nohf_events(preds: &PredictionSet, corpus: &Corpus, ontology: &Ontology) -> Vec<NohfEvent> {
    let dialogues: HashMap<&str, _> = corpus.dialogues.iter().map(|d| (d.id.as_str(), d)).collect();
    let mut turn_tokens: HashMap<&str, Vec<Vec<String>>> = HashMap::new();
    let mut events = Vec::new();
    for (key, state) in preds.iter() {
        let Some(d) = dialogues.get(key.dialogue_id.as_str()) else {
            continue;
        };
        if !d.turn(key.turn_index).is_some_and(|t| t.is_user()) {
            continue;
        }
        let per_turn = turn_tokens
            .entry(d.id.as_str())
            .or_insert_with(|| d.turns.iter().map(|t| tokenize(&t.text)).collect());
        let history: Vec<&String> = per_turn[..=key.turn_index].iter().flatten().collect();
        for (k, v) in state.iter() {
            if !ontology.is_named_entity(&k.domain, &k.slot_type) || v == DONTCARE {
                continue;
            }
            let needle = tokenize(v);
            let needle: Vec<&String> = needle.iter().collect();
            events.push(NohfEvent {
                dialogue_id: key.dialogue_id.clone(),
                turn_index: key.turn_index,
                domain: k.domain.clone(),
                slot_type: k.slot_type.clone(),
                value: v.to_string(),
                grounded: contains_subsequence(&history, &needle),
            });
        }
    }
    events
}

/// No-hallucination frequency: grounded predicted entities over all
/// predicted entities.
pub fn nohf(
    preds: &PredictionSet,
    corpus: &Corpus,
    ontology: &Ontology,
) -> Result<NohfCounts, MetricError> {
    let events = nohf_events(preds, corpus, ontology);
    let counts = NohfCounts {
        grounded: events.iter().filter(|e| e.grounded).count() as u64,
        predicted: events.len() as u64,
    };
    if counts.predicted == 0 {
        return Err(MetricError::Undefined { metric: "NoHF" });
    }
    Ok(counts)
}

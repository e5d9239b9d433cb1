use super::{Corpus, TurnKey};
use crate::model::{BeliefState, Dialogue, Ontology, Turn};
use crate::perturb::{EntityMap, PerturbationKind};
use std::collections::BTreeMap;
use thiserror::Error;

/// One side of a pair: a user turn with its dialogue history and gold state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSide {
    pub dialogue_id: String,
    pub turn_index: usize,
    /// Text of all turns up to and including this one.
    pub history: String,
    /// Text of this user turn alone.
    pub utterance: String,
    pub gold: BeliefState,
}

impl SampleSide {
    fn new(d: &Dialogue, t: &Turn) -> Self {
        Self {
            dialogue_id: d.id.clone(),
            turn_index: t.turn_index,
            history: d.history_text(t.turn_index),
            utterance: t.text.clone(),
            gold: t.gold().clone(),
        }
    }

    pub fn key(&self) -> TurnKey {
        TurnKey::new(self.dialogue_id.clone(), self.turn_index)
    }
}

/// An original sample and its perturbed counterpart.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairedSample {
    pub original: SampleSide,
    pub perturbed: SampleSide,
    pub kind: PerturbationKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldMismatch {
    pub key: TurnKey,
    pub expected: Vec<String>,
    pub found: Vec<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlignError {
    #[error("unaligned turns: {} missing from perturbed corpus (first {}), {} extra", missing.len(), missing.first().map(ToString::to_string).unwrap_or_default(), extra.len())]
    Unmatched {
        missing: Vec<TurnKey>,
        extra: Vec<TurnKey>,
    },
    #[error("{} pairs with inconsistent gold states (first {})", .0.len(), .0[0].key)]
    GoldMismatch(Vec<GoldMismatch>),
}

/// Pairing result that reports problems instead of failing.
///
/// `2 * pairs.len() + missing.len() + extra.len()` equals the number of user
/// turns across both corpora.
#[derive(Debug, Clone, Default)]
pub struct Alignment {
    pub pairs: Vec<PairedSample>,
    /// User turns of the original corpus without a perturbed counterpart.
    pub missing: Vec<TurnKey>,
    /// User turns of the perturbed corpus without an original counterpart.
    pub extra: Vec<TurnKey>,
    /// Pairs (also present in `pairs`) that violate the gold invariant.
    pub gold_mismatches: Vec<GoldMismatch>,
}

/// Gold state the perturbed side must carry for a given kind.
///
/// Paraphrases and disfluencies keep the gold state; named-entity
/// perturbation rewrites named-entity slot values through the entity map.
fn expected_gold(
    gold: &BeliefState,
    kind: PerturbationKind,
    entity_map: Option<&EntityMap>,
    ontology: &Ontology,
) -> Option<BeliefState> {
    match (kind, entity_map) {
        (PerturbationKind::NamedEntity, Some(map)) => Some(map.apply_to_state(gold, ontology)),
        (PerturbationKind::NamedEntity, None) => None,
        _ => Some(gold.clone()),
    }
}

fn golds_consistent(
    original: &BeliefState,
    perturbed: &BeliefState,
    kind: PerturbationKind,
    entity_map: Option<&EntityMap>,
    ontology: &Ontology,
) -> Option<BeliefState> {
    if let Some(expected) = expected_gold(original, kind, entity_map, ontology) {
        return (expected != *perturbed).then_some(expected);
    }
    // Without a map only the slot keys and non-entity values can be checked.
    let same_keys = original.len() == perturbed.len()
        && original.iter().zip(perturbed.iter()).all(|((ka, va), (kb, vb))| {
            ka == kb && (ontology.is_named_entity(&ka.domain, &ka.slot_type) || va == vb)
        });
    (!same_keys).then(|| original.clone())
}

pub fn align_pairs_lenient(
    original: &Corpus,
    perturbed: &Corpus,
    kind: PerturbationKind,
    entity_map: Option<&EntityMap>,
    ontology: &Ontology,
) -> Alignment {
    let mut perturbed_turns: BTreeMap<TurnKey, (&Dialogue, &Turn)> = perturbed
        .user_turns()
        .map(|(d, t)| (TurnKey::new(d.id.clone(), t.turn_index), (d, t)))
        .collect();
    let mut alignment = Alignment::default();
    for (d, t) in original.user_turns() {
        let key = TurnKey::new(d.id.clone(), t.turn_index);
        let Some((pd, pt)) = perturbed_turns.remove(&key) else {
            alignment.missing.push(key);
            continue;
        };
        let pair = PairedSample {
            original: SampleSide::new(d, t),
            perturbed: SampleSide::new(pd, pt),
            kind,
        };
        if let Some(expected) =
            golds_consistent(&pair.original.gold, &pair.perturbed.gold, kind, entity_map, ontology)
        {
            alignment.gold_mismatches.push(GoldMismatch {
                key,
                expected: crate::model::render_belief_state(&expected),
                found: crate::model::render_belief_state(&pair.perturbed.gold),
            });
        }
        alignment.pairs.push(pair);
    }
    alignment.extra = perturbed_turns.into_keys().collect();
    alignment
}

/// Pairs every user turn of `original` with the same `(dialogue_id,
/// turn_index)` in `perturbed`, failing on unmatched turns or on golds that
/// violate the invariant for `kind`.
pub fn align_pairs(
    original: &Corpus,
    perturbed: &Corpus,
    kind: PerturbationKind,
    entity_map: Option<&EntityMap>,
    ontology: &Ontology,
) -> Result<Vec<PairedSample>, AlignError> {
    let a = align_pairs_lenient(original, perturbed, kind, entity_map, ontology);
    if !a.missing.is_empty() || !a.extra.is_empty() {
        return Err(AlignError::Unmatched {
            missing: a.missing,
            extra: a.extra,
        });
    }
    if !a.gold_mismatches.is_empty() {
        return Err(AlignError::GoldMismatch(a.gold_mismatches));
    }
    Ok(a.pairs)
}

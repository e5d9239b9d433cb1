use super::{Fraction, MetricError};
use crate::ingest::{Corpus, PredictionSet, TurnKey};
use crate::model::{BeliefState, Dialogue, Turn};

/// Exact-match joint goal accuracy for one turn.
pub fn jga_turn(pred: &BeliefState, gold: &BeliefState) -> bool {
    pred == gold
}

/// Predicate selecting the user turns to score.
pub type TurnFilter<'a> = &'a dyn Fn(&Dialogue, &Turn) -> bool;

/// Verdict for one user turn.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TurnVerdict {
    pub dialogue_id: String,
    pub turn_index: usize,
    pub correct: bool,
    /// No prediction record exists; such turns count as incorrect.
    pub missing_prediction: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JgaOutcome {
    pub fraction: Fraction,
    pub verdicts: Vec<TurnVerdict>,
    /// Prediction records that do not name a user turn of the corpus.
    pub stray_records: Vec<TurnKey>,
}

/// Verdicts for every user turn accepted by `filter`, in corpus order.
pub fn turn_verdicts(
    preds: &PredictionSet,
    corpus: &Corpus,
    filter: Option<TurnFilter<'_>>,
) -> Vec<TurnVerdict> {
    corpus
        .user_turns()
        .filter(|(d, t)| filter.is_none_or(|f| f(d, t)))
        .map(|(d, t)| {
            let pred = preds.get(&d.id, t.turn_index);
            TurnVerdict {
                dialogue_id: d.id.clone(),
                turn_index: t.turn_index,
                correct: pred.is_some_and(|p| jga_turn(p, t.gold())),
                missing_prediction: pred.is_none(),
            }
        })
        .collect()
}

/// Share of filtered user turns whose predicted state equals the gold state.
pub fn jga_corpus(
    preds: &PredictionSet,
    corpus: &Corpus,
    filter: Option<TurnFilter<'_>>,
) -> Result<JgaOutcome, MetricError> {
    let verdicts = turn_verdicts(preds, corpus, filter);
    let correct = verdicts.iter().filter(|v| v.correct).count() as u64;
    let fraction =
        Fraction::new(correct, verdicts.len() as u64).ok_or(MetricError::EmptyDenominator)?;
    Ok(JgaOutcome {
        fraction,
        verdicts,
        stray_records: preds.stray_keys(corpus),
    })
}

/// Dialogue-level accuracy: a dialogue counts as correct when all of its
/// verdicts are correct.
pub fn dialogue_fraction(verdicts: &[TurnVerdict]) -> Option<Fraction> {
    let mut per_dialogue: Vec<(&str, bool)> = Vec::new();
    for v in verdicts {
        match per_dialogue.last_mut() {
            Some((id, ok)) if *id == v.dialogue_id => *ok &= v.correct,
            _ => per_dialogue.push((&v.dialogue_id, v.correct)),
        }
    }
    let correct = per_dialogue.iter().filter(|(_, ok)| *ok).count() as u64;
    Fraction::new(correct, per_dialogue.len() as u64)
}

use super::{Fraction, MetricError};
use crate::ingest::{PairedSample, PredictionSet, SampleSide};
use serde::{Deserialize, Serialize};

/// JGA outcomes for the two sides of a pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairVerdict {
    pub dialogue_id: String,
    pub turn_index: usize,
    pub original: bool,
    pub perturbed: bool,
}

/// Counts behind conditional JGA.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CjgaCounts {
    /// Pairs where both sides are correct.
    pub both_correct: u64,
    /// Pairs where at least one side is correct.
    pub at_least_one: u64,
    pub pairs: u64,
}

impl CjgaCounts {
    pub fn from_outcomes(outcomes: impl IntoIterator<Item = (bool, bool)>) -> Self {
        outcomes
            .into_iter()
            .fold(Self::default(), |mut acc, (orig, pert)| {
                acc.pairs += 1;
                acc.both_correct += u64::from(orig && pert);
                acc.at_least_one += u64::from(orig || pert);
                acc
            })
    }

    /// Combines counts from disjoint sets of pairs.
    pub fn merge(self, other: Self) -> Self {
        Self {
            both_correct: self.both_correct + other.both_correct,
            at_least_one: self.at_least_one + other.at_least_one,
            pairs: self.pairs + other.pairs,
        }
    }

    /// `both_correct / at_least_one`, `None` when no pair has a correct side.
    pub fn fraction(&self) -> Option<Fraction> {
        Fraction::new(self.both_correct, self.at_least_one)
    }
}

fn side_correct(preds: &PredictionSet, side: &SampleSide) -> bool {
    preds
        .get(&side.dialogue_id, side.turn_index)
        .is_some_and(|p| *p == side.gold)
}

pub fn pair_verdicts(
    pairs: &[PairedSample],
    preds_orig: &PredictionSet,
    preds_pert: &PredictionSet,
) -> Vec<PairVerdict> {
    pairs
        .iter()
        .map(|p| PairVerdict {
            dialogue_id: p.original.dialogue_id.clone(),
            turn_index: p.original.turn_index,
            original: side_correct(preds_orig, &p.original),
            perturbed: side_correct(preds_pert, &p.perturbed),
        })
        .collect()
}

/// Probability that both sides of a pair are correct given that at least one
/// is. Missing prediction records count as incorrect.
///
/// Returns [`MetricError::Undefined`] when no pair has a correct side.
pub fn conditional_jga(
    pairs: &[PairedSample],
    preds_orig: &PredictionSet,
    preds_pert: &PredictionSet,
) -> Result<CjgaCounts, MetricError> {
    let counts = CjgaCounts::from_outcomes(
        pair_verdicts(pairs, preds_orig, preds_pert)
            .into_iter()
            .map(|v| (v.original, v.perturbed)),
    );
    if counts.at_least_one == 0 {
        return Err(MetricError::Undefined { metric: "cJGA" });
    }
    Ok(counts)
}

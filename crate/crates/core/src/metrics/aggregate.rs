//! Median and population standard deviation across seeded runs.

use super::Score;
use crate::scalar::{from_count, Scalar};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary<T> {
    pub median: T,
    /// Population standard deviation (divides by the number of runs).
    pub std: T,
    pub runs: usize,
}

/// Median; the mean of the two middle values for an even count.
pub fn median<T: Scalar>(values: &[T]) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let mid = sorted.len() / 2;
    Some(if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / (T::one() + T::one())
    })
}

/// Population standard deviation, accumulated with Welford's update.
pub fn population_std<T: Scalar>(values: &[T]) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    let mut mean = T::zero();
    let mut m2 = T::zero();
    for (i, &x) in values.iter().enumerate() {
        let n = from_count::<T>(i as u64 + 1);
        let delta = x - mean;
        mean = mean + delta / n;
        m2 = m2 + delta * (x - mean);
    }
    Some((m2 / from_count::<T>(values.len() as u64)).max(T::zero()).sqrt())
}

pub fn summarize<T: Scalar>(values: &[T]) -> Option<Summary<T>> {
    Some(Summary {
        median: median(values)?,
        std: population_std(values)?,
        runs: values.len(),
    })
}

/// Aggregate of one metric over runs. Runs where the metric is undefined are
/// left out and counted in `excluded`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Aggregate<T> {
    NotEvaluated,
    Undefined {
        excluded: usize,
    },
    Defined {
        median: T,
        std: T,
        runs: usize,
        excluded: usize,
    },
}

impl<T: Scalar> Aggregate<T> {
    pub fn from_scores<'a>(scores: impl IntoIterator<Item = &'a Score>) -> Self {
        let mut values = Vec::new();
        let mut excluded = 0;
        let mut evaluated = false;
        for s in scores {
            match s.fraction() {
                Some(f) => {
                    values.push(f.value::<T>());
                    evaluated = true;
                }
                None if matches!(s, Score::NotEvaluated) => {}
                None => {
                    excluded += 1;
                    evaluated = true;
                }
            }
        }
        match summarize(&values) {
            Some(s) => Self::Defined {
                median: s.median,
                std: s.std,
                runs: s.runs,
                excluded,
            },
            None if evaluated => Self::Undefined { excluded },
            None => Self::NotEvaluated,
        }
    }

    pub fn summary(&self) -> Option<Summary<T>> {
        match *self {
            Self::Defined {
                median, std, runs, ..
            } => Some(Summary { median, std, runs }),
            _ => None,
        }
    }
}

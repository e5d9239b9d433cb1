//! Joint goal accuracy and the robustness metrics built on it.

pub mod aggregate;
mod cjga;
mod jga;
mod nohf;
mod report;

pub use cjga::{conditional_jga, pair_verdicts, CjgaCounts, PairVerdict};
pub use jga::{dialogue_fraction, jga_corpus, jga_turn, turn_verdicts, JgaOutcome, TurnFilter, TurnVerdict};
pub use nohf::{nohf, nohf_events, NohfCounts, NohfEvent};
pub use report::{
    merge_reports, render_table, CjgaScore, MetricColumn, MetricReport, ReportError, RunMetrics,
    REPORT_SCHEMA_VERSION,
};

use crate::scalar::{from_count, Scalar};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("no turn passes the filter")]
    EmptyDenominator,
    #[error("{metric} is undefined: zero denominator")]
    Undefined { metric: &'static str },
}

/// Scoring unit: each user turn, or each dialogue (correct only when all of
/// its scored turns are correct).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    #[default]
    Turn,
    Dialogue,
}

impl std::str::FromStr for Unit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "turn" => Ok(Self::Turn),
            "dialogue" => Ok(Self::Dialogue),
            _ => Err(format!("unknown unit {s:?} (expected turn or dialogue)")),
        }
    }
}

/// An exact count ratio with a nonzero denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fraction {
    pub numerator: u64,
    pub denominator: u64,
}

impl Fraction {
    /// `None` when `denominator` is zero or smaller than `numerator`.
    pub fn new(numerator: u64, denominator: u64) -> Option<Self> {
        (denominator > 0 && numerator <= denominator).then_some(Self {
            numerator,
            denominator,
        })
    }

    pub fn value<T: Scalar>(&self) -> T {
        from_count::<T>(self.numerator) / from_count::<T>(self.denominator)
    }
}

/// Outcome of one metric in one run. "Not evaluated" (inputs absent) and
/// "undefined" (zero denominator) are distinct from a numeric zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Score {
    NotEvaluated,
    Undefined,
    Defined {
        value: f64,
        numerator: u64,
        denominator: u64,
    },
}

impl Score {
    pub fn from_fraction(f: Option<Fraction>) -> Self {
        match f {
            Some(f) => Self::Defined {
                value: f.value(),
                numerator: f.numerator,
                denominator: f.denominator,
            },
            None => Self::Undefined,
        }
    }

    pub fn fraction(&self) -> Option<Fraction> {
        match *self {
            Self::Defined {
                numerator,
                denominator,
                ..
            } => Fraction::new(numerator, denominator),
            _ => None,
        }
    }

    pub fn value(&self) -> Option<f64> {
        self.fraction().map(|f| f.value())
    }
}

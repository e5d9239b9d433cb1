//! Robustness evaluation harness for dialogue state tracking (DST).
//!
//! The crate is organised around four layers:
//!
//! - [`model`]: belief states, dialogues, the slot ontology and the flat
//!   `domain slot-type slot-value` string format.
//! - [`ingest`]: corpus, prediction and manifest loading, pairing of original
//!   and perturbed samples, regex coreference tagging.
//! - [`metrics`]: joint goal accuracy (JGA), conditional JGA over
//!   original/perturbed pairs, coreference JGA, no-hallucination frequency
//!   and multi-run aggregation.
//! - [`perturb`]: named-entity scrambling, disfluency insertion, paraphrase
//!   validation and few-shot splits.
//!
//! Numeric aggregation is generic over [`Scalar`]; the aliases below fix the
//! scalar for the common cases.

pub mod cli;
pub mod error;
pub mod hashing;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod perturb;
pub mod scalar;

pub use error::{Error, Result};
pub use ingest::{align_pairs, heuristic_coref_tag, Corpus, PairedSample, PredictionSet};
pub use metrics::{conditional_jga, jga_corpus, jga_turn, nohf, Fraction, MetricReport, Score};
pub use model::{
    normalize_value, parse_belief_string, render_belief_state, BeliefState, Dialogue, Normalizer,
    Ontology, SlotTriple, Speaker, Turn,
};
pub use perturb::PerturbationKind;
pub use scalar::Scalar;

/// Median / population standard deviation over `f64` run values.
pub type Summary = metrics::aggregate::Summary<f64>;
/// Single-precision variant of [`Summary`].
pub type Summary32 = metrics::aggregate::Summary<f32>;
/// Per-metric aggregate block over `f64` values.
pub type Aggregate = metrics::aggregate::Aggregate<f64>;

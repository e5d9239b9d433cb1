//! Belief states, dialogues, the slot ontology and the flat belief-string format.

mod belief;
mod dialogue;
mod normalize;
mod ontology;
pub mod text;

pub use belief::{parse_belief_string, render_belief_state, BeliefState, ParseError, SlotKey, SlotTriple};
pub use dialogue::{Dialogue, Speaker, Turn};
pub use normalize::{normalize_value, AliasError, Normalizer};
pub use ontology::{Ontology, OntologyError, SlotDescriptor};

/// Slot values that are never stored as triples.
pub const NULL_VALUES: &[&str] = &["", "none"];

/// Value meaning the user explicitly has no preference; stored like any other value.
pub const DONTCARE: &str = "dontcare";

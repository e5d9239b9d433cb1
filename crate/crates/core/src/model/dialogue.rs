use super::belief::BeliefState;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    User,
    System,
}

/// One utterance. User turns carry the cumulative gold belief state up to and
/// including the turn.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Turn {
    pub speaker: Speaker,
    pub text: String,
    /// Position of the turn in its dialogue, counting both speakers from 0.
    pub turn_index: usize,
    pub gold_state: Option<BeliefState>,
    pub requires_coref: bool,
}

impl Turn {
    pub fn is_user(&self) -> bool {
        self.speaker == Speaker::User
    }

    /// Gold state of a user turn, empty for system turns.
    pub fn gold(&self) -> &BeliefState {
        static EMPTY: std::sync::OnceLock<BeliefState> = std::sync::OnceLock::new();
        self.gold_state
            .as_ref()
            .unwrap_or_else(|| EMPTY.get_or_init(BeliefState::new))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dialogue {
    pub id: String,
    pub domains: BTreeSet<String>,
    pub turns: Vec<Turn>,
}

impl Dialogue {
    pub fn user_turns(&self) -> impl Iterator<Item = &Turn> {
        self.turns.iter().filter(|t| t.is_user())
    }

    pub fn turn(&self, turn_index: usize) -> Option<&Turn> {
        self.turns.get(turn_index)
    }

    /// Text of turns `0..=turn_index` joined by single spaces.
    pub fn history_text(&self, turn_index: usize) -> String {
        let end = (turn_index + 1).min(self.turns.len());
        self.turns[..end]
            .iter()
            .map(|t| t.text.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn is_single_domain(&self) -> bool {
        self.domains.len() == 1
    }
}

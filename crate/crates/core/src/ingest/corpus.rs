use super::LoadError;
use crate::model::{render_belief_state, BeliefState, Dialogue, Ontology, Speaker, Turn};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashSet};
use std::path::Path;

/// A named collection of dialogues whose gold states parse against an ontology.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub name: String,
    pub dialogues: Vec<Dialogue>,
    /// Free-form provenance notes carried through the canonical writer.
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StateChangeKind {
    ValueChanged { from: String, to: String },
    SlotDropped { value: String },
}

/// A non-monotone step between consecutive cumulative gold states. Recorded,
/// never rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateChange {
    pub dialogue_id: String,
    pub turn_index: usize,
    pub domain: String,
    pub slot_type: String,
    pub kind: StateChangeKind,
}

#[derive(Serialize, Deserialize)]
struct RawCorpus {
    name: String,
    dialogues: Vec<RawDialogue>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct RawDialogue {
    id: String,
    #[serde(default)]
    domains: Vec<String>,
    turns: Vec<RawTurn>,
}

#[derive(Serialize, Deserialize)]
struct RawTurn {
    speaker: Speaker,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gold_state: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    requires_coref: bool,
}

impl Corpus {
    pub fn new(name: impl Into<String>, dialogues: Vec<Dialogue>) -> Self {
        Self {
            name: name.into(),
            dialogues,
            notes: Vec::new(),
        }
    }

    pub fn from_json_str(json: &str, ontology: &Ontology) -> Result<Self, LoadError> {
        let raw: RawCorpus =
            serde_json::from_str(json).map_err(|e| LoadError::schema(e.to_string()))?;
        let mut ids = HashSet::new();
        let mut dialogues = Vec::with_capacity(raw.dialogues.len());
        for rd in raw.dialogues {
            if !ids.insert(rd.id.clone()) {
                return Err(LoadError::schema(format!("duplicate dialogue id {:?}", rd.id)));
            }
            dialogues.push(convert_dialogue(rd, ontology)?);
        }
        Ok(Self {
            name: raw.name,
            dialogues,
            notes: raw.notes,
        })
    }

    pub fn load(path: impl AsRef<Path>, ontology: &Ontology) -> Result<Self, LoadError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| LoadError::io(path, e))?;
        Self::from_json_str(&text, ontology)
    }

    /// Canonical JSON: fixed key order, two-space indent, trailing newline.
    pub fn to_json(&self) -> String {
        let raw = RawCorpus {
            name: self.name.clone(),
            dialogues: self
                .dialogues
                .iter()
                .map(|d| RawDialogue {
                    id: d.id.clone(),
                    domains: d.domains.iter().cloned().collect(),
                    turns: d
                        .turns
                        .iter()
                        .map(|t| RawTurn {
                            speaker: t.speaker,
                            text: t.text.clone(),
                            gold_state: t.gold_state.as_ref().map(render_belief_state),
                            requires_coref: t.requires_coref,
                        })
                        .collect(),
                })
                .collect(),
            notes: self.notes.clone(),
        };
        let mut out = serde_json::to_string_pretty(&raw).expect("corpus serialises");
        out.push('\n');
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LoadError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| LoadError::io(path, e))
    }

    pub fn dialogue(&self, id: &str) -> Option<&Dialogue> {
        self.dialogues.iter().find(|d| d.id == id)
    }

    /// `(dialogue, turn)` for every user turn in corpus order.
    pub fn user_turns(&self) -> impl Iterator<Item = (&Dialogue, &Turn)> {
        self.dialogues
            .iter()
            .flat_map(|d| d.user_turns().map(move |t| (d, t)))
    }

    pub fn user_turn_count(&self) -> usize {
        self.user_turns().count()
    }

    pub fn coref_turn_count(&self) -> usize {
        self.user_turns().filter(|(_, t)| t.requires_coref).count()
    }

    /// Places where a cumulative gold state changed or dropped an earlier value.
    pub fn state_changes(&self) -> Vec<StateChange> {
        let mut changes = Vec::new();
        for d in &self.dialogues {
            let mut prev: Option<&BeliefState> = None;
            for t in d.user_turns() {
                let cur = t.gold();
                if let Some(prev) = prev {
                    for (key, old) in prev.iter() {
                        let kind = match cur.get(&key.domain, &key.slot_type) {
                            Some(new) if new == old => continue,
                            Some(new) => StateChangeKind::ValueChanged {
                                from: old.to_string(),
                                to: new.to_string(),
                            },
                            None => StateChangeKind::SlotDropped {
                                value: old.to_string(),
                            },
                        };
                        changes.push(StateChange {
                            dialogue_id: d.id.clone(),
                            turn_index: t.turn_index,
                            domain: key.domain.clone(),
                            slot_type: key.slot_type.clone(),
                            kind,
                        });
                    }
                }
                prev = Some(cur);
            }
        }
        changes
    }
}

fn convert_dialogue(rd: RawDialogue, ontology: &Ontology) -> Result<Dialogue, LoadError> {
    let mut turns = Vec::with_capacity(rd.turns.len());
    for (turn_index, rt) in rd.turns.into_iter().enumerate() {
        let expected = if turn_index % 2 == 0 {
            Speaker::User
        } else {
            Speaker::System
        };
        if rt.speaker != expected {
            return Err(LoadError::schema(format!(
                "dialogue {:?} turn {turn_index}: speakers must alternate starting with the user",
                rd.id
            )));
        }
        let gold_state = match (rt.speaker, rt.gold_state) {
            (Speaker::User, Some(flats)) => Some(
                BeliefState::from_flat_strings(&flats, ontology).map_err(|source| {
                    LoadError::Parse {
                        dialogue_id: rd.id.clone(),
                        turn_index,
                        source,
                    }
                })?,
            ),
            (Speaker::User, None) => {
                return Err(LoadError::schema(format!(
                    "dialogue {:?} turn {turn_index}: user turn without gold_state",
                    rd.id
                )))
            }
            (Speaker::System, Some(_)) => {
                return Err(LoadError::schema(format!(
                    "dialogue {:?} turn {turn_index}: system turn carries gold_state",
                    rd.id
                )))
            }
            (Speaker::System, None) => None,
        };
        if rt.requires_coref && rt.speaker == Speaker::System {
            return Err(LoadError::schema(format!(
                "dialogue {:?} turn {turn_index}: requires_coref on a system turn",
                rd.id
            )));
        }
        turns.push(Turn {
            speaker: rt.speaker,
            text: rt.text,
            turn_index,
            gold_state,
            requires_coref: rt.requires_coref,
        });
    }
    Ok(Dialogue {
        id: rd.id,
        domains: rd
            .domains
            .iter()
            .map(|d| crate::model::normalize_value(d))
            .collect::<BTreeSet<_>>(),
        turns,
    })
}

use super::{Corpus, LoadError, TurnKey};
use crate::model::{render_belief_state, BeliefState, Ontology};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

#[derive(Serialize, Deserialize)]
struct RawPrediction {
    dialogue_id: String,
    turn_index: usize,
    state: Vec<String>,
}

/// Parsed model output for one run, keyed by user turn.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PredictionSet {
    pub model_name: String,
    pub seed_label: String,
    records: BTreeMap<TurnKey, BeliefState>,
}

impl PredictionSet {
    pub fn new(model_name: impl Into<String>, seed_label: impl Into<String>) -> Self {
        Self {
            model_name: model_name.into(),
            seed_label: seed_label.into(),
            records: BTreeMap::new(),
        }
    }

    /// Reads line-delimited JSON records. Blank lines are skipped; line
    /// numbers in errors are 1-based.
    pub fn from_reader(
        reader: impl BufRead,
        ontology: &Ontology,
        model_name: impl Into<String>,
        seed_label: impl Into<String>,
    ) -> Result<Self, LoadError> {
        let mut set = Self::new(model_name, seed_label);
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| LoadError::Schema {
                message: e.to_string(),
                line: Some(line_no),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawPrediction = serde_json::from_str(&line).map_err(|e| LoadError::Schema {
                message: e.to_string(),
                line: Some(line_no),
            })?;
            let state = BeliefState::from_flat_strings(&raw.state, ontology)
                .map_err(|source| LoadError::PredictionParse {
                    line: line_no,
                    source,
                })?;
            let key = TurnKey::new(raw.dialogue_id, raw.turn_index);
            if set.records.contains_key(&key) {
                return Err(LoadError::DuplicateKey { key, line: line_no });
            }
            set.records.insert(key, state);
        }
        Ok(set)
    }

    pub fn load(
        path: impl AsRef<Path>,
        ontology: &Ontology,
        model_name: impl Into<String>,
        seed_label: impl Into<String>,
    ) -> Result<Self, LoadError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| LoadError::io(path, e))?;
        Self::from_reader(std::io::BufReader::new(file), ontology, model_name, seed_label)
    }

    /// Predictions equal to the gold state of every user turn.
    pub fn from_gold(corpus: &Corpus, model_name: &str, seed_label: &str) -> Self {
        let mut set = Self::new(model_name, seed_label);
        for (d, t) in corpus.user_turns() {
            set.insert(TurnKey::new(d.id.clone(), t.turn_index), t.gold().clone());
        }
        set
    }

    /// Inserts or replaces a record.
    pub fn insert(&mut self, key: TurnKey, state: BeliefState) -> Option<BeliefState> {
        self.records.insert(key, state)
    }

    pub fn get(&self, dialogue_id: &str, turn_index: usize) -> Option<&BeliefState> {
        self.records.get(&TurnKey::new(dialogue_id, turn_index))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TurnKey, &BeliefState)> {
        self.records.iter()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records whose key is not a user turn of `corpus`.
    pub fn stray_keys(&self, corpus: &Corpus) -> Vec<TurnKey> {
        self.records
            .keys()
            .filter(|k| {
                !corpus
                    .dialogue(&k.dialogue_id)
                    .and_then(|d| d.turn(k.turn_index))
                    .is_some_and(|t| t.is_user())
            })
            .cloned()
            .collect()
    }

    /// Line-delimited JSON in key order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (k, state) in &self.records {
            let raw = RawPrediction {
                dialogue_id: k.dialogue_id.clone(),
                turn_index: k.turn_index,
                state: render_belief_state(state),
            };
            out.push_str(&serde_json::to_string(&raw).expect("prediction serialises"));
            out.push('\n');
        }
        out
    }
}

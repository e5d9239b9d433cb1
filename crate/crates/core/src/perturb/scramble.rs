use super::PerturbError;
use crate::ingest::Corpus;
use crate::model::text::{find_spans, match_at, tokenize};
use crate::model::{BeliefState, Ontology, DONTCARE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

const MAX_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapScope {
    #[default]
    Global,
}

/// Corpus-wide mapping from original entity strings to replacements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMap {
    pub seed: u64,
    #[serde(default)]
    pub scope: MapScope,
    pub entries: BTreeMap<String, String>,
}

impl EntityMap {
    pub fn from_entries(entries: BTreeMap<String, String>, seed: u64) -> Self {
        Self {
            seed,
            scope: MapScope::Global,
            entries,
        }
    }

    pub fn get(&self, entity: &str) -> Option<&str> {
        self.entries.get(entity).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_injective(&self) -> bool {
        let targets: HashSet<&String> = self.entries.values().collect();
        targets.len() == self.entries.len()
    }

    /// Swaps keys and values. Only meaningful for injective maps.
    pub fn inverse(&self) -> Self {
        Self {
            seed: self.seed,
            scope: self.scope,
            entries: self
                .entries
                .iter()
                .map(|(k, v)| (v.clone(), k.clone()))
                .collect(),
        }
    }

    /// Rewrites named-entity slot values that have an entry.
    pub fn apply_to_state(&self, state: &BeliefState, ontology: &Ontology) -> BeliefState {
        state.map_values(|k, v| {
            if ontology.is_named_entity(&k.domain, &k.slot_type) {
                self.get(v).unwrap_or(v).to_string()
            } else {
                v.to_string()
            }
        })
    }

    /// Replaces whole-token, case-insensitive occurrences of every entity in
    /// `text`, longest entity first. The letter case of each replaced
    /// character follows the character it replaces.
    pub fn apply_to_text(&self, text: &str) -> (String, BTreeMap<String, usize>) {
        Replacer::new(self).replace(text)
    }

    /// Applies the map to every turn text and every gold state.
    pub fn apply(&self, corpus: &Corpus, ontology: &Ontology) -> Corpus {
        self.apply_counting(corpus, ontology).0
    }

    fn apply_counting(
        &self,
        corpus: &Corpus,
        ontology: &Ontology,
    ) -> (Corpus, BTreeMap<String, usize>) {
        let replacer = Replacer::new(self);
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        let mut out = corpus.clone();
        for d in &mut out.dialogues {
            for t in &mut d.turns {
                let (text, c) = replacer.replace(&t.text);
                for (k, n) in c {
                    *counts.entry(k).or_default() += n;
                }
                t.text = text;
                if let Some(g) = &t.gold_state {
                    t.gold_state = Some(self.apply_to_state(g, ontology));
                }
            }
        }
        (out, counts)
    }
}

/// Lowercased entity, its replacement, and the original entity string.
type Pattern<'a> = (Vec<char>, Vec<char>, &'a str);

struct Replacer<'a> {
    by_first: HashMap<char, Vec<Pattern<'a>>>,
}

impl<'a> Replacer<'a> {
    fn new(map: &'a EntityMap) -> Self {
        let mut by_first: HashMap<char, Vec<Pattern<'a>>> = HashMap::new();
        for (k, v) in &map.entries {
            let key: Vec<char> = k.chars().collect();
            if let Some(&first) = key.first() {
                by_first
                    .entry(first)
                    .or_default()
                    .push((key, v.chars().collect(), k.as_str()));
            }
        }
        for candidates in by_first.values_mut() {
            candidates.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        }
        Self { by_first }
    }

    fn replace(&self, text: &str) -> (String, BTreeMap<String, usize>) {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut out = String::with_capacity(text.len());
        let mut counts = BTreeMap::new();
        let mut i = 0;
        'scan: while i < chars.len() {
            let c = chars[i].1;
            let lc = c.to_lowercase().next().unwrap_or(c);
            if let Some(candidates) = self.by_first.get(&lc) {
                for (key, repl, name) in candidates {
                    if let Some(end) = match_at(&chars, i, key) {
                        for (&(_, orig), &r) in chars[i..end].iter().zip(repl) {
                            if orig.is_uppercase() {
                                out.extend(r.to_uppercase());
                            } else if !orig.is_alphabetic() && !r.is_alphabetic() {
                                out.push(orig);
                            } else {
                                out.push(r);
                            }
                        }
                        *counts.entry(name.to_string()).or_default() += 1;
                        i = end;
                        continue 'scan;
                    }
                }
            }
            out.push(c);
            i += 1;
        }
        (out, counts)
    }
}

/// Diagnostics from a scrambling run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ScrambleReport {
    /// Text occurrences replaced per entity.
    pub occurrences: BTreeMap<String, usize>,
    /// Entities never found in any turn text; only their gold values changed.
    pub orphans: Vec<String>,
    /// `(dialogue_id, entity)` where a gold entity is absent from that dialogue's text.
    pub unverbalized: Vec<(String, String)>,
    /// Entities without alphabetic characters, left unchanged.
    pub unscrambled: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ScrambleOutput {
    pub corpus: Corpus,
    pub entity_map: EntityMap,
    pub report: ScrambleReport,
}

fn random_letter(rng: &mut ChaCha8Rng, upper: bool) -> char {
    let base = if upper { b'A' } else { b'a' };
    (base + rng.random_range(0..26u8)) as char
}

/// Replaces every gold named-entity value with a random string of the same
/// shape: each alphabetic character becomes a uniformly drawn letter, every
/// other character is kept. One injective map covers the whole corpus.
///
/// Each alphabetic token of a replacement is new to the corpus and to the
/// other replacements, so applying [`EntityMap::inverse`] to the output
/// restores the input exactly.
pub fn scramble_entities(
    corpus: &Corpus,
    ontology: &Ontology,
    seed: u64,
) -> Result<ScrambleOutput, PerturbError> {
    let mut entities = BTreeSet::new();
    for (_, t) in corpus.user_turns() {
        for (k, v) in t.gold().iter() {
            if ontology.is_named_entity(&k.domain, &k.slot_type) && v != DONTCARE {
                entities.insert(v.to_string());
            }
        }
    }

    let mut reserved: HashSet<String> = corpus
        .dialogues
        .iter()
        .flat_map(|d| d.turns.iter())
        .flat_map(|t| tokenize(&t.text))
        .collect();
    reserved.extend(entities.iter().flat_map(|e| tokenize(e)));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = BTreeMap::new();
    let mut report = ScrambleReport::default();
    for entity in &entities {
        if !entity.chars().any(char::is_alphabetic) {
            report.unscrambled.push(entity.clone());
            continue;
        }
        let mut accepted = None;
        for _ in 0..MAX_ATTEMPTS {
            let candidate: String = entity
                .chars()
                .map(|c| {
                    if c.is_alphabetic() {
                        random_letter(&mut rng, c.is_uppercase())
                    } else {
                        c
                    }
                })
                .collect();
            let fresh = tokenize(&candidate)
                .into_iter()
                .filter(|tok| tok.chars().any(char::is_alphabetic))
                .all(|tok| !reserved.contains(&tok));
            if fresh {
                accepted = Some(candidate);
                break;
            }
        }
        let Some(replacement) = accepted else {
            return Err(PerturbError::Collision {
                entity: entity.clone(),
                attempts: MAX_ATTEMPTS,
            });
        };
        reserved.extend(tokenize(&replacement));
        entries.insert(entity.clone(), replacement);
    }
    let entity_map = EntityMap::from_entries(entries, seed);

    for d in &corpus.dialogues {
        let mut seen = BTreeSet::new();
        for t in d.user_turns() {
            for (k, v) in t.gold().iter() {
                if ontology.is_named_entity(&k.domain, &k.slot_type)
                    && v != DONTCARE
                    && seen.insert(v.to_string())
                    && !d.turns.iter().any(|turn| !find_spans(&turn.text, v).is_empty())
                {
                    report.unverbalized.push((d.id.clone(), v.to_string()));
                }
            }
        }
    }

    let (scrambled, counts) = entity_map.apply_counting(corpus, ontology);
    report.orphans = entity_map
        .entries
        .keys()
        .filter(|e| !counts.contains_key(*e))
        .cloned()
        .collect();
    report.occurrences = counts;
    Ok(ScrambleOutput {
        corpus: scrambled,
        entity_map,
        report,
    })
}

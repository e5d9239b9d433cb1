use super::{dialogue_rng, PerturbError};
use crate::ingest::Corpus;
use crate::model::text::{find_spans, text_contains_value, word_count};
use crate::model::{BeliefState, Ontology, SlotKey, DONTCARE};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;

const DEFAULT_CONFIG: &str = include_str!("../../data/disfluency_defaults.json");
const MAX_BISECTIONS: usize = 60;

/// Disfluency types, in the order they are placed when several land on the
/// same position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisfluencyKind {
    Restart,
    Filler,
    Repetition,
    SelfRepair,
}

/// Insertion probabilities. `filler` and `repetition` apply per word,
/// `restart` and `self_repair` per user turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisfluencyProbabilities {
    pub filler: f64,
    pub repetition: f64,
    pub restart: f64,
    pub self_repair: f64,
}

impl DisfluencyProbabilities {
    fn as_array(&self) -> [f64; 4] {
        [self.filler, self.repetition, self.restart, self.self_repair]
    }

    fn max(&self) -> f64 {
        self.as_array().into_iter().fold(0.0, f64::max)
    }

    pub fn scaled(&self, scale: f64) -> Self {
        let s = |p: f64| (p * scale).clamp(0.0, 1.0);
        Self {
            filler: s(self.filler),
            repetition: s(self.repetition),
            restart: s(self.restart),
            self_repair: s(self.self_repair),
        }
    }
}

/// Where self-repair distractor values come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistractorSource {
    /// Other gold values of the same slot found in the corpus.
    #[default]
    Corpus,
    /// The ontology's allowed values for the slot.
    Ontology,
}

fn default_tolerance() -> f64 {
    0.02
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisfluencyConfig {
    #[serde(default)]
    pub description: String,
    pub probabilities: DisfluencyProbabilities,
    pub fillers: Vec<String>,
    pub restart_phrases: Vec<String>,
    pub repair_phrases: Vec<String>,
    #[serde(default)]
    pub distractor_source: DistractorSource,
    /// Inserted words over original user-turn words.
    pub target_ratio: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Scale the probabilities until the ratio is within tolerance of the target.
    #[serde(default = "default_true")]
    pub calibrate: bool,
    #[serde(default)]
    pub seed: u64,
}

impl Default for DisfluencyConfig {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_CONFIG).expect("shipped disfluency config is valid")
    }
}

impl DisfluencyConfig {
    pub fn from_json_str(json: &str) -> Result<Self, PerturbError> {
        let cfg: Self =
            serde_json::from_str(json).map_err(|e| PerturbError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("config serialises");
        out.push('\n');
        out
    }

    pub fn validate(&self) -> Result<(), PerturbError> {
        let bad = |m: String| Err(PerturbError::InvalidConfig(m));
        for (name, p) in ["filler", "repetition", "restart", "self_repair"]
            .iter()
            .zip(self.probabilities.as_array())
        {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("probability {name} = {p} outside [0, 1]"));
            }
        }
        if self.target_ratio.is_nan() || self.target_ratio <= 0.0 {
            return bad(format!("target_ratio must be positive, got {}", self.target_ratio));
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return bad(format!("tolerance must be nonnegative, got {}", self.tolerance));
        }
        let p = &self.probabilities;
        for (name, list, prob) in [
            ("fillers", &self.fillers, p.filler),
            ("restart_phrases", &self.restart_phrases, p.restart),
            ("repair_phrases", &self.repair_phrases, p.self_repair),
        ] {
            if prob > 0.0 && list.iter().all(|s| s.trim().is_empty()) {
                return bad(format!("{name} is empty but its probability is positive"));
            }
        }
        Ok(())
    }
}

/// One inserted span, in byte offsets of the perturbed text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InsertionRecord {
    pub dialogue_id: String,
    pub turn_index: usize,
    pub span_start: usize,
    pub span_end: usize,
    pub kind: DisfluencyKind,
}

impl InsertionRecord {
    pub fn to_jsonl(records: &[Self]) -> String {
        records
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serialises") + "\n")
            .collect()
    }

    pub fn from_jsonl(text: &str) -> Result<Vec<Self>, serde_json::Error> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect()
    }
}

/// A self-repair: `distractor` stated, then corrected to the gold `value`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SelfRepair {
    pub dialogue_id: String,
    pub turn_index: usize,
    pub domain: String,
    pub slot_type: String,
    pub value: String,
    pub distractor: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisfluencyStats {
    pub original_words: usize,
    pub inserted_words: usize,
    pub word_increase_ratio: f64,
    /// Factor applied to the configured probabilities.
    pub probability_scale: f64,
    pub effective_probabilities: DisfluencyProbabilities,
    pub insertions: BTreeMap<DisfluencyKind, usize>,
    pub calibration_passes: usize,
}

#[derive(Debug, Clone)]
pub struct DisfluencyOutput {
    pub corpus: Corpus,
    pub log: Vec<InsertionRecord>,
    pub self_repairs: Vec<SelfRepair>,
    pub stats: DisfluencyStats,
}

struct Inventory {
    values: BTreeMap<SlotKey, BTreeSet<String>>,
}

impl Inventory {
    fn build(corpus: &Corpus, ontology: &Ontology, source: DistractorSource) -> Self {
        let mut values: BTreeMap<SlotKey, BTreeSet<String>> = BTreeMap::new();
        match source {
            DistractorSource::Corpus => {
                for (_, t) in corpus.user_turns() {
                    for (k, v) in t.gold().iter() {
                        if v != DONTCARE {
                            values.entry(k.clone()).or_default().insert(v.to_string());
                        }
                    }
                }
            }
            DistractorSource::Ontology => {
                for (d, s, desc) in ontology.entries() {
                    if let Some(vals) = &desc.values {
                        let key = SlotKey {
                            domain: d.to_string(),
                            slot_type: s.to_string(),
                        };
                        values.insert(
                            key,
                            vals.iter()
                                .map(|v| ontology.normalizer().normalize(v))
                                .filter(|v| !v.is_empty() && v != DONTCARE)
                                .collect(),
                        );
                    }
                }
            }
        }
        Self { values }
    }

    /// Alternatives for `value` that neither contain it nor are contained in it.
    fn distractors(&self, key: &SlotKey, value: &str) -> Vec<&str> {
        self.values
            .get(key)
            .into_iter()
            .flatten()
            .filter(|v| {
                *v != value && !text_contains_value(v, value) && !text_contains_value(value, v)
            })
            .map(String::as_str)
            .collect()
    }
}

struct Planned {
    pos: usize,
    kind: DisfluencyKind,
    text: String,
}

struct Mention<'a> {
    key: &'a SlotKey,
    value: &'a str,
    last: Range<usize>,
}

struct TurnPlan {
    insertions: Vec<Planned>,
    repair: Option<(SlotKey, String, String)>,
}

fn pick<T: AsRef<str>>(list: &[T], draw: u32) -> &str {
    list[draw as usize % list.len()].as_ref()
}

fn plan_turn(
    text: &str,
    gold: &BeliefState,
    inventory: &Inventory,
    cfg: &DisfluencyConfig,
    probs: &DisfluencyProbabilities,
    rng: &mut ChaCha8Rng,
    at: (&str, usize),
) -> Result<TurnPlan, PerturbError> {
    // The number of draws per turn is fixed so that every event sees the same
    // random numbers at any probability scale.
    let (u_repair, repair_pick, distractor_pick, repair_phrase_pick) =
        (rng.random::<f64>(), rng.random::<u32>(), rng.random::<u32>(), rng.random::<u32>());
    let (u_restart, restart_len, restart_phrase_pick) =
        (rng.random::<f64>(), rng.random::<u32>(), rng.random::<u32>());

    let word_starts: Vec<(usize, &str)> = text
        .split_whitespace()
        .map(|w| (w.as_ptr() as usize - text.as_ptr() as usize, w))
        .collect();

    let mut mentions = Vec::new();
    let mut protected = Vec::new();
    for (key, value) in gold.iter() {
        if value == DONTCARE {
            continue;
        }
        let spans = find_spans(text, value);
        if let Some(last) = spans.last().cloned() {
            mentions.push(Mention { key, value, last });
            protected.extend(spans);
        }
    }
    // A distractor already stated in the turn would follow the correction
    // elsewhere in the text, so only unmentioned alternatives qualify.
    let candidates: Vec<(&Mention, Vec<&str>)> = mentions
        .iter()
        .map(|m| {
            let mut d = inventory.distractors(m.key, m.value);
            d.retain(|v| !text_contains_value(text, v));
            (m, d)
        })
        .filter(|(_, d)| !d.is_empty())
        .collect();
    let repair_target = (!candidates.is_empty())
        .then(|| &candidates[repair_pick as usize % candidates.len()]);

    let mut plan = TurnPlan {
        insertions: Vec::new(),
        repair: None,
    };

    let any_alternative = mentions
        .iter()
        .any(|m| !inventory.distractors(m.key, m.value).is_empty());
    if u_repair < probs.self_repair && !mentions.is_empty() && (repair_target.is_some() || !any_alternative) {
        let Some((mention, distractors)) = repair_target else {
            let m = &mentions[0];
            return Err(PerturbError::NoDistractor {
                dialogue_id: at.0.to_string(),
                turn_index: at.1,
                slot: format!("{} {}", m.key.domain, m.key.slot_type),
            });
        };
        let distractor = pick(distractors, distractor_pick);
        let phrase = pick(&cfg.repair_phrases, repair_phrase_pick);
        plan.insertions.push(Planned {
            pos: mention.last.start,
            kind: DisfluencyKind::SelfRepair,
            text: format!("{distractor} {} ", phrase.trim()),
        });
        plan.repair = Some((mention.key.clone(), mention.value.to_string(), distractor.to_string()));
    }

    if u_restart < probs.restart && word_starts.len() >= 2 {
        let max_len = (word_starts.len() - 1).min(3);
        let k = 1 + restart_len as usize % max_len;
        let start = word_starts[0].0;
        let end = word_starts[k - 1].0 + word_starts[k - 1].1.len();
        let phrase = pick(&cfg.restart_phrases, restart_phrase_pick);
        plan.insertions.push(Planned {
            pos: start,
            kind: DisfluencyKind::Restart,
            text: format!("{} {} ", &text[start..end], phrase.trim()),
        });
    }

    let repair_pos = repair_target.map(|(m, _)| m.last.start);
    for &(pos, word) in &word_starts {
        let (u_filler, filler_pick, u_repeat) =
            (rng.random::<f64>(), rng.random::<u32>(), rng.random::<f64>());
        let inside_value = protected.iter().any(|s| s.start < pos && pos < s.end);
        if inside_value {
            continue;
        }
        if u_filler < probs.filler {
            plan.insertions.push(Planned {
                pos,
                kind: DisfluencyKind::Filler,
                text: format!("{} ", pick(&cfg.fillers, filler_pick).trim()),
            });
        }
        let core = word.trim_end_matches(|c: char| !c.is_alphanumeric());
        if u_repeat < probs.repetition && Some(pos) != repair_pos && !core.is_empty() {
            plan.insertions.push(Planned {
                pos,
                kind: DisfluencyKind::Repetition,
                text: format!("{core} "),
            });
        }
    }
    Ok(plan)
}

struct Generated {
    corpus: Corpus,
    log: Vec<InsertionRecord>,
    repairs: Vec<SelfRepair>,
    inserted_words: usize,
    counts: BTreeMap<DisfluencyKind, usize>,
}

fn generate(
    corpus: &Corpus,
    inventory: &Inventory,
    cfg: &DisfluencyConfig,
    probs: &DisfluencyProbabilities,
) -> Result<Generated, PerturbError> {
    let mut out = corpus.clone();
    let mut log = Vec::new();
    let mut repairs = Vec::new();
    let mut inserted_words = 0;
    let mut counts = BTreeMap::new();
    for d in &mut out.dialogues {
        let mut rng = dialogue_rng(cfg.seed, &d.id);
        for t in d.turns.iter_mut().filter(|t| t.is_user()) {
            let plan = plan_turn(
                &t.text,
                t.gold(),
                inventory,
                cfg,
                probs,
                &mut rng,
                (&d.id, t.turn_index),
            )?;
            if let Some((key, value, distractor)) = plan.repair {
                repairs.push(SelfRepair {
                    dialogue_id: d.id.clone(),
                    turn_index: t.turn_index,
                    domain: key.domain,
                    slot_type: key.slot_type,
                    value,
                    distractor,
                });
            }
            let mut insertions = plan.insertions;
            insertions.sort_by_key(|p| (p.pos, p.kind));
            let mut text = String::with_capacity(t.text.len() * 2);
            let mut cursor = 0;
            for p in insertions {
                text.push_str(&t.text[cursor..p.pos]);
                let span_start = text.len();
                text.push_str(&p.text);
                log.push(InsertionRecord {
                    dialogue_id: d.id.clone(),
                    turn_index: t.turn_index,
                    span_start,
                    span_end: text.len(),
                    kind: p.kind,
                });
                inserted_words += word_count(&p.text);
                *counts.entry(p.kind).or_default() += 1;
                cursor = p.pos;
            }
            text.push_str(&t.text[cursor..]);
            t.text = text;
        }
    }
    Ok(Generated {
        corpus: out,
        log,
        repairs,
        inserted_words,
        counts,
    })
}

/// Inserts fillers, repetitions, restarts and self-repairs into user turns.
///
/// Insertions never split a gold value mentioned in the turn. A self-repair
/// states a distractor value of the same slot and a repair phrase right
/// before the last mention of the gold value, so the value stated last is the
/// gold one. Distractors already present in the turn are not used; a turn
/// whose only alternatives are all present gets no self-repair. Gold states
/// are untouched.
///
/// With `calibrate`, the probabilities are scaled by bisection until the
/// corpus word-increase ratio is within `tolerance` of `target_ratio`.
pub fn insert_disfluencies(
    corpus: &Corpus,
    ontology: &Ontology,
    cfg: &DisfluencyConfig,
) -> Result<DisfluencyOutput, PerturbError> {
    cfg.validate()?;
    let inventory = Inventory::build(corpus, ontology, cfg.distractor_source);
    let original_words: usize = corpus.user_turns().map(|(_, t)| word_count(&t.text)).sum();
    let ratio = |g: &Generated| {
        if original_words == 0 {
            0.0
        } else {
            g.inserted_words as f64 / original_words as f64
        }
    };
    let within = |r: f64| (r - cfg.target_ratio).abs() <= cfg.tolerance;
    let run = |scale: f64| generate(corpus, &inventory, cfg, &cfg.probabilities.scaled(scale));

    let max_p = cfg.probabilities.max();
    let mut passes = 1;
    let mut scale = 1.0;
    let mut best = run(scale)?;
    if cfg.calibrate && max_p > 0.0 && !within(ratio(&best)) {
        let mut hi = 1.0 / max_p;
        let top = run(hi)?;
        passes += 1;
        if ratio(&top) < cfg.target_ratio - cfg.tolerance {
            return Err(PerturbError::TargetUnreachable {
                target: cfg.target_ratio,
                tolerance: cfg.tolerance,
                achieved: ratio(&top),
            });
        }
        let mut lo = 0.0;
        let (mut found, mut found_scale) = (top, hi);
        for _ in 0..MAX_BISECTIONS {
            if within(ratio(&found)) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let g = run(mid)?;
            passes += 1;
            if ratio(&g) < cfg.target_ratio {
                lo = mid;
            } else {
                hi = mid;
            }
            found = g;
            found_scale = mid;
        }
        if !within(ratio(&found)) {
            return Err(PerturbError::TargetUnreachable {
                target: cfg.target_ratio,
                tolerance: cfg.tolerance,
                achieved: ratio(&found),
            });
        }
        best = found;
        scale = found_scale;
    }

    let stats = DisfluencyStats {
        original_words,
        inserted_words: best.inserted_words,
        word_increase_ratio: ratio(&best),
        probability_scale: scale,
        effective_probabilities: cfg.probabilities.scaled(scale),
        insertions: best.counts,
        calibration_passes: passes,
    };
    Ok(DisfluencyOutput {
        corpus: best.corpus,
        log: best.log,
        self_repairs: best.repairs,
        stats,
    })
}

/// Removes logged insertions, recovering the text before perturbation.
pub fn strip_insertions(corpus: &Corpus, log: &[InsertionRecord]) -> Result<Corpus, PerturbError> {
    let mut by_turn: BTreeMap<(&str, usize), Vec<&InsertionRecord>> = BTreeMap::new();
    for r in log {
        by_turn
            .entry((r.dialogue_id.as_str(), r.turn_index))
            .or_default()
            .push(r);
    }
    let mut out = corpus.clone();
    for d in &mut out.dialogues {
        for t in &mut d.turns {
            let Some(records) = by_turn.remove(&(d.id.as_str(), t.turn_index)) else {
                continue;
            };
            let mut records = records;
            records.sort_by_key(|r| std::cmp::Reverse(r.span_start));
            for r in records {
                let ok = r.span_start <= r.span_end
                    && r.span_end <= t.text.len()
                    && t.text.is_char_boundary(r.span_start)
                    && t.text.is_char_boundary(r.span_end);
                if !ok {
                    return Err(PerturbError::InvalidConfig(format!(
                        "insertion {}..{} does not fit dialogue {} turn {}",
                        r.span_start, r.span_end, d.id, t.turn_index
                    )));
                }
                t.text.replace_range(r.span_start..r.span_end, "");
            }
        }
    }
    if let Some(((id, idx), _)) = by_turn.into_iter().next() {
        return Err(PerturbError::InvalidConfig(format!(
            "insertion log refers to unknown turn {id}#{idx}"
        )));
    }
    Ok(out)
}

//! Seeded synthetic corpora shared by the integration tests.
#![allow(dead_code)]

use dst_robust::ingest::TurnKey;
use dst_robust::{BeliefState, Corpus, Ontology, PredictionSet};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub const PLACES: &[&str] = &[
    "cambridge",
    "london kings cross",
    "ely",
    "stevenage",
    "norwich",
    "peterborough",
    "bishops stortford",
    "leicester",
];
pub const RESTAURANTS: &[&str] = &[
    "curry garden",
    "pizza hut city centre",
    "the gandhi",
    "golden wok",
    "la mimosa",
    "nandos",
    "the nirala",
];
pub const HOTELS: &[&str] = &[
    "acorn guest house",
    "allenbell",
    "alexander bed and breakfast",
    "gonville hotel",
    "hamilton lodge",
    "lovell lodge",
];
pub const ATTRACTIONS: &[&str] = &[
    "kings college",
    "the fez club",
    "byard art",
    "cherry hinton water play",
    "whipple museum",
    "all saints church",
];
const DAYS: &[&str] = &["monday", "tuesday", "wednesday", "thursday", "friday", "saturday"];
const AREAS: &[&str] = &["centre", "east", "north", "south", "west"];

struct Builder {
    turns: Vec<Value>,
    state: Vec<(String, String)>,
}

impl Builder {
    fn new() -> Self {
        Self { turns: Vec::new(), state: Vec::new() }
    }

    fn set(&mut self, slot: &str, value: &str) {
        match self.state.iter_mut().find(|(s, _)| s == slot) {
            Some(entry) => entry.1 = value.to_string(),
            None => self.state.push((slot.to_string(), value.to_string())),
        }
    }

    fn user(&mut self, text: String, slots: &[(&str, &str)], coref: bool) {
        for (s, v) in slots {
            self.set(s, v);
        }
        let gold: Vec<String> = self.state.iter().map(|(s, v)| format!("{s} {v}")).collect();
        let mut turn = json!({"speaker": "user", "text": text, "gold_state": gold});
        if coref {
            turn["requires_coref"] = json!(true);
        }
        self.turns.push(turn);
    }

    fn system(&mut self, text: String) {
        self.turns.push(json!({"speaker": "system", "text": text}));
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str]) -> &'a str {
    pool.choose(rng).unwrap()
}

fn two_places(rng: &mut ChaCha8Rng) -> (&'static str, &'static str) {
    let v: Vec<&&str> = PLACES.choose_multiple(rng, 2).collect();
    (v[0], v[1])
}

fn single_domain(b: &mut Builder, domain: &str, rng: &mut ChaCha8Rng) {
    let n = rng.random_range(1..=5).to_string();
    let day = pick(rng, DAYS);
    match domain {
        "train" => {
            let (dep, dest) = two_places(rng);
            b.user(
                format!("I need a train from {dep} to {dest}"),
                &[("train departure", dep), ("train destination", dest)],
                false,
            );
            b.system("What day would you like to travel?".into());
            b.user(
                format!("On {day}, for {n} people please"),
                &[("train day", day), ("train book people", &n)],
                false,
            );
        }
        "taxi" => {
            let (dep, dest) = two_places(rng);
            let time = format!("{:02}:{:02}", rng.random_range(7..23), 15 * rng.random_range(0..4));
            b.user(
                format!("I need a taxi from {dep} going to {dest}"),
                &[("taxi departure", dep), ("taxi destination", dest)],
                false,
            );
            b.system("What time do you want to leave?".into());
            b.user(format!("I want to leave at {time}"), &[("taxi leaveat", &time)], false);
        }
        "restaurant" => {
            let name = pick(rng, RESTAURANTS);
            let (area_text, area) = if rng.random_bool(0.3) {
                ("any area is fine".to_string(), "dontcare")
            } else {
                let a = pick(rng, AREAS);
                (format!("in the {a}"), a)
            };
            b.user(
                format!("I am looking for {name}, {area_text}"),
                &[("restaurant name", name), ("restaurant area", area)],
                false,
            );
            b.system(format!("{name} is a great choice. Shall I book it?"));
            b.user(
                format!("Yes, a table for {n} people on {day}"),
                &[("restaurant book people", &n), ("restaurant book day", day)],
                false,
            );
        }
        "hotel" => {
            let name = pick(rng, HOTELS);
            let stay = rng.random_range(1..=4).to_string();
            b.user(
                format!("Can you find {name} for me? I want free parking"),
                &[("hotel name", name), ("hotel parking", "free")],
                false,
            );
            b.system("Sure, how many nights?".into());
            b.user(
                format!("{stay} nights from {day} for {n} people"),
                &[("hotel book stay", &stay), ("hotel book day", day), ("hotel book people", &n)],
                false,
            );
        }
        "attraction" => {
            let name = pick(rng, ATTRACTIONS);
            let area = pick(rng, AREAS);
            b.user(format!("Where is {name}?"), &[("attraction name", name)], false);
            b.system(format!("It is in the {area}."));
            b.user(
                format!("Great, I will visit the {area} then"),
                &[("attraction area", area)],
                false,
            );
        }
        other => panic!("no template for {other}"),
    }
}

fn multi_domain(b: &mut Builder, rng: &mut ChaCha8Rng) {
    single_domain(b, "restaurant", rng);
    let day = b
        .state
        .iter()
        .find(|(s, _)| s == "restaurant book day")
        .map(|(_, v)| v.clone())
        .unwrap();
    let hotel = pick(rng, HOTELS);
    b.system("Your table is booked. Anything else?".into());
    b.user(
        format!("I also need a room at {hotel} for the same day as the restaurant booking"),
        &[("hotel name", hotel), ("hotel book day", &day)],
        true,
    );
}

/// Corpus JSON with `per_domain` single-domain dialogues for each listed
/// domain and `multi` restaurant+hotel dialogues whose last user turn needs
/// coreference.
pub fn corpus_json(seed: u64, per_domain: &[(&str, usize)], multi: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dialogues = Vec::new();
    for &(domain, count) in per_domain {
        for i in 0..count {
            let mut b = Builder::new();
            single_domain(&mut b, domain, &mut rng);
            dialogues.push(json!({"id": format!("{domain}-{i:04}"), "domains": [domain], "turns": b.turns}));
        }
    }
    for i in 0..multi {
        let mut b = Builder::new();
        multi_domain(&mut b, &mut rng);
        dialogues.push(json!({"id": format!("multi-{i:04}"), "domains": ["restaurant", "hotel"], "turns": b.turns}));
    }
    serde_json::to_string_pretty(&json!({"name": format!("fixture-{seed}"), "dialogues": dialogues})).unwrap()
}

/// 50 dialogues: 9 per domain plus 5 multi-domain ones.
pub fn fixture_json(seed: u64) -> String {
    corpus_json(
        seed,
        &[("train", 9), ("taxi", 9), ("restaurant", 9), ("hotel", 9), ("attraction", 9)],
        5,
    )
}

pub fn fixture(seed: u64) -> Corpus {
    Corpus::from_json_str(&fixture_json(seed), &Ontology::multiwoz()).unwrap()
}

/// User-turn keys of `corpus` in corpus order.
pub fn user_keys(corpus: &Corpus) -> Vec<TurnKey> {
    corpus
        .user_turns()
        .map(|(d, t)| TurnKey::new(d.id.clone(), t.turn_index))
        .collect()
}

/// A copy of the gold state with its last triple removed.
pub fn degrade(gold: &BeliefState) -> BeliefState {
    let keep = gold.len().saturating_sub(1);
    gold.triples().take(keep).collect()
}

/// Gold-copying predictions, except that turns whose position in corpus
/// order is listed in `wrong` get a degraded state.
pub fn predictions_with_errors(corpus: &Corpus, label: &str, wrong: &[usize]) -> PredictionSet {
    let mut preds = PredictionSet::new("fixture-model", label);
    for (i, (d, t)) in corpus.user_turns().enumerate() {
        let state = if wrong.contains(&i) { degrade(t.gold()) } else { t.gold().clone() };
        preds.insert(TurnKey::new(d.id.clone(), t.turn_index), state);
    }
    preds
}

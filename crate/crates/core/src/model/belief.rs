use super::normalize::normalize_value;
use super::ontology::Ontology;
use super::NULL_VALUES;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty belief string")]
    Empty,
    #[error("unknown domain {domain:?} in {input:?}")]
    UnknownDomain { domain: String, input: String },
    #[error("no slot type of domain {domain:?} matches {input:?}")]
    UnknownSlotType { domain: String, input: String },
    #[error("no slot value in {input:?}")]
    EmptyValue { input: String },
    /// The value is a null marker (`none`); such slots are dropped from states.
    #[error("null slot value in {input:?}")]
    NullValue { input: String },
}

/// `(domain, slot_type)` key of a belief state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SlotKey {
    pub domain: String,
    pub slot_type: String,
}

/// One `(domain, slot_type, slot_value)` fact, validated against an ontology.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SlotTriple {
    domain: String,
    slot_type: String,
    slot_value: String,
}

impl SlotTriple {
    /// Builds a triple, normalising all three parts. The value goes through the
    /// ontology's normaliser (alias table included).
    pub fn new(
        domain: &str,
        slot_type: &str,
        slot_value: &str,
        ontology: &Ontology,
    ) -> Result<Self, ParseError> {
        let input = format!("{domain} {slot_type} {slot_value}");
        let domain = normalize_value(domain);
        let slot_type = normalize_value(slot_type);
        if !ontology.has_domain(&domain) {
            return Err(ParseError::UnknownDomain { domain, input });
        }
        if ontology.slot(&domain, &slot_type).is_none() {
            return Err(ParseError::UnknownSlotType { domain, input });
        }
        let slot_value = ontology.normalizer().normalize(slot_value);
        if slot_value.is_empty() {
            return Err(ParseError::EmptyValue { input });
        }
        if NULL_VALUES.contains(&slot_value.as_str()) {
            return Err(ParseError::NullValue { input });
        }
        Ok(Self {
            domain,
            slot_type,
            slot_value,
        })
    }

    pub fn domain(&self) -> &str {
        &self.domain
    }

    pub fn slot_type(&self) -> &str {
        &self.slot_type
    }

    pub fn slot_value(&self) -> &str {
        &self.slot_value
    }

    pub fn key(&self) -> SlotKey {
        SlotKey {
            domain: self.domain.clone(),
            slot_type: self.slot_type.clone(),
        }
    }
}

impl fmt::Display for SlotTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.domain, self.slot_type, self.slot_value)
    }
}

/// Parses one flat `domain slot-type slot-value` string.
///
/// The first token is the domain. The slot type is the longest run of the
/// following tokens that names a slot of that domain; everything after it is
/// the value.
pub fn parse_belief_string(flat: &str, ontology: &Ontology) -> Result<SlotTriple, ParseError> {
    let tokens: Vec<String> = flat.split_whitespace().map(str::to_lowercase).collect();
    let Some(domain) = tokens.first() else {
        return Err(ParseError::Empty);
    };
    let Some(slots) = ontology.slots(domain) else {
        return Err(ParseError::UnknownDomain {
            domain: domain.clone(),
            input: flat.to_string(),
        });
    };
    let rest = &tokens[1..];
    let longest = ontology.max_slot_tokens().min(rest.len());
    for len in (1..=longest).rev() {
        let slot_type = rest[..len].join(" ");
        if !slots.contains_key(&slot_type) {
            continue;
        }
        if len == rest.len() {
            return Err(ParseError::EmptyValue {
                input: flat.to_string(),
            });
        }
        return SlotTriple::new(domain, &slot_type, &rest[len..].join(" "), ontology).map_err(
            |e| match e {
                ParseError::NullValue { .. } => ParseError::NullValue {
                    input: flat.to_string(),
                },
                other => other,
            },
        );
    }
    Err(ParseError::UnknownSlotType {
        domain: domain.clone(),
        input: flat.to_string(),
    })
}

/// A set of slot triples with at most one value per `(domain, slot_type)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct BeliefState {
    slots: BTreeMap<SlotKey, String>,
}

impl BeliefState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a triple; an existing value for the same key is replaced and returned.
    pub fn insert(&mut self, triple: SlotTriple) -> Option<String> {
        let SlotTriple {
            domain,
            slot_type,
            slot_value,
        } = triple;
        self.slots.insert(SlotKey { domain, slot_type }, slot_value)
    }

    /// Parses flat strings into a state. Null values are dropped and, for
    /// repeated keys, the last occurrence wins.
    pub fn from_flat_strings<I, S>(flats: I, ontology: &Ontology) -> Result<Self, ParseError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut state = Self::new();
        for flat in flats {
            match parse_belief_string(flat.as_ref(), ontology) {
                Ok(triple) => {
                    state.insert(triple);
                }
                Err(ParseError::NullValue { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(state)
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn get(&self, domain: &str, slot_type: &str) -> Option<&str> {
        let key = SlotKey {
            domain: domain.to_string(),
            slot_type: slot_type.to_string(),
        };
        self.slots.get(&key).map(String::as_str)
    }

    /// `(key, value)` pairs sorted by domain then slot type.
    pub fn iter(&self) -> impl Iterator<Item = (&SlotKey, &str)> {
        self.slots.iter().map(|(k, v)| (k, v.as_str()))
    }

    pub fn triples(&self) -> impl Iterator<Item = SlotTriple> + '_ {
        self.slots.iter().map(|(k, v)| SlotTriple {
            domain: k.domain.clone(),
            slot_type: k.slot_type.clone(),
            slot_value: v.clone(),
        })
    }

    /// Rewrites values in place; `f` receives the key and the current value.
    pub fn map_values(&self, mut f: impl FnMut(&SlotKey, &str) -> String) -> Self {
        Self {
            slots: self
                .slots
                .iter()
                .map(|(k, v)| (k.clone(), f(k, v)))
                .collect(),
        }
    }
}

impl FromIterator<SlotTriple> for BeliefState {
    fn from_iter<T: IntoIterator<Item = SlotTriple>>(iter: T) -> Self {
        let mut state = Self::new();
        for t in iter {
            state.insert(t);
        }
        state
    }
}

/// One flat string per triple, sorted by `(domain, slot_type)`.
pub fn render_belief_state(state: &BeliefState) -> Vec<String> {
    state
        .iter()
        .map(|(k, v)| format!("{} {} {}", k.domain, k.slot_type, v))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn onto() -> Ontology {
        Ontology::multiwoz()
    }

    /// Every split of the tokens after the domain into (slot type, value)
    /// that names a known slot, longest slot type last.
    fn brute_force_splits(flat: &str, o: &Ontology) -> Vec<(String, String)> {
        let tokens: Vec<&str> = flat.split_whitespace().collect();
        let slots = o.slots(tokens[0]).unwrap();
        (1..tokens.len() - 1)
            .map(|k| (tokens[1..=k].join(" "), tokens[k + 1..].join(" ")))
            .filter(|(s, _)| slots.contains_key(s))
            .collect()
    }

    #[test]
    fn parses_simple_triple() {
        let t = parse_belief_string("train departure cambridge", &onto()).unwrap();
        assert_eq!(
            (t.domain(), t.slot_type(), t.slot_value()),
            ("train", "departure", "cambridge")
        );
    }

    #[test]
    fn multi_word_slot_by_longest_match() {
        let o = onto();
        let t = parse_belief_string("restaurant book people 2", &o).unwrap();
        let splits = brute_force_splits("restaurant book people 2", &o);
        let (slot, value) = splits.last().unwrap();
        assert_eq!((t.slot_type(), t.slot_value()), (slot.as_str(), value.as_str()));
        assert_eq!((t.slot_type(), t.slot_value()), ("book people", "2"));
    }

    #[test]
    fn longest_match_wins_over_shorter_prefix() {
        let o = Ontology::from_json_str(r#"{"restaurant": {"book": {}, "book people": {}}}"#)
            .unwrap();
        let t = parse_belief_string("restaurant book people 2", &o).unwrap();
        let splits = brute_force_splits("restaurant book people 2", &o);
        assert_eq!(splits.len(), 2);
        assert_eq!(t.slot_type(), splits.last().unwrap().0);
    }

    #[test]
    fn error_cases() {
        let o = onto();
        assert!(matches!(
            parse_belief_string("zeppelin departure cambridge", &o),
            Err(ParseError::UnknownDomain { .. })
        ));
        assert!(matches!(
            parse_belief_string("train colour red", &o),
            Err(ParseError::UnknownSlotType { .. })
        ));
        assert!(matches!(
            parse_belief_string("train departure", &o),
            Err(ParseError::EmptyValue { .. })
        ));
        assert_eq!(parse_belief_string("  ", &o), Err(ParseError::Empty));
    }

    #[test]
    fn null_values_are_dropped_and_dontcare_kept() {
        let o = onto();
        let s = BeliefState::from_flat_strings(
            ["hotel name none", "hotel area dontcare", "train day Monday"],
            &o,
        )
        .unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.get("hotel", "area"), Some("dontcare"));
        assert_eq!(s.get("train", "day"), Some("monday"));
    }

    #[test]
    fn duplicate_keys_keep_last() {
        let o = onto();
        let s = BeliefState::from_flat_strings(
            ["train departure london", "train departure cambridge"],
            &o,
        )
        .unwrap();
        assert_eq!(render_belief_state(&s), ["train departure cambridge"]);
    }

    #[test]
    fn render_empty_and_single() {
        assert!(render_belief_state(&BeliefState::new()).is_empty());
        let o = onto();
        let s = BeliefState::from_flat_strings(["train departure cambridge"], &o).unwrap();
        assert_eq!(render_belief_state(&s), ["train departure cambridge"]);
    }

    #[test]
    fn equality_ignores_order_and_renormalisation() {
        let o = onto();
        let a = BeliefState::from_flat_strings(["train day monday", "hotel area  East "], &o)
            .unwrap();
        let b = BeliefState::from_flat_strings(["HOTEL area east", "train day monday"], &o)
            .unwrap();
        assert_eq!(a, b);
    }

    fn arb_state() -> impl Strategy<Value = BeliefState> {
        let o = onto();
        let keys: Vec<(String, String)> = o
            .entries()
            .map(|(d, s, _)| (d.to_string(), s.to_string()))
            .collect();
        proptest::collection::vec(
            (0..keys.len(), "[a-z0-9]{1,8}( [a-z0-9:']{1,6}){0,3}"),
            0..12,
        )
        .prop_map(move |items| {
            let o = Ontology::multiwoz();
            items
                .into_iter()
                .filter(|(_, v)| v != "none")
                .map(|(i, v)| SlotTriple::new(&keys[i].0, &keys[i].1, &v, &o).unwrap())
                .collect()
        })
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(state in arb_state()) {
            let o = onto();
            let back = BeliefState::from_flat_strings(render_belief_state(&state), &o).unwrap();
            prop_assert_eq!(back, state);
        }

        #[test]
        fn parsed_keys_exist_in_ontology(s in "[a-z ]{0,30}") {
            let o = onto();
            if let Ok(t) = parse_belief_string(&s, &o) {
                prop_assert!(o.slot(t.domain(), t.slot_type()).is_some());
            }
        }
    }
}

use super::{dialogue_rng, PerturbError};
use crate::ingest::Corpus;
use rand::seq::SliceRandom;
use serde::Serialize;
use std::fmt;

/// Domains sampled for the low-resource setting.
pub const FEWSHOT_DOMAINS: [&str; 5] = ["attraction", "restaurant", "hotel", "taxi", "train"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DomainQuota {
    pub domain: String,
    pub train: usize,
    pub valid: usize,
    pub test: usize,
}

/// Per-domain split sizes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FewShotPlan {
    pub quotas: Vec<DomainQuota>,
}

impl Default for FewShotPlan {
    /// 50 train / 50 valid / 200 test per domain; attraction has 80 test
    /// dialogues.
    fn default() -> Self {
        Self {
            quotas: FEWSHOT_DOMAINS
                .iter()
                .map(|&domain| DomainQuota {
                    domain: domain.to_string(),
                    train: 50,
                    valid: 50,
                    test: if domain == "attraction" { 80 } else { 200 },
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Shortfall {
    pub domain: String,
    pub needed: usize,
    pub available: usize,
}

impl fmt::Display for Shortfall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} needs {} single-domain dialogues, has {} (short by {})",
            self.domain,
            self.needed,
            self.available,
            self.needed - self.available
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FewShotSplits {
    pub train: Corpus,
    pub valid: Corpus,
    pub test: Corpus,
}

/// Samples the default plan; see [`sample_fewshot_with`].
pub fn sample_fewshot(corpus: &Corpus, seed: u64) -> Result<FewShotSplits, PerturbError> {
    sample_fewshot_with(corpus, &FewShotPlan::default(), seed)
}

/// Draws disjoint train/valid/test sets of single-domain dialogues per
/// domain, without replacement. Each split lists dialogues sorted by id.
pub fn sample_fewshot_with(
    corpus: &Corpus,
    plan: &FewShotPlan,
    seed: u64,
) -> Result<FewShotSplits, PerturbError> {
    let mut shortfalls = Vec::new();
    let mut picked = Vec::new();
    for q in &plan.quotas {
        let mut pool: Vec<_> = corpus
            .dialogues
            .iter()
            .filter(|d| d.is_single_domain() && d.domains.contains(&q.domain))
            .collect();
        let needed = q.train + q.valid + q.test;
        if pool.len() < needed {
            shortfalls.push(Shortfall {
                domain: q.domain.clone(),
                needed,
                available: pool.len(),
            });
            continue;
        }
        pool.sort_by(|a, b| a.id.cmp(&b.id));
        pool.shuffle(&mut dialogue_rng(seed, &q.domain));
        picked.push((q, pool));
    }
    if !shortfalls.is_empty() {
        return Err(PerturbError::InsufficientDialogues(shortfalls));
    }
    let mut train = Vec::new();
    let mut valid = Vec::new();
    let mut test = Vec::new();
    for (q, pool) in picked {
        let mut it = pool.into_iter().cloned();
        train.extend(it.by_ref().take(q.train));
        valid.extend(it.by_ref().take(q.valid));
        test.extend(it.take(q.test));
    }
    let split = |mut dialogues: Vec<crate::model::Dialogue>, name: &str| {
        dialogues.sort_by(|a, b| a.id.cmp(&b.id));
        let mut c = Corpus::new(format!("{}-fewshot-{name}", corpus.name), dialogues);
        c.notes = corpus.notes.clone();
        c
    };
    Ok(FewShotSplits {
        train: split(train, "train"),
        valid: split(valid, "valid"),
        test: split(test, "test"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Dialogue, Speaker, Turn};

    fn dialogue(id: String, domains: &[&str]) -> Dialogue {
        Dialogue {
            id,
            domains: domains.iter().map(|d| d.to_string()).collect(),
            turns: vec![Turn {
                speaker: Speaker::User,
                text: "hi".into(),
                turn_index: 0,
                gold_state: Some(Default::default()),
                requires_coref: false,
            }],
        }
    }

    fn small_plan() -> FewShotPlan {
        FewShotPlan {
            quotas: vec![
                DomainQuota { domain: "hotel".into(), train: 2, valid: 2, test: 3 },
                DomainQuota { domain: "taxi".into(), train: 1, valid: 1, test: 1 },
            ],
        }
    }

    fn corpus(hotels: usize) -> Corpus {
        let mut ds: Vec<Dialogue> = (0..hotels).map(|i| dialogue(format!("h{i:02}"), &["hotel"])).collect();
        ds.extend((0..4).map(|i| dialogue(format!("t{i}"), &["taxi"])));
        ds.extend((0..5).map(|i| dialogue(format!("m{i}"), &["hotel", "taxi"])));
        Corpus::new("c", ds)
    }

    #[test]
    fn default_plan_sizes() {
        let plan = FewShotPlan::default();
        let tests: Vec<(&str, usize)> = plan.quotas.iter().map(|q| (q.domain.as_str(), q.test)).collect();
        assert_eq!(
            tests,
            [("attraction", 80), ("restaurant", 200), ("hotel", 200), ("taxi", 200), ("train", 200)]
        );
        assert!(plan.quotas.iter().all(|q| q.train == 50 && q.valid == 50));
    }

    #[test]
    fn splits_are_disjoint_single_domain_and_sized() {
        let s = sample_fewshot_with(&corpus(9), &small_plan(), 5).unwrap();
        assert_eq!((s.train.dialogues.len(), s.valid.dialogues.len(), s.test.dialogues.len()), (3, 3, 4));
        let mut ids: Vec<&str> = [&s.train, &s.valid, &s.test]
            .iter()
            .flat_map(|c| c.dialogues.iter().map(|d| d.id.as_str()))
            .collect();
        assert!(s.test.dialogues.iter().all(Dialogue::is_single_domain));
        ids.sort();
        let n = ids.len();
        ids.dedup();
        assert_eq!(ids.len(), n);
    }

    #[test]
    fn deterministic_per_seed() {
        let c = corpus(20);
        let a = sample_fewshot_with(&c, &small_plan(), 1).unwrap();
        assert_eq!(a, sample_fewshot_with(&c, &small_plan(), 1).unwrap());
        let others: Vec<_> = (2..6).map(|s| sample_fewshot_with(&c, &small_plan(), s).unwrap()).collect();
        assert!(others.iter().any(|o| o.train != a.train));
    }

    #[test]
    fn shortfall_names_domain() {
        let err = sample_fewshot_with(&corpus(6), &small_plan(), 0).unwrap_err();
        match err {
            PerturbError::InsufficientDialogues(s) => {
                assert_eq!(s, [Shortfall { domain: "hotel".into(), needed: 7, available: 6 }]);
            }
            other => panic!("{other:?}"),
        }
    }
}

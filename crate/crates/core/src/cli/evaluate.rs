use super::{build_ontology, file_hash, optional_file_hash, parse_ne_slot, print, write_file};
use super::{EvaluateArgs, OutputFormat};
use crate::error::{Error, Result};
use crate::hashing::hash_json;
use crate::ingest::{align_pairs, Corpus, PairedSample, PerturbationManifest, PredictionSet};
use crate::metrics::{
    dialogue_fraction, nohf, pair_verdicts, render_table, turn_verdicts, CjgaCounts, CjgaScore,
    Fraction, MetricReport, RunMetrics, Score, TurnVerdict, Unit,
};
use crate::model::Ontology;
use crate::perturb::PerturbationKind;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

/// Everything `evaluate` reads. Relative paths in a configuration file are
/// resolved against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_model_name")]
    pub model_name: String,
    pub corpus: PathBuf,
    #[serde(default)]
    pub ontology: Option<PathBuf>,
    #[serde(default)]
    pub aliases: Option<PathBuf>,
    /// `DOMAIN:SLOT` overrides of the named-entity slots.
    #[serde(default)]
    pub named_entity_slots: Vec<String>,
    #[serde(default)]
    pub unit: Unit,
    #[serde(default)]
    pub perturbed: BTreeMap<PerturbationKind, PerturbedInput>,
    pub runs: Vec<RunInput>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbedInput {
    pub corpus: PathBuf,
    #[serde(default)]
    pub manifest: Option<PathBuf>,
}

/// Prediction files of one seeded run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunInput {
    pub seed_label: String,
    pub predictions: PathBuf,
    #[serde(default)]
    pub perturbed_predictions: BTreeMap<PerturbationKind, PathBuf>,
}

fn default_model_name() -> String {
    "model".into()
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| crate::ingest::LoadError::io(path, e))?;
        let mut cfg: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus);
        self.ontology.iter_mut().for_each(fix);
        self.aliases.iter_mut().for_each(fix);
        self.output_dir.iter_mut().for_each(fix);
        for p in self.perturbed.values_mut() {
            fix(&mut p.corpus);
            p.manifest.iter_mut().for_each(fix);
        }
        for r in &mut self.runs {
            fix(&mut r.predictions);
            r.perturbed_predictions.values_mut().for_each(fix);
        }
    }

    fn input_paths(&self) -> Vec<&Path> {
        let mut paths = vec![self.corpus.as_path()];
        paths.extend(self.ontology.as_deref());
        paths.extend(self.aliases.as_deref());
        for p in self.perturbed.values() {
            paths.push(&p.corpus);
            paths.extend(p.manifest.as_deref());
        }
        for r in &self.runs {
            paths.push(&r.predictions);
            paths.extend(r.perturbed_predictions.values().map(PathBuf::as_path));
        }
        paths
    }

    /// At least one run, unique seed labels, distinct input paths, and
    /// perturbed predictions only for perturbed corpora that are given.
    pub fn validate(&self) -> Result<()> {
        if self.runs.is_empty() {
            return Err(Error::Config("at least one prediction file is required".into()));
        }
        let mut labels = BTreeSet::new();
        for r in &self.runs {
            if !labels.insert(r.seed_label.as_str()) {
                return Err(Error::Config(format!("duplicate seed label {:?}", r.seed_label)));
            }
            for kind in r.perturbed_predictions.keys() {
                if !self.perturbed.contains_key(kind) {
                    return Err(Error::Config(format!(
                        "run {:?} has {kind} predictions but no {kind} corpus",
                        r.seed_label
                    )));
                }
            }
        }
        let mut seen = BTreeSet::new();
        for p in self.input_paths() {
            if !seen.insert(p) {
                return Err(Error::Config(format!("{} is referenced twice", p.display())));
            }
        }
        for s in &self.named_entity_slots {
            parse_ne_slot(s)?;
        }
        Ok(())
    }

    /// Content hash of every input plus the scoring settings. File paths do
    /// not enter the hash.
    pub fn content_hash(&self) -> Result<String> {
        let mut perturbed = BTreeMap::new();
        for (kind, p) in &self.perturbed {
            perturbed.insert(
                kind.as_str(),
                serde_json::json!({
                    "corpus": file_hash(&p.corpus)?,
                    "manifest": optional_file_hash(p.manifest.as_deref())?,
                }),
            );
        }
        let mut runs = Vec::new();
        for r in &self.runs {
            let mut pert = BTreeMap::new();
            for (kind, p) in &r.perturbed_predictions {
                pert.insert(kind.as_str(), file_hash(p)?);
            }
            runs.push(serde_json::json!({
                "seed_label": r.seed_label,
                "predictions": file_hash(&r.predictions)?,
                "perturbed_predictions": pert,
            }));
        }
        Ok(hash_json(&serde_json::json!({
            "model_name": self.model_name,
            "corpus": file_hash(&self.corpus)?,
            "ontology": optional_file_hash(self.ontology.as_deref())?,
            "aliases": optional_file_hash(self.aliases.as_deref())?,
            "named_entity_slots": self.named_entity_slots,
            "unit": self.unit,
            "perturbed": perturbed,
            "runs": runs,
        })))
    }

    fn from_args(a: &EvaluateArgs) -> Result<Self> {
        let usage = |m: String| Error::Usage(m);
        let corpus = a.corpus.clone().ok_or_else(|| usage("--corpus is required".into()))?;
        let split_eq = |s: &str, flag: &str| -> Result<(String, PathBuf)> {
            s.split_once('=')
                .filter(|(k, p)| !k.is_empty() && !p.is_empty())
                .map(|(k, p)| (k.to_string(), PathBuf::from(p)))
                .ok_or_else(|| usage(format!("{flag} expects KEY=PATH, got {s:?}")))
        };
        let kind = |s: &str| s.parse::<PerturbationKind>().map_err(usage);

        let mut runs: Vec<RunInput> = Vec::new();
        for s in &a.pred {
            let (label, path) = split_eq(s, "--pred")?;
            runs.push(RunInput {
                seed_label: label,
                predictions: path,
                perturbed_predictions: BTreeMap::new(),
            });
        }
        let mut perturbed = BTreeMap::new();
        for s in &a.perturbed {
            let (k, path) = split_eq(s, "--perturbed")?;
            perturbed.insert(kind(&k)?, PerturbedInput { corpus: path, manifest: None });
        }
        for s in &a.manifest {
            let (k, path) = split_eq(s, "--manifest")?;
            let k = kind(&k)?;
            let entry = perturbed
                .get_mut(&k)
                .ok_or_else(|| usage(format!("--manifest {k} given without --perturbed {k}=PATH")))?;
            entry.manifest = Some(path);
        }
        for s in &a.pert_pred {
            let (key, path) = split_eq(s, "--pert-pred")?;
            let (k, label) = key
                .split_once(':')
                .ok_or_else(|| usage(format!("--pert-pred expects KIND:LABEL=PATH, got {s:?}")))?;
            let k = kind(k)?;
            let run = runs
                .iter_mut()
                .find(|r| r.seed_label == label)
                .ok_or_else(|| usage(format!("--pert-pred names run {label:?} without --pred {label}=PATH")))?;
            run.perturbed_predictions.insert(k, path);
        }
        Ok(Self {
            model_name: a.model.clone(),
            corpus,
            ontology: a.ontology.ontology.clone(),
            aliases: a.ontology.aliases.clone(),
            named_entity_slots: a.ontology.ne_slots.clone(),
            unit: a.unit.map(Unit::from).unwrap_or_default(),
            perturbed,
            runs,
            output_dir: a.out.clone(),
        })
    }
}

struct PerturbedSet {
    corpus: Corpus,
    pairs: Vec<PairedSample>,
}

fn unit_fraction(verdicts: &[TurnVerdict], unit: Unit) -> Option<Fraction> {
    match unit {
        Unit::Turn => Fraction::new(
            verdicts.iter().filter(|v| v.correct).count() as u64,
            verdicts.len() as u64,
        ),
        Unit::Dialogue => dialogue_fraction(verdicts),
    }
}

fn cjga_counts(
    pairs: &[PairedSample],
    preds_orig: &PredictionSet,
    preds_pert: &PredictionSet,
    unit: Unit,
) -> CjgaCounts {
    let verdicts = pair_verdicts(pairs, preds_orig, preds_pert);
    match unit {
        Unit::Turn => CjgaCounts::from_outcomes(verdicts.iter().map(|v| (v.original, v.perturbed))),
        Unit::Dialogue => {
            let mut per_dialogue: Vec<(&str, bool, bool)> = Vec::new();
            for v in &verdicts {
                match per_dialogue.last_mut() {
                    Some((id, o, p)) if *id == v.dialogue_id => {
                        *o &= v.original;
                        *p &= v.perturbed;
                    }
                    _ => per_dialogue.push((&v.dialogue_id, v.original, v.perturbed)),
                }
            }
            CjgaCounts::from_outcomes(per_dialogue.into_iter().map(|(_, o, p)| (o, p)))
        }
    }
}

fn nohf_score(preds: &PredictionSet, corpus: &Corpus, ontology: &Ontology) -> Score {
    match nohf(preds, corpus, ontology) {
        Ok(c) => Score::from_fraction(c.fraction()),
        Err(_) => Score::Undefined,
    }
}

/// Loads every input of `cfg` and scores each run.
///
/// JGA and NoHF on the original corpus are always computed, Coref JGA when
/// the corpus flags any turn, and each cJGA (plus NoHF on the scrambled
/// corpus) when the perturbed corpus and the run's predictions on it are
/// given. Everything else is reported as not evaluated.
pub fn evaluate(cfg: &RunConfig) -> Result<MetricReport> {
    cfg.validate()?;
    let ontology = build_ontology(
        cfg.ontology.as_deref(),
        cfg.aliases.as_deref(),
        &cfg.named_entity_slots,
    )?;
    let corpus = Corpus::load(&cfg.corpus, &ontology)?;

    let mut perturbed: BTreeMap<PerturbationKind, PerturbedSet> = BTreeMap::new();
    for (&kind, input) in &cfg.perturbed {
        let pcorpus = Corpus::load(&input.corpus, &ontology)?;
        let manifest = input
            .manifest
            .as_deref()
            .map(PerturbationManifest::load)
            .transpose()?;
        if let Some(m) = &manifest {
            if m.kind != kind {
                return Err(Error::Config(format!(
                    "manifest for {kind} corpus describes a {} perturbation",
                    m.kind
                )));
            }
        }
        let map = manifest.as_ref().and_then(PerturbationManifest::entity_map);
        let pairs = align_pairs(&corpus, &pcorpus, kind, map.as_ref(), &ontology)?;
        perturbed.insert(kind, PerturbedSet { corpus: pcorpus, pairs });
    }

    let has_coref = corpus.coref_turn_count() > 0;
    let coref_filter = |_: &crate::model::Dialogue, t: &crate::model::Turn| t.requires_coref;
    let mut runs = Vec::new();
    for input in &cfg.runs {
        let preds = PredictionSet::load(&input.predictions, &ontology, &cfg.model_name, &input.seed_label)?;
        let mut run = RunMetrics::empty(&input.seed_label);
        let verdicts = turn_verdicts(&preds, &corpus, None);
        run.jga = Score::from_fraction(unit_fraction(&verdicts, cfg.unit));
        run.missing_predictions = verdicts.iter().filter(|v| v.missing_prediction).count() as u64;
        run.stray_predictions = preds.stray_keys(&corpus).len() as u64;
        if has_coref {
            let coref = turn_verdicts(&preds, &corpus, Some(&coref_filter));
            run.coref_jga = Score::from_fraction(unit_fraction(&coref, cfg.unit));
        }
        run.nohf_orig = nohf_score(&preds, &corpus, &ontology);

        for (kind, path) in &input.perturbed_predictions {
            let set = &perturbed[kind];
            let ppreds = PredictionSet::load(path, &ontology, &cfg.model_name, &input.seed_label)?;
            let counts = cjga_counts(&set.pairs, &preds, &ppreds, cfg.unit);
            run.cjga.insert(*kind, CjgaScore::from_counts(counts));
            if *kind == PerturbationKind::NamedEntity {
                run.nohf_swap = nohf_score(&ppreds, &set.corpus, &ontology);
            }
        }
        runs.push(run);
    }
    Ok(MetricReport::new(
        cfg.model_name.clone(),
        cfg.unit,
        cfg.content_hash()?,
        runs,
    ))
}

pub(super) fn cmd_evaluate(a: EvaluateArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = match &a.config {
        Some(path) => {
            let mut cfg = RunConfig::load(path)?;
            if !a.ontology.is_default() {
                return Err(Error::Usage(
                    "ontology flags cannot be combined with --config".into(),
                ));
            }
            if let Some(out) = &a.out {
                cfg.output_dir = Some(out.clone());
            }
            if let Some(unit) = a.unit {
                cfg.unit = unit.into();
            }
            if a.model != "model" {
                cfg.model_name = a.model.clone();
            }
            cfg
        }
        None => RunConfig::from_args(&a)?,
    };
    let report = evaluate(&cfg)?;
    let json = report.to_json();
    let table = render_table(std::slice::from_ref(&report), true);
    if let Some(dir) = &cfg.output_dir {
        write_file(&dir.join("report.json"), &json)?;
        write_file(&dir.join("report.txt"), &table)?;
    }
    match a.format {
        OutputFormat::Json => print(stdout, &json),
        OutputFormat::Table => print(stdout, &table),
    }
}

use super::{file_hash, print, write_file, OutputFormat};
use super::{DisfluencyArgs, FewshotArgs, ParaphraseArgs, ReportArgs, ScrambleArgs, TagCorefArgs};
use crate::error::{Error, Result};
use crate::hashing::hash_json;
use crate::ingest::{
    align_pairs_lenient, heuristic_coref_tag, Corpus, PerturbationManifest, DEFAULT_COREF_PATTERNS,
};
use crate::metrics::{merge_reports, render_table, MetricReport};
use crate::perturb::{
    insert_disfluencies, sample_fewshot_with, scramble_entities, validate_paraphrase_pairs,
    DisfluencyConfig, FewShotPlan, InsertionRecord, PerturbationKind,
};
use std::io::Write;

fn pretty<T: serde::Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("value serialises");
    out.push('\n');
    out
}

fn jsonl<T: serde::Serialize>(items: &[T]) -> String {
    items
        .iter()
        .map(|i| serde_json::to_string(i).expect("value serialises") + "\n")
        .collect()
}

pub(super) fn cmd_scramble(a: ScrambleArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let ontology = a.ontology.build()?;
    let corpus = Corpus::load(&a.corpus, &ontology)?;
    let out = scramble_entities(&corpus, &ontology, a.seed)?;

    let mut manifest = PerturbationManifest::new(PerturbationKind::NamedEntity);
    manifest.entity_map = Some(out.entity_map.entries.clone());
    manifest.seed = Some(a.seed);
    manifest.config_hash = Some(hash_json(&serde_json::json!({
        "kind": "named_entity",
        "seed": a.seed,
        "ontology": a.ontology.hash()?,
    })));
    manifest.source_hash = Some(file_hash(&a.corpus)?);

    write_file(&a.out.join("corpus.json"), &out.corpus.to_json())?;
    write_file(&a.out.join("entity_map.json"), &pretty(&out.entity_map))?;
    write_file(&a.out.join("scramble_report.json"), &pretty(&out.report))?;
    write_file(&a.out.join("manifest.json"), &manifest.to_json())?;
    for entity in &out.report.orphans {
        let _ = writeln!(stderr, "warning: entity {entity:?} never appears in any turn text");
    }
    print(
        stdout,
        &format!(
            "scrambled {} entities ({} text occurrences) into {}\n",
            out.entity_map.len(),
            out.report.occurrences.values().sum::<usize>(),
            a.out.display()
        ),
    )
}

pub(super) fn cmd_disfluency(a: DisfluencyArgs, stdout: &mut dyn Write) -> Result<()> {
    let ontology = a.ontology.build()?;
    let mut cfg = match &a.config {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| crate::ingest::LoadError::io(p, e))?;
            DisfluencyConfig::from_json_str(&text)?
        }
        None => DisfluencyConfig::default(),
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let corpus = Corpus::load(&a.corpus, &ontology)?;
    let out = insert_disfluencies(&corpus, &ontology, &cfg)?;

    let mut manifest = PerturbationManifest::new(PerturbationKind::Disfluency);
    manifest.seed = Some(cfg.seed);
    manifest.config_hash = Some(hash_json(&serde_json::json!({
        "kind": "disfluency",
        "config": cfg,
        "ontology": a.ontology.hash()?,
    })));
    manifest.source_hash = Some(file_hash(&a.corpus)?);
    manifest.word_increase_ratio = Some(out.stats.word_increase_ratio);
    manifest.probability_scale = Some(out.stats.probability_scale);

    write_file(&a.out.join("corpus.json"), &out.corpus.to_json())?;
    write_file(&a.out.join("insertions.jsonl"), &InsertionRecord::to_jsonl(&out.log))?;
    write_file(&a.out.join("self_repairs.jsonl"), &jsonl(&out.self_repairs))?;
    write_file(&a.out.join("stats.json"), &pretty(&out.stats))?;
    write_file(&a.out.join("config.json"), &cfg.to_json())?;
    write_file(&a.out.join("manifest.json"), &manifest.to_json())?;
    print(
        stdout,
        &format!(
            "word increase ratio {:.4} (target {:.4}, probability scale {:.4}, {} insertions)\n",
            out.stats.word_increase_ratio,
            cfg.target_ratio,
            out.stats.probability_scale,
            out.log.len()
        ),
    )
}

pub(super) fn cmd_validate_paraphrases(a: ParaphraseArgs, stdout: &mut dyn Write) -> Result<()> {
    let ontology = a.ontology.build()?;
    let original = Corpus::load(&a.corpus, &ontology)?;
    let paraphrased = Corpus::load(&a.paraphrases, &ontology)?;
    let alignment = align_pairs_lenient(
        &original,
        &paraphrased,
        PerturbationKind::Paraphrase,
        None,
        &ontology,
    );
    let report = validate_paraphrase_pairs(&alignment.pairs, &ontology);
    let json = pretty(&serde_json::json!({
        "missing": alignment.missing,
        "extra": alignment.extra,
        "report": report,
    }));
    match &a.out {
        Some(path) => write_file(path, &json),
        None => print(stdout, &json),
    }
}

pub(super) fn cmd_fewshot(a: FewshotArgs, stdout: &mut dyn Write) -> Result<()> {
    let ontology = a.ontology.build()?;
    let corpus = Corpus::load(&a.corpus, &ontology)?;
    let plan = FewShotPlan::default();
    let splits = sample_fewshot_with(&corpus, &plan, a.seed)?;
    let mut summary = serde_json::Map::new();
    let mut lines = String::new();
    for (name, split) in [("train", &splits.train), ("valid", &splits.valid), ("test", &splits.test)] {
        write_file(&a.out.join(format!("{name}.json")), &split.to_json())?;
        summary.insert(
            name.into(),
            serde_json::json!({
                "dialogues": split.dialogues.len(),
                "user_turns": split.user_turn_count(),
                "coref_turns": split.coref_turn_count(),
            }),
        );
        lines.push_str(&format!(
            "{name}: {} dialogues, {} coref turns\n",
            split.dialogues.len(),
            split.coref_turn_count()
        ));
    }
    let manifest = serde_json::json!({
        "seed": a.seed,
        "source_hash": file_hash(&a.corpus)?,
        "plan": plan,
        "splits": summary,
    });
    write_file(&a.out.join("manifest.json"), &pretty(&manifest))?;
    print(stdout, &lines)
}

pub(super) fn cmd_report(a: ReportArgs, stdout: &mut dyn Write) -> Result<()> {
    let reports = a
        .reports
        .iter()
        .map(MetricReport::load)
        .collect::<Result<Vec<_>, _>>()?;
    let merged = merge_reports(reports)?;
    let json = pretty(&merged);
    if let Some(path) = &a.json {
        write_file(path, &json)?;
    }
    match a.format {
        OutputFormat::Table => print(stdout, &render_table(&merged, a.per_run)),
        OutputFormat::Json => print(stdout, &json),
    }
}

pub(super) fn cmd_tag_coref(a: TagCorefArgs, stdout: &mut dyn Write) -> Result<()> {
    let ontology = a.ontology.build()?;
    let corpus = Corpus::load(&a.corpus, &ontology)?;
    let tagged = if a.patterns.is_empty() {
        heuristic_coref_tag(&corpus, DEFAULT_COREF_PATTERNS)?
    } else {
        heuristic_coref_tag(&corpus, &a.patterns)?
    };
    if a.out == a.corpus {
        return Err(Error::Usage("--out must differ from --corpus".into()));
    }
    tagged.save(&a.out)?;
    print(
        stdout,
        &format!(
            "{} coref turns ({} before tagging)\n",
            tagged.coref_turn_count(),
            corpus.coref_turn_count()
        ),
    )
}

mod common;

use dst_robust::ingest::{PerturbationManifest, TurnKey};
use dst_robust::perturb::{strip_insertions, InsertionRecord};
use dst_robust::{BeliefState, Corpus, Ontology, PredictionSet};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::Command;
use tempfile::TempDir;

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_dst-robust"))
        .args(args)
        .output()
        .unwrap();
    Output {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert_eq!(out.code, 0, "{args:?}: {}", out.stderr);
    out.stdout
}

fn error_record(out: &Output) -> Value {
    serde_json::from_str(out.stderr.lines().last().unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

/// Table rows split into trimmed cells; row 0 is the header.
fn cells(table: &str) -> Vec<Vec<String>> {
    table
        .lines()
        .filter(|l| !l.starts_with('-'))
        .map(|l| l.split('|').map(|c| c.trim().to_string()).collect())
        .collect()
}

fn column(table: &[Vec<String>], name: &str) -> usize {
    table[0].iter().position(|h| h == name).unwrap()
}

fn fixture_dir() -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write(dir.path(), "corpus.json", &common::fixture_json(21));
    (dir, corpus)
}

fn oracle(dir: &Path, name: &str, corpus: &Path) -> PathBuf {
    let c = Corpus::load(corpus, &Ontology::multiwoz()).unwrap();
    write(dir, name, &PredictionSet::from_gold(&c, "m", "s").to_jsonl())
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(run(&["--help"]).code, 0);
    let out = run(&["perturb", "typo", "--corpus", "x.json"]);
    assert_eq!(out.code, 1);
    assert_eq!(error_record(&out)["error"], "usage");
    let out = run(&["evaluate", "--corpus", "c.json", "--pred", "s1=p.jsonl", "--perturbed", "typo=x.json"]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("unknown perturbation kind"));
    assert_eq!(run(&["evaluate", "--corpus", "c.json", "--pred", "nolabel"]).code, 1);
}

#[test]
fn load_failures_exit_2_with_a_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["evaluate", "--corpus", s(&dir.path().join("missing.json")), "--pred", "s=p.jsonl"]);
    assert_eq!(out.code, 2);
    let rec = error_record(&out);
    assert_eq!(rec["error"], "load");
    assert_eq!(rec["exit_code"], 2);

    let corpus = write(
        dir.path(),
        "bad.json",
        r#"{"name": "x", "dialogues": [{"id": "d", "turns": [
            {"speaker": "user", "text": "hi", "gold_state": ["train departure"]}]}]}"#,
    );
    let out = run(&["evaluate", "--corpus", s(&corpus), "--pred", "s=p.jsonl"]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("dialogue d turn 0"), "{}", out.stderr);

    let good = write(dir.path(), "good.json", &common::fixture_json(1));
    let preds = write(
        dir.path(),
        "dup.jsonl",
        "{\"dialogue_id\": \"x\", \"turn_index\": 0, \"state\": []}\n{\"dialogue_id\": \"x\", \"turn_index\": 0, \"state\": []}\n",
    );
    let out = run(&["evaluate", "--corpus", s(&good), "--pred", &format!("s={}", s(&preds))]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("line 2"), "{}", out.stderr);
}

#[test]
fn original_only_inputs_leave_cjga_not_evaluated() {
    let (dir, corpus) = fixture_dir();
    let preds = oracle(dir.path(), "p.jsonl", &corpus);
    let json = ok(&["evaluate", "--corpus", s(&corpus), "--pred", &format!("s1={}", s(&preds)), "--format", "json"]);
    let report: Value = serde_json::from_str(&json).unwrap();
    let run = &report["runs"][0];
    for metric in ["jga", "coref_jga", "nohf_orig"] {
        assert_eq!(run[metric]["status"], "defined", "{metric}");
        assert_eq!(run[metric]["value"], 1.0, "{metric}");
    }
    assert_eq!(run["nohf_swap"]["status"], "not_evaluated");
    for kind in ["named_entity", "paraphrase", "disfluency"] {
        assert_eq!(run["cjga"][kind]["status"], "not_evaluated");
    }
    let table = cells(&ok(&["evaluate", "--corpus", s(&corpus), "--pred", &format!("s1={}", s(&preds))]));
    for name in ["NoHF Swap", "NEI cJGA", "PI cJGA", "SDI cJGA"] {
        assert_eq!(table[1][column(&table, name)], "n/e");
    }
}

#[test]
fn undefined_is_distinct_from_zero() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write(
        dir.path(),
        "c.json",
        r#"{"name": "x", "dialogues": [{"id": "d", "domains": ["train"], "turns": [
            {"speaker": "user", "text": "on monday", "gold_state": ["train day monday"]}]}]}"#,
    );
    let preds = write(dir.path(), "p.jsonl", "{\"dialogue_id\": \"d\", \"turn_index\": 0, \"state\": [\"train day friday\"]}\n");
    let json = ok(&["evaluate", "--corpus", s(&corpus), "--pred", &format!("s={}", s(&preds)), "--format", "json"]);
    let report: Value = serde_json::from_str(&json).unwrap();
    assert_eq!(report["runs"][0]["jga"]["status"], "defined");
    assert_eq!(report["runs"][0]["jga"]["value"], 0.0);
    assert_eq!(report["runs"][0]["nohf_orig"]["status"], "undefined");
    assert_eq!(report["runs"][0]["coref_jga"]["status"], "not_evaluated");
    let table = cells(&ok(&["evaluate", "--corpus", s(&corpus), "--pred", &format!("s={}", s(&preds))]));
    assert_eq!(table[1][column(&table, "JGA")], "0.0");
    assert_eq!(table[1][column(&table, "NoHF Orig")], "undef");
    assert_eq!(table[1][column(&table, "Coref JGA")], "n/e");
}

#[test]
fn scramble_is_byte_identical_across_runs() {
    let (dir, corpus) = fixture_dir();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["perturb", "scramble-ne", "--corpus", s(&corpus), "--seed", "7", "--out", s(&a)]);
    ok(&["perturb", "scramble-ne", "--corpus", s(&corpus), "--seed", "7", "--out", s(&b)]);
    for f in ["corpus.json", "entity_map.json", "manifest.json", "scramble_report.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let manifest = PerturbationManifest::load(a.join("manifest.json")).unwrap();
    assert_eq!(manifest.seed, Some(7));
    assert!(manifest.config_hash.is_some());
    assert!(!manifest.entity_map.unwrap().is_empty());

    let c = dir.path().join("c");
    ok(&["perturb", "scramble-ne", "--corpus", s(&corpus), "--seed", "8", "--out", s(&c)]);
    assert_ne!(std::fs::read(a.join("corpus.json")).unwrap(), std::fs::read(c.join("corpus.json")).unwrap());
}

#[test]
fn disfluency_hits_the_default_ratio() {
    let (dir, corpus) = fixture_dir();
    let out = dir.path().join("sdi");
    ok(&["perturb", "disfluency", "--corpus", s(&corpus), "--out", s(&out)]);
    let manifest = PerturbationManifest::load(out.join("manifest.json")).unwrap();
    let ratio = manifest.word_increase_ratio.unwrap();
    assert!((ratio - 0.304).abs() <= 0.02, "{ratio}");
    assert_eq!(manifest.seed, Some(0));

    let ont = Ontology::multiwoz();
    let original = Corpus::load(&corpus, &ont).unwrap();
    let perturbed = Corpus::load(out.join("corpus.json"), &ont).unwrap();
    let log = InsertionRecord::from_jsonl(&std::fs::read_to_string(out.join("insertions.jsonl")).unwrap()).unwrap();
    assert_eq!(strip_insertions(&perturbed, &log).unwrap(), original);

    let again = dir.path().join("again");
    ok(&["perturb", "disfluency", "--corpus", s(&corpus), "--out", s(&again)]);
    assert_eq!(std::fs::read(out.join("corpus.json")).unwrap(), std::fs::read(again.join("corpus.json")).unwrap());
}

#[test]
fn bad_disfluency_config_is_a_data_error() {
    let (dir, corpus) = fixture_dir();
    let cfg = write(dir.path(), "cfg.json", r#"{"probabilities": {"filler": 2.0}}"#);
    let out = run(&["perturb", "disfluency", "--corpus", s(&corpus), "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(out.code, 2);
    assert_eq!(error_record(&out)["error"], "perturb");
}

/// Every metric evaluated, every prediction taken from the gold states.
fn full_suite(dir: &Path, corpus: &Path, labels: &[&str]) -> Value {
    let ne = dir.join("ne");
    let sdi = dir.join("sdi");
    ok(&["perturb", "scramble-ne", "--corpus", s(corpus), "--seed", "3", "--out", s(&ne)]);
    ok(&["perturb", "disfluency", "--corpus", s(corpus), "--out", s(&sdi)]);
    // identity paraphrases
    let para = write(dir, "para.json", &std::fs::read_to_string(corpus).unwrap());

    let mut runs = Vec::new();
    for label in labels {
        let p = oracle(dir, &format!("{label}.jsonl"), corpus);
        let pne = oracle(dir, &format!("{label}-ne.jsonl"), &ne.join("corpus.json"));
        let psdi = oracle(dir, &format!("{label}-sdi.jsonl"), &sdi.join("corpus.json"));
        let ppi = oracle(dir, &format!("{label}-pi.jsonl"), &para);
        runs.push(json!({
            "seed_label": label,
            "predictions": p,
            "perturbed_predictions": {"named_entity": pne, "disfluency": psdi, "paraphrase": ppi},
        }));
    }
    json!({
        "model_name": "oracle",
        "corpus": corpus,
        "perturbed": {
            "named_entity": {"corpus": ne.join("corpus.json"), "manifest": ne.join("manifest.json")},
            "disfluency": {"corpus": sdi.join("corpus.json"), "manifest": sdi.join("manifest.json")},
            "paraphrase": {"corpus": para},
        },
        "runs": runs,
    })
}

#[test]
fn five_oracle_runs_report_full_marks() {
    let (dir, corpus) = fixture_dir();
    let cfg = full_suite(dir.path(), &corpus, &["s1", "s2", "s3", "s4", "s5"]);
    let cfg_path = write(dir.path(), "run.json", &cfg.to_string());
    let out_dir = dir.path().join("eval");
    ok(&["evaluate", "--config", s(&cfg_path), "--out", s(&out_dir)]);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    for run in report["runs"].as_array().unwrap() {
        for metric in ["jga", "coref_jga", "nohf_orig", "nohf_swap"] {
            assert_eq!(run[metric]["value"], 1.0, "{metric}");
        }
        for kind in ["named_entity", "paraphrase", "disfluency"] {
            assert_eq!(run["cjga"][kind]["value"], 1.0, "{kind}");
        }
    }
    let table = cells(&ok(&["report", s(&out_dir.join("report.json"))]));
    assert_eq!(table.len(), 2);
    for cell in &table[1][2..] {
        assert_eq!(cell, "100.0 ± 0.0");
    }

    // same inputs, same bytes
    let again = dir.path().join("again");
    ok(&["evaluate", "--config", s(&cfg_path), "--out", s(&again)]);
    assert_eq!(
        std::fs::read(out_dir.join("report.json")).unwrap(),
        std::fs::read(again.join("report.json")).unwrap()
    );
}

#[test]
fn config_paths_resolve_against_the_config_file() {
    let (dir, corpus) = fixture_dir();
    oracle(dir.path(), "p.jsonl", &corpus);
    let sub = dir.path().join("cfg");
    std::fs::create_dir(&sub).unwrap();
    write(&sub, "run.json", r#"{"corpus": "../corpus.json", "runs": [{"seed_label": "a", "predictions": "../p.jsonl"}]}"#);
    let table = cells(&ok(&["evaluate", "--config", s(&sub.join("run.json"))]));
    assert_eq!(table[1][column(&table, "JGA")], "100.0");

    write(&sub, "dup.json", r#"{"corpus": "../corpus.json", "runs": [{"seed_label": "a", "predictions": "../corpus.json"}]}"#);
    let out = run(&["evaluate", "--config", s(&sub.join("dup.json"))]);
    assert_eq!(out.code, 2);
    assert_eq!(error_record(&out)["error"], "config");
}

#[test]
fn ten_pair_scenario_reports_half() {
    let dir = tempfile::tempdir().unwrap();
    let places = ["cambridge", "ely", "norwich", "leicester", "stevenage"];
    let dialogues: Vec<Value> = (0..10)
        .map(|i| {
            let (a, b) = (places[i % 5], places[(i + 1) % 5]);
            json!({"id": format!("d{i}"), "domains": ["train"], "turns": [
                {"speaker": "user", "text": format!("from {a} to {b}"),
                 "gold_state": [format!("train departure {a}"), format!("train destination {b}")]}]})
        })
        .collect();
    let corpus = write(dir.path(), "c.json", &json!({"name": "pairs", "dialogues": dialogues}).to_string());
    let ne = dir.path().join("ne");
    ok(&["perturb", "scramble-ne", "--corpus", s(&corpus), "--seed", "1", "--out", s(&ne)]);

    let ont = Ontology::multiwoz();
    let orig = Corpus::load(&corpus, &ont).unwrap();
    let pert = Corpus::load(ne.join("corpus.json"), &ont).unwrap();
    // 4 both correct, 3 original only, 1 perturbed only, 2 neither
    let verdicts = [(1, 1), (1, 1), (1, 1), (1, 1), (1, 0), (1, 0), (1, 0), (0, 1), (0, 0), (0, 0)];
    let preds = |c: &Corpus, side: usize| {
        let mut p = PredictionSet::new("m", "s");
        for (i, (d, t)) in c.user_turns().enumerate() {
            let v = if side == 0 { verdicts[i].0 } else { verdicts[i].1 };
            let st = if v == 1 { t.gold().clone() } else { BeliefState::new() };
            p.insert(TurnKey::new(d.id.clone(), t.turn_index), st);
        }
        p.to_jsonl()
    };
    let po = write(dir.path(), "po.jsonl", &preds(&orig, 0));
    let pp = write(dir.path(), "pp.jsonl", &preds(&pert, 1));
    let table = cells(&ok(&[
        "evaluate",
        "--corpus", s(&corpus),
        "--pred", &format!("s={}", s(&po)),
        "--perturbed", &format!("named_entity={}", s(&ne.join("corpus.json"))),
        "--manifest", &format!("named_entity={}", s(&ne.join("manifest.json"))),
        "--pert-pred", &format!("named_entity:s={}", s(&pp)),
    ]));
    assert_eq!(table[1][column(&table, "NEI cJGA")], "50.0");
    assert_eq!(table[1][column(&table, "JGA")], "70.0");
}

#[test]
fn dialogue_unit_requires_every_turn() {
    let (dir, corpus) = fixture_dir();
    let c = Corpus::load(&corpus, &Ontology::multiwoz()).unwrap();
    // one wrong turn in each of the first three dialogues
    let firsts: Vec<usize> = {
        let mut seen = std::collections::HashSet::new();
        c.user_turns()
            .enumerate()
            .filter(|(_, (d, _))| seen.insert(d.id.clone()))
            .map(|(i, _)| i)
            .take(3)
            .collect()
    };
    let preds = write(dir.path(), "p.jsonl", &common::predictions_with_errors(&c, "s", &firsts).to_jsonl());
    let args = |unit: &'static str| -> Vec<String> {
        vec!["evaluate".into(), "--corpus".into(), s(&corpus).into(), "--pred".into(), format!("s={}", s(&preds)), "--unit".into(), unit.into(), "--format".into(), "json".into()]
    };
    let jga = |unit| {
        let a = args(unit);
        let v: Value = serde_json::from_str(&ok(&a.iter().map(String::as_str).collect::<Vec<_>>())).unwrap();
        (v["runs"][0]["jga"]["numerator"].as_u64().unwrap(), v["runs"][0]["jga"]["denominator"].as_u64().unwrap())
    };
    let n = c.user_turn_count() as u64;
    assert_eq!(jga("turn"), (n - 3, n));
    assert_eq!(jga("dialogue"), (47, 50));
}

#[test]
fn report_merges_runs_and_rejects_other_schemas() {
    let (dir, corpus) = fixture_dir();
    let preds = oracle(dir.path(), "p.jsonl", &corpus);
    let mut reports = Vec::new();
    for label in ["a", "b"] {
        let out = dir.path().join(label);
        ok(&["evaluate", "--corpus", s(&corpus), "--pred", &format!("{label}={}", s(&preds)), "--out", s(&out)]);
        reports.push(out.join("report.json"));
    }
    let merged = dir.path().join("merged.json");
    let table = cells(&ok(&["report", s(&reports[0]), s(&reports[1]), "--per-run", "--json", s(&merged)]));
    assert_eq!(table.len(), 4);
    assert_eq!(table[3][1], "median ± std (n=2)");
    let m: Value = serde_json::from_str(&std::fs::read_to_string(&merged).unwrap()).unwrap();
    assert_eq!(m[0]["runs"].as_array().unwrap().len(), 2);

    let out = run(&["report", s(&reports[0]), s(&reports[0])]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("two runs labelled"));

    let text = std::fs::read_to_string(&reports[0]).unwrap();
    let old = write(dir.path(), "old.json", &text.replace("\"schema_version\": 1", "\"schema_version\": 99"));
    let out = run(&["report", s(&old)]);
    assert_eq!(out.code, 2);
    assert_eq!(error_record(&out)["error"], "schema_mismatch");
}

#[test]
fn fewshot_files_and_shortfalls() {
    let dir = tempfile::tempdir().unwrap();
    let sizes = [("attraction", 185), ("restaurant", 305), ("hotel", 300), ("taxi", 301), ("train", 310)];
    let corpus = write(dir.path(), "c.json", &common::corpus_json(9, &sizes, 5));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let summary = ok(&["fewshot", "--corpus", s(&corpus), "--seed", "4", "--out", s(&a)]);
    assert!(summary.contains("test: 880 dialogues"), "{summary}");
    ok(&["fewshot", "--corpus", s(&corpus), "--seed", "4", "--out", s(&b)]);
    for f in ["train.json", "valid.json", "test.json", "manifest.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }

    let small = write(dir.path(), "small.json", &common::corpus_json(9, &[("hotel", 40)], 0));
    let out = run(&["fewshot", "--corpus", s(&small), "--out", s(&dir.path().join("x"))]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("hotel needs 300"), "{}", out.stderr);
}

#[test]
fn paraphrase_validation_report() {
    let dir = tempfile::tempdir().unwrap();
    let doc = |text: &str| {
        json!({"name": "p", "dialogues": [{"id": "d", "domains": ["train"], "turns": [
            {"speaker": "user", "text": text, "gold_state": ["train departure cambridge"]}]}]})
        .to_string()
    };
    let orig = write(dir.path(), "o.json", &doc("I would like to leave from cambridge"));
    let good = write(dir.path(), "g.json", &doc("Please book me one departing from cambridge"));
    let bad = write(dir.path(), "b.json", &doc("Please book me one departing from the city"));
    let report = |p: &Path| -> Value {
        serde_json::from_str(&ok(&["validate-paraphrases", "--corpus", s(&orig), "--paraphrases", s(p)])).unwrap()
    };
    let r = report(&good);
    assert_eq!(r["report"]["valid"], 1);
    let r = report(&bad);
    assert_eq!(r["report"]["valid"], 0);
    assert_eq!(r["report"]["invalid"][0]["reasons"][0]["reason"], "missing_value");
    assert_eq!(report(&orig)["report"]["mean_replacement_rate"], 0.0);
}

#[test]
fn coref_tagging_only_adds_flags() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write(
        dir.path(),
        "c.json",
        r#"{"name": "x", "dialogues": [{"id": "d", "domains": ["hotel"], "turns": [
            {"speaker": "user", "text": "a hotel for the same day as the restaurant booking", "gold_state": []},
            {"speaker": "system", "text": "ok"},
            {"speaker": "user", "text": "thanks", "gold_state": []}]}]}"#,
    );
    let out = dir.path().join("tagged.json");
    assert_eq!(ok(&["tag-coref", "--corpus", s(&corpus), "--out", s(&out)]), "1 coref turns (0 before tagging)\n");
    let tagged = Corpus::load(&out, &Ontology::multiwoz()).unwrap();
    assert!(tagged.dialogues[0].turns[0].requires_coref);
    assert!(!tagged.dialogues[0].turns[2].requires_coref);
    assert_eq!(tagged.notes.len(), 1);
    let bad = run(&["tag-coref", "--corpus", s(&corpus), "--out", s(&out), "--pattern", "("]);
    assert_eq!(bad.code, 2);
}

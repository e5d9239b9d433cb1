use super::aggregate::Aggregate;
use super::cjga::CjgaCounts;
use super::{Fraction, Score, Unit};
use crate::hashing::sha256_hex;
use crate::perturb::PerturbationKind;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed report: {0}")]
    Json(#[from] serde_json::Error),
    #[error("report schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("model {model:?} has two runs labelled {seed_label:?}")]
    DuplicateRun { model: String, seed_label: String },
    #[error("inconsistent report: {0}")]
    Invalid(String),
}

/// Report columns, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricColumn {
    Jga,
    CorefJga,
    NohfOrig,
    NohfSwap,
    NeiCjga,
    PiCjga,
    SdiCjga,
}

impl MetricColumn {
    pub const ALL: [MetricColumn; 7] = [
        Self::Jga,
        Self::CorefJga,
        Self::NohfOrig,
        Self::NohfSwap,
        Self::NeiCjga,
        Self::PiCjga,
        Self::SdiCjga,
    ];

    pub fn header(self) -> &'static str {
        match self {
            Self::Jga => "JGA",
            Self::CorefJga => "Coref JGA",
            Self::NohfOrig => "NoHF Orig",
            Self::NohfSwap => "NoHF Swap",
            Self::NeiCjga => "NEI cJGA",
            Self::PiCjga => "PI cJGA",
            Self::SdiCjga => "SDI cJGA",
        }
    }

    pub fn perturbation(self) -> Option<PerturbationKind> {
        match self {
            Self::NeiCjga => Some(PerturbationKind::NamedEntity),
            Self::PiCjga => Some(PerturbationKind::Paraphrase),
            Self::SdiCjga => Some(PerturbationKind::Disfluency),
            _ => None,
        }
    }
}

/// Conditional JGA as reported: `value = both_correct / at_least_one`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CjgaScore {
    NotEvaluated,
    Undefined {
        pairs: u64,
    },
    Defined {
        value: f64,
        both_correct: u64,
        at_least_one: u64,
        pairs: u64,
    },
}

impl CjgaScore {
    pub fn from_counts(c: CjgaCounts) -> Self {
        match c.fraction() {
            Some(f) => Self::Defined {
                value: f.value(),
                both_correct: c.both_correct,
                at_least_one: c.at_least_one,
                pairs: c.pairs,
            },
            None => Self::Undefined { pairs: c.pairs },
        }
    }

    pub fn to_score(self) -> Score {
        match self {
            Self::NotEvaluated => Score::NotEvaluated,
            Self::Undefined { .. } => Score::Undefined,
            Self::Defined {
                both_correct,
                at_least_one,
                ..
            } => Score::from_fraction(Fraction::new(both_correct, at_least_one)),
        }
    }
}

/// Scores of one seeded run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub seed_label: String,
    pub jga: Score,
    pub coref_jga: Score,
    pub nohf_orig: Score,
    pub nohf_swap: Score,
    pub cjga: BTreeMap<PerturbationKind, CjgaScore>,
    /// User turns of the original corpus without a prediction record.
    pub missing_predictions: u64,
    /// Prediction records naming no user turn of the original corpus.
    pub stray_predictions: u64,
}

impl RunMetrics {
    /// A run with every metric not evaluated.
    pub fn empty(seed_label: impl Into<String>) -> Self {
        Self {
            seed_label: seed_label.into(),
            jga: Score::NotEvaluated,
            coref_jga: Score::NotEvaluated,
            nohf_orig: Score::NotEvaluated,
            nohf_swap: Score::NotEvaluated,
            cjga: PerturbationKind::ALL
                .into_iter()
                .map(|k| (k, CjgaScore::NotEvaluated))
                .collect(),
            missing_predictions: 0,
            stray_predictions: 0,
        }
    }

    pub fn score(&self, column: MetricColumn) -> Score {
        match column {
            MetricColumn::Jga => self.jga,
            MetricColumn::CorefJga => self.coref_jga,
            MetricColumn::NohfOrig => self.nohf_orig,
            MetricColumn::NohfSwap => self.nohf_swap,
            _ => {
                let kind = column.perturbation().expect("cJGA column");
                self.cjga
                    .get(&kind)
                    .copied()
                    .unwrap_or(CjgaScore::NotEvaluated)
                    .to_score()
            }
        }
    }

    fn validate(&self) -> Result<(), ReportError> {
        let bad = |m: String| Err(ReportError::Invalid(format!("run {}: {m}", self.seed_label)));
        for column in MetricColumn::ALL {
            if let Score::Defined {
                value,
                numerator,
                denominator,
            } = self.score(column)
            {
                if !(0.0..=1.0).contains(&value) || numerator > denominator || denominator == 0 {
                    return bad(format!("{} out of range", column.header()));
                }
            }
        }
        for (kind, c) in &self.cjga {
            if let CjgaScore::Defined {
                both_correct,
                at_least_one,
                pairs,
                ..
            } = *c
            {
                if !(both_correct <= at_least_one && at_least_one <= pairs && at_least_one > 0) {
                    return bad(format!("{kind} cJGA counts inconsistent"));
                }
            }
        }
        Ok(())
    }
}

/// All runs of one model plus their per-metric aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub schema_version: u32,
    pub model_name: String,
    pub unit: Unit,
    /// Hash of the evaluation inputs and settings.
    pub config_hash: String,
    pub runs: Vec<RunMetrics>,
    pub aggregate: BTreeMap<MetricColumn, Aggregate<f64>>,
}

impl MetricReport {
    pub fn new(
        model_name: impl Into<String>,
        unit: Unit,
        config_hash: impl Into<String>,
        runs: Vec<RunMetrics>,
    ) -> Self {
        let aggregate = aggregate_runs(&runs);
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            model_name: model_name.into(),
            unit,
            config_hash: config_hash.into(),
            runs,
            aggregate,
        }
    }

    pub fn from_json_str(json: &str) -> Result<Self, ReportError> {
        let value: serde_json::Value = serde_json::from_str(json)?;
        let version = value.get("schema_version").and_then(serde_json::Value::as_u64);
        if version != Some(u64::from(REPORT_SCHEMA_VERSION)) {
            return Err(ReportError::SchemaMismatch(format!(
                "expected schema_version {REPORT_SCHEMA_VERSION}, found {}",
                version.map_or("none".to_string(), |v| v.to_string())
            )));
        }
        let report: Self =
            serde_json::from_value(value).map_err(|e| ReportError::SchemaMismatch(e.to_string()))?;
        for run in &report.runs {
            run.validate()?;
        }
        Ok(report)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ReportError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ReportError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serialises");
        out.push('\n');
        out
    }
}

/// Median and population standard deviation of every column over runs.
pub fn aggregate_runs(runs: &[RunMetrics]) -> BTreeMap<MetricColumn, Aggregate<f64>> {
    MetricColumn::ALL
        .into_iter()
        .map(|c| {
            let scores: Vec<Score> = runs.iter().map(|r| r.score(c)).collect();
            (c, Aggregate::from_scores(&scores))
        })
        .collect()
}

/// Merges reports per model name. Runs are ordered by seed label and the
/// aggregate is recomputed over all of them.
pub fn merge_reports(reports: Vec<MetricReport>) -> Result<Vec<MetricReport>, ReportError> {
    let mut by_model: BTreeMap<String, Vec<MetricReport>> = BTreeMap::new();
    for r in reports {
        if r.schema_version != REPORT_SCHEMA_VERSION {
            return Err(ReportError::SchemaMismatch(format!(
                "{} has schema_version {}",
                r.model_name, r.schema_version
            )));
        }
        by_model.entry(r.model_name.clone()).or_default().push(r);
    }
    let mut merged = Vec::new();
    for (model, group) in by_model {
        let unit = group[0].unit;
        if group.iter().any(|r| r.unit != unit) {
            return Err(ReportError::SchemaMismatch(format!(
                "model {model:?} mixes turn- and dialogue-level reports"
            )));
        }
        let mut hashes: Vec<&str> = group.iter().map(|r| r.config_hash.as_str()).collect();
        hashes.sort_unstable();
        let config_hash = if hashes.len() == 1 {
            hashes[0].to_string()
        } else {
            sha256_hex(hashes.join("\n"))
        };
        let mut runs: Vec<RunMetrics> = Vec::new();
        for r in &group {
            runs.extend(r.runs.iter().cloned());
        }
        runs.sort_by(|a, b| a.seed_label.cmp(&b.seed_label));
        if let Some(w) = runs.windows(2).find(|w| w[0].seed_label == w[1].seed_label) {
            return Err(ReportError::DuplicateRun {
                model,
                seed_label: w[0].seed_label.clone(),
            });
        }
        merged.push(MetricReport::new(model, unit, config_hash, runs));
    }
    Ok(merged)
}

fn score_cell(s: Score) -> String {
    match s {
        Score::NotEvaluated => "n/e".into(),
        Score::Undefined => "undef".into(),
        Score::Defined { .. } => format!("{:.1}", s.value().unwrap_or_default() * 100.0),
    }
}

fn aggregate_cell(a: &Aggregate<f64>) -> String {
    match *a {
        Aggregate::NotEvaluated => "n/e".into(),
        Aggregate::Undefined { .. } => "undef".into(),
        Aggregate::Defined { median, std, .. } => {
            format!("{:.1} ± {:.1}", median * 100.0, std * 100.0)
        }
    }
}

/// Fixed-width table, one aggregate row per model (cells `median ± std`, in
/// percent) preceded by one row per run when `per_run` is set. `n/e` marks
/// metrics that were not evaluated, `undef` metrics with a zero denominator.
pub fn render_table(reports: &[MetricReport], per_run: bool) -> String {
    let mut rows: Vec<Vec<String>> = vec![["Model", "Run"]
        .into_iter()
        .chain(MetricColumn::ALL.iter().map(|c| c.header()))
        .map(String::from)
        .collect()];
    for r in reports {
        if per_run {
            for run in &r.runs {
                let mut row = vec![r.model_name.clone(), run.seed_label.clone()];
                row.extend(MetricColumn::ALL.iter().map(|&c| score_cell(run.score(c))));
                rows.push(row);
            }
        }
        let mut row = vec![r.model_name.clone(), format!("median ± std (n={})", r.runs.len())];
        row.extend(MetricColumn::ALL.iter().map(|c| {
            r.aggregate
                .get(c)
                .map_or_else(|| "n/e".to_string(), aggregate_cell)
        }));
        rows.push(row);
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|i| rows.iter().map(|row| row[i].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (n, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, &w)| format!("{cell}{}", " ".repeat(w - cell.chars().count())))
            .collect();
        out.push_str(cells.join(" | ").trim_end());
        out.push('\n');
        if n == 0 {
            let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
            out.push_str(&rule.join("-|-"));
            out.push('\n');
        }
    }
    out
}

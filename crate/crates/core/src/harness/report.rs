use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    parallel_map, prepare_entry, run_cell, CellStatus, HarnessError, Label, MethodCounts, MisuseManifestEntry,
    PipelineOptions, RunReport,
};
use crate::detect::Classification;
use crate::filter::StrategyConfig;
use crate::stats::{precision_recall, ConfusionCounts, PrecisionRecall};

/// Method reductions in percent. A flagged value had a zero denominator and
/// was set to 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reductions {
    pub a2c: f64,
    pub c2e: f64,
    pub a2c_flagged: bool,
    pub c2e_flagged: bool,
}

fn percent_drop(from: usize, to: usize) -> (f64, bool) {
    if from == 0 {
        (0.0, true)
    } else {
        (from.saturating_sub(to) as f64 / from as f64 * 100.0, false)
    }
}

pub fn reductions(c: &MethodCounts) -> Reductions {
    let (a2c, a2c_flagged) = percent_drop(c.all, c.changed);
    let (c2e, c2e_flagged) = percent_drop(c.changed, c.with_external_api);
    Reductions { a2c, c2e, a2c_flagged, c2e_flagged }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionRow {
    pub misuse: String,
    pub commit: String,
    #[serde(rename = "A")]
    pub all: usize,
    #[serde(rename = "C")]
    pub changed: usize,
    #[serde(rename = "E")]
    pub with_external_api: usize,
    #[serde(rename = "A2C")]
    pub a2c: f64,
    #[serde(rename = "C2E")]
    pub c2e: f64,
    pub c2e_flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionTable {
    pub rows: Vec<ReductionRow>,
    /// Aggregates count each analyzed commit once.
    pub unique_commits: usize,
    pub a2c_mean: Option<f64>,
    pub a2c_median: Option<f64>,
    pub c2e_mean: Option<f64>,
    pub c2e_median: Option<f64>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn median(v: &[f64]) -> Option<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(s[n / 2]),
        _ => Some((s[n / 2 - 1] + s[n / 2]) / 2.0),
    }
}

/// One row per entry with counts; mean and median over distinct commits.
pub fn report_reductions(reports: &[RunReport]) -> ReductionTable {
    let mut rows = Vec::new();
    let mut seen_entries = HashSet::new();
    let mut seen_commits = HashSet::new();
    let (mut a2c, mut c2e) = (Vec::new(), Vec::new());
    for r in reports {
        let (Some(counts), Some(commit)) = (r.counts, r.analyzed_commit.as_ref()) else { continue };
        if !seen_entries.insert(r.entry_id.clone()) {
            continue;
        }
        let red = reductions(&counts);
        rows.push(ReductionRow {
            misuse: r.entry_id.clone(),
            commit: commit.clone(),
            all: counts.all,
            changed: counts.changed,
            with_external_api: counts.with_external_api,
            a2c: red.a2c,
            c2e: red.c2e,
            c2e_flagged: red.c2e_flagged,
        });
        if seen_commits.insert(commit.clone()) {
            if !red.a2c_flagged {
                a2c.push(red.a2c);
            }
            if !red.c2e_flagged {
                c2e.push(red.c2e);
            }
        }
    }
    ReductionTable {
        rows,
        unique_commits: seen_commits.len(),
        a2c_mean: mean(&a2c),
        a2c_median: median(&a2c),
        c2e_mean: mean(&c2e),
        c2e_median: median(&c2e),
    }
}

/// Flat per-cell row for CSV export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRow {
    pub entry: String,
    pub config: String,
    pub search_loc: String,
    pub search_imp: String,
    pub sr: f64,
    pub method_filter: bool,
    pub status: String,
    pub methods: usize,
    pub patterns: usize,
    pub relative_pattern_frequency: Option<f64>,
    pub top_k_rank: Option<usize>,
    pub top_k_hit: Option<bool>,
    pub classification: Option<String>,
    pub overlap: Option<String>,
}

pub fn matrix_rows(reports: &[RunReport]) -> Vec<MatrixRow> {
    reports
        .iter()
        .map(|r| MatrixRow {
            entry: r.entry_id.clone(),
            config: r.config_label.clone(),
            search_loc: format!("{:?}", r.config.search_loc),
            search_imp: format!("{:?}", r.config.search_imp),
            sr: r.config.sr,
            method_filter: r.config.method_filter,
            status: format!("{:?}", r.status).to_lowercase(),
            methods: r.locations.iter().map(|l| l.methods).sum(),
            patterns: r.locations.iter().map(|l| l.patterns).sum(),
            relative_pattern_frequency: r.relative_pattern_frequency,
            top_k_rank: r.top_k.and_then(|t| t.best_rank),
            top_k_hit: r.top_k.map(|t| t.hit),
            classification: r.verdict.as_ref().map(|v| format!("{:?}", v.classification)),
            overlap: r.verdict.as_ref().map(|v| format!("{}/{}", v.overlap_numerator, v.overlap_denominator)),
        })
        .collect()
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::io(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::io(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRow {
    pub entry: String,
    pub label: Label,
    pub predicted: Option<Classification>,
    /// `tp`, `fp`, `tn` or `fn`.
    pub outcome: String,
    pub processed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub config: StrategyConfig,
    pub rows: Vec<EvaluationRow>,
    pub confusion: ConfusionCounts,
    pub scores: PrecisionRecall,
    pub unlabeled_skipped: usize,
}

/// Runs one strategy over the labeled entries and scores the verdicts.
/// Entries that could not be processed count as non-detections.
pub fn evaluate(
    entries: &[MisuseManifestEntry],
    config: &StrategyConfig,
    opts: &PipelineOptions,
) -> Result<(EvaluationReport, Vec<RunReport>), HarnessError> {
    if entries.is_empty() {
        return Err(HarnessError::EmptyManifest);
    }
    let labeled: Vec<&MisuseManifestEntry> = entries.iter().filter(|e| e.label.is_some()).collect();
    let reports = parallel_map(&labeled, opts.workers, |e| run_cell(&prepare_entry(e), config, opts));
    let mut confusion = ConfusionCounts::default();
    let mut rows = Vec::new();
    for (e, r) in labeled.iter().zip(&reports) {
        let label = e.label.expect("filtered to labeled entries");
        let predicted = r.verdict.as_ref().map(|v| v.classification);
        let flagged = predicted == Some(Classification::Misuse);
        let outcome = match (label, flagged) {
            (Label::Misuse, true) => {
                confusion.tp += 1;
                "tp"
            }
            (Label::Misuse, false) => {
                confusion.fn_ += 1;
                "fn"
            }
            (Label::Correct, true) => {
                confusion.fp += 1;
                "fp"
            }
            (Label::Correct, false) => {
                confusion.tn += 1;
                "tn"
            }
        };
        rows.push(EvaluationRow {
            entry: e.id.clone(),
            label,
            predicted,
            outcome: outcome.into(),
            processed: r.status == CellStatus::Completed,
        });
    }
    let report = EvaluationReport {
        config: *config,
        rows,
        scores: precision_recall(confusion),
        confusion,
        unlabeled_skipped: entries.len() - labeled.len(),
    };
    Ok((report, reports))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_formulas() {
        let r = reductions(&MethodCounts { all: 16095, changed: 12, with_external_api: 8 });
        assert!((r.a2c - 99.925).abs() < 1e-3);
        assert!((r.c2e - 33.333).abs() < 1e-3);
        let r = reductions(&MethodCounts { all: 5, changed: 0, with_external_api: 0 });
        assert_eq!(r.c2e, 0.0);
        assert!(r.c2e_flagged);
        assert!(!r.a2c_flagged);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }
}

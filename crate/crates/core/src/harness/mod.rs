//! End-to-end orchestration: per-entry pipeline runs, the strategy matrix,
//! labeled evaluation and the reporting tables.

mod matrix;
mod pipeline;
mod report;

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::VerdictRecord;
use crate::filter::{MatchMode, StrategyConfig};
use crate::miner::{MinSupport, MiningConfig};
use crate::search::{SearchProvider, SessionLimits};

pub use matrix::{run_matrix, Comparison, MatrixReport};
pub use pipeline::{prepare_entry, run_cell, run_pipeline, PreparedEntry};
pub use report::{
    evaluate, matrix_rows, reductions, report_reductions, write_csv, EvaluationReport, EvaluationRow, MatrixRow,
    ReductionRow, ReductionTable, Reductions,
};

/// Smallest absolute support used for mining, whatever the configuration says.
pub const SUPPORT_FLOOR: usize = 2;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("duplicate manifest id {0:?}")]
    DuplicateId(String),
    #[error("no manifest entries")]
    EmptyManifest,
}

impl HarnessError {
    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self::Io { path: path.display().to_string(), message: e.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    #[serde(alias = "Misuse")]
    Misuse,
    #[serde(alias = "Correct")]
    Correct,
}

/// One known misuse (or labeled usage) to analyze.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MisuseManifestEntry {
    pub id: String,
    pub repo_url_or_path: String,
    pub fixing_commit: String,
    #[serde(default)]
    pub misused_imports: Vec<String>,
    pub misuse_file: String,
    pub misuse_method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    /// File with the fix variants in the graph text format.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixing_pattern: Option<PathBuf>,
}

/// Reads a JSON-lines manifest. Relative repository and pattern paths are
/// resolved against the manifest's directory.
pub fn load_manifest(path: &Path) -> Result<Vec<MisuseManifestEntry>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let entries = parse_manifest(&text, base)?;
    if entries.is_empty() {
        return Err(HarnessError::EmptyManifest);
    }
    Ok(entries)
}

pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<MisuseManifestEntry>, HarnessError> {
    let mut ids = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut e: MisuseManifestEntry =
            serde_json::from_str(line).map_err(|err| HarnessError::Manifest { line: i + 1, message: err.to_string() })?;
        if !ids.insert(e.id.clone()) {
            return Err(HarnessError::DuplicateId(e.id));
        }
        if !e.repo_url_or_path.contains("://") && Path::new(&e.repo_url_or_path).is_relative() {
            e.repo_url_or_path = base.join(&e.repo_url_or_path).display().to_string();
        }
        if let Some(p) = e.fixing_pattern.as_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        out.push(e);
    }
    Ok(out)
}

/// Mining settings per search location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiningSettings {
    pub internal: MiningConfig,
    pub external: MiningConfig,
}

impl MiningSettings {
    pub fn uniform(cfg: MiningConfig) -> Self {
        Self { internal: cfg, external: cfg }
    }
}

impl Default for MiningSettings {
    /// Detection-run defaults: absolute support 2 internally and 10
    /// externally, five and ten minute timeouts.
    fn default() -> Self {
        Self {
            internal: MiningConfig {
                min_support: MinSupport::Absolute(2),
                timeout: Some(Duration::from_secs(5 * 60)),
                ..MiningConfig::default()
            },
            external: MiningConfig {
                min_support: MinSupport::Absolute(10),
                timeout: Some(Duration::from_secs(10 * 60)),
                ..MiningConfig::default()
            },
        }
    }
}

/// Everything a pipeline run needs besides the entry and the strategy.
#[derive(Clone)]
pub struct PipelineOptions {
    pub provider: Option<Arc<dyn SearchProvider>>,
    pub limits: SessionLimits,
    pub mining: MiningSettings,
    pub match_mode: MatchMode,
    pub top_k: usize,
    /// Root under which `runs/` is written; nothing is persisted when unset.
    pub out_dir: Option<PathBuf>,
    pub workers: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            provider: None,
            limits: SessionLimits::default(),
            mining: MiningSettings::default(),
            match_mode: MatchMode::Token,
            top_k: 1,
            out_dir: None,
            workers: 1,
        }
    }
}

impl std::fmt::Debug for PipelineOptions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PipelineOptions")
            .field("provider", &self.provider.as_ref().map(|_| "<provider>"))
            .field("limits", &self.limits)
            .field("mining", &self.mining)
            .field("top_k", &self.top_k)
            .field("out_dir", &self.out_dir)
            .field("workers", &self.workers)
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageError {
    pub stage: String,
    pub message: String,
}

impl StageError {
    pub fn new(stage: &str, message: impl std::fmt::Display) -> Self {
        Self { stage: stage.to_string(), message: message.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodCounts {
    /// All methods in the analyzed revision.
    pub all: usize,
    pub changed: usize,
    /// Changed methods using at least one third-party API import.
    pub with_external_api: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Completed,
    Skipped,
    Failed,
}

/// Per-location funnel sizes of one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocationStats {
    pub location: String,
    pub docs_retrieved: usize,
    pub docs_after_file_filter: usize,
    pub methods: usize,
    pub patterns: usize,
    pub mining_truncated: bool,
    pub mining_timed_out: bool,
    pub min_support: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopKHit {
    pub k: usize,
    /// Best rank of a mined pattern containing the fix, if any.
    pub best_rank: Option<usize>,
    pub hit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub entry_id: String,
    pub config: StrategyConfig,
    pub config_label: String,
    pub config_hash: String,
    pub status: CellStatus,
    pub skip_reason: Option<String>,
    pub analyzed_commit: Option<String>,
    pub counts: Option<MethodCounts>,
    pub reductions: Option<Reductions>,
    /// API import and keyword counts of changed methods using third-party APIs.
    pub import_counts: Vec<usize>,
    pub keyword_counts: Vec<usize>,
    pub locations: Vec<LocationStats>,
    pub pattern_frequency: Option<crate::detect::PatternFrequency>,
    pub relative_pattern_frequency: Option<f64>,
    pub top_k: Option<TopKHit>,
    pub verdict: Option<VerdictRecord>,
    pub label: Option<Label>,
    pub errors: Vec<StageError>,
}

/// Runs `f` over `items` on up to `workers` threads, keeping input order.
pub(crate) fn parallel_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                results.lock().expect("result slots poisoned")[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .expect("result slots poisoned")
        .into_iter()
        .map(|r| r.expect("every item processed"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_parsing() {
        let text = r#"{"id":"a","repo_url_or_path":"repo","fixing_commit":"abc","misused_imports":["x.Y"],"misuse_file":"A.java","misuse_method":"m"}

{"id":"b","repo_url_or_path":"/abs","fixing_commit":"def","misuse_file":"B.java","misuse_method":"n","label":"Correct","fixing_pattern":"fix.aug"}
"#;
        let entries = parse_manifest(text, Path::new("/base")).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].repo_url_or_path, "/base/repo");
        assert_eq!(entries[1].repo_url_or_path, "/abs");
        assert_eq!(entries[1].label, Some(Label::Correct));
        assert_eq!(entries[1].fixing_pattern.as_deref(), Some(Path::new("/base/fix.aug")));
        assert!(entries[1].misused_imports.is_empty());
    }

    #[test]
    fn manifest_rejects_duplicates_and_garbage() {
        let dup = "{\"id\":\"a\",\"repo_url_or_path\":\"r\",\"fixing_commit\":\"1\",\"misuse_file\":\"f\",\"misuse_method\":\"m\"}\n";
        let twice = format!("{dup}{dup}");
        assert!(matches!(parse_manifest(&twice, Path::new(".")), Err(HarnessError::DuplicateId(_))));
        assert!(matches!(parse_manifest("{", Path::new(".")), Err(HarnessError::Manifest { line: 1, .. })));
    }

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<usize> = (0..50).collect();
        assert_eq!(parallel_map(&items, 4, |x| x * 2), items.iter().map(|x| x * 2).collect::<Vec<_>>());
    }
}

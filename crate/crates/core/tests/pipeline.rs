mod common;

use std::path::Path;
use std::sync::Arc;

use apiwatch::detect::Classification;
use apiwatch::filter::{SearchImp, SearchLoc, StrategyConfig};
use apiwatch::harness::{
    parse_manifest, run_matrix, run_pipeline, CellStatus, MiningSettings, PipelineOptions,
};
use apiwatch::miner::{MinSupport, MiningConfig};
use apiwatch::search::FsProvider;
use common::*;

fn options(out: Option<&Path>) -> PipelineOptions {
    let provider = FsProvider::open(&fixtures().join("mini/external")).unwrap();
    PipelineOptions {
        provider: Some(Arc::new(provider)),
        mining: MiningSettings::uniform(MiningConfig { min_support: MinSupport::Absolute(3), ..MiningConfig::default() }),
        out_dir: out.map(Path::to_path_buf),
        workers: 4,
        ..PipelineOptions::default()
    }
}

#[test]
fn mini_entry_external_cell() {
    let dir = tempfile::tempdir().unwrap();
    let repo = build_mini_repo(dir.path());
    let entries = parse_manifest(&mini_manifest(dir.path(), &repo.fixing), dir.path()).unwrap();
    let cfg = StrategyConfig::new(SearchLoc::External, SearchImp::AllImports, 0.5, true).unwrap();
    let out = dir.path().join("out");
    let r = run_pipeline(&entries[0], &cfg, &options(Some(&out)));
    assert_eq!(r.status, CellStatus::Completed, "{:?}", r.errors);
    assert_eq!(r.analyzed_commit.as_deref(), Some(repo.introducing.as_str()));
    let counts = r.counts.unwrap();
    // Util.split, Loader(), describe, load
    assert_eq!((counts.all, counts.changed, counts.with_external_api), (4, 1, 1));
    assert_eq!(r.locations[0].docs_retrieved, 6);
    let v = r.verdict.unwrap();
    assert_eq!(v.classification, Classification::Misuse);
    // Best violation: the support-5 pattern ending in <return> (7 nodes, 8 edges).
    // Matched: <init>, Channel, read, <return> and the 3 edges among the first
    // three; no other pattern edge has both ends matched. (4+3)/(7+3).
    assert_eq!((v.overlap_numerator, v.overlap_denominator), (7, 10));
    let top = r.top_k.unwrap();
    assert_eq!(top.best_rank, Some(1));
    assert_eq!(r.relative_pattern_frequency, Some(1.0));

    let run = out.join("runs/mini-1").join(&r.config_hash);
    for f in ["methods/changed.json", "docs/index.json", "augs/target.aug", "patterns/ranked.json", "verdicts.json", "report.json"] {
        assert!(run.join(f).is_file(), "{f}");
    }
}

#[test]
fn sr_one_drops_partial_files_and_internal_stays_isolated() {
    let dir = tempfile::tempdir().unwrap();
    let repo = build_mini_repo(dir.path());
    let entries = parse_manifest(&mini_manifest(dir.path(), &repo.fixing), dir.path()).unwrap();
    let mut opts = options(None);
    opts.provider = None;
    let ext = run_pipeline(&entries[0], &StrategyConfig::new(SearchLoc::External, SearchImp::AllImports, 1.0, false).unwrap(), &opts);
    assert_eq!(ext.status, CellStatus::Failed);
    assert!(ext.errors.iter().any(|e| e.stage == "search_external"));
    let int = run_pipeline(&entries[0], &StrategyConfig::new(SearchLoc::Internal, SearchImp::AllImports, 1.0, false).unwrap(), &opts);
    assert_eq!(int.status, CellStatus::Completed);
    // Util.java mentions neither Channel nor read
    assert_eq!(int.locations[0].docs_after_file_filter, 0);
    assert_eq!(int.verdict.unwrap().classification, Classification::Correct);
}

#[test]
fn matrix_on_mini_entry() {
    let dir = tempfile::tempdir().unwrap();
    let repo = build_mini_repo(dir.path());
    let entries = parse_manifest(&mini_manifest(dir.path(), &repo.fixing), dir.path()).unwrap();
    let m = run_matrix(&entries, &StrategyConfig::SR_GRID, &options(None)).unwrap();
    assert_eq!(m.cells.len(), 40);
    assert!(m.cells.iter().all(|c| c.status == CellStatus::Completed));
    assert!(!m.comparisons.is_empty());
}

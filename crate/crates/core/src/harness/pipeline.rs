use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock, RwLock};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{
    reductions, CellStatus, LocationStats, MethodCounts, MisuseManifestEntry, PipelineOptions, RunReport, StageError,
    TopKHit, SUPPORT_FLOOR,
};
use crate::api::{extract_context, ApiContext};
use crate::aug::{build_aug, render_aug, to_dot, Aug, MethodRef};
use crate::detect::{detect, relative_pattern_frequency, FixingPattern, VerdictRecord};
use crate::diff::{changed_methods, misuse_introducing_commit, CommitRef, Git, MethodChange};
use crate::filter::{filter_files, filter_methods, CandidateMethod, SearchImp, SearchLoc, StrategyConfig};
use crate::java::{parse_compilation_unit, CompilationUnit};
use crate::miner::{mine_patterns, rank_patterns, render_pattern, MinSupport, MiningConfig, Pattern, RankedPattern};
use crate::search::{external_candidates, project_prefix, Origin, SourceDoc};

/// The method under analysis.
#[derive(Debug, Clone)]
pub struct Target {
    pub method_ref: MethodRef,
    pub context: ApiContext,
    pub aug: Aug,
    pub package_name: String,
    pub source_text: String,
}

type ExternalSlot = Arc<OnceLock<Result<Vec<SourceDoc>, String>>>;

/// Per-entry work shared by all strategy cells: commit analysis, the target
/// method, internal documents and caches for external results and graphs.
pub struct PreparedEntry {
    pub entry: MisuseManifestEntry,
    pub analyzed_commit: Option<String>,
    pub counts: Option<MethodCounts>,
    pub import_counts: Vec<usize>,
    pub keyword_counts: Vec<usize>,
    pub changed: Vec<MethodChange>,
    pub target: Option<Target>,
    pub internal_docs: Vec<SourceDoc>,
    pub fixing_pattern: Option<FixingPattern>,
    pub errors: Vec<StageError>,
    external: Mutex<HashMap<Vec<String>, ExternalSlot>>,
    augs: RwLock<HashMap<(Origin, String, usize), Aug>>,
}

impl PreparedEntry {
    fn empty(entry: &MisuseManifestEntry) -> Self {
        Self {
            entry: entry.clone(),
            analyzed_commit: None,
            counts: None,
            import_counts: Vec::new(),
            keyword_counts: Vec::new(),
            changed: Vec::new(),
            target: None,
            internal_docs: Vec::new(),
            fixing_pattern: None,
            errors: Vec::new(),
            external: Mutex::new(HashMap::new()),
            augs: RwLock::new(HashMap::new()),
        }
    }

    /// External documents for one import set, fetched once per entry.
    fn external_docs(&self, target: &Target, imports: &[String], opts: &PipelineOptions) -> Result<Vec<SourceDoc>, String> {
        let slot = {
            let mut map = self.external.lock().expect("external cache poisoned");
            Arc::clone(map.entry(imports.to_vec()).or_default())
        };
        slot.get_or_init(|| {
            let provider = opts.provider.as_ref().ok_or("no external search provider configured")?;
            let mut ctx = target.context.clone();
            ctx.api_imports.retain(|i| imports.contains(&i.qualified_name));
            ctx.misused_imports = None;
            external_candidates(&ctx, provider.as_ref(), &project_prefix(&target.package_name), opts.limits)
                .map_err(|e| e.to_string())
        })
        .clone()
    }

    fn aug_for(&self, c: &CandidateMethod) -> Aug {
        let key = (c.origin, c.doc_identity.clone(), c.method_id);
        if let Some(g) = self.augs.read().expect("graph cache poisoned").get(&key) {
            return g.clone();
        }
        let g = build_aug(&c.method, &c.unit, MethodRef::new(&c.doc_identity, &c.method.name, c.method_id));
        self.augs.write().expect("graph cache poisoned").entry(key).or_insert(g).clone()
    }
}

/// Source text and parse outcome of every Java file, by path.
type ParsedTree = BTreeMap<String, (String, Result<CompilationUnit, String>)>;

fn parse_tree(git: &Git, commit: &str) -> Result<ParsedTree, crate::diff::DiffError> {
    let mut files = BTreeMap::new();
    for path in git.ls_tree(commit)? {
        if !path.ends_with(".java") {
            continue;
        }
        let text = git.show_file(commit, &path)?;
        let unit = parse_compilation_unit(&text).map_err(|e| e.to_string());
        files.insert(path, (text, unit));
    }
    Ok(files)
}

/// Runs the strategy-independent stages for one entry. Failures are recorded
/// in `errors`; later stages are skipped when their input is missing.
pub fn prepare_entry(entry: &MisuseManifestEntry) -> PreparedEntry {
    let mut p = PreparedEntry::empty(entry);
    if let Some(path) = &entry.fixing_pattern {
        match FixingPattern::load(path) {
            Ok(f) => p.fixing_pattern = Some(f),
            Err(e) => p.errors.push(StageError::new("fixing_pattern", e)),
        }
    }
    if entry.repo_url_or_path.contains("://") {
        p.errors.push(StageError::new("commit", "remote repositories must be cloned to a local path first"));
        return p;
    }
    let fixing = match CommitRef::new(&entry.repo_url_or_path, &entry.fixing_commit) {
        Ok(c) => c,
        Err(e) => {
            p.errors.push(StageError::new("commit", e));
            return p;
        }
    };
    let git = Git::new(&entry.repo_url_or_path);
    // labeled entries name the commit to check; misuse entries name the fix
    let analyzed = if entry.label.is_some() {
        git.resolve(&fixing.commit_id)
    } else {
        misuse_introducing_commit(&fixing, Some(std::slice::from_ref(&entry.misuse_file))).map(|c| c.commit_id)
    };
    let analyzed = match analyzed {
        Ok(c) => c,
        Err(e) => {
            p.errors.push(StageError::new("commit", e));
            return p;
        }
    };
    p.analyzed_commit = Some(analyzed.clone());
    let commit = CommitRef { repository_path: PathBuf::from(&entry.repo_url_or_path), commit_id: analyzed.clone() };
    match changed_methods(&commit) {
        Ok(cm) => {
            for s in cm.skipped {
                p.errors.push(StageError::new("parse_skipped", format!("{}: {}", s.file, s.message)));
            }
            p.changed = cm.methods;
        }
        Err(e) => {
            p.errors.push(StageError::new("changed_methods", e));
            return p;
        }
    }
    let files = match parse_tree(&git, &analyzed) {
        Ok(f) => f,
        Err(e) => {
            p.errors.push(StageError::new("tree", e));
            return p;
        }
    };

    let all = files.values().filter_map(|(_, u)| u.as_ref().ok()).map(|u| u.methods().len()).sum();
    let mut with_external_api = 0;
    for c in &p.changed {
        let Some((_, Ok(unit))) = files.get(&c.file) else { continue };
        let Some(m) = unit.methods().get(c.method_id).copied() else { continue };
        let ctx = extract_context(m, unit);
        if !ctx.api_imports.is_empty() {
            with_external_api += 1;
            p.import_counts.push(ctx.api_imports.len());
            p.keyword_counts.push(ctx.keywords.len());
        }
    }
    p.counts = Some(MethodCounts { all, changed: p.changed.len(), with_external_api });

    p.internal_docs = files
        .iter()
        .filter(|(path, _)| **path != entry.misuse_file)
        .enumerate()
        .map(|(rank, (path, (text, _)))| SourceDoc::new(Origin::Internal, path.clone(), text.clone(), rank))
        .collect();

    match files.get(&entry.misuse_file) {
        None => p.errors.push(StageError::new("target", format!("{} not found in {analyzed}", entry.misuse_file))),
        Some((_, Err(e))) => p.errors.push(StageError::new("target", format!("{}: {e}", entry.misuse_file))),
        Some((text, Ok(unit))) => {
            let methods = unit.methods();
            let named: Vec<usize> = (0..methods.len()).filter(|&i| methods[i].name == entry.misuse_method).collect();
            let changed_id = named
                .iter()
                .copied()
                .find(|&i| p.changed.iter().any(|c| c.file == entry.misuse_file && c.method_id == i));
            match changed_id.or(named.first().copied()) {
                None => p.errors.push(StageError::new(
                    "target",
                    format!("no method {} in {}", entry.misuse_method, entry.misuse_file),
                )),
                Some(i) => {
                    let m = methods[i];
                    let method_ref = MethodRef::new(&entry.misuse_file, &m.name, i);
                    let context = extract_context(m, unit).with_misused_imports(entry.misused_imports.iter().map(String::as_str));
                    let (s, e) = m.source_range;
                    p.target = Some(Target {
                        aug: build_aug(m, unit, method_ref.clone()),
                        method_ref,
                        context,
                        package_name: unit.package_name.clone(),
                        source_text: text.get(s..e).unwrap_or_default().to_string(),
                    });
                }
            }
        }
    }
    p
}

/// Whether a document imports any of `names`, directly or via its package.
fn imports_any(doc: &SourceDoc, names: &[String]) -> bool {
    let Ok(unit) = parse_compilation_unit(&doc.raw_text) else { return false };
    unit.imports.iter().any(|i| {
        names.iter().any(|n| {
            if i.is_wildcard {
                n.rsplit_once('.').is_some_and(|(pkg, _)| pkg == i.qualified_name)
            } else {
                *n == i.qualified_name
            }
        })
    })
}

pub(crate) fn config_hash(config: &StrategyConfig, opts: &PipelineOptions) -> String {
    let key = serde_json::to_string(&(config, &opts.mining, opts.match_mode, opts.top_k)).expect("serializable config");
    let digest = Sha256::digest(key.as_bytes());
    digest.iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect()
}

struct Artifacts<'a> {
    target: Option<&'a Target>,
    docs: Vec<SourceDoc>,
    corpus: Vec<Aug>,
    ranked: Vec<RankedPattern>,
    verdicts: Vec<VerdictRecord>,
}

#[derive(Serialize)]
struct DocIndex<'a> {
    file: String,
    origin: Origin,
    identity: &'a str,
    relevance_rank: usize,
}

#[derive(Serialize)]
struct RankedIndex<'a> {
    rank: usize,
    support: usize,
    fingerprint: &'a str,
    nodes: usize,
    edges: usize,
    occurrences: Vec<String>,
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), String> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    text.push('\n');
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn persist(dir: &Path, prep: &PreparedEntry, a: &Artifacts<'_>, report: &RunReport) -> Result<(), String> {
    let io = |p: &Path, e: std::io::Error| format!("{}: {e}", p.display());
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(|e| io(dir, e))?;
    }
    for sub in ["methods", "docs", "augs", "patterns"] {
        fs::create_dir_all(dir.join(sub)).map_err(|e| io(dir, e))?;
    }
    write_json(&dir.join("methods/changed.json"), &prep.changed)?;
    if let Some(t) = a.target {
        fs::write(dir.join("methods/target.java"), &t.source_text).map_err(|e| io(dir, e))?;
        write_json(&dir.join("methods/context.json"), &t.context)?;
        fs::write(dir.join("augs/target.aug"), render_aug(&t.aug)).map_err(|e| io(dir, e))?;
        fs::write(dir.join("augs/target.dot"), to_dot(&t.aug)).map_err(|e| io(dir, e))?;
    }
    let mut index = Vec::new();
    for (i, d) in a.docs.iter().enumerate() {
        let file = format!("{i:04}.java");
        fs::write(dir.join("docs").join(&file), &d.raw_text).map_err(|e| io(dir, e))?;
        index.push(DocIndex { file, origin: d.origin, identity: &d.identity, relevance_rank: d.relevance_rank });
    }
    write_json(&dir.join("docs/index.json"), &index)?;
    let corpus: String = a.corpus.iter().map(render_aug).collect::<Vec<_>>().join("\n");
    fs::write(dir.join("augs/corpus.aug"), corpus).map_err(|e| io(dir, e))?;
    let patterns: String = a.ranked.iter().map(|r| render_pattern(&r.pattern)).collect::<Vec<_>>().join("\n");
    fs::write(dir.join("patterns/patterns.aug"), patterns).map_err(|e| io(dir, e))?;
    let ranked: Vec<RankedIndex<'_>> = a
        .ranked
        .iter()
        .map(|r| RankedIndex {
            rank: r.rank,
            support: r.pattern.support,
            fingerprint: &r.pattern.fingerprint,
            nodes: r.pattern.graph.nodes.len(),
            edges: r.pattern.graph.edges.len(),
            occurrences: r.pattern.occurrences.iter().map(ToString::to_string).collect(),
        })
        .collect();
    write_json(&dir.join("patterns/ranked.json"), &ranked)?;
    write_json(&dir.join("verdicts.json"), &a.verdicts)?;
    write_json(&dir.join("report.json"), report)
}

/// Pools patterns from several locations, keeping the higher support per
/// fingerprint.
fn union_patterns(groups: Vec<Vec<Pattern>>) -> Vec<Pattern> {
    let mut by_fp: BTreeMap<String, Pattern> = BTreeMap::new();
    for p in groups.into_iter().flatten() {
        match by_fp.get_mut(&p.fingerprint) {
            Some(cur) if cur.support >= p.support => {}
            _ => {
                by_fp.insert(p.fingerprint.clone(), p);
            }
        }
    }
    by_fp.into_values().collect()
}

/// Runs one strategy cell on a prepared entry.
pub fn run_cell(prep: &PreparedEntry, config: &StrategyConfig, opts: &PipelineOptions) -> RunReport {
    let mut report = RunReport {
        entry_id: prep.entry.id.clone(),
        config: *config,
        config_label: config.label(),
        config_hash: config_hash(config, opts),
        status: CellStatus::Failed,
        skip_reason: None,
        analyzed_commit: prep.analyzed_commit.clone(),
        counts: prep.counts,
        reductions: prep.counts.map(|c| reductions(&c)),
        import_counts: prep.import_counts.clone(),
        keyword_counts: prep.keyword_counts.clone(),
        locations: Vec::new(),
        pattern_frequency: None,
        relative_pattern_frequency: None,
        top_k: None,
        verdict: None,
        label: prep.entry.label,
        errors: prep.errors.clone(),
    };
    let mut artifacts =
        Artifacts { target: prep.target.as_ref(), docs: Vec::new(), corpus: Vec::new(), ranked: Vec::new(), verdicts: Vec::new() };
    execute(prep, config, opts, &mut report, &mut artifacts);
    if let Some(out) = &opts.out_dir {
        let dir = out.join("runs").join(sanitize(&prep.entry.id)).join(&report.config_hash);
        if let Err(e) = persist(&dir, prep, &artifacts, &report) {
            log::error!("cannot write run directory: {e}");
            report.errors.push(StageError::new("persist", e));
        }
    }
    report
}

fn execute<'a>(prep: &'a PreparedEntry, config: &StrategyConfig, opts: &PipelineOptions, report: &mut RunReport, a: &mut Artifacts<'a>) {
    let Some(target) = &prep.target else { return };
    let misused = target.context.misused_import_names();
    if config.search_imp == SearchImp::MisusedImports && misused.is_empty() {
        report.status = CellStatus::Skipped;
        report.skip_reason = Some("no misused imports among the method's API imports".into());
        return;
    }
    if target.context.api_imports.is_empty() {
        // nothing third-party to compare against
        let v = detect(&target.aug, &[]);
        a.verdicts.push(v.record());
        report.verdict = Some(v.record());
        report.status = CellStatus::Completed;
        return;
    }
    let imports = match config.search_imp {
        SearchImp::AllImports => target.context.import_names(),
        SearchImp::MisusedImports => misused,
    };
    let locations: &[SearchLoc] = match config.search_loc {
        SearchLoc::Internal => &[SearchLoc::Internal],
        SearchLoc::External => &[SearchLoc::External],
        SearchLoc::Both => &[SearchLoc::Internal, SearchLoc::External],
    };
    let keywords = &target.context.keywords;
    let mut groups = Vec::new();
    let mut any_ok = false;
    for &loc in locations {
        let (name, docs, mining) = match loc {
            SearchLoc::Internal => {
                let docs: Vec<SourceDoc> = match config.search_imp {
                    SearchImp::AllImports => prep.internal_docs.clone(),
                    SearchImp::MisusedImports => prep.internal_docs.iter().filter(|d| imports_any(d, &imports)).cloned().collect(),
                };
                ("internal", Ok(docs), opts.mining.internal)
            }
            _ => ("external", prep.external_docs(target, &imports, opts), opts.mining.external),
        };
        let docs = match docs {
            Ok(d) => d,
            Err(e) => {
                report.errors.push(StageError::new(&format!("search_{name}"), e));
                continue;
            }
        };
        let retrieved = docs.len();
        let kept = filter_files(docs, keywords, config.sr, opts.match_mode);
        let methods = filter_methods(&kept, keywords, config.method_filter);
        let augs: Vec<Aug> = methods.iter().map(|c| prep.aug_for(c)).collect();
        let min_support = SUPPORT_FLOOR.max(mining.min_support.absolute_for(augs.len()));
        let cfg = MiningConfig { min_support: MinSupport::Absolute(min_support), ..mining };
        let mut stats = LocationStats {
            location: name.into(),
            docs_retrieved: retrieved,
            docs_after_file_filter: kept.len(),
            methods: augs.len(),
            patterns: 0,
            mining_truncated: false,
            mining_timed_out: false,
            min_support,
        };
        if !augs.is_empty() {
            match mine_patterns(&augs, &cfg) {
                Ok(r) => {
                    stats.patterns = r.patterns.len();
                    stats.mining_truncated = r.truncated;
                    stats.mining_timed_out = r.timed_out;
                    groups.push(r.patterns);
                }
                Err(e) => report.errors.push(StageError::new(&format!("mine_{name}"), e)),
            }
        }
        any_ok = true;
        report.locations.push(stats);
        a.docs.extend(kept);
        a.corpus.extend(augs);
    }
    if !any_ok {
        return;
    }
    let patterns = union_patterns(groups);
    a.ranked = rank_patterns(patterns.clone());
    if let Some(fix) = &prep.fixing_pattern {
        match relative_pattern_frequency(fix, &a.corpus) {
            Ok(f) => {
                report.relative_pattern_frequency = Some(f.value());
                report.pattern_frequency = Some(f);
            }
            // no methods survived: the fix occurs nowhere
            Err(_) => report.relative_pattern_frequency = Some(0.0),
        }
        let best_rank = a.ranked.iter().find(|r| fix.found_in(&r.pattern.graph)).map(|r| r.rank);
        report.top_k = Some(TopKHit { k: opts.top_k, best_rank, hit: best_rank.is_some_and(|r| r <= opts.top_k) });
    }
    let v = detect(&target.aug, &patterns);
    a.verdicts.push(v.record());
    report.verdict = Some(v.record());
    report.status = CellStatus::Completed;
}

/// Prepares the entry and runs a single strategy on it.
pub fn run_pipeline(entry: &MisuseManifestEntry, config: &StrategyConfig, opts: &PipelineOptions) -> RunReport {
    run_cell(&prepare_entry(entry), config, opts)
}

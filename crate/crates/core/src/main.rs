use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use apiwatch::api::extract_context;
use apiwatch::aug::{build_aug, parse_augs, Aug, MethodRef};
use apiwatch::detect::{detect, FixingPattern};
use apiwatch::diff::{changed_methods, misuse_introducing_commit, CommitRef};
use apiwatch::filter::{filter_files, filter_methods, SearchImp, SearchLoc, StrategyConfig};
use apiwatch::harness::{
    evaluate, load_manifest, matrix_rows, report_reductions, run_matrix, write_csv, MiningSettings, PipelineOptions,
};
use apiwatch::java::{parse_compilation_unit, CompilationUnit};
use apiwatch::miner::{mine_patterns, parse_patterns, rank_patterns, render_pattern, top_at_k, MinSupport};
use apiwatch::search::{
    external_candidates, internal_candidates, project_prefix, FsProvider, HttpProvider, SearchProvider, SourceDoc,
    UreqTransport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ProviderKind {
    Http,
    Fs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Loc {
    Internal,
    External,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Imp {
    All,
    Misused,
}

/// Settings shared by all subcommands; also readable from a JSON file.
#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
struct Settings {
    /// JSON file with defaults for any of these flags (kebab-case keys)
    #[arg(long, global = true)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    provider: Option<ProviderKind>,
    #[arg(long, global = true)]
    provider_url: Option<String>,
    /// Directory searched by the filesystem provider
    #[arg(long, global = true)]
    corpus_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Internal mining timeout in seconds
    #[arg(long, global = true)]
    timeout_internal: Option<u64>,
    /// External mining timeout in seconds
    #[arg(long, global = true)]
    timeout_external: Option<u64>,
    /// Absolute count (e.g. 3) or fraction of mined methods (e.g. 0.08)
    #[arg(long, global = true)]
    min_support: Option<String>,
    /// Satisfaction ratio threshold for file filtering
    #[arg(long, global = true)]
    sr: Option<f64>,
    #[arg(long, global = true)]
    method_filter: Option<bool>,
    #[arg(long, global = true, value_enum)]
    search_loc: Option<Loc>,
    #[arg(long, global = true, value_enum)]
    search_imp: Option<Imp>,
    #[arg(long, global = true)]
    top_k: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Accepted for reproducibility records; no step is randomized
    #[arg(long, global = true)]
    seed: Option<u64>,
}

impl Settings {
    /// Flags win over the config file.
    fn merged(self) -> Result<Self, String> {
        let Some(path) = &self.config else { return Ok(self) };
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let file: Settings = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(Settings {
            config: self.config,
            provider: self.provider.or(file.provider),
            provider_url: self.provider_url.or(file.provider_url),
            corpus_dir: self.corpus_dir.or(file.corpus_dir),
            workers: self.workers.or(file.workers),
            timeout_internal: self.timeout_internal.or(file.timeout_internal),
            timeout_external: self.timeout_external.or(file.timeout_external),
            min_support: self.min_support.or(file.min_support),
            sr: self.sr.or(file.sr),
            method_filter: self.method_filter.or(file.method_filter),
            search_loc: self.search_loc.or(file.search_loc),
            search_imp: self.search_imp.or(file.search_imp),
            top_k: self.top_k.or(file.top_k),
            out: self.out.or(file.out),
            seed: self.seed.or(file.seed),
        })
    }

    fn provider(&self) -> Result<Option<Arc<dyn SearchProvider>>, String> {
        let kind = self.provider.or(if self.corpus_dir.is_some() { Some(ProviderKind::Fs) } else { None });
        match kind {
            None => Ok(None),
            Some(ProviderKind::Fs) => {
                let dir = self.corpus_dir.as_ref().ok_or("--provider fs needs --corpus-dir")?;
                Ok(Some(Arc::new(FsProvider::open(dir).map_err(|e| e.to_string())?)))
            }
            Some(ProviderKind::Http) => {
                let url = self.provider_url.as_ref().ok_or("--provider http needs --provider-url")?;
                let transport = Box::new(UreqTransport::new(Duration::from_secs(30)));
                Ok(Some(Arc::new(HttpProvider::new(url, transport).map_err(|e| e.to_string())?)))
            }
        }
    }

    fn min_support(&self) -> Result<Option<MinSupport>, String> {
        let Some(s) = &self.min_support else { return Ok(None) };
        if let Ok(n) = s.parse::<usize>() {
            return Ok(Some(MinSupport::Absolute(n)));
        }
        match s.parse::<f64>() {
            Ok(f) if f > 0.0 && f <= 1.0 => Ok(Some(MinSupport::Relative(f))),
            _ => Err(format!("invalid --min-support {s:?}")),
        }
    }

    fn mining(&self) -> Result<MiningSettings, String> {
        let mut m = MiningSettings::default();
        if let Some(ms) = self.min_support()? {
            m.internal.min_support = ms;
            m.external.min_support = ms;
        }
        if let Some(t) = self.timeout_internal {
            m.internal.timeout = Some(Duration::from_secs(t));
        }
        if let Some(t) = self.timeout_external {
            m.external.timeout = Some(Duration::from_secs(t));
        }
        Ok(m)
    }

    fn strategy(&self) -> Result<StrategyConfig, String> {
        let loc = match self.search_loc.unwrap_or(Loc::External) {
            Loc::Internal => SearchLoc::Internal,
            Loc::External => SearchLoc::External,
            Loc::Both => SearchLoc::Both,
        };
        let imp = match self.search_imp.unwrap_or(Imp::All) {
            Imp::All => SearchImp::AllImports,
            Imp::Misused => SearchImp::MisusedImports,
        };
        StrategyConfig::new(loc, imp, self.sr.unwrap_or(0.0), self.method_filter.unwrap_or(false)).map_err(|e| e.to_string())
    }

    fn options(&self) -> Result<PipelineOptions, String> {
        Ok(PipelineOptions {
            provider: self.provider()?,
            mining: self.mining()?,
            top_k: self.top_k.unwrap_or(1),
            out_dir: self.out.clone(),
            workers: self.workers.unwrap_or(1),
            ..PipelineOptions::default()
        })
    }
}

#[derive(Debug, Parser)]
#[command(name = "apiwatch", version, about = "Change-based API misuse detection")]
struct Cli {
    #[command(flatten)]
    settings: Settings,
    #[command(subcommand)]
    command: Command,
}

/// A method inside a Java source file.
#[derive(Debug, Clone, clap::Args)]
struct MethodArgs {
    /// Java source file
    #[arg(long)]
    file: PathBuf,
    /// Method name (first declaration with that name)
    #[arg(long)]
    method: String,
    /// Qualified names of imports known to be misused
    #[arg(long = "misused-import")]
    misused_imports: Vec<String>,
    /// Project root for internal search (defaults to the file's directory)
    #[arg(long)]
    project_root: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the methods changed by a commit
    AnalyzeCommit {
        #[arg(long, default_value = ".")]
        repo: PathBuf,
        #[arg(long)]
        commit: String,
    },
    /// Find the commit that introduced the lines a fix changed
    Mic {
        #[arg(long, default_value = ".")]
        repo: PathBuf,
        /// The fixing commit
        #[arg(long)]
        commit: String,
        /// Only consider changes to these files
        #[arg(long = "file")]
        files: Vec<String>,
    },
    /// Retrieve documents similar to a method
    Search(MethodArgs),
    /// Retrieve, then filter documents and methods
    Filter(MethodArgs),
    /// Mine closed patterns from graphs or Java sources
    Mine {
        /// A graph text file, or a directory of Java files
        #[arg(long)]
        input: PathBuf,
    },
    /// Classify a usage against mined patterns
    Detect {
        /// Pattern file as written by `mine`
        #[arg(long)]
        patterns: PathBuf,
        /// A graph text file holding one usage, or a Java file with --method
        #[arg(long)]
        usage: PathBuf,
        #[arg(long)]
        method: Option<String>,
        /// Also report the relative frequency of this fix in the usage graphs
        #[arg(long)]
        fixing_pattern: Option<PathBuf>,
    },
    /// Score verdicts of labeled manifest entries
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Run all 40 strategy cells for each manifest entry
    Matrix {
        #[arg(long)]
        manifest: PathBuf,
    },
}

fn print_json<T: Serialize>(value: &T) -> Result<(), String> {
    println!("{}", serde_json::to_string_pretty(value).map_err(|e| e.to_string())?);
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), String> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    text.push('\n');
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_unit(path: &Path) -> Result<(String, CompilationUnit), String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let unit = parse_compilation_unit(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok((text, unit))
}

fn method_aug(path: &Path, name: &str) -> Result<(Aug, apiwatch::api::ApiContext, String), String> {
    let (_, unit) = load_unit(path)?;
    let methods = unit.methods();
    let id = methods.iter().position(|m| m.name == name).ok_or_else(|| format!("no method {name} in {}", path.display()))?;
    let m = methods[id];
    let doc = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    Ok((build_aug(m, &unit, MethodRef::new(doc, name, id)), extract_context(m, &unit), unit.package_name.clone()))
}

fn retrieve(settings: &Settings, args: &MethodArgs) -> Result<(Vec<SourceDoc>, apiwatch::api::ApiContext), String> {
    let (_, ctx, package) = method_aug(&args.file, &args.method)?;
    let ctx = if args.misused_imports.is_empty() {
        ctx
    } else {
        ctx.with_misused_imports(args.misused_imports.iter().map(String::as_str))
    };
    let strategy = settings.strategy()?;
    let mut query_ctx = ctx.clone();
    if strategy.search_imp == SearchImp::MisusedImports {
        let misused = ctx.misused_import_names();
        if misused.is_empty() {
            return Err("no misused imports among the method's API imports".into());
        }
        query_ctx.api_imports.retain(|i| misused.contains(&i.qualified_name));
    }
    query_ctx.misused_imports = None;
    let mut docs = Vec::new();
    if matches!(strategy.search_loc, SearchLoc::Internal | SearchLoc::Both) {
        let root = args
            .project_root
            .clone()
            .or_else(|| args.file.parent().map(Path::to_path_buf))
            .unwrap_or_else(|| PathBuf::from("."));
        let exclude = args
            .file
            .canonicalize()
            .ok()
            .zip(root.canonicalize().ok())
            .and_then(|(f, r)| f.strip_prefix(&r).ok().map(|p| p.to_string_lossy().replace('\\', "/")))
            .unwrap_or_default();
        docs.extend(internal_candidates(&root, &exclude).map_err(|e| e.to_string())?);
    }
    if matches!(strategy.search_loc, SearchLoc::External | SearchLoc::Both) {
        let provider = settings.provider()?.ok_or("external search needs --provider or --corpus-dir")?;
        docs.extend(
            external_candidates(&query_ctx, provider.as_ref(), &project_prefix(&package), Default::default())
                .map_err(|e| e.to_string())?,
        );
    }
    Ok((docs, ctx))
}

#[derive(Serialize)]
struct DocSummary<'a> {
    identity: &'a str,
    origin: apiwatch::search::Origin,
    package_name: &'a str,
    relevance_rank: usize,
}

fn summarize(docs: &[SourceDoc]) -> Vec<DocSummary<'_>> {
    docs.iter()
        .map(|d| DocSummary { identity: &d.identity, origin: d.origin, package_name: &d.package_name, relevance_rank: d.relevance_rank })
        .collect()
}

fn mine_input(path: &Path) -> Result<Vec<Aug>, String> {
    if path.is_dir() {
        let mut augs = Vec::new();
        for entry in walkdir::WalkDir::new(path).sort_by_file_name() {
            let entry = entry.map_err(|e| e.to_string())?;
            if entry.path().extension().is_none_or(|x| x != "java") {
                continue;
            }
            let rel = entry.path().strip_prefix(path).unwrap_or(entry.path()).to_string_lossy().replace('\\', "/");
            let unit = match load_unit(entry.path()) {
                Ok((_, u)) => u,
                Err(e) => {
                    log::warn!("skipping {e}");
                    continue;
                }
            };
            for (i, m) in unit.methods().into_iter().enumerate() {
                augs.push(build_aug(m, &unit, MethodRef::new(&rel, &m.name, i)));
            }
        }
        Ok(augs)
    } else {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(parse_augs(&text).map_err(|e| e.to_string())?.into_iter().map(|b| b.aug).collect())
    }
}

fn output_dir(settings: &Settings) -> Result<PathBuf, String> {
    let out = settings.out.clone().unwrap_or_else(|| PathBuf::from("apiwatch-out"));
    fs::create_dir_all(&out).map_err(|e| format!("{}: {e}", out.display()))?;
    Ok(out)
}

fn run(cli: Cli) -> Result<(), String> {
    let settings = cli.settings.merged()?;
    if let Some(seed) = settings.seed {
        log::debug!("seed {seed} recorded; no randomized step uses it");
    }
    match cli.command {
        Command::AnalyzeCommit { repo, commit } => {
            let c = CommitRef::new(repo, commit).map_err(|e| e.to_string())?;
            print_json(&changed_methods(&c).map_err(|e| e.to_string())?)
        }
        Command::Mic { repo, commit, files } => {
            let c = CommitRef::new(repo, commit).map_err(|e| e.to_string())?;
            let files = (!files.is_empty()).then_some(files);
            let mic = misuse_introducing_commit(&c, files.as_deref()).map_err(|e| e.to_string())?;
            println!("{}", mic.commit_id);
            Ok(())
        }
        Command::Search(args) => {
            let (docs, _) = retrieve(&settings, &args)?;
            print_json(&summarize(&docs))
        }
        Command::Filter(args) => {
            let (docs, ctx) = retrieve(&settings, &args)?;
            let strategy = settings.strategy()?;
            let kept = filter_files(docs, &ctx.keywords, strategy.sr, Default::default());
            let methods: Vec<String> =
                filter_methods(&kept, &ctx.keywords, strategy.method_filter).iter().map(|c| c.usage_ref()).collect();
            print_json(&serde_json::json!({
                "keywords": ctx.keywords,
                "documents": summarize(&kept),
                "methods": methods,
            }))
        }
        Command::Mine { input } => {
            let augs = mine_input(&input)?;
            let mut cfg = settings.mining()?.external;
            if settings.min_support.is_none() {
                cfg.min_support = MinSupport::Absolute(2);
            }
            let result = mine_patterns(&augs, &cfg).map_err(|e| e.to_string())?;
            if result.truncated || result.timed_out {
                log::warn!("mining stopped early (truncated: {}, timed out: {})", result.truncated, result.timed_out);
            }
            let mut ranked = rank_patterns(result.patterns);
            if let Some(k) = settings.top_k {
                ranked = top_at_k(&ranked, k);
            }
            let text: Vec<String> = ranked.iter().map(|r| render_pattern(&r.pattern)).collect();
            match &settings.out {
                Some(p) => fs::write(p, text.join("\n")).map_err(|e| format!("{}: {e}", p.display())),
                None => {
                    print!("{}", text.join("\n"));
                    Ok(())
                }
            }
        }
        Command::Detect { patterns, usage, method, fixing_pattern } => {
            let text = fs::read_to_string(&patterns).map_err(|e| format!("{}: {e}", patterns.display()))?;
            let patterns = parse_patterns(&text).map_err(|e| e.to_string())?;
            let usage_aug = match method {
                Some(m) => method_aug(&usage, &m)?.0,
                None => {
                    let mut augs = mine_input(&usage)?;
                    if augs.len() != 1 {
                        return Err(format!("{} holds {} graphs; expected one", usage.display(), augs.len()));
                    }
                    augs.remove(0)
                }
            };
            let verdict = detect(&usage_aug, &patterns).record();
            match fixing_pattern {
                None => print_json(&verdict),
                Some(fp) => {
                    let fix = FixingPattern::load(&fp).map_err(|e| e.to_string())?;
                    let graphs: Vec<Aug> = patterns.iter().map(|p| p.graph.clone()).collect();
                    let found = graphs.iter().any(|g| fix.found_in(g));
                    print_json(&serde_json::json!({ "verdict": verdict, "fix_in_patterns": found }))
                }
            }
        }
        Command::Evaluate { manifest } => {
            let entries = load_manifest(&manifest).map_err(|e| e.to_string())?;
            let out = output_dir(&settings)?;
            let mut opts = settings.options()?;
            opts.out_dir = Some(out.clone());
            let (report, runs) = evaluate(&entries, &settings.strategy()?, &opts).map_err(|e| e.to_string())?;
            write_json(&out.join("evaluation.json"), &report)?;
            write_csv(&out.join("evaluation.csv"), &report.rows).map_err(|e| e.to_string())?;
            write_csv(&out.join("reductions.csv"), &report_reductions(&runs).rows).map_err(|e| e.to_string())?;
            print_json(&serde_json::json!({ "confusion": report.confusion, "scores": report.scores }))
        }
        Command::Matrix { manifest } => {
            let entries = load_manifest(&manifest).map_err(|e| e.to_string())?;
            let out = output_dir(&settings)?;
            let mut opts = settings.options()?;
            opts.out_dir = Some(out.clone());
            let grid = match settings.sr {
                Some(sr) => vec![sr],
                None => StrategyConfig::SR_GRID.to_vec(),
            };
            let report = run_matrix(&entries, &grid, &opts).map_err(|e| e.to_string())?;
            let reductions = report_reductions(&report.cells);
            write_json(&out.join("matrix.json"), &report)?;
            write_json(&out.join("reductions.json"), &reductions)?;
            write_csv(&out.join("matrix.csv"), &matrix_rows(&report.cells)).map_err(|e| e.to_string())?;
            write_csv(&out.join("comparisons.csv"), &report.comparisons).map_err(|e| e.to_string())?;
            write_csv(&out.join("reductions.csv"), &reductions.rows).map_err(|e| e.to_string())?;
            let completed = report.cells.iter().filter(|c| c.status == apiwatch::harness::CellStatus::Completed).count();
            println!("{} cells ({completed} completed), reports in {}", report.cells.len(), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

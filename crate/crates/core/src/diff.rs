//! Changed-method extraction from commits and misuse-introducing commit
//! detection by blaming the lines a fix touched.
//!
//! All repository access goes through the `git` executable; the work tree is
//! never modified.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::java::{parse_compilation_unit, CompilationUnit, MethodDecl};

/// Hash of git's empty tree, the diff base for root commits.
pub const EMPTY_TREE: &str = "4b825dc642cb6eb9a060e54bf8d69288fbee4904";

#[derive(Debug, Error)]
pub enum DiffError {
    #[error("git {args} failed: {message}")]
    RepositoryAccess { args: String, message: String },
    #[error("invalid commit id {0:?}")]
    InvalidCommit(String),
    #[error("the fix changed no pre-existing lines that could be blamed")]
    NoBlamedLines,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRef {
    pub repository_path: PathBuf,
    pub commit_id: String,
}

impl CommitRef {
    pub fn new(repository_path: impl Into<PathBuf>, commit_id: impl Into<String>) -> Result<Self, DiffError> {
        let commit_id = commit_id.into();
        if commit_id.is_empty() || !commit_id.chars().all(|c| c.is_ascii_hexdigit()) {
            return Err(DiffError::InvalidCommit(commit_id));
        }
        Ok(Self { repository_path: repository_path.into(), commit_id })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Lines {
    pub start: u32,
    pub end: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineRange {
    pub file: String,
    pub start: u32,
    pub end: u32,
}

impl LineRange {
    pub fn overlaps(&self, other: &LineRange) -> bool {
        self.file == other.file && self.start <= other.end && other.start <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodChange {
    pub file: String,
    pub method_name: String,
    /// Position of the method among all methods of the file.
    pub method_id: usize,
    pub declaration_span: LineRange,
    pub changed_lines: Vec<LineRange>,
    pub source_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseSkipped {
    pub file: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangedMethods {
    pub methods: Vec<MethodChange>,
    pub skipped: Vec<ParseSkipped>,
}

/// Thin wrapper over the git command line for one repository.
#[derive(Debug, Clone)]
pub struct Git {
    repo: PathBuf,
}

impl Git {
    pub fn new(repo: impl Into<PathBuf>) -> Self {
        Self { repo: repo.into() }
    }

    pub fn path(&self) -> &Path {
        &self.repo
    }

    pub fn run(&self, args: &[&str]) -> Result<String, DiffError> {
        let out = Command::new("git")
            .arg("-C")
            .arg(&self.repo)
            .args(["-c", "core.quotepath=off", "-c", "diff.noprefix=false"])
            .args(args)
            .output()
            .map_err(|e| DiffError::RepositoryAccess { args: args.join(" "), message: e.to_string() })?;
        if !out.status.success() {
            return Err(DiffError::RepositoryAccess {
                args: args.join(" "),
                message: String::from_utf8_lossy(&out.stderr).trim().to_string(),
            });
        }
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    }

    /// Full hash of a commit-ish.
    pub fn resolve(&self, rev: &str) -> Result<String, DiffError> {
        Ok(self.run(&["rev-parse", "--verify", "--quiet", &format!("{rev}^{{commit}}")])?.trim().to_string())
    }

    pub fn first_parent(&self, commit: &str) -> Result<Option<String>, DiffError> {
        let line = self.run(&["rev-list", "--parents", "-n", "1", commit])?;
        Ok(line.split_whitespace().nth(1).map(str::to_string))
    }

    pub fn show_file(&self, commit: &str, path: &str) -> Result<String, DiffError> {
        self.run(&["show", &format!("{commit}:{path}")])
    }

    /// Paths of all files in a commit's tree.
    pub fn ls_tree(&self, commit: &str) -> Result<Vec<String>, DiffError> {
        let out = self.run(&["ls-tree", "-r", "-z", "--name-only", commit])?;
        Ok(out.split('\0').filter(|s| !s.is_empty()).map(str::to_string).collect())
    }

    pub fn diff(&self, base: &str, commit: &str) -> Result<Vec<FileDiff>, DiffError> {
        Ok(parse_unified_diff(&self.run(&["diff", "--unified=0", "--no-color", "--no-ext-diff", base, commit])?))
    }

    pub fn committer_time(&self, commit: &str) -> Result<i64, DiffError> {
        let out = self.run(&["show", "-s", "--format=%ct", commit])?;
        out.trim().parse().map_err(|_| DiffError::RepositoryAccess {
            args: format!("show -s {commit}"),
            message: format!("unexpected timestamp {out:?}"),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hunk {
    pub old_start: u32,
    pub old_count: u32,
    pub new_start: u32,
    pub new_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileDiff {
    pub old_path: Option<String>,
    pub new_path: Option<String>,
    pub hunks: Vec<Hunk>,
}

/// Undoes git's C-style quoting of unusual paths.
fn unquote_path(s: &str) -> String {
    let Some(inner) = s.strip_prefix('"').and_then(|x| x.strip_suffix('"')) else {
        return s.to_string();
    };
    let mut bytes = Vec::new();
    let mut it = inner.bytes().peekable();
    while let Some(b) = it.next() {
        if b != b'\\' {
            bytes.push(b);
            continue;
        }
        match it.next() {
            Some(b'n') => bytes.push(b'\n'),
            Some(b't') => bytes.push(b'\t'),
            Some(b'r') => bytes.push(b'\r'),
            Some(d @ b'0'..=b'7') => {
                let mut v = u32::from(d - b'0');
                for _ in 0..2 {
                    if let Some(&n @ b'0'..=b'7') = it.peek() {
                        v = v * 8 + u32::from(n - b'0');
                        it.next();
                    }
                }
                bytes.push(v as u8);
            }
            Some(other) => bytes.push(other),
            None => bytes.push(b'\\'),
        }
    }
    String::from_utf8_lossy(&bytes).into_owned()
}

fn strip_side(path: &str, prefix: &str) -> Option<String> {
    let path = path.trim_end_matches('\r');
    let unq = unquote_path(path.split('\t').next().unwrap_or(path));
    if unq == "/dev/null" {
        return None;
    }
    Some(unq.strip_prefix(prefix).unwrap_or(&unq).to_string())
}

fn parse_range(s: &str) -> Option<(u32, u32)> {
    let (start, count) = match s.split_once(',') {
        Some((a, b)) => (a.parse().ok()?, b.parse().ok()?),
        None => (s.parse().ok()?, 1),
    };
    Some((start, count))
}

/// Parses `git diff --unified=0` output into per-file hunk headers.
pub fn parse_unified_diff(text: &str) -> Vec<FileDiff> {
    let mut files: Vec<FileDiff> = Vec::new();
    for raw in text.lines() {
        let line = raw.trim_end_matches('\r');
        if line.starts_with("diff --git ") {
            files.push(FileDiff { old_path: None, new_path: None, hunks: Vec::new() });
        } else if let Some(rest) = line.strip_prefix("--- ") {
            if let Some(f) = files.last_mut() {
                if f.hunks.is_empty() {
                    f.old_path = strip_side(rest, "a/");
                }
            }
        } else if let Some(rest) = line.strip_prefix("+++ ") {
            if let Some(f) = files.last_mut() {
                if f.hunks.is_empty() {
                    f.new_path = strip_side(rest, "b/");
                }
            }
        } else if let Some(rest) = line.strip_prefix("@@ -") {
            let Some(f) = files.last_mut() else { continue };
            let mut parts = rest.split(' ');
            let old = parts.next().and_then(parse_range);
            let new = parts.next().and_then(|p| p.strip_prefix('+')).and_then(parse_range);
            if let (Some((old_start, old_count)), Some((new_start, new_count))) = (old, new) {
                f.hunks.push(Hunk { old_start, old_count, new_start, new_count });
            }
        }
    }
    files
}

fn is_java(path: &str) -> bool {
    path.ends_with(".java")
}

/// `(name, ordinal among methods of that name)` for each method, in order.
fn method_keys(methods: &[&MethodDecl]) -> Vec<(String, usize)> {
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    methods
        .iter()
        .map(|m| {
            let k = seen.entry(m.name.as_str()).or_insert(0);
            *k += 1;
            (m.name.clone(), *k - 1)
        })
        .collect()
}

fn parse_version(git: &Git, commit: &str, path: &str) -> Result<(String, Result<CompilationUnit, String>), DiffError> {
    let text = git.show_file(commit, path)?;
    let unit = parse_compilation_unit(&text).map_err(|e| e.to_string());
    Ok((text, unit))
}

/// Methods of the post-commit tree touched by the commit's diff.
///
/// Added and modified lines mark the methods whose span they fall in. Pure
/// deletions are located in the pre-image and mapped to the post-image method
/// with the same name and overload position.
pub fn changed_methods(commit: &CommitRef) -> Result<ChangedMethods, DiffError> {
    let git = Git::new(&commit.repository_path);
    let id = git.resolve(&commit.commit_id)?;
    let parent = git.first_parent(&id)?;
    let base = parent.clone().unwrap_or_else(|| EMPTY_TREE.to_string());
    let mut result = ChangedMethods::default();
    for fd in git.diff(&base, &id)? {
        let Some(path) = fd.new_path.clone().filter(|p| is_java(p)) else { continue };
        let (text, unit) = parse_version(&git, &id, &path)?;
        let unit = match unit {
            Ok(u) => u,
            Err(message) => {
                log::warn!("skipping {path}: {message}");
                result.skipped.push(ParseSkipped { file: path, message });
                continue;
            }
        };
        let methods = unit.methods();
        let mut changed: BTreeMap<usize, Vec<LineRange>> = BTreeMap::new();
        let mut deletions = Vec::new();
        for h in &fd.hunks {
            if h.new_count > 0 {
                let (s, e) = (h.new_start, h.new_start + h.new_count - 1);
                for (i, m) in methods.iter().enumerate() {
                    if m.span.overlaps(s, e) {
                        let r = LineRange { file: path.clone(), start: s.max(m.span.start), end: e.min(m.span.end) };
                        changed.entry(i).or_default().push(r);
                    }
                }
            } else if h.old_count > 0 {
                deletions.push(*h);
            }
        }
        if !deletions.is_empty() {
            if let (Some(parent), Some(old_path)) = (&parent, &fd.old_path) {
                match parse_version(&git, parent, old_path)?.1 {
                    Ok(old_unit) => {
                        let old_methods = old_unit.methods();
                        let old_keys = method_keys(&old_methods);
                        let new_keys = method_keys(&methods);
                        for h in &deletions {
                            let (s, e) = (h.old_start, h.old_start + h.old_count - 1);
                            for (oi, om) in old_methods.iter().enumerate() {
                                if !om.span.overlaps(s, e) {
                                    continue;
                                }
                                if let Some(ni) = new_keys.iter().position(|k| *k == old_keys[oi]) {
                                    let span = methods[ni].span;
                                    // the deletion point sits after post-image line `new_start`
                                    let at = h.new_start.clamp(span.start, span.end);
                                    changed.entry(ni).or_default().push(LineRange { file: path.clone(), start: at, end: at });
                                }
                            }
                        }
                    }
                    Err(message) => log::warn!("cannot map deletions in {old_path}: {message}"),
                }
            }
        }
        for (i, mut ranges) in changed {
            let m = methods[i];
            ranges.sort_by_key(|r| (r.start, r.end));
            ranges.dedup();
            let (s, e) = m.source_range;
            result.methods.push(MethodChange {
                file: path.clone(),
                method_name: m.name.clone(),
                method_id: i,
                declaration_span: LineRange { file: path.clone(), start: m.span.start, end: m.span.end },
                changed_lines: ranges,
                source_text: text.get(s..e).unwrap_or_default().to_string(),
            });
        }
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct BlameEntry {
    commit: String,
    committer_time: i64,
}

fn parse_line_porcelain(text: &str) -> Vec<BlameEntry> {
    let mut out = Vec::new();
    let mut current: Option<String> = None;
    let mut time = 0;
    for line in text.lines() {
        if let Some(content) = line.strip_prefix('\t') {
            let _ = content;
            if let Some(c) = current.take() {
                out.push(BlameEntry { commit: c, committer_time: time });
            }
            continue;
        }
        let first = line.split(' ').next().unwrap_or("");
        if current.is_none() && first.len() >= 40 && first.chars().all(|c| c.is_ascii_hexdigit()) {
            current = Some(first.to_string());
            time = 0;
        } else if let Some(t) = line.strip_prefix("committer-time ") {
            time = t.trim().parse().unwrap_or(0);
        }
    }
    out
}

/// The commit that last touched the lines a fix modified or removed; the
/// latest by committer time when several are blamed, ties broken by the
/// greater hash.
pub fn misuse_introducing_commit(fixing_commit: &CommitRef, fixed_files: Option<&[String]>) -> Result<CommitRef, DiffError> {
    let git = Git::new(&fixing_commit.repository_path);
    let id = git.resolve(&fixing_commit.commit_id)?;
    let Some(parent) = git.first_parent(&id)? else {
        return Err(DiffError::NoBlamedLines);
    };
    let mut best: Option<BlameEntry> = None;
    for fd in git.diff(&parent, &id)? {
        let Some(old_path) = fd.old_path.as_deref() else { continue };
        if let Some(files) = fixed_files {
            let wanted = files.iter().any(|f| f == old_path || fd.new_path.as_deref() == Some(f.as_str()));
            if !wanted {
                continue;
            }
        }
        for h in fd.hunks.iter().filter(|h| h.old_count > 0) {
            let range = format!("{},{}", h.old_start, h.old_start + h.old_count - 1);
            let out = git.run(&["blame", "--line-porcelain", "-L", &range, &parent, "--", old_path])?;
            for entry in parse_line_porcelain(&out) {
                let newer = best.as_ref().is_none_or(|b| {
                    (entry.committer_time, entry.commit.as_str()) > (b.committer_time, b.commit.as_str())
                });
                if newer {
                    best = Some(entry);
                }
            }
        }
    }
    let best = best.ok_or(DiffError::NoBlamedLines)?;
    Ok(CommitRef { repository_path: fixing_commit.repository_path.clone(), commit_id: best.commit })
}

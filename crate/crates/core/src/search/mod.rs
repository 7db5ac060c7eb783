//! Retrieval of candidate source files: the project itself (internal search)
//! or a code search provider (external search).

mod fs;
mod http;

use std::collections::HashSet;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::api::{shares_project_prefix, ApiContext};

pub use fs::FsProvider;
pub use http::{FixtureTransport, HttpProvider, HttpTransport, UreqTransport};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("search provider failed: {0}")]
    Provider(String),
    #[error("query contains no import statements")]
    EmptyQuery,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    Internal,
    External,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceDoc {
    pub origin: Origin,
    /// Relative path for local files, provider id for external ones.
    pub identity: String,
    pub package_name: String,
    pub raw_text: String,
    pub relevance_rank: usize,
}

impl SourceDoc {
    pub fn new(origin: Origin, identity: impl Into<String>, raw_text: String, relevance_rank: usize) -> Self {
        Self {
            origin,
            identity: identity.into(),
            package_name: package_of(&raw_text).unwrap_or_default(),
            raw_text,
            relevance_rank,
        }
    }
}

/// The package declared by a Java file, read without a full parse.
pub fn package_of(text: &str) -> Option<String> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| {
        Regex::new(r"(?m)^\s*(?:@[\w.]+(?:\([^)]*\))?\s*)*package\s+([\w.\s]+?)\s*;").expect("valid regex")
    });
    let caps = re.captures(text)?;
    Some(caps[1].split_whitespace().collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchQuery {
    pub import_statements: Vec<String>,
    /// Results requested per page.
    pub page_limit: usize,
}

impl SearchQuery {
    pub fn new<S: Into<String>>(imports: impl IntoIterator<Item = S>, page_limit: usize) -> Result<Self, SearchError> {
        let mut import_statements: Vec<String> = Vec::new();
        for i in imports {
            let i = i.into();
            if !import_statements.contains(&i) {
                import_statements.push(i);
            }
        }
        if import_statements.is_empty() {
            return Err(SearchError::EmptyQuery);
        }
        Ok(Self { import_statements, page_limit: page_limit.max(1) })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchHit {
    pub identity: String,
    pub raw_text: String,
    pub relevance_rank: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchPage {
    pub hits: Vec<SearchHit>,
    pub has_more: bool,
}

/// A code search backend. Identical queries against unchanged backing data
/// must return identical pages.
pub trait SearchProvider: Send + Sync {
    fn query(&self, q: &SearchQuery, page: usize) -> Result<SearchPage, SearchError>;
}

/// Every `.java` file of a project in lexicographic path order, except `exclude_file`.
pub fn internal_candidates(project_root: &Path, exclude_file: &str) -> Result<Vec<SourceDoc>, SearchError> {
    let files = java_files(project_root)?;
    if !exclude_file.is_empty() && !files.iter().any(|(rel, _)| rel == exclude_file) {
        log::warn!("excluded file {exclude_file} not found under {}", project_root.display());
    }
    Ok(files
        .into_iter()
        .filter(|(rel, _)| rel != exclude_file)
        .enumerate()
        .map(|(rank, (rel, text))| SourceDoc::new(Origin::Internal, rel, text, rank))
        .collect())
}

/// `(relative path with '/' separators, content)` of every `.java` file, sorted by path.
pub(crate) fn java_files(root: &Path) -> Result<Vec<(String, String)>, SearchError> {
    let io_err = |path: &Path, source: std::io::Error| SearchError::Io { path: path.display().to_string(), source };
    let mut out = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            io_err(&path, e.into())
        })?;
        if !entry.file_type().is_file() || entry.path().extension().is_none_or(|x| x != "java") {
            continue;
        }
        let bytes = std::fs::read(entry.path()).map_err(|e| io_err(entry.path(), e))?;
        let rel = entry
            .path()
            .strip_prefix(root)
            .unwrap_or(entry.path())
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        out.push((rel, String::from_utf8_lossy(&bytes).into_owned()));
    }
    // walkdir sorts siblings; a full-path sort makes the order independent of directory nesting
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionLimits {
    /// Maximum results kept per search session.
    pub session_cap: usize,
    pub page_size: usize,
}

impl Default for SessionLimits {
    fn default() -> Self {
        Self { session_cap: 1000, page_size: 100 }
    }
}

/// Pages through one query until the cap is reached or the provider runs dry.
pub fn run_session(provider: &dyn SearchProvider, imports: &[String], limits: SessionLimits) -> Result<Vec<SearchHit>, SearchError> {
    let q = SearchQuery::new(imports.iter().cloned(), limits.page_size)?;
    let mut hits = Vec::new();
    let mut page = 0;
    while hits.len() < limits.session_cap {
        let p = provider.query(&q, page)?;
        let got = p.hits.len();
        hits.extend(p.hits);
        if !p.has_more || got == 0 {
            break;
        }
        page += 1;
    }
    hits.truncate(limits.session_cap);
    Ok(hits)
}

/// External search with up to two sessions (misused imports, then all API
/// imports), merged in session order without duplicates and without files from
/// the origin project.
pub fn external_candidates(
    context: &ApiContext,
    provider: &dyn SearchProvider,
    origin_package_prefix: &str,
    limits: SessionLimits,
) -> Result<Vec<SourceDoc>, SearchError> {
    let all = context.import_names();
    if all.is_empty() {
        return Err(SearchError::EmptyQuery);
    }
    let mut sessions = Vec::new();
    let misused = context.misused_import_names();
    if !misused.is_empty() {
        sessions.push(misused);
    }
    sessions.push(all);

    let mut seen = HashSet::new();
    let mut docs = Vec::new();
    for imports in &sessions {
        for hit in run_session(provider, imports, limits)? {
            if !seen.insert(hit.identity.clone()) {
                continue;
            }
            let doc = SourceDoc::new(Origin::External, hit.identity, hit.raw_text, docs.len());
            if !origin_package_prefix.is_empty()
                && !doc.package_name.is_empty()
                && shares_project_prefix(&doc.package_name, origin_package_prefix)
            {
                log::debug!("dropping {} from origin project", doc.identity);
                continue;
            }
            docs.push(doc);
        }
    }
    for (rank, d) in docs.iter_mut().enumerate() {
        d.relevance_rank = rank;
    }
    Ok(docs)
}

/// First three qualifiers of a package, the unit used for project identity.
pub fn project_prefix(package_name: &str) -> String {
    package_name.split('.').filter(|s| !s.is_empty()).take(3).collect::<Vec<_>>().join(".")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    use crate::java::ImportDecl;

    struct Canned(Vec<Vec<(&'static str, String)>>);

    impl SearchProvider for Canned {
        fn query(&self, q: &SearchQuery, page: usize) -> Result<SearchPage, SearchError> {
            // session selected by the first import: "m.*" misused, anything else = all
            let set = if q.import_statements.len() == 1 && q.import_statements[0].starts_with("m.") { &self.0[0] } else { &self.0[1] };
            let hits: Vec<SearchHit> = set
                .iter()
                .enumerate()
                .skip(page * q.page_limit)
                .take(q.page_limit)
                .map(|(i, (id, text))| SearchHit { identity: id.to_string(), raw_text: text.clone(), relevance_rank: i })
                .collect();
            Ok(SearchPage { has_more: (page + 1) * q.page_limit < set.len(), hits })
        }
    }

    fn ctx(all: &[&str], misused: Option<&[&str]>) -> ApiContext {
        let c = ApiContext {
            method: "m".into(),
            api_imports: all.iter().map(|q| ImportDecl::new(*q, false)).collect(),
            keywords: BTreeSet::new(),
            misused_imports: None,
        };
        match misused {
            Some(m) => c.with_misused_imports(m.iter().copied()),
            None => c,
        }
    }

    #[test]
    fn package_extraction() {
        assert_eq!(package_of("// x\npackage a.b.c;\nclass X{}").as_deref(), Some("a.b.c"));
        assert_eq!(package_of("@Deprecated package a . b ;"), Some("a.b".into()));
        assert_eq!(package_of("class X {}"), None);
    }

    #[test]
    fn merges_sessions_with_dedup_and_exclusion() {
        let own = "package org.me.app.sub; class Y {}".to_string();
        let other = "package com.other; class Z {}".to_string();
        let p = Canned(vec![
            vec![("f1", other.clone()), ("f2", other.clone())],
            vec![("f2", other.clone()), ("mine", own), ("f3", other)],
        ]);
        let c = ctx(&["m.A", "n.B"], Some(&["m.A"]));
        let docs = external_candidates(&c, &p, "org.me.app", SessionLimits { session_cap: 10, page_size: 1 }).unwrap();
        let ids: Vec<&str> = docs.iter().map(|d| d.identity.as_str()).collect();
        assert_eq!(ids, ["f1", "f2", "f3"]);
        assert_eq!(docs.iter().map(|d| d.relevance_rank).collect::<Vec<_>>(), [0, 1, 2]);
    }

    #[test]
    fn caps_each_session() {
        let mk = |prefix: &str| (0..1500).map(|i| (Box::leak(format!("{prefix}{i}").into_boxed_str()) as &'static str, String::new())).collect::<Vec<_>>();
        let p = Canned(vec![mk("a"), mk("b")]);
        let c = ctx(&["m.A", "n.B"], Some(&["m.A"]));
        let docs = external_candidates(&c, &p, "", SessionLimits::default()).unwrap();
        assert_eq!(docs.len(), 2000);
    }

    #[test]
    fn empty_api_context_is_rejected() {
        let p = Canned(vec![vec![], vec![]]);
        assert!(matches!(external_candidates(&ctx(&[], None), &p, "", SessionLimits::default()), Err(SearchError::EmptyQuery)));
    }

    #[test]
    fn project_prefix_takes_three() {
        assert_eq!(project_prefix("a.b.c.d"), "a.b.c");
        assert_eq!(project_prefix("a"), "a");
    }
}

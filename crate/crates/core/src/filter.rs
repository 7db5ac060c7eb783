//! File-level filtering by satisfaction ratio and method-level filtering by
//! keyword containment.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::java::{is_reserved, parse_compilation_unit, CompilationUnit, MethodDecl};
use crate::search::{Origin, SourceDoc};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("keyword set is empty")]
    EmptyKeywordSet,
    #[error("no methods given")]
    EmptyInput,
    #[error("satisfaction ratio threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
}

/// Fraction of a keyword set found in a text, kept as an exact ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SatisfactionRatio {
    pub matched: usize,
    pub total: usize,
}

impl SatisfactionRatio {
    pub fn value(&self) -> f64 {
        self.matched as f64 / self.total as f64
    }

    /// `self >= threshold`, exact when the threshold is a multiple of 1/2^k
    /// (which all of 0, 0.25, 0.5, 0.75 and 1 are).
    pub fn at_least(&self, threshold: f64) -> bool {
        self.matched as f64 >= threshold * self.total as f64
    }
}

impl fmt::Display for SatisfactionRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.matched, self.total)
    }
}

/// Where similar code is looked for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SearchLoc {
    Internal,
    External,
    /// Internal first, then external; patterns of both are pooled.
    Both,
}

/// Which API imports drive the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SearchImp {
    AllImports,
    MisusedImports,
}

/// One search and filter configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub search_loc: SearchLoc,
    pub search_imp: SearchImp,
    pub sr: f64,
    pub method_filter: bool,
}

impl StrategyConfig {
    pub const SR_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

    pub fn new(search_loc: SearchLoc, search_imp: SearchImp, sr: f64, method_filter: bool) -> Result<Self, FilterError> {
        if !(0.0..=1.0).contains(&sr) {
            return Err(FilterError::InvalidThreshold(sr));
        }
        Ok(Self { search_loc, search_imp, sr, method_filter })
    }

    /// The 40 cells: location x imports x threshold x method filter.
    pub fn matrix(sr_grid: &[f64]) -> Vec<Self> {
        let mut out = Vec::new();
        for loc in [SearchLoc::Internal, SearchLoc::External] {
            for imp in [SearchImp::AllImports, SearchImp::MisusedImports] {
                for &sr in sr_grid {
                    for method_filter in [false, true] {
                        out.push(Self { search_loc: loc, search_imp: imp, sr, method_filter });
                    }
                }
            }
        }
        out
    }

    /// Short human-readable cell name, e.g. `external-misused-sr0.50-mf`.
    pub fn label(&self) -> String {
        let loc = match self.search_loc {
            SearchLoc::Internal => "internal",
            SearchLoc::External => "external",
            SearchLoc::Both => "both",
        };
        let imp = match self.search_imp {
            SearchImp::AllImports => "all",
            SearchImp::MisusedImports => "misused",
        };
        format!("{loc}-{imp}-sr{:.2}-{}", self.sr, if self.method_filter { "mf" } else { "nomf" })
    }
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self { search_loc: SearchLoc::External, search_imp: SearchImp::AllImports, sr: 0.0, method_filter: false }
    }
}

/// How a keyword is looked up in raw file text.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchMode {
    /// The keyword must appear as a complete identifier token.
    #[default]
    Token,
    /// Any occurrence, including inside longer identifiers.
    Substring,
}

/// Identifier tokens of raw text; comments and strings are not excluded.
pub fn identifier_tokens(text: &str) -> HashSet<&str> {
    let is_part = |c: char| c.is_alphanumeric() || c == '_' || c == '$';
    text.split(|c: char| !is_part(c))
        .filter(|t| t.chars().next().is_some_and(|c| !c.is_ascii_digit()))
        .collect()
}

pub fn contains_keyword(text: &str, keyword: &str, mode: MatchMode) -> bool {
    match mode {
        MatchMode::Substring => text.contains(keyword),
        MatchMode::Token => identifier_tokens(text).contains(keyword),
    }
}

pub fn satisfaction_ratio(
    doc: &SourceDoc,
    keywords: &BTreeSet<String>,
    mode: MatchMode,
) -> Result<SatisfactionRatio, FilterError> {
    if keywords.is_empty() {
        return Err(FilterError::EmptyKeywordSet);
    }
    let matched = match mode {
        MatchMode::Token => {
            let tokens = identifier_tokens(&doc.raw_text);
            keywords.iter().filter(|k| tokens.contains(k.as_str())).count()
        }
        MatchMode::Substring => keywords.iter().filter(|k| doc.raw_text.contains(k.as_str())).count(),
    };
    Ok(SatisfactionRatio { matched, total: keywords.len() })
}

/// Docs whose ratio reaches `sr_min`, in input order. An empty keyword set or
/// `sr_min <= 0` keeps everything.
pub fn filter_files(docs: Vec<SourceDoc>, keywords: &BTreeSet<String>, sr_min: f64, mode: MatchMode) -> Vec<SourceDoc> {
    if sr_min <= 0.0 || keywords.is_empty() {
        return docs;
    }
    docs.into_iter()
        .filter(|d| satisfaction_ratio(d, keywords, mode).is_ok_and(|sr| sr.at_least(sr_min)))
        .collect()
}

/// A method found in a retrieved document.
#[derive(Debug, Clone)]
pub struct CandidateMethod {
    pub doc_identity: String,
    pub origin: Origin,
    /// Position among the document's methods in declaration order.
    pub method_id: usize,
    pub unit: Arc<CompilationUnit>,
    pub method: MethodDecl,
}

impl CandidateMethod {
    pub fn usage_ref(&self) -> String {
        format!("{}#{}#{}", self.doc_identity, self.method.name, self.method_id)
    }
}

/// Method tokens without Java reserved words.
pub fn keyword_tokens(method: &MethodDecl) -> impl Iterator<Item = &str> {
    method.tokens.iter().map(String::as_str).filter(|t| !is_reserved(t))
}

pub fn method_contains_keyword(method: &MethodDecl, keywords: &BTreeSet<String>) -> bool {
    keyword_tokens(method).any(|t| keywords.contains(t))
}

/// Parses the documents and returns their methods, keeping only those
/// mentioning a keyword when `enabled`. Unparseable documents are skipped.
pub fn filter_methods(docs: &[SourceDoc], keywords: &BTreeSet<String>, enabled: bool) -> Vec<CandidateMethod> {
    let mut out = Vec::new();
    for doc in docs {
        let unit = match parse_compilation_unit(&doc.raw_text) {
            Ok(u) => Arc::new(u),
            Err(e) => {
                log::warn!("skipping unparseable {}: {e}", doc.identity);
                continue;
            }
        };
        for (method_id, m) in unit.methods().into_iter().enumerate() {
            if enabled && !method_contains_keyword(m, keywords) {
                continue;
            }
            out.push(CandidateMethod {
                doc_identity: doc.identity.clone(),
                origin: doc.origin,
                method_id,
                unit: Arc::clone(&unit),
                method: m.clone(),
            });
        }
    }
    out
}

pub fn method_ratio(method: &MethodDecl, keywords: &BTreeSet<String>) -> Result<SatisfactionRatio, FilterError> {
    if keywords.is_empty() {
        return Err(FilterError::EmptyKeywordSet);
    }
    let tokens: HashSet<&str> = keyword_tokens(method).collect();
    let matched = keywords.iter().filter(|k| tokens.contains(k.as_str())).count();
    Ok(SatisfactionRatio { matched, total: keywords.len() })
}

/// Mean per-method satisfaction ratio over method tokens.
pub fn mean_method_sr<'a>(methods: impl IntoIterator<Item = &'a MethodDecl>, keywords: &BTreeSet<String>) -> Result<f64, FilterError> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for m in methods {
        sum += method_ratio(m, keywords)?.value();
        n += 1;
    }
    if n == 0 {
        return Err(FilterError::EmptyInput);
    }
    Ok(sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_matrix_has_forty_distinct_cells() {
        let cells = StrategyConfig::matrix(&StrategyConfig::SR_GRID);
        assert_eq!(cells.len(), 40);
        let labels: BTreeSet<String> = cells.iter().map(StrategyConfig::label).collect();
        assert_eq!(labels.len(), 40);
        assert!(StrategyConfig::new(SearchLoc::Both, SearchImp::AllImports, 1.5, true).is_err());
    }

    fn doc(text: &str) -> SourceDoc {
        SourceDoc::new(Origin::External, text, text.to_string(), 0)
    }

    fn kw(words: &[&str]) -> BTreeSet<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn ratio_examples() {
        let k = kw(&["a", "b", "c", "d"]);
        let sr = satisfaction_ratio(&doc("a(c);"), &k, MatchMode::Token).unwrap();
        assert_eq!(sr, SatisfactionRatio { matched: 2, total: 4 });
        assert_eq!(sr.value(), 0.5);
        assert_eq!(satisfaction_ratio(&doc("a b c d"), &k, MatchMode::Token).unwrap().value(), 1.0);
        assert_eq!(satisfaction_ratio(&doc("zzz"), &k, MatchMode::Token).unwrap().value(), 0.0);
        assert_eq!(satisfaction_ratio(&doc("x"), &kw(&[]), MatchMode::Token), Err(FilterError::EmptyKeywordSet));
    }

    #[test]
    fn token_mode_is_stricter_than_substring() {
        let k = kw(&["set"]);
        let d = doc("obj.setValue(1);");
        assert_eq!(satisfaction_ratio(&d, &k, MatchMode::Token).unwrap().matched, 0);
        assert_eq!(satisfaction_ratio(&d, &k, MatchMode::Substring).unwrap().matched, 1);
    }

    #[test]
    fn file_filter_thresholds() {
        let docs = vec![doc("x y"), doc("y")];
        assert_eq!(filter_files(docs.clone(), &kw(&["x"]), 0.0, MatchMode::Token), docs);
        let kept = filter_files(docs, &kw(&["x"]), 1.0, MatchMode::Token);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].raw_text, "x y");
    }

    #[test]
    fn method_filter_keeps_keyword_methods() {
        let d = doc("class C { void a() { doSomething(); } void b() { other(); } }");
        let k = kw(&["doSomething"]);
        let kept = filter_methods(std::slice::from_ref(&d), &k, true);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].method.name, "a");
        assert_eq!(kept[0].method_id, 0);
        assert_eq!(filter_methods(std::slice::from_ref(&d), &k, false).len(), 2);
        assert!(filter_methods(&[d], &kw(&["nothing"]), true).is_empty());
    }

    #[test]
    fn reserved_words_never_match() {
        let d = doc("class C { void a() { return; } }");
        assert!(filter_methods(&[d], &kw(&["return", "void"]), true).is_empty());
    }

    #[test]
    fn mean_ratio() {
        let unit = parse_compilation_unit("class C { void m() { a(); b(); } void n() { a(); } }").unwrap();
        let k = kw(&["a", "b", "c", "d", "e"]);
        let mean = mean_method_sr(unit.methods(), &k).unwrap();
        assert!((mean - 0.3).abs() < 1e-12);
        assert_eq!(mean_method_sr(std::iter::empty(), &k), Err(FilterError::EmptyInput));
    }

    #[test]
    fn unparseable_docs_are_skipped() {
        assert!(filter_methods(&[doc("class {")], &kw(&["a"]), false).is_empty());
    }
}

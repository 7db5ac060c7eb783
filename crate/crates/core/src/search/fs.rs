use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;

use super::{java_files, SearchError, SearchHit, SearchPage, SearchProvider, SearchQuery};

/// Searches a local corpus directory for files importing any of the queried
/// types, either directly or through a wildcard on their package. Results are
/// ranked by path.
#[derive(Debug, Clone)]
pub struct FsProvider {
    files: Vec<IndexedFile>,
}

#[derive(Debug, Clone)]
struct IndexedFile {
    path: String,
    text: String,
    imports: Vec<String>,
}

fn import_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?m)^\s*import\s+(?:static\s+)?([\w.]+(?:\s*\.\s*\*)?)\s*;").expect("valid regex"))
}

impl FsProvider {
    pub fn open(corpus: &Path) -> Result<Self, SearchError> {
        let files = java_files(corpus)?
            .into_iter()
            .map(|(path, text)| {
                let imports = import_re()
                    .captures_iter(&text)
                    .map(|c| c[1].split_whitespace().collect::<String>())
                    .collect();
                IndexedFile { path, text, imports }
            })
            .collect();
        Ok(Self { files })
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    fn matches(file: &IndexedFile, wanted: &str) -> bool {
        let package_wildcard = wanted.rsplit_once('.').map(|(pkg, _)| format!("{pkg}.*"));
        file.imports
            .iter()
            .any(|i| i == wanted || Some(i) == package_wildcard.as_ref())
    }
}

impl SearchProvider for FsProvider {
    fn query(&self, q: &SearchQuery, page: usize) -> Result<SearchPage, SearchError> {
        let matching: Vec<&IndexedFile> = self
            .files
            .iter()
            .filter(|f| q.import_statements.iter().any(|w| Self::matches(f, w)))
            .collect();
        let start = page.saturating_mul(q.page_limit);
        let hits = matching
            .iter()
            .enumerate()
            .skip(start)
            .take(q.page_limit)
            .map(|(rank, f)| SearchHit { identity: f.path.clone(), raw_text: f.text.clone(), relevance_rank: rank })
            .collect();
        Ok(SearchPage { hits, has_more: start + q.page_limit < matching.len() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, rel: &str, body: &str) {
        let p = dir.join(rel);
        std::fs::create_dir_all(p.parent().unwrap()).unwrap();
        std::fs::write(p, body).unwrap();
    }

    #[test]
    fn finds_direct_and_wildcard_imports_in_path_order() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "b/Two.java", "import x.y.*;\nclass Two {}");
        write(dir.path(), "a/One.java", "import x.y.Z;\nclass One {}");
        write(dir.path(), "c/Three.java", "import x.yy.Z;\nclass Three {}");
        write(dir.path(), "notes.txt", "import x.y.Z;");
        let p = FsProvider::open(dir.path()).unwrap();
        assert_eq!(p.len(), 3);
        let q = SearchQuery::new(["x.y.Z"], 10).unwrap();
        let page = p.query(&q, 0).unwrap();
        let ids: Vec<&str> = page.hits.iter().map(|h| h.identity.as_str()).collect();
        assert_eq!(ids, ["a/One.java", "b/Two.java"]);
        assert!(!page.has_more);
    }

    #[test]
    fn paging() {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..5 {
            write(dir.path(), &format!("F{i}.java"), "import q.R;");
        }
        let p = FsProvider::open(dir.path()).unwrap();
        let q = SearchQuery::new(["q.R"], 2).unwrap();
        assert_eq!(p.query(&q, 0).unwrap().hits.len(), 2);
        assert!(p.query(&q, 1).unwrap().has_more);
        let last = p.query(&q, 2).unwrap();
        assert_eq!(last.hits.len(), 1);
        assert!(!last.has_more);
        assert!(p.query(&q, 7).unwrap().hits.is_empty());
    }

    #[test]
    fn empty_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let p = FsProvider::open(dir.path()).unwrap();
        assert!(p.query(&SearchQuery::new(["a.B"], 5).unwrap(), 0).unwrap().hits.is_empty());
    }
}

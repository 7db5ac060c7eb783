use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::Deserialize;
use url::Url;

use super::{SearchError, SearchHit, SearchPage, SearchProvider, SearchQuery};

/// Fetches a URL and returns the body. Failures carry whether a retry may help.
pub trait HttpTransport: Send + Sync {
    fn get(&self, url: &str) -> Result<String, TransportError>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportError {
    pub message: String,
    pub retryable: bool,
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build();
        Self { agent: config.into() }
    }
}

impl HttpTransport for UreqTransport {
    fn get(&self, url: &str) -> Result<String, TransportError> {
        let mut resp = self.agent.get(url).call().map_err(|e| TransportError {
            message: e.to_string(),
            retryable: true,
        })?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(TransportError {
                message: format!("GET {url}: HTTP {status}"),
                retryable: status == 429 || status >= 500,
            });
        }
        resp.body_mut().read_to_string().map_err(|e| TransportError {
            message: e.to_string(),
            retryable: true,
        })
    }
}

/// Serves recorded responses from a JSON object mapping URL to body.
#[derive(Debug, Clone, Default)]
pub struct FixtureTransport {
    responses: BTreeMap<String, String>,
}

impl FixtureTransport {
    pub fn new(responses: BTreeMap<String, String>) -> Self {
        Self { responses }
    }

    pub fn load(path: &Path) -> Result<Self, SearchError> {
        let text = std::fs::read_to_string(path).map_err(|source| SearchError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let responses = serde_json::from_str(&text)
            .map_err(|e| SearchError::Provider(format!("bad fixture {}: {e}", path.display())))?;
        Ok(Self { responses })
    }
}

impl HttpTransport for FixtureTransport {
    fn get(&self, url: &str) -> Result<String, TransportError> {
        self.responses.get(url).cloned().ok_or_else(|| TransportError {
            message: format!("no recorded response for {url}"),
            retryable: false,
        })
    }
}

#[derive(Debug, Deserialize)]
struct ResultsBody {
    #[serde(default)]
    results: Vec<ResultEntry>,
}

#[derive(Debug, Deserialize)]
struct ResultEntry {
    id: serde_json::Value,
    #[serde(default)]
    filename: String,
    #[serde(default)]
    repo: String,
}

/// Client for a searchcode-compatible REST API.
pub struct HttpProvider {
    base: Url,
    transport: Box<dyn HttpTransport>,
    min_interval: Duration,
    max_retries: u32,
    last_request: Mutex<Option<Instant>>,
}

impl HttpProvider {
    pub fn new(base_url: &str, transport: Box<dyn HttpTransport>) -> Result<Self, SearchError> {
        let mut base = Url::parse(base_url).map_err(|e| SearchError::Provider(format!("bad base url {base_url}: {e}")))?;
        if !base.path().ends_with('/') {
            let p = format!("{}/", base.path());
            base.set_path(&p);
        }
        Ok(Self {
            base,
            transport,
            min_interval: Duration::ZERO,
            max_retries: 3,
            last_request: Mutex::new(None),
        })
    }

    /// At most `per_second` requests per second; zero disables the limit.
    pub fn with_rate_limit(mut self, per_second: f64) -> Self {
        self.min_interval = if per_second > 0.0 { Duration::from_secs_f64(1.0 / per_second) } else { Duration::ZERO };
        self
    }

    pub fn with_retries(mut self, max_retries: u32) -> Self {
        self.max_retries = max_retries;
        self
    }

    pub fn search_url(&self, q: &SearchQuery, page: usize) -> String {
        let mut url = self.base.join("api/codesearch_I/").expect("static path joins");
        url.query_pairs_mut()
            .append_pair("q", &q.import_statements.join(" "))
            .append_pair("p", &page.to_string())
            .append_pair("per_page", &q.page_limit.to_string());
        url.into()
    }

    pub fn raw_url(&self, id: &str) -> String {
        self.base
            .join(&format!("codesearch/raw/{id}/"))
            .map(String::from)
            .unwrap_or_else(|_| format!("{}codesearch/raw/{id}/", self.base))
    }

    fn throttle(&self) {
        if self.min_interval.is_zero() {
            return;
        }
        let mut last = self.last_request.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(t) = *last {
            let elapsed = t.elapsed();
            if elapsed < self.min_interval {
                thread::sleep(self.min_interval - elapsed);
            }
        }
        *last = Some(Instant::now());
    }

    fn fetch(&self, url: &str) -> Result<String, SearchError> {
        let mut attempt = 0;
        loop {
            self.throttle();
            match self.transport.get(url) {
                Ok(body) => return Ok(body),
                Err(e) if e.retryable && attempt < self.max_retries => {
                    attempt += 1;
                    log::warn!("retry {attempt}/{} after: {}", self.max_retries, e.message);
                    thread::sleep(Duration::from_millis(100 << attempt.min(6)));
                }
                Err(e) => return Err(SearchError::Provider(e.message)),
            }
        }
    }
}

impl SearchProvider for HttpProvider {
    fn query(&self, q: &SearchQuery, page: usize) -> Result<SearchPage, SearchError> {
        let body = self.fetch(&self.search_url(q, page))?;
        let parsed: ResultsBody =
            serde_json::from_str(&body).map_err(|e| SearchError::Provider(format!("malformed search response: {e}")))?;
        let full_page = parsed.results.len() >= q.page_limit;
        let mut hits = Vec::with_capacity(parsed.results.len());
        for (i, r) in parsed.results.into_iter().enumerate() {
            let id = match &r.id {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            let raw_text = self.fetch(&self.raw_url(&id))?;
            log::debug!("fetched {id} ({} in {})", r.filename, r.repo);
            hits.push(SearchHit { identity: id, raw_text, relevance_rank: page * q.page_limit + i });
        }
        Ok(SearchPage { hits, has_more: full_page })
    }
}

//! Fixing-pattern frequency and overlap-based violation detection.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aug::{contains_relaxed, parse_augs, Aug, AugError, EdgeKind, MethodRef};
use crate::miner::Pattern;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DetectError {
    #[error("no usage graphs given")]
    EmptyInput,
    #[error("pattern has no nodes")]
    EmptyPattern,
    #[error("fixing pattern has no variants")]
    NoVariants,
    #[error("fixing pattern: {0}")]
    Format(#[from] AugError),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

/// Manually distilled variants of the fix for one misuse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixingPattern {
    pub variants: Vec<Aug>,
}

impl FixingPattern {
    pub fn new(variants: Vec<Aug>) -> Result<Self, DetectError> {
        if variants.is_empty() {
            return Err(DetectError::NoVariants);
        }
        if variants.iter().any(Aug::is_empty) {
            return Err(DetectError::EmptyPattern);
        }
        Ok(Self { variants })
    }

    pub fn parse(text: &str) -> Result<Self, DetectError> {
        Self::new(parse_augs(text)?.into_iter().map(|b| b.aug).collect())
    }

    pub fn load(path: &Path) -> Result<Self, DetectError> {
        let text = std::fs::read_to_string(path).map_err(|e| DetectError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// Whether any variant is relaxed-contained in `g`.
    pub fn found_in(&self, g: &Aug) -> bool {
        self.variants.iter().any(|v| contains_relaxed(v, g))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternFrequency {
    /// Graphs containing the best variant.
    pub count: usize,
    pub total: usize,
    pub variant: usize,
}

impl PatternFrequency {
    pub fn value(&self) -> f64 {
        self.count as f64 / self.total as f64
    }
}

/// Share of graphs containing the most frequent fix variant.
pub fn relative_pattern_frequency(fix: &FixingPattern, augs: &[Aug]) -> Result<PatternFrequency, DetectError> {
    if augs.is_empty() {
        return Err(DetectError::EmptyInput);
    }
    let mut best = PatternFrequency { count: 0, total: augs.len(), variant: 0 };
    for (i, v) in fix.variants.iter().enumerate() {
        let count = augs.iter().filter(|g| contains_relaxed(v, g)).count();
        if count > best.count {
            best = PatternFrequency { count, total: augs.len(), variant: i };
        }
    }
    Ok(best)
}

pub const DEFAULT_MATCH_BOUND: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeEdgeMatch {
    /// Pattern node id to usage node id.
    pub node_map: Vec<Option<usize>>,
    /// Indices into the pattern's edge list.
    pub matched_edges: Vec<usize>,
}

impl NodeEdgeMatch {
    pub fn matched_nodes(&self) -> usize {
        self.node_map.iter().flatten().count()
    }
}

type EdgeKey = (usize, usize, EdgeKind);

struct Search<'a> {
    p: &'a Aug,
    options: Vec<Vec<usize>>,
    /// Pattern edges grouped by endpoints and kind.
    p_groups: BTreeMap<EdgeKey, Vec<usize>>,
    u_counts: HashMap<EdgeKey, usize>,
    /// Pattern nodes per signature group, and the usage capacity of that group.
    sig_of: Vec<usize>,
    sig_capacity: Vec<usize>,
    map: Vec<Option<usize>>,
    used: Vec<bool>,
    best: (usize, usize),
    best_map: Vec<Option<usize>>,
    states: usize,
    bound: usize,
}

impl Search<'_> {
    /// Matched edges once all endpoints are decided.
    fn edges_between(&self, upto: usize) -> usize {
        self.p_groups
            .iter()
            .filter(|((s, d, _), _)| *s < upto && *d < upto)
            .map(|((s, d, k), es)| match (self.map[*s], self.map[*d]) {
                (Some(a), Some(b)) => es.len().min(self.u_counts.get(&(a, b, *k)).copied().unwrap_or(0)),
                _ => 0,
            })
            .sum()
    }

    fn node_bound(&self, i: usize, nodes: usize) -> usize {
        let mut remaining = vec![0usize; self.sig_capacity.len()];
        for j in i..self.map.len() {
            remaining[self.sig_of[j]] += 1;
        }
        nodes + remaining.iter().zip(&self.sig_capacity).map(|(r, f)| (*r).min(*f)).sum::<usize>()
    }

    fn run(&mut self, i: usize, nodes: usize) {
        self.states += 1;
        let n = self.map.len();
        let edges = self.edges_between(i);
        if i == n {
            if (nodes, edges) > self.best {
                self.best = (nodes, edges);
                self.best_map = self.map.clone();
            }
            return;
        }
        if self.states > self.bound {
            return;
        }
        let open_edges = self.p.edges.iter().filter(|e| e.src >= i || e.dst >= i).count();
        if (self.node_bound(i, nodes), edges + open_edges) <= self.best {
            return;
        }
        let sig = self.sig_of[i];
        for k in 0..self.options[i].len() {
            let c = self.options[i][k];
            if self.used[c] {
                continue;
            }
            self.used[c] = true;
            self.sig_capacity[sig] -= 1;
            self.map[i] = Some(c);
            self.run(i + 1, nodes + 1);
            self.map[i] = None;
            self.sig_capacity[sig] += 1;
            self.used[c] = false;
        }
        self.run(i + 1, nodes);
    }
}

/// Partial injective mapping of pattern nodes onto usage nodes maximizing the
/// number of matched nodes, then matched edges. Bounded backtracking: after
/// `bound` search states the best mapping found so far is returned.
pub fn match_nodes_edges(p: &Aug, u: &Aug, bound: usize) -> NodeEdgeMatch {
    let mut sig_ids: BTreeMap<(crate::aug::NodeKind, &str), usize> = BTreeMap::new();
    for n in &p.nodes {
        let next = sig_ids.len();
        sig_ids.entry((n.kind, n.label.as_str())).or_insert(next);
    }
    let sig_of: Vec<usize> = p.nodes.iter().map(|n| sig_ids[&(n.kind, n.label.as_str())]).collect();
    let mut sig_capacity = vec![0; sig_ids.len()];
    for n in &u.nodes {
        if let Some(&s) = sig_ids.get(&(n.kind, n.label.as_str())) {
            sig_capacity[s] += 1;
        }
    }
    let options = p
        .nodes
        .iter()
        .map(|pn| u.nodes.iter().filter(|un| un.kind == pn.kind && un.label == pn.label).map(|un| un.id).collect())
        .collect();
    let mut p_groups: BTreeMap<EdgeKey, Vec<usize>> = BTreeMap::new();
    for (i, e) in p.edges.iter().enumerate() {
        p_groups.entry((e.src, e.dst, e.kind)).or_default().push(i);
    }
    let mut u_counts = HashMap::new();
    for e in &u.edges {
        *u_counts.entry((e.src, e.dst, e.kind)).or_insert(0) += 1;
    }
    let mut s = Search {
        p,
        options,
        p_groups,
        u_counts,
        sig_of,
        sig_capacity,
        map: vec![None; p.nodes.len()],
        used: vec![false; u.nodes.len()],
        best: (0, 0),
        best_map: vec![None; p.nodes.len()],
        states: 0,
        bound: bound.max(1),
    };
    s.run(0, 0);
    let mut matched_edges = Vec::new();
    for ((src, dst, k), es) in &s.p_groups {
        if let (Some(a), Some(b)) = (s.best_map[*src], s.best_map[*dst]) {
            let have = s.u_counts.get(&(a, b, *k)).copied().unwrap_or(0);
            matched_edges.extend(es.iter().take(have));
        }
    }
    matched_edges.sort_unstable();
    NodeEdgeMatch { node_map: s.best_map, matched_edges }
}

/// Exact overlap ratio; compared and classified without floating point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Overlap {
    pub num: usize,
    pub den: usize,
}

impl Overlap {
    pub const ZERO: Overlap = Overlap { num: 0, den: 1 };

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn is_one(&self) -> bool {
        self.num == self.den
    }

    pub fn is_interior(&self) -> bool {
        !self.is_zero() && !self.is_one()
    }
}

impl PartialEq for Overlap {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Overlap {}

impl PartialOrd for Overlap {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Overlap {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl fmt::Display for Overlap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// (matched nodes + matched edges) / (pattern nodes + pattern edges that do not
/// touch an unmatched pattern node).
pub fn overlap(p: &Aug, u: &Aug) -> Result<Overlap, DetectError> {
    overlap_with_bound(p, u, DEFAULT_MATCH_BOUND)
}

pub fn overlap_with_bound(p: &Aug, u: &Aug, bound: usize) -> Result<Overlap, DetectError> {
    if p.is_empty() {
        return Err(DetectError::EmptyPattern);
    }
    let m = match_nodes_edges(p, u, bound);
    let inside = p
        .edges
        .iter()
        .filter(|e| m.node_map[e.src].is_some() && m.node_map[e.dst].is_some())
        .count();
    Ok(Overlap { num: m.matched_nodes() + m.matched_edges.len(), den: p.nodes.len() + inside })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Correct,
    Misuse,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectionVerdict {
    pub usage_ref: MethodRef,
    pub best_pattern: Option<Pattern>,
    pub overlap: Overlap,
    pub classification: Classification,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub usage_ref: String,
    pub overlap_numerator: usize,
    pub overlap_denominator: usize,
    pub classification: Classification,
    pub pattern_id: Option<String>,
}

impl DetectionVerdict {
    pub fn record(&self) -> VerdictRecord {
        VerdictRecord {
            usage_ref: self.usage_ref.to_string(),
            overlap_numerator: self.overlap.num,
            overlap_denominator: self.overlap.den,
            classification: self.classification,
            pattern_id: self.best_pattern.as_ref().map(|p| p.fingerprint.clone()),
        }
    }
}

/// Classifies a usage against mined patterns. A usage is a misuse when its
/// best pattern overlaps it partially; exact 0 and 1 count as correct.
pub fn detect(usage: &Aug, patterns: &[Pattern]) -> DetectionVerdict {
    let better = |a: &(Overlap, &Pattern), b: &(Overlap, &Pattern)| {
        a.0.cmp(&b.0)
            .then(a.1.support.cmp(&b.1.support))
            .then(b.1.fingerprint.cmp(&a.1.fingerprint))
            == Ordering::Greater
    };
    let mut best_interior: Option<(Overlap, &Pattern)> = None;
    let mut best_full: Option<(Overlap, &Pattern)> = None;
    for p in patterns {
        let Ok(ov) = overlap(&p.graph, usage) else { continue };
        let slot = if ov.is_interior() {
            &mut best_interior
        } else if ov.is_one() {
            &mut best_full
        } else {
            continue;
        };
        if slot.as_ref().is_none_or(|cur| better(&(ov, p), cur)) {
            *slot = Some((ov, p));
        }
    }
    let (classification, chosen) = match (best_interior, best_full) {
        (Some(b), _) => (Classification::Misuse, Some(b)),
        (None, full) => (Classification::Correct, full),
    };
    DetectionVerdict {
        usage_ref: usage.method_ref.clone(),
        overlap: chosen.map_or(Overlap::ZERO, |c| c.0),
        best_pattern: chosen.map(|c| c.1.clone()),
        classification,
    }
}

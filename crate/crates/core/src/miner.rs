//! Closed frequent pattern mining over usage graphs.
//!
//! Patterns grow level by level from single nodes, one edge at a time (the
//! edge may bring one new node along). Occurrences of equal fingerprint form
//! one pattern; support counts distinct methods, not occurrences.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aug::{parse_augs, render_aug, Aug, AugError, MethodRef};

pub use crate::aug::graph_fingerprint;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MinerError {
    #[error("no usage graphs to mine")]
    EmptyInput,
    #[error("pattern file: {0}")]
    Format(#[from] AugError),
    #[error("pattern block {0} lacks a SUPPORT line")]
    MissingSupport(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MinSupport {
    Absolute(usize),
    /// Fraction of the number of graphs, rounded up.
    Relative(f64),
}

impl MinSupport {
    pub fn absolute_for(self, graphs: usize) -> usize {
        match self {
            MinSupport::Absolute(n) => n.max(1),
            MinSupport::Relative(r) => ((r * graphs as f64).ceil() as usize).max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiningConfig {
    pub min_support: MinSupport,
    pub max_pattern_nodes: usize,
    pub timeout: Option<Duration>,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self { min_support: MinSupport::Absolute(2), max_pattern_nodes: 20, timeout: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pattern {
    pub graph: Aug,
    pub fingerprint: String,
    pub support: usize,
    pub occurrences: BTreeSet<MethodRef>,
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningResult {
    pub patterns: Vec<Pattern>,
    /// Set when the node bound or the timeout cut the search short.
    pub truncated: bool,
    pub timed_out: bool,
}

/// One embedding: graph index plus sorted node and edge indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Instance {
    aug: usize,
    nodes: Vec<usize>,
    edges: Vec<usize>,
}

#[derive(Debug, Default)]
struct Cluster {
    instances: BTreeSet<Instance>,
    parents: BTreeSet<String>,
}

impl Cluster {
    fn support(&self, augs: &[Aug]) -> usize {
        self.instances
            .iter()
            .map(|i| &augs[i.aug].method_ref)
            .collect::<BTreeSet<_>>()
            .len()
    }
}

fn instance_graph(augs: &[Aug], inst: &Instance) -> Aug {
    let g = &augs[inst.aug];
    let edges: Vec<_> = inst.edges.iter().map(|&e| g.edges[e]).collect();
    g.induced_by_edges(&edges, &inst.nodes)
}

struct Clock {
    start: Instant,
    limit: Option<Duration>,
    ops: u64,
}

impl Clock {
    fn expired(&self) -> bool {
        self.limit.is_some_and(|l| self.start.elapsed() >= l)
    }

    /// Counts one operation; checks the clock every 1000.
    fn tick(&mut self) -> bool {
        self.ops += 1;
        self.ops.is_multiple_of(1000) && self.expired()
    }
}

pub fn mine_patterns(augs: &[Aug], config: &MiningConfig) -> Result<MiningResult, MinerError> {
    if augs.is_empty() {
        return Err(MinerError::EmptyInput);
    }
    let min_support = config.min_support.absolute_for(augs.len());
    let mut clock = Clock { start: Instant::now(), limit: config.timeout, ops: 0 };
    let incident: Vec<Vec<Vec<usize>>> = augs
        .iter()
        .map(|g| {
            let mut inc = vec![Vec::new(); g.nodes.len()];
            for (i, e) in g.edges.iter().enumerate() {
                inc[e.src].push(i);
                if e.dst != e.src {
                    inc[e.dst].push(i);
                }
            }
            inc
        })
        .collect();

    let mut level: BTreeMap<String, Cluster> = BTreeMap::new();
    for (gi, g) in augs.iter().enumerate() {
        for n in 0..g.nodes.len() {
            let inst = Instance { aug: gi, nodes: vec![n], edges: Vec::new() };
            let fp = graph_fingerprint(&instance_graph(augs, &inst));
            level.entry(fp).or_default().instances.insert(inst);
        }
    }

    let mut patterns = Vec::new();
    let mut truncated = false;
    let mut timed_out = false;
    loop {
        let frequent: BTreeMap<String, Cluster> = level
            .into_iter()
            .filter(|(_, c)| c.support(augs) >= min_support)
            .collect();
        if frequent.is_empty() {
            break;
        }
        let mut next: BTreeMap<String, Cluster> = BTreeMap::new();
        if clock.expired() {
            timed_out = true;
        } else {
            'grow: for (fp, cluster) in &frequent {
                for inst in &cluster.instances {
                    let g = &augs[inst.aug];
                    let candidates: BTreeSet<usize> = inst
                        .nodes
                        .iter()
                        .flat_map(|&n| incident[inst.aug][n].iter().copied())
                        .filter(|e| inst.edges.binary_search(e).is_err())
                        .collect();
                    for e in candidates {
                        if clock.tick() {
                            timed_out = true;
                            break 'grow;
                        }
                        let edge = g.edges[e];
                        let mut nodes = inst.nodes.clone();
                        for n in [edge.src, edge.dst] {
                            if let Err(pos) = nodes.binary_search(&n) {
                                nodes.insert(pos, n);
                            }
                        }
                        if nodes.len() > config.max_pattern_nodes {
                            truncated = true;
                            continue;
                        }
                        let mut edges = inst.edges.clone();
                        let pos = edges.binary_search(&e).unwrap_err();
                        edges.insert(pos, e);
                        let child = Instance { aug: inst.aug, nodes, edges };
                        let child_fp = graph_fingerprint(&instance_graph(augs, &child));
                        let c = next.entry(child_fp).or_default();
                        c.instances.insert(child);
                        c.parents.insert(fp.clone());
                    }
                }
            }
        }
        if timed_out {
            truncated = true;
        }

        // a parent with an equally supported one-edge extension is not closed
        let mut not_closed = BTreeSet::new();
        for c in next.values() {
            let s = c.support(augs);
            for p in &c.parents {
                if frequent.get(p).is_some_and(|pc| pc.support(augs) == s) {
                    not_closed.insert(p.clone());
                }
            }
        }
        for (fp, c) in &frequent {
            if not_closed.contains(fp) {
                continue;
            }
            let rep = c.instances.iter().next().expect("clusters are never empty");
            patterns.push(Pattern {
                graph: instance_graph(augs, rep),
                fingerprint: fp.clone(),
                support: c.support(augs),
                occurrences: c.instances.iter().map(|i| augs[i.aug].method_ref.clone()).collect(),
                closed: true,
            });
        }
        if timed_out {
            break;
        }
        level = next;
    }
    patterns.sort_by(|a, b| b.support.cmp(&a.support).then_with(|| a.fingerprint.cmp(&b.fingerprint)));
    Ok(MiningResult { patterns, truncated, timed_out })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedPattern {
    pub pattern: Pattern,
    pub rank: usize,
}

/// Competition ranking by support: equal supports share a rank and the next
/// distinct support skips past the tie group.
pub fn rank_patterns(patterns: Vec<Pattern>) -> Vec<RankedPattern> {
    let mut patterns = patterns;
    patterns.sort_by(|a, b| b.support.cmp(&a.support).then_with(|| a.fingerprint.cmp(&b.fingerprint)));
    let mut out: Vec<RankedPattern> = Vec::with_capacity(patterns.len());
    for (i, p) in patterns.into_iter().enumerate() {
        let rank = match out.last() {
            Some(prev) if prev.pattern.support == p.support => prev.rank,
            _ => i + 1,
        };
        out.push(RankedPattern { pattern: p, rank });
    }
    out
}

pub fn shared_ranks(supports: &[usize]) -> Vec<usize> {
    let mut sorted: Vec<usize> = supports.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let mut ranks = Vec::with_capacity(sorted.len());
    for (i, s) in sorted.iter().enumerate() {
        ranks.push(if i > 0 && sorted[i - 1] == *s { ranks[i - 1] } else { i + 1 });
    }
    ranks
}

pub fn top_at_k(ranked: &[RankedPattern], k: usize) -> Vec<RankedPattern> {
    ranked.iter().filter(|r| r.rank <= k).cloned().collect()
}

pub fn render_pattern(p: &Pattern) -> String {
    let mut out = render_aug(&p.graph);
    out.push_str(&format!("SUPPORT {}\n", p.support));
    let refs: Vec<String> = p.occurrences.iter().map(ToString::to_string).collect();
    out.push_str(&format!("OCCURRENCES {}\n", refs.join(",")));
    out
}

pub fn parse_patterns(text: &str) -> Result<Vec<Pattern>, MinerError> {
    parse_augs(text)?
        .into_iter()
        .enumerate()
        .map(|(i, b)| {
            let support = b.support.ok_or(MinerError::MissingSupport(i))?;
            Ok(Pattern {
                fingerprint: graph_fingerprint(&b.aug),
                graph: b.aug,
                support,
                occurrences: b.occurrences.unwrap_or_default().into_iter().collect(),
                closed: true,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aug::{EdgeKind, NodeKind, INIT};

    fn chain(doc: &str) -> Aug {
        let mut g = Aug::new(MethodRef::new(doc, "m", 0));
        let i = g.add_node(NodeKind::Action, INIT);
        let a = g.add_node(NodeKind::Data, "A");
        let m = g.add_node(NodeKind::Action, "m");
        g.add_edge(i, a, EdgeKind::Def);
        g.add_edge(a, m, EdgeKind::Recv);
        g.add_edge(i, m, EdgeKind::Order);
        g
    }

    #[test]
    fn shared_chain_is_the_only_closed_pattern() {
        let augs: Vec<Aug> = ["a", "b", "c"].iter().map(|d| chain(d)).collect();
        let r = mine_patterns(&augs, &MiningConfig::default()).unwrap();
        assert_eq!(r.patterns.len(), 1, "{:#?}", r.patterns);
        let p = &r.patterns[0];
        assert_eq!(p.support, 3);
        assert_eq!(p.graph.nodes.len(), 3);
        assert_eq!(p.graph.edges.len(), 3);
        assert!(!r.truncated);
    }

    #[test]
    fn support_counts_methods_not_occurrences() {
        // two copies of the chain inside one method
        let mut g = chain("a");
        let i = g.add_node(NodeKind::Action, INIT);
        let a = g.add_node(NodeKind::Data, "A");
        g.add_edge(i, a, EdgeKind::Def);
        let r = mine_patterns(&[g, chain("b")], &MiningConfig::default()).unwrap();
        assert!(r.patterns.iter().all(|p| p.support <= 2));
        let r = mine_patterns(&[chain("a")], &MiningConfig::default()).unwrap();
        assert!(r.patterns.is_empty());
    }

    #[test]
    fn high_min_support_yields_nothing() {
        let augs: Vec<Aug> = ["a", "b"].iter().map(|d| chain(d)).collect();
        let cfg = MiningConfig { min_support: MinSupport::Absolute(3), ..Default::default() };
        assert!(mine_patterns(&augs, &cfg).unwrap().patterns.is_empty());
        assert_eq!(mine_patterns(&[], &cfg), Err(MinerError::EmptyInput));
    }

    #[test]
    fn node_bound_truncates() {
        let augs: Vec<Aug> = ["a", "b"].iter().map(|d| chain(d)).collect();
        let cfg = MiningConfig { max_pattern_nodes: 2, ..Default::default() };
        let r = mine_patterns(&augs, &cfg).unwrap();
        assert!(r.truncated);
        assert!(r.patterns.iter().all(|p| p.graph.nodes.len() <= 2));
    }

    #[test]
    fn zero_timeout_returns_partial_flagged() {
        let augs: Vec<Aug> = ["a", "b"].iter().map(|d| chain(d)).collect();
        let cfg = MiningConfig { timeout: Some(Duration::ZERO), ..Default::default() };
        let r = mine_patterns(&augs, &cfg).unwrap();
        assert!(r.timed_out && r.truncated);
        assert!(!r.patterns.is_empty());
    }

    #[test]
    fn relative_support_rounds_up() {
        assert_eq!(MinSupport::Relative(0.08).absolute_for(30), 3);
        assert_eq!(MinSupport::Relative(0.004).absolute_for(10), 1);
        assert_eq!(MinSupport::Relative(0.5).absolute_for(4), 2);
    }

    #[test]
    fn ranks() {
        assert_eq!(shared_ranks(&[7, 7, 3]), [1, 1, 3]);
        assert_eq!(shared_ranks(&[5]), [1]);
        assert_eq!(shared_ranks(&[9, 8, 8, 8, 2]), [1, 2, 2, 2, 5]);
        let mk = |s: usize, fp: &str| Pattern {
            graph: Aug::default(),
            fingerprint: fp.into(),
            support: s,
            occurrences: BTreeSet::new(),
            closed: true,
        };
        let ranked = rank_patterns(vec![mk(3, "c"), mk(7, "b"), mk(7, "a")]);
        assert_eq!(ranked.iter().map(|r| r.rank).collect::<Vec<_>>(), [1, 1, 3]);
        assert_eq!(ranked[0].pattern.fingerprint, "a");
        assert_eq!(top_at_k(&ranked, 2).len(), 2);
        assert_eq!(top_at_k(&ranked, 3).len(), 3);
    }

    #[test]
    fn pattern_text_roundtrip() {
        let augs: Vec<Aug> = ["x/A.java", "y/B.java"].iter().map(|d| chain(d)).collect();
        let r = mine_patterns(&augs, &MiningConfig::default()).unwrap();
        let text: String = r.patterns.iter().map(render_pattern).collect();
        let back = parse_patterns(&text).unwrap();
        assert_eq!(back, r.patterns);
        assert!(matches!(parse_patterns("AUG - - 0\n"), Err(MinerError::MissingSupport(0))));
    }
}

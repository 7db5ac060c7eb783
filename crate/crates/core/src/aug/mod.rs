//! API Usage Graphs: directed, labeled multigraphs of the API usage inside a
//! single method.

mod build;
mod format;
mod iso;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use build::build_aug;
pub use format::{escape_field, parse_augs, render_aug, to_dot, unescape_field, AugBlock};
pub use iso::{contains_relaxed, exact_subgraph_oracle, EXACT_ORACLE_LIMIT};

pub const UNKNOWN: &str = "UNKNOWN";
pub const INIT: &str = "<init>";
pub const RETURN: &str = "<return>";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AugError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("graph too large for exact matching ({nodes} nodes, limit {limit})")]
    SizeLimitExceeded { nodes: usize, limit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    Action,
    Data,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Action => "action",
            NodeKind::Data => "data",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "action" => Some(NodeKind::Action),
            "data" => Some(NodeKind::Data),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeKind {
    Order,
    Def,
    Recv,
    Para,
}

impl EdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Order => "order",
            EdgeKind::Def => "def",
            EdgeKind::Recv => "recv",
            EdgeKind::Para => "para",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "order" => Some(EdgeKind::Order),
            "def" => Some(EdgeKind::Def),
            "recv" => Some(EdgeKind::Recv),
            "para" => Some(EdgeKind::Para),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AugNode {
    pub id: usize,
    pub kind: NodeKind,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AugEdge {
    pub src: usize,
    pub dst: usize,
    pub kind: EdgeKind,
}

/// Provenance of a graph: document, method name and per-document method id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MethodRef {
    pub doc: String,
    pub method: String,
    pub id: usize,
}

impl MethodRef {
    pub fn new(doc: impl Into<String>, method: impl Into<String>, id: usize) -> Self {
        Self { doc: doc.into(), method: method.into(), id }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let mut parts = s.split('#');
        let doc = unescape_field(parts.next()?)?;
        let method = unescape_field(parts.next()?)?;
        let id = parts.next()?.parse().ok()?;
        parts.next().is_none().then_some(Self { doc, method, id })
    }
}

impl fmt::Display for MethodRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}#{}", escape_field(&self.doc), escape_field(&self.method), self.id)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Aug {
    pub method_ref: MethodRef,
    pub nodes: Vec<AugNode>,
    pub edges: Vec<AugEdge>,
}

/// `(kind, label)` of a node; the unit of node comparison across graphs.
pub type NodeSig<'a> = (NodeKind, &'a str);
/// `(source label, edge kind, target label)`; the unit of edge comparison.
pub type EdgeSig<'a> = (NodeSig<'a>, EdgeKind, NodeSig<'a>);

impl Aug {
    pub fn new(method_ref: MethodRef) -> Self {
        Self { method_ref, nodes: Vec::new(), edges: Vec::new() }
    }

    pub fn add_node(&mut self, kind: NodeKind, label: impl Into<String>) -> usize {
        let id = self.nodes.len();
        self.nodes.push(AugNode { id, kind, label: label.into() });
        id
    }

    pub fn add_edge(&mut self, src: usize, dst: usize, kind: EdgeKind) {
        self.edges.push(AugEdge { src, dst, kind });
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_sig(&self, id: usize) -> NodeSig<'_> {
        let n = &self.nodes[id];
        (n.kind, n.label.as_str())
    }

    pub fn edge_sig(&self, e: &AugEdge) -> EdgeSig<'_> {
        (self.node_sig(e.src), e.kind, self.node_sig(e.dst))
    }

    pub fn node_multiset(&self) -> BTreeMap<NodeSig<'_>, usize> {
        let mut m = BTreeMap::new();
        for n in &self.nodes {
            *m.entry((n.kind, n.label.as_str())).or_insert(0) += 1;
        }
        m
    }

    pub fn edge_multiset(&self) -> BTreeMap<EdgeSig<'_>, usize> {
        let mut m = BTreeMap::new();
        for e in &self.edges {
            *m.entry(self.edge_sig(e)).or_insert(0) += 1;
        }
        m
    }

    /// Checks dense ids and valid edge endpoints.
    pub fn validate(&self) -> Result<(), String> {
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i {
                return Err(format!("node at position {i} has id {}", n.id));
            }
            if n.label.is_empty() {
                return Err(format!("node {i} has an empty label"));
            }
        }
        for e in &self.edges {
            if e.src >= self.nodes.len() || e.dst >= self.nodes.len() {
                return Err(format!("edge {} -> {} has a missing endpoint", e.src, e.dst));
            }
        }
        Ok(())
    }

    /// Subgraph formed by `edges` plus `extra_nodes`, ids renumbered in original order.
    pub fn induced_by_edges(&self, edges: &[AugEdge], extra_nodes: &[usize]) -> Aug {
        let mut keep: Vec<usize> = edges.iter().flat_map(|e| [e.src, e.dst]).chain(extra_nodes.iter().copied()).collect();
        keep.sort_unstable();
        keep.dedup();
        let mut g = Aug::new(MethodRef::default());
        let mut map = BTreeMap::new();
        for &old in &keep {
            let n = &self.nodes[old];
            map.insert(old, g.add_node(n.kind, n.label.clone()));
        }
        for e in edges {
            g.add_edge(map[&e.src], map[&e.dst], e.kind);
        }
        g
    }
}

/// Canonical multiset text of a graph: sorted node signatures followed by
/// sorted edge signatures. Identical for isomorphic graphs, but also for some
/// non-isomorphic ones.
pub fn canonical_form(g: &Aug) -> String {
    let mut out = String::new();
    for ((kind, label), count) in g.node_multiset() {
        out.push_str(&format!("N {} {} {}\n", kind.as_str(), escape_field(label), count));
    }
    for (((sk, sl), kind, (dk, dl)), count) in g.edge_multiset() {
        out.push_str(&format!(
            "E {} {} {} {} {} {}\n",
            sk.as_str(),
            escape_field(sl),
            kind.as_str(),
            dk.as_str(),
            escape_field(dl),
            count
        ));
    }
    out
}

/// SHA-256 (hex) of the canonical multiset form.
pub fn graph_fingerprint(g: &Aug) -> String {
    let digest = Sha256::digest(canonical_form(g).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;

    /// Builds a graph from `(kind, label)` nodes and `(src, dst, kind)` edges.
    pub fn graph(nodes: &[(NodeKind, &str)], edges: &[(usize, usize, EdgeKind)]) -> Aug {
        let mut g = Aug::new(MethodRef::default());
        for (k, l) in nodes {
            g.add_node(*k, *l);
        }
        for (s, d, k) in edges {
            g.add_edge(*s, *d, *k);
        }
        g
    }

    /// A 6-cycle and two disjoint triangles over one action label: equal
    /// multisets, different structure.
    pub fn two_triangles() -> (Aug, Aug) {
        let a = (NodeKind::Action, "x");
        let hexagon = graph(&[a; 6], &(0..6).map(|i| (i, (i + 1) % 6, EdgeKind::Order)).collect::<Vec<_>>());
        let triangles = graph(
            &[a; 6],
            &[
                (0, 1, EdgeKind::Order),
                (1, 2, EdgeKind::Order),
                (2, 0, EdgeKind::Order),
                (3, 4, EdgeKind::Order),
                (4, 5, EdgeKind::Order),
                (5, 3, EdgeKind::Order),
            ],
        );
        (triangles, hexagon)
    }
}

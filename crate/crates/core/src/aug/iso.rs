use std::collections::HashMap;

use super::{Aug, AugError, EdgeKind};

/// Largest pattern (in nodes) accepted by [`exact_subgraph_oracle`].
pub const EXACT_ORACLE_LIMIT: usize = 12;

/// Multiset containment of node signatures and edge signatures. Overestimates
/// subgraph isomorphism: structure beyond single edges is not checked.
pub fn contains_relaxed(pattern: &Aug, candidate: &Aug) -> bool {
    let nodes = candidate.node_multiset();
    let covered = pattern
        .node_multiset()
        .iter()
        .all(|(sig, n)| nodes.get(sig).is_some_and(|have| have >= n));
    if !covered {
        return false;
    }
    let edges = candidate.edge_multiset();
    pattern
        .edge_multiset()
        .iter()
        .all(|(sig, n)| edges.get(sig).is_some_and(|have| have >= n))
}

type EdgeCounts = HashMap<(usize, usize, EdgeKind), usize>;

fn edge_counts(g: &Aug) -> EdgeCounts {
    let mut m = HashMap::new();
    for e in &g.edges {
        *m.entry((e.src, e.dst, e.kind)).or_insert(0) += 1;
    }
    m
}

/// Whether an injective, label- and kind-preserving mapping of `pattern` into
/// `candidate` exists that preserves every edge (with multiplicity).
pub fn exact_subgraph_oracle(pattern: &Aug, candidate: &Aug) -> Result<bool, AugError> {
    if pattern.nodes.len() > EXACT_ORACLE_LIMIT {
        return Err(AugError::SizeLimitExceeded { nodes: pattern.nodes.len(), limit: EXACT_ORACLE_LIMIT });
    }
    if pattern.nodes.len() > candidate.nodes.len() || !contains_relaxed(pattern, candidate) {
        return Ok(false);
    }
    let pc = edge_counts(pattern);
    let cc = edge_counts(candidate);
    let options: Vec<Vec<usize>> = pattern
        .nodes
        .iter()
        .map(|p| {
            candidate
                .nodes
                .iter()
                .filter(|c| c.kind == p.kind && c.label == p.label)
                .map(|c| c.id)
                .collect()
        })
        .collect();
    let mut map = vec![usize::MAX; pattern.nodes.len()];
    let mut used = vec![false; candidate.nodes.len()];
    Ok(assign(0, &options, &pc, &cc, &mut map, &mut used))
}

fn assign(i: usize, options: &[Vec<usize>], pc: &EdgeCounts, cc: &EdgeCounts, map: &mut [usize], used: &mut [bool]) -> bool {
    if i == map.len() {
        return true;
    }
    for &c in &options[i] {
        if used[c] {
            continue;
        }
        map[i] = c;
        let consistent = pc.iter().all(|(&(s, d, k), &n)| {
            // only edges touching node i with both ends assigned are checked here
            if (s != i && d != i) || s > i || d > i {
                return true;
            }
            cc.get(&(map[s], map[d], k)).copied().unwrap_or(0) >= n
        });
        if consistent {
            used[c] = true;
            if assign(i + 1, options, pc, cc, map, used) {
                return true;
            }
            used[c] = false;
        }
    }
    map[i] = usize::MAX;
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aug::testing::{graph, two_triangles};
    use crate::aug::NodeKind;

    #[test]
    fn reflexive() {
        let g = graph(
            &[(NodeKind::Action, "a"), (NodeKind::Data, "T"), (NodeKind::Action, "b")],
            &[(0, 1, EdgeKind::Def), (1, 2, EdgeKind::Recv), (0, 2, EdgeKind::Order)],
        );
        assert!(contains_relaxed(&g, &g));
        assert!(exact_subgraph_oracle(&g, &g).unwrap());
    }

    #[test]
    fn absent_label() {
        let p = graph(&[(NodeKind::Action, "z")], &[]);
        let c = graph(&[(NodeKind::Action, "a")], &[]);
        assert!(!contains_relaxed(&p, &c));
        assert!(!exact_subgraph_oracle(&p, &c).unwrap());
        let single = graph(&[(NodeKind::Action, "a")], &[]);
        assert!(exact_subgraph_oracle(&single, &c).unwrap());
    }

    #[test]
    fn overestimation_counterexample() {
        let (triangles, hexagon) = two_triangles();
        assert!(contains_relaxed(&triangles, &hexagon));
        assert!(!exact_subgraph_oracle(&triangles, &hexagon).unwrap());
    }

    #[test]
    fn parallel_edges_need_multiplicity() {
        let p = graph(&[(NodeKind::Data, "T"), (NodeKind::Action, "f")], &[(0, 1, EdgeKind::Para), (0, 1, EdgeKind::Para)]);
        let c = graph(&[(NodeKind::Data, "T"), (NodeKind::Action, "f")], &[(0, 1, EdgeKind::Para)]);
        assert!(!exact_subgraph_oracle(&p, &c).unwrap());
        assert!(exact_subgraph_oracle(&c, &p).unwrap());
    }

    #[test]
    fn size_limit() {
        let big = graph(&vec![(NodeKind::Action, "a"); EXACT_ORACLE_LIMIT + 1], &[]);
        assert!(matches!(exact_subgraph_oracle(&big, &big), Err(AugError::SizeLimitExceeded { .. })));
    }
}

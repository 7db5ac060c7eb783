use std::collections::{BTreeSet, HashSet};

use apiwatch::api::{extract_context, relevant_types};
use apiwatch::aug::{
    build_aug, contains_relaxed, exact_subgraph_oracle, parse_augs, render_aug, Aug, AugEdge, EdgeKind, MethodRef,
    NodeKind,
};
use apiwatch::detect::{overlap, relative_pattern_frequency, FixingPattern};
use apiwatch::filter::{filter_files, filter_methods, method_contains_keyword, MatchMode};
use apiwatch::java::{parse_compilation_unit, print_unit};
use apiwatch::miner::{graph_fingerprint, mine_patterns, rank_patterns, shared_ranks, MinSupport, MiningConfig, Pattern};
use apiwatch::search::{
    external_candidates, Origin, SearchError, SearchHit, SearchPage, SearchProvider, SearchQuery, SessionLimits,
    SourceDoc,
};
use apiwatch::stats::{chi_square, cohens_kappa, precision_recall, wilcoxon_signed_rank, ConfusionCounts};
use proptest::prelude::*;

const VOCAB: &[&str] = &["open", "read", "close", "Channel", "Reader", "write", "flush", "size", "get", "put"];
const LABELS: &[&str] = &["a", "b", "c", "d"];
const EDGE_KINDS: [EdgeKind; 4] = [EdgeKind::Order, EdgeKind::Def, EdgeKind::Recv, EdgeKind::Para];

fn graph(nodes: &[(NodeKind, String)], edges: &[(usize, usize, EdgeKind)], r: MethodRef) -> Aug {
    let mut g = Aug::new(r);
    for (k, l) in nodes {
        g.add_node(*k, l.clone());
    }
    for &(s, d, k) in edges {
        g.add_edge(s, d, k);
    }
    g
}

prop_compose! {
    fn arb_aug(max_nodes: usize)(n in 1..=max_nodes)
        (nodes in prop::collection::vec((any::<bool>(), 0..LABELS.len()), n),
         edges in prop::collection::vec((0..n, 0..n, 0..4usize), 0..=2 * n),
         id in 0..1000usize) -> Aug {
        let nodes: Vec<(NodeKind, String)> = nodes
            .into_iter()
            .map(|(a, l)| (if a { NodeKind::Action } else { NodeKind::Data }, LABELS[l].to_string()))
            .collect();
        let mut edges: Vec<(usize, usize, EdgeKind)> = edges.into_iter().map(|(s, d, k)| (s, d, EDGE_KINDS[k])).collect();
        edges.sort();
        edges.dedup();
        graph(&nodes, &edges, MethodRef::new("doc", "m", id))
    }
}

fn tokens(text: &str) -> HashSet<&str> {
    text.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_' || c == '$')).filter(|t| !t.is_empty()).collect()
}

fn arb_doc() -> impl Strategy<Value = String> {
    prop::collection::vec((0..VOCAB.len(), prop::sample::select(vec![" ", ".", "(", ");\n", "Foo"])), 0..12)
        .prop_map(|parts| parts.into_iter().map(|(w, sep)| format!("{}{sep}", VOCAB[w])).collect())
}

fn arb_keywords() -> impl Strategy<Value = BTreeSet<String>> {
    prop::collection::btree_set(prop::sample::select(VOCAB.to_vec()).prop_map(String::from), 1..5)
}

fn docs_of(texts: &[String]) -> Vec<SourceDoc> {
    texts.iter().enumerate().map(|(i, t)| SourceDoc::new(Origin::External, format!("d{i}"), t.clone(), i)).collect()
}

fn ids(docs: &[SourceDoc]) -> Vec<String> {
    docs.iter().map(|d| d.identity.clone()).collect()
}

// ---- Java generator --------------------------------------------------------

const TYPES: &[&str] = &["AClass", "BClass", "CClass"];
const CALLS: &[&str] = &["run", "convert", "close", "size"];

fn leaf_stmt() -> impl Strategy<Value = String> {
    prop_oneof![
        (0..TYPES.len(), 0..3usize).prop_map(|(t, v)| format!("{} v{v} = new {}();", TYPES[t], TYPES[t])),
        (0..3usize, 0..CALLS.len(), 0..3usize).prop_map(|(v, c, a)| format!("v{v}.{}(v{a});", CALLS[c])),
        (0..3usize, 0..3usize).prop_map(|(a, b)| format!("x = v{a}.size() + v{b}.size() * 2;")),
        (0..CALLS.len()).prop_map(|c| format!("{}();", CALLS[c])),
    ]
}

fn arb_stmt() -> impl Strategy<Value = String> {
    leaf_stmt().prop_recursive(3, 16, 3, |inner| {
        let block = prop::collection::vec(inner, 0..3).prop_map(|v| v.join(" "));
        prop_oneof![
            (block.clone(), block.clone()).prop_map(|(a, b)| format!("if (x > 0) {{ {a} }} else {{ {b} }}")),
            block.clone().prop_map(|a| format!("for (int i = 0; i < x; i++) {{ {a} }}")),
            (block.clone(), block.clone()).prop_map(|(a, b)| format!("try {{ {a} }} catch (Exception e) {{ {b} }}")),
            block.prop_map(|a| format!("while (x < 3) {{ {a} }}")),
        ]
    })
}

prop_compose! {
    fn arb_java()(body in prop::collection::vec(arb_stmt(), 0..5), extra_import in any::<bool>()) -> String {
        let extra = if extra_import { "import q.r.Unused;\n" } else { "" };
        format!(
            "package my.own.pkg;\nimport a.b.AClass;\nimport a.b.BClass;\nimport c.d.CClass;\n{extra}\
             class K {{\n  int m(AClass v0) {{\n    int x = 0; BClass v1 = null; CClass v2 = null;\n    {}\n    return x;\n  }}\n}}\n",
            body.join("\n    ")
        )
    }
}

// ---- providers -------------------------------------------------------------

struct VecProvider {
    hits: Vec<SearchHit>,
}

impl SearchProvider for VecProvider {
    fn query(&self, q: &SearchQuery, page: usize) -> Result<SearchPage, SearchError> {
        let start = page * q.page_limit;
        let hits: Vec<SearchHit> = self.hits.iter().skip(start).take(q.page_limit).cloned().collect();
        Ok(SearchPage { has_more: start + hits.len() < self.hits.len(), hits })
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn filter_files_matches_token_oracle(texts in prop::collection::vec(arb_doc(), 0..8), kw in arb_keywords(), sr in prop::sample::select(vec![0.25, 0.5, 0.75, 1.0])) {
        let docs = docs_of(&texts);
        let kept = ids(&filter_files(docs.clone(), &kw, sr, MatchMode::Token));
        let expected: Vec<String> = docs
            .iter()
            .filter(|d| {
                let t = tokens(&d.raw_text);
                let hit = kw.iter().filter(|k| t.contains(k.as_str())).count();
                hit as f64 / kw.len() as f64 >= sr
            })
            .map(|d| d.identity.clone())
            .collect();
        prop_assert_eq!(kept, expected);
    }

    #[test]
    fn filter_files_zero_is_identity_and_threshold_monotone(texts in prop::collection::vec(arb_doc(), 0..8), kw in arb_keywords()) {
        let docs = docs_of(&texts);
        prop_assert_eq!(ids(&filter_files(docs.clone(), &kw, 0.0, MatchMode::Token)), ids(&docs));
        let mut prev: Option<BTreeSet<String>> = None;
        for sr in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let cur: BTreeSet<String> = ids(&filter_files(docs.clone(), &kw, sr, MatchMode::Token)).into_iter().collect();
            if let Some(p) = &prev {
                prop_assert!(cur.is_subset(p));
            }
            prev = Some(cur);
        }
        prop_assert_eq!(ids(&filter_files(docs.clone(), &BTreeSet::new(), 1.0, MatchMode::Token)), ids(&docs));
    }

    #[test]
    fn method_filter_keeps_a_keyword_subset(src in arb_java(), kw in prop::collection::btree_set(prop::sample::select(vec!["run", "convert", "close", "AClass", "nothing"]).prop_map(String::from), 0..4)) {
        let docs = vec![SourceDoc::new(Origin::External, "K.java", src, 0)];
        let all = filter_methods(&docs, &kw, false);
        let some = filter_methods(&docs, &kw, true);
        let all_refs: BTreeSet<String> = all.iter().map(|c| c.usage_ref()).collect();
        for c in &some {
            prop_assert!(all_refs.contains(&c.usage_ref()));
            prop_assert!(method_contains_keyword(&c.method, &kw));
        }
        for c in &all {
            if method_contains_keyword(&c.method, &kw) {
                prop_assert!(some.iter().any(|s| s.usage_ref() == c.usage_ref()));
            }
        }
    }

    #[test]
    fn exact_containment_implies_relaxed(p in arb_aug(4), u in arb_aug(6)) {
        if exact_subgraph_oracle(&p, &u).unwrap() {
            prop_assert!(contains_relaxed(&p, &u));
        }
    }

    #[test]
    fn edge_subgraphs_are_contained(u in arb_aug(6), pick in prop::collection::vec(any::<bool>(), 12), extra in 0..6usize) {
        let edges: Vec<AugEdge> = u.edges.iter().zip(&pick).filter(|(_, k)| **k).map(|(e, _)| *e).collect();
        let p = u.induced_by_edges(&edges, &[extra % u.nodes.len()]);
        prop_assert!(exact_subgraph_oracle(&p, &u).unwrap());
        prop_assert!(contains_relaxed(&p, &u));
        prop_assert!(overlap(&p, &u).unwrap().is_one());
    }

    #[test]
    fn overlap_is_a_unit_fraction(p in arb_aug(5), u in arb_aug(6)) {
        let ov = overlap(&p, &u).unwrap();
        prop_assert!(ov.num <= ov.den);
        prop_assert!((0.0..=1.0).contains(&ov.value()));
        prop_assert!(overlap(&p, &p).unwrap().is_one());
    }

    #[test]
    fn shared_ranks_match_count_oracle(supports in prop::collection::vec(1..6usize, 0..20)) {
        let ranks = shared_ranks(&supports);
        let mut sorted = supports.clone();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        for (s, r) in sorted.iter().zip(&ranks) {
            prop_assert_eq!(*r, 1 + supports.iter().filter(|x| *x > s).count());
        }
        let patterns: Vec<Pattern> = supports
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let g = graph(&[(NodeKind::Action, format!("n{i}"))], &[], MethodRef::default());
                Pattern { fingerprint: graph_fingerprint(&g), graph: g, support: s, occurrences: BTreeSet::new(), closed: true }
            })
            .collect();
        let ranked: Vec<usize> = rank_patterns(patterns).iter().map(|r| r.rank).collect();
        prop_assert_eq!(ranked, ranks);
    }

    #[test]
    fn aug_text_roundtrip(g in arb_aug(6), doc in "[a-zA-Z0-9/#% ._-]{1,12}", method in "[a-zA-Z<>#% ]{1,8}", label in "[a-zA-Z<>#%\\[\\] ]{1,8}") {
        let mut g = g;
        g.method_ref = MethodRef::new(doc, method, 7);
        g.nodes[0].label = label;
        let back = parse_augs(&render_aug(&g)).unwrap();
        prop_assert_eq!(back.len(), 1);
        prop_assert_eq!(&back[0].aug, &g);
        prop_assert_eq!(MethodRef::parse(&g.method_ref.to_string()), Some(g.method_ref.clone()));
    }

    #[test]
    fn fingerprint_ignores_node_order(g in arb_aug(6), seed in any::<u64>()) {
        let n = g.nodes.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let mut h = Aug::new(g.method_ref.clone());
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
            h.add_node(g.nodes[old].kind, g.nodes[old].label.clone());
        }
        for e in g.edges.iter().rev() {
            h.add_edge(inv[e.src], inv[e.dst], e.kind);
        }
        prop_assert_eq!(graph_fingerprint(&g), graph_fingerprint(&h));
    }

    #[test]
    fn pattern_frequency_grows_with_matching_graphs(fix in arb_aug(3), augs in prop::collection::vec(arb_aug(5), 1..6)) {
        let fp = FixingPattern::new(vec![fix.clone()]).unwrap();
        let before = relative_pattern_frequency(&fp, &augs).unwrap();
        prop_assert!(before.count <= before.total);
        let mut more = augs.clone();
        more.push(fix);
        let after = relative_pattern_frequency(&fp, &more).unwrap();
        prop_assert_eq!(after.count, before.count + 1);
        prop_assert!(after.value() >= before.value());
    }

    #[test]
    fn mined_patterns_are_supported(augs in prop::collection::vec(arb_aug(4), 1..6), min in 1..4usize) {
        let augs: Vec<Aug> = augs.into_iter().enumerate().map(|(i, mut g)| { g.method_ref.id = i; g }).collect();
        let cfg = MiningConfig { min_support: MinSupport::Absolute(min), max_pattern_nodes: 4, timeout: None };
        for p in mine_patterns(&augs, &cfg).unwrap().patterns {
            prop_assert!(p.support >= min);
            prop_assert_eq!(p.support, p.occurrences.len());
            for r in &p.occurrences {
                let g = augs.iter().find(|g| &g.method_ref == r).unwrap();
                prop_assert!(contains_relaxed(&p.graph, g));
            }
        }
    }

    #[test]
    fn wilcoxon_is_symmetric(pairs in prop::collection::vec((0..5u8, 0..5u8), 1..20)) {
        let a: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let b: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        match (wilcoxon_signed_rank(&a, &b), wilcoxon_signed_rank(&b, &a)) {
            (Ok(x), Ok(y)) => {
                prop_assert_eq!(x.statistic, y.statistic);
                prop_assert!((x.p_value - y.p_value).abs() < 1e-12);
                prop_assert!((0.0..=1.0).contains(&x.p_value));
            }
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "asymmetric error"),
        }
    }

    #[test]
    fn kappa_is_bounded(pairs in prop::collection::vec((0..3u8, 0..3u8), 1..30)) {
        let a: Vec<u8> = pairs.iter().map(|p| p.0).collect();
        let b: Vec<u8> = pairs.iter().map(|p| p.1).collect();
        let k = cohens_kappa(&a, &b).unwrap();
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&k));
        prop_assert_eq!(cohens_kappa(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn precision_recall_ignore_true_negatives(tp in 0..50u64, fp in 0..50u64, fn_ in 0..50u64, tn1 in 0..50u64, tn2 in 0..50u64) {
        let x = precision_recall(ConfusionCounts { tp, fp, tn: tn1, fn_ });
        let y = precision_recall(ConfusionCounts { tp, fp, tn: tn2, fn_ });
        prop_assert_eq!(x, y);
    }

    #[test]
    fn yates_never_exceeds_pearson(t in [[1..40u64, 1..40u64], [1..40u64, 1..40u64]]) {
        let plain = chi_square(t, false).unwrap();
        let yates = chi_square(t, true).unwrap();
        prop_assert!(yates.statistic <= plain.statistic + 1e-12);
        prop_assert!(yates.p_value >= plain.p_value - 1e-12);
    }

    #[test]
    fn keywords_cover_api_import_names(src in arb_java()) {
        let unit = parse_compilation_unit(&src).unwrap();
        let m = unit.methods()[0];
        let ctx = extract_context(m, &unit);
        for i in &ctx.api_imports {
            prop_assert!(ctx.keywords.contains(i.simple_name().unwrap()));
        }
        prop_assert!(ctx.api_imports.iter().all(|i| !i.qualified_name.starts_with("q.r.")));
    }

    #[test]
    fn unused_import_does_not_change_relevant_types(src in arb_java()) {
        let with = src.replacen("import a.b.AClass;", "import a.b.AClass;\nimport z.z.Nothing;", 1);
        let u1 = parse_compilation_unit(&src).unwrap();
        let u2 = parse_compilation_unit(&with).unwrap();
        prop_assert_eq!(relevant_types(u1.methods()[0], &u1), relevant_types(u2.methods()[0], &u2));
    }

    #[test]
    fn build_aug_is_deterministic_and_well_formed(src in arb_java()) {
        let unit = parse_compilation_unit(&src).unwrap();
        let m = unit.methods()[0];
        let r = MethodRef::new("K.java", "m", 0);
        let g = build_aug(m, &unit, r.clone());
        prop_assert_eq!(&g, &build_aug(m, &unit, r));
        g.validate().unwrap();
        let kind = |i: usize| g.nodes[i].kind;
        for e in &g.edges {
            let ok = match e.kind {
                EdgeKind::Order => kind(e.src) == NodeKind::Action && kind(e.dst) == NodeKind::Action && e.src < e.dst,
                EdgeKind::Def => kind(e.src) == NodeKind::Action && kind(e.dst) == NodeKind::Data,
                EdgeKind::Recv | EdgeKind::Para => kind(e.src) == NodeKind::Data && kind(e.dst) == NodeKind::Action,
            };
            prop_assert!(ok, "bad edge {:?}", e);
        }
        for i in 0..g.nodes.len() {
            let recv = g.edges.iter().filter(|e| e.dst == i && e.kind == EdgeKind::Recv).count();
            prop_assert!(recv <= 1);
        }
    }

    #[test]
    fn print_parse_is_idempotent(src in arb_java()) {
        let once = print_unit(&parse_compilation_unit(&src).unwrap());
        let reparsed = parse_compilation_unit(&once).unwrap();
        prop_assert_eq!(print_unit(&reparsed), once);
    }

    #[test]
    fn external_candidates_dedup_and_exclude_origin(
        ids in prop::collection::vec((0..15usize, any::<bool>()), 0..60),
        cap in 1..20usize,
    ) {
        let hits: Vec<SearchHit> = ids
            .iter()
            .enumerate()
            .map(|(rank, (id, own))| {
                let pkg = if *own { "my.own.pkg.sub" } else { "org.lib.x" };
                SearchHit { identity: format!("f{id}"), raw_text: format!("package {pkg};\nclass F{id} {{}}\n"), relevance_rank: rank }
            })
            .collect();
        let provider = VecProvider { hits };
        let unit = parse_compilation_unit("package my.own.pkg;\nimport a.b.AClass;\nclass K { void m(AClass a) {} }").unwrap();
        let ctx = extract_context(unit.methods()[0], &unit).with_misused_imports(["a.b.AClass"]);
        let limits = SessionLimits { session_cap: cap, page_size: 4 };
        let docs = external_candidates(&ctx, &provider, "my.own.pkg", limits).unwrap();
        let unique: BTreeSet<&str> = docs.iter().map(|d| d.identity.as_str()).collect();
        prop_assert_eq!(unique.len(), docs.len());
        prop_assert!(docs.len() <= 2 * cap);
        prop_assert!(docs.iter().all(|d| !d.package_name.starts_with("my.own.pkg")));
        prop_assert!(docs.iter().enumerate().all(|(i, d)| d.relevance_rank == i));
    }
}

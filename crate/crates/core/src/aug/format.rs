//! Line-oriented text format and DOT export.
//!
//! ```text
//! AUG <doc> <method> <id>
//! N <id> <action|data> <label>
//! E <src> <dst> <order|def|recv|para>
//! ```
//!
//! Pattern files append `SUPPORT <n>` and `OCCURRENCES <ref>,<ref>,...` after
//! the edges. Fields are percent-escaped so that any string survives; the empty
//! string is written as `-`. Blank lines and lines starting with `#` are ignored
//! when reading.

use std::fmt::Write;

use super::{Aug, AugError, EdgeKind, MethodRef, NodeKind};

/// Escapes `%`, whitespace, `,` and `#`; the empty string becomes `-`.
pub fn escape_field(s: &str) -> String {
    if s.is_empty() {
        return "-".into();
    }
    if s == "-" {
        return "%2D".into();
    }
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if c == '%' || c == ',' || c == '#' || c.is_whitespace() {
            let mut buf = [0u8; 4];
            for b in c.encode_utf8(&mut buf).bytes() {
                let _ = write!(out, "%{b:02X}");
            }
        } else {
            out.push(c);
        }
    }
    out
}

pub fn unescape_field(s: &str) -> Option<String> {
    if s == "-" {
        return Some(String::new());
    }
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = s.get(i + 1..i + 3)?;
            out.push(u8::from_str_radix(hex, 16).ok()?);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).ok()
}

pub fn render_aug(g: &Aug) -> String {
    let mut out = String::new();
    let r = &g.method_ref;
    let _ = writeln!(out, "AUG {} {} {}", escape_field(&r.doc), escape_field(&r.method), r.id);
    for n in &g.nodes {
        let _ = writeln!(out, "N {} {} {}", n.id, n.kind.as_str(), escape_field(&n.label));
    }
    for e in &g.edges {
        let _ = writeln!(out, "E {} {} {}", e.src, e.dst, e.kind.as_str());
    }
    out
}

/// One graph read from text, with the optional pattern trailer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugBlock {
    pub aug: Aug,
    pub support: Option<usize>,
    pub occurrences: Option<Vec<MethodRef>>,
}

pub fn parse_augs(text: &str) -> Result<Vec<AugBlock>, AugError> {
    let mut blocks: Vec<AugBlock> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |message: String| AugError::Parse { line: line_no, message };
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(' ').collect();
        let field = |k: usize| fields.get(k).copied().ok_or_else(|| err(format!("missing field {k}")));
        let num = |k: usize| -> Result<usize, AugError> {
            let f = field(k)?;
            f.parse().map_err(|_| err(format!("not a number: {f}")))
        };
        let text_field = |k: usize| -> Result<String, AugError> {
            let f = field(k)?;
            unescape_field(f).ok_or_else(|| err(format!("bad escape in {f}")))
        };
        let expect_len = |n: usize| {
            if fields.len() == n {
                Ok(())
            } else {
                Err(err(format!("expected {n} fields, found {}", fields.len())))
            }
        };
        if fields[0] == "AUG" {
            expect_len(4)?;
            blocks.push(AugBlock {
                aug: Aug::new(MethodRef { doc: text_field(1)?, method: text_field(2)?, id: num(3)? }),
                support: None,
                occurrences: None,
            });
            continue;
        }
        let Some(block) = blocks.last_mut() else {
            return Err(err("content before the first AUG header".into()));
        };
        match fields[0] {
            "N" => {
                expect_len(4)?;
                let id = num(1)?;
                if id != block.aug.nodes.len() {
                    return Err(err(format!("node ids must be dense, expected {}", block.aug.nodes.len())));
                }
                let kind = NodeKind::parse(field(2)?).ok_or_else(|| err(format!("unknown node kind {}", fields[2])))?;
                let label = text_field(3)?;
                if label.is_empty() {
                    return Err(err("empty node label".into()));
                }
                block.aug.add_node(kind, label);
            }
            "E" => {
                expect_len(4)?;
                let (src, dst) = (num(1)?, num(2)?);
                let n = block.aug.nodes.len();
                if src >= n || dst >= n {
                    return Err(err(format!("edge endpoint out of range ({n} nodes)")));
                }
                let kind = EdgeKind::parse(field(3)?).ok_or_else(|| err(format!("unknown edge kind {}", fields[3])))?;
                block.aug.add_edge(src, dst, kind);
            }
            "SUPPORT" => {
                expect_len(2)?;
                block.support = Some(num(1)?);
            }
            "OCCURRENCES" => {
                let refs = match fields.len() {
                    1 => Vec::new(),
                    2 if fields[1].is_empty() => Vec::new(),
                    2 => fields[1]
                        .split(',')
                        .map(|r| MethodRef::parse(r).ok_or_else(|| err(format!("bad method reference {r}"))))
                        .collect::<Result<_, _>>()?,
                    _ => return Err(err("occurrence list must not contain spaces".into())),
                };
                block.occurrences = Some(refs);
            }
            other => return Err(err(format!("unknown record type {other}"))),
        }
    }
    Ok(blocks)
}

fn dot_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz rendering: actions as boxes, data as ellipses, edges labeled by kind.
pub fn to_dot(g: &Aug) -> String {
    let mut out = String::from("digraph aug {\n");
    let _ = writeln!(out, "  label={};", dot_quote(&g.method_ref.to_string()));
    for n in &g.nodes {
        let shape = match n.kind {
            NodeKind::Action => "box",
            NodeKind::Data => "ellipse",
        };
        let _ = writeln!(out, "  n{} [label={}, shape={shape}];", n.id, dot_quote(&n.label));
    }
    for e in &g.edges {
        let style = if e.kind == EdgeKind::Order { ", style=dashed" } else { "" };
        let _ = writeln!(out, "  n{} -> n{} [label={}{style}];", e.src, e.dst, dot_quote(e.kind.as_str()));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aug::testing::graph;

    #[test]
    fn escaping_roundtrip() {
        for s in ["", "-", "a b", "x%y", "<init>", "a,b#c", "tab\there", "ünï"] {
            let e = escape_field(s);
            assert!(!e.contains([' ', ',', '#']) && !e.is_empty());
            assert_eq!(unescape_field(&e).as_deref(), Some(s));
        }
    }

    #[test]
    fn text_roundtrip_is_exact() {
        let mut g = graph(
            &[(NodeKind::Action, "<init>"), (NodeKind::Data, "Map Entry"), (NodeKind::Action, "get")],
            &[(0, 1, EdgeKind::Def), (1, 2, EdgeKind::Recv), (0, 2, EdgeKind::Order)],
        );
        g.method_ref = MethodRef::new("dir/My File.java", "run", 4);
        let text = render_aug(&g);
        let parsed = parse_augs(&text).unwrap();
        assert_eq!(parsed.len(), 1);
        assert_eq!(parsed[0].aug, g);
        assert_eq!(render_aug(&parsed[0].aug), text);
    }

    #[test]
    fn pattern_trailer() {
        let text = "# fixing pattern\nAUG - - 0\nN 0 action close\n\nSUPPORT 3\nOCCURRENCES a.java#m#0,b.java#n#1\nAUG x y 1\n";
        let blocks = parse_augs(text).unwrap();
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks[0].support, Some(3));
        assert_eq!(blocks[0].occurrences.as_ref().unwrap()[1], MethodRef::new("b.java", "n", 1));
        assert_eq!(blocks[0].aug.method_ref, MethodRef::default());
        assert!(blocks[1].aug.is_empty());
    }

    #[test]
    fn malformed_input() {
        assert!(matches!(parse_augs("N 0 action x"), Err(AugError::Parse { line: 1, .. })));
        assert!(parse_augs("AUG a b 0\nN 1 action x").is_err());
        assert!(parse_augs("AUG a b 0\nN 0 action x\nE 0 3 order").is_err());
        assert!(parse_augs("AUG a b 0\nN 0 thing x").is_err());
        assert!(parse_augs("AUG a b 0\nN 0 action x\nE 0 0 flow").is_err());
    }

    #[test]
    fn dot_export() {
        let g = graph(&[(NodeKind::Action, "a\"b"), (NodeKind::Data, "T")], &[(1, 0, EdgeKind::Recv)]);
        let dot = to_dot(&g);
        assert!(dot.contains("n0 [label=\"a\\\"b\", shape=box]"));
        assert!(dot.contains("n1 -> n0 [label=\"recv\"]"));
    }
}

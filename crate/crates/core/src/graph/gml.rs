// SPDX-License-Identifier: Apache-2.0

//! GML serialization of [`CircuitGraph`].
//!
//! Writer output is byte-deterministic:
//!
//! ```text
//! graph [ directed 1
//!   node [ id 0 label "a" kind "INPUT" ]
//!   edge [ source 0 target 1 weight 1 ]
//! ]
//! ```
//!
//! An empty graph is written as `graph [ directed 1 ]`. Weights carry at
//! most 9 significant digits unless more are needed to read back exactly.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::{CircuitGraph, GraphError, NodeKind};

#[derive(Debug, Error, PartialEq)]
pub enum GmlError {
    #[error("GML syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("edge references node id {id}, which is not defined")]
    DanglingEdge { id: i64 },
    #[error("edge {src} -> {dst} has non-positive weight {weight}")]
    NonPositiveWeight { src: i64, dst: i64, weight: f64 },
    #[error("{element} at line {line} is missing `{attribute}`")]
    MissingAttribute { element: &'static str, attribute: &'static str, line: usize },
    #[error("node id {0} defined twice")]
    DuplicateNodeId(i64),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Format a weight with at most 9 significant digits when that reads back
/// exactly; otherwise fall back to the shortest exact form so the
/// round trip never loses precision.
pub(crate) fn format_weight(w: f64) -> String {
    let rounded: f64 = format!("{w:.8e}").parse().unwrap_or(w);
    if rounded == w {
        format!("{rounded}")
    } else {
        format!("{w}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('"', "&quot;")
}

fn unescape(s: &str) -> String {
    s.replace("&quot;", "\"").replace("&amp;", "&")
}

pub fn write_gml(g: &CircuitGraph) -> String {
    let mut out = String::from("graph [ directed 1");
    if g.node_count() == 0 && g.edge_count() == 0 {
        out.push_str(" ]\n");
        return out;
    }
    for n in g.nodes() {
        let _ = write!(
            out,
            "\n  node [ id {} label \"{}\" kind \"{}\" ]",
            n.id,
            escape(&n.label),
            n.kind
        );
    }
    for e in g.edges() {
        let _ = write!(
            out,
            "\n  edge [ source {} target {} weight {} ]",
            e.source,
            e.target,
            format_weight(e.weight)
        );
    }
    out.push_str("\n]\n");
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Int(i64),
    Real(f64),
    Str(String),
    List(Vec<(String, Value, usize)>),
}

#[derive(Debug, PartialEq)]
enum Tok {
    Key(String),
    Num(String),
    Str(String),
    Open,
    Close,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, GmlError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line = 1;
    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                line += 1;
                chars.next();
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            '#' => {
                while chars.peek().is_some_and(|&c| c != '\n') {
                    chars.next();
                }
            }
            '[' => {
                chars.next();
                out.push((Tok::Open, line));
            }
            ']' => {
                chars.next();
                out.push((Tok::Close, line));
            }
            '"' => {
                let start = line;
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('"') => break,
                        Some(c) => {
                            if c == '\n' {
                                line += 1;
                            }
                            s.push(c);
                        }
                        None => {
                            return Err(GmlError::Syntax {
                                line: start,
                                message: "unterminated string".into(),
                            })
                        }
                    }
                }
                out.push((Tok::Str(unescape(&s)), start));
            }
            c if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || "+-.".contains(c) {
                        s.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push((Tok::Num(s), line));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push((Tok::Key(s), line));
            }
            other => {
                return Err(GmlError::Syntax { line, message: format!("unexpected character `{other}`") })
            }
        }
    }
    Ok(out)
}

fn parse_list<I>(toks: &mut std::iter::Peekable<I>, nested: bool) -> Result<Vec<(String, Value, usize)>, GmlError>
where
    I: Iterator<Item = (Tok, usize)>,
{
    let mut items = Vec::new();
    loop {
        let Some((tok, line)) = toks.next() else {
            if nested {
                return Err(GmlError::Syntax { line: 0, message: "missing `]`".into() });
            }
            return Ok(items);
        };
        let key = match tok {
            Tok::Key(k) => k,
            Tok::Close if nested => return Ok(items),
            other => {
                return Err(GmlError::Syntax { line, message: format!("expected key, found {other:?}") })
            }
        };
        let value = match toks.next() {
            Some((Tok::Open, _)) => Value::List(parse_list(toks, true)?),
            Some((Tok::Str(s), _)) => Value::Str(s),
            Some((Tok::Num(s), l)) => {
                if let Ok(i) = s.parse::<i64>() {
                    Value::Int(i)
                } else if let Ok(r) = s.parse::<f64>() {
                    Value::Real(r)
                } else {
                    return Err(GmlError::Syntax { line: l, message: format!("bad number `{s}`") });
                }
            }
            Some((other, l)) => {
                return Err(GmlError::Syntax { line: l, message: format!("expected value for `{key}`, found {other:?}") })
            }
            None => return Err(GmlError::Syntax { line, message: format!("missing value for `{key}`") }),
        };
        items.push((key, value, line));
    }
}

/// Parse GML; unknown attributes are ignored.
pub fn read_gml(text: &str) -> Result<CircuitGraph, GmlError> {
    read_gml_with_warnings(text).map(|(g, _)| g)
}

/// Parse GML, also returning one warning per ignored attribute.
pub fn read_gml_with_warnings(text: &str) -> Result<(CircuitGraph, Vec<String>), GmlError> {
    let mut toks = tokenize(text)?.into_iter().peekable();
    let top = parse_list(&mut toks, false)?;
    let mut warnings = Vec::new();
    let mut graph = None;
    for (key, value, line) in top {
        match (key.as_str(), value) {
            ("graph", Value::List(items)) if graph.is_none() => graph = Some(items),
            ("graph", _) => {
                return Err(GmlError::Syntax { line, message: "expected a single `graph [ ... ]`".into() })
            }
            (other, _) => warnings.push(format!("line {line}: ignoring top-level `{other}`")),
        }
    }
    let items = graph.ok_or(GmlError::Syntax { line: 1, message: "no `graph` block".into() })?;

    let mut nodes = Vec::new();
    let mut id_map: HashMap<i64, usize> = HashMap::new();
    let mut raw_edges = Vec::new();
    for (key, value, line) in items {
        match (key.as_str(), value) {
            ("directed", Value::Int(d)) => {
                if d != 1 {
                    warnings.push(format!("line {line}: `directed {d}` read as a directed graph"));
                }
            }
            ("node", Value::List(attrs)) => {
                let (mut id, mut label, mut kind) = (None, None, None);
                for (k, v, l) in attrs {
                    match (k.as_str(), v) {
                        ("id", Value::Int(i)) => id = Some(i),
                        ("label", Value::Str(s)) => label = Some(s),
                        ("kind", Value::Str(s)) => {
                            kind = Some(s.parse::<NodeKind>().map_err(|m| GmlError::Syntax { line: l, message: m })?)
                        }
                        (k, _) => warnings.push(format!("line {l}: ignoring node attribute `{k}`")),
                    }
                }
                let missing = |attribute| GmlError::MissingAttribute { element: "node", attribute, line };
                let id = id.ok_or_else(|| missing("id"))?;
                let label = label.ok_or_else(|| missing("label"))?;
                let kind = kind.ok_or_else(|| missing("kind"))?;
                if id_map.insert(id, nodes.len()).is_some() {
                    return Err(GmlError::DuplicateNodeId(id));
                }
                nodes.push((label, kind));
            }
            ("edge", Value::List(attrs)) => {
                let (mut source, mut target, mut weight) = (None, None, 1.0);
                for (k, v, l) in attrs {
                    match (k.as_str(), v) {
                        ("source", Value::Int(i)) => source = Some(i),
                        ("target", Value::Int(i)) => target = Some(i),
                        ("weight", Value::Int(i)) => weight = i as f64,
                        ("weight", Value::Real(r)) => weight = r,
                        (k, _) => warnings.push(format!("line {l}: ignoring edge attribute `{k}`")),
                    }
                }
                let missing = |attribute| GmlError::MissingAttribute { element: "edge", attribute, line };
                let source = source.ok_or_else(|| missing("source"))?;
                let target = target.ok_or_else(|| missing("target"))?;
                raw_edges.push((source, target, weight));
            }
            (other, _) => warnings.push(format!("line {line}: ignoring graph attribute `{other}`")),
        }
    }

    let mut edges = Vec::with_capacity(raw_edges.len());
    for (source, target, weight) in raw_edges {
        let s = *id_map.get(&source).ok_or(GmlError::DanglingEdge { id: source })?;
        let t = *id_map.get(&target).ok_or(GmlError::DanglingEdge { id: target })?;
        if !(weight > 0.0) {
            return Err(GmlError::NonPositiveWeight { src: source, dst: target, weight });
        }
        edges.push((s, t, weight));
    }
    Ok((CircuitGraph::new(nodes, edges)?, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_graph() {
        assert_eq!(write_gml(&CircuitGraph::empty()), "graph [ directed 1 ]\n");
        assert_eq!(read_gml("graph [ directed 1 ]").unwrap(), CircuitGraph::empty());
    }

    #[test]
    fn one_node() {
        let g = CircuitGraph::new(vec![("x".into(), NodeKind::FlipFlop)], vec![]).unwrap();
        let text = write_gml(&g);
        assert_eq!(text.matches("node [").count(), 1);
        assert!(text.contains("id 0"));
        assert_eq!(text, "graph [ directed 1\n  node [ id 0 label \"x\" kind \"FF\" ]\n]\n");
    }

    #[test]
    fn dangling_edge() {
        let text = "graph [ directed 1 node [ id 0 label \"a\" kind \"INPUT\" ] \
                    node [ id 1 label \"b\" kind \"COMB\" ] node [ id 2 label \"c\" kind \"OUTPUT\" ] \
                    edge [ source 0 target 99 ] ]";
        assert_eq!(read_gml(text).unwrap_err(), GmlError::DanglingEdge { id: 99 });
    }

    #[test]
    fn zero_weight() {
        let text = "graph [ node [ id 0 label \"a\" kind \"INPUT\" ] node [ id 1 label \"b\" kind \"COMB\" ] \
                    edge [ source 0 target 1 weight 0 ] ]";
        assert!(matches!(read_gml(text), Err(GmlError::NonPositiveWeight { .. })));
    }

    #[test]
    fn missing_weight_defaults_and_unknown_attrs_warn() {
        let text = "# a comment\ngraph [ directed 1 creator \"x\"\n node [ id 5 label \"a\" kind \"INPUT\" color \"red\" ]\n\
                    node [ id 7 label \"b\" kind \"COMB\" ]\n edge [ source 5 target 7 ] ]";
        let (g, warnings) = read_gml_with_warnings(text).unwrap();
        assert_eq!(g.edges()[0].weight, 1.0);
        assert_eq!((g.edges()[0].source, g.edges()[0].target), (0, 1));
        assert_eq!(warnings.len(), 2);
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!(read_gml("graph [ node [ id 0 "), Err(GmlError::Syntax { .. })));
        assert!(matches!(read_gml("graph [ node [ id \"0 ] ]"), Err(GmlError::Syntax { .. })));
        assert!(matches!(read_gml("nothing 1"), Err(GmlError::Syntax { .. })));
    }

    #[test]
    fn label_escaping() {
        let g = CircuitGraph::new(vec![("a\"b&c".into(), NodeKind::Comb)], vec![]).unwrap();
        assert_eq!(read_gml(&write_gml(&g)).unwrap(), g);
    }

    #[test]
    fn weight_format() {
        assert_eq!(format_weight(1.0), "1");
        assert_eq!(format_weight(0.5), "0.5");
        assert_eq!(format_weight(0.125), "0.125");
        assert_eq!(format_weight(2.5e-7), "0.00000025");
        assert_eq!(format_weight(1.0 / 3.0), "0.3333333333333333");
        assert_eq!(format_weight(123456789012.0), "123456789012");
    }

    fn arb_graph() -> impl Strategy<Value = CircuitGraph> {
        (1usize..25).prop_flat_map(|n| {
            let kinds = prop::collection::vec(0u8..4, n);
            let edges = prop::collection::btree_map((0..n, 0..n), 1e-6f64..1e6, 0..(n * 3));
            (kinds, edges).prop_map(move |(kinds, edges)| {
                let nodes = kinds
                    .iter()
                    .enumerate()
                    .map(|(i, k)| {
                        let kind = [NodeKind::Input, NodeKind::Comb, NodeKind::FlipFlop, NodeKind::Output][*k as usize];
                        (format!("n{i}"), kind)
                    })
                    .collect();
                let edges = edges.into_iter().map(|((s, t), w)| (s, t, w)).collect();
                CircuitGraph::new(nodes, edges).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn round_trip(g in arb_graph()) {
            let back = read_gml(&write_gml(&g)).unwrap();
            prop_assert_eq!(&back, &g);
            prop_assert_eq!(write_gml(&back), write_gml(&g));
        }

        #[test]
        fn degree_conservation(g in arb_graph()) {
            let out: usize = (0..g.node_count()).map(|v| g.out_neighbors(v).len()).sum();
            let inn: usize = (0..g.node_count()).map(|v| g.in_neighbors(v).len()).sum();
            prop_assert_eq!(out, g.edge_count());
            prop_assert_eq!(inn, g.edge_count());
        }
    }
}

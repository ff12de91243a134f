// SPDX-License-Identifier: Apache-2.0

use gatefdr::embed::{embed, sample_walks, TransitionTables, Traversal, WalkParams};
use gatefdr::graph::{netlist_to_graph, CircuitGraph, NodeKind};
use gatefdr::netlist::{parse_netlist, CellLibrary};

fn graph(n: usize, edges: &[(usize, usize)]) -> CircuitGraph {
    let nodes = (0..n).map(|i| (format!("n{i}"), NodeKind::Comb)).collect();
    CircuitGraph::new(nodes, edges.iter().map(|&(a, b)| (a, b, 1.0)).collect()).unwrap()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

#[test]
fn barbell_communities_separate() {
    let mut edges = Vec::new();
    for base in [0, 6] {
        for i in 0..6 {
            for j in i + 1..6 {
                edges.push((base + i, base + j));
            }
        }
    }
    edges.push((5, 6));
    let g = graph(12, &edges);
    let m = embed(&g, &WalkParams { seed: 1, ..WalkParams::default() }).unwrap();
    let community = |i: usize| i / 6;
    let (mut intra, mut inter) = (Vec::new(), Vec::new());
    for i in 0..12 {
        for j in i + 1..12 {
            let c = cosine(m.row(i), m.row(j));
            if community(i) == community(j) { intra.push(c) } else { inter.push(c) }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean(&intra) > mean(&inter), "intra {} inter {}", mean(&intra), mean(&inter));
}

#[test]
fn toy_counter_embedding_shape_and_determinism() {
    let n = parse_netlist(include_str!("../fixtures/toy_counter.v"), &CellLibrary::standard()).unwrap();
    let g = netlist_to_graph(&n);
    let params = WalkParams { seed: 3, ..WalkParams::default() };
    let a = embed(&g, &params).unwrap();
    assert_eq!((a.rows(), a.dim), (9, 8));
    let labels: Vec<&str> = g.nodes().iter().map(|n| n.label.as_str()).collect();
    assert_eq!(a.node_labels, labels);
    assert!(a.vectors.iter().all(|v| v.is_finite()));
    assert_eq!(embed(&g, &params).unwrap(), a);
    assert_ne!(embed(&g, &WalkParams { seed: 4, ..params }).unwrap(), a);
}

#[test]
fn directed_single_edge_walks() {
    let g = graph(2, &[(0, 1)]);
    let params = WalkParams { walk_length: 2, walks_per_node: 3, traversal: Traversal::Directed, ..WalkParams::default() };
    let tables = TransitionTables::build(&g, &params).unwrap();
    let walks = sample_walks(&tables, &params);
    assert_eq!(walks.iter().filter(|w| w[0] == 0).count(), 3);
    for w in walks {
        match w[0] {
            0 => assert_eq!(w, [0, 1]),
            _ => assert_eq!(w, [1]),
        }
    }
}

#[test]
fn tables_sum_to_one_for_many_settings() {
    let g = graph(7, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3), (5, 6), (6, 1)]);
    for (p, q) in [(1.0, 1.0), (0.25, 4.0), (4.0, 0.25), (2.0, 0.5)] {
        for traversal in [Traversal::Directed, Traversal::Undirected] {
            let params = WalkParams { p, q, traversal, ..WalkParams::default() };
            let tables = TransitionTables::build(&g, &params).unwrap();
            let nb = tables.neighborhood();
            for t in 0..7 {
                for &(v, _) in nb.neighbors(t) {
                    if nb.degree(v) == 0 {
                        continue;
                    }
                    let total: f64 = nb.neighbors(v).iter().map(|&(x, _)| tables.probability(t, v, x).unwrap()).sum();
                    assert!((total - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}

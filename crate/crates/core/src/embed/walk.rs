// SPDX-License-Identifier: Apache-2.0

//! Second-order biased random walks.
//!
//! A walk that just moved `t -> v` picks the next node `x` among the
//! traversal-neighbors of `v` with probability proportional to
//! `alpha(t, x) * w(v, x)`, where alpha is `1/p` when `x == t`, `1` when
//! `x` is a neighbor of `t`, and `1/q` otherwise.

use log::warn;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::{AliasTable, EmbedError, Traversal, WalkParams};
use crate::graph::CircuitGraph;
use crate::seed;

/// Sorted neighbor lists under a traversal mode, with a dense index for
/// every traversal edge.
#[derive(Debug, Clone)]
pub struct Neighborhood {
    nbrs: Vec<Vec<(usize, f64)>>,
    offsets: Vec<usize>,
}

impl Neighborhood {
    /// Undirected mode merges both directions; when `u -> v` and `v -> u`
    /// both exist the larger weight is kept.
    pub fn new(g: &CircuitGraph, traversal: Traversal) -> Self {
        let n = g.node_count();
        let mut nbrs: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|v| {
                let mut list: Vec<(usize, f64)> = g.out_neighbors(v).to_vec();
                if traversal == Traversal::Undirected {
                    list.extend_from_slice(g.in_neighbors(v));
                }
                list
            })
            .collect();
        for list in &mut nbrs {
            list.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)));
            list.dedup_by_key(|e| e.0);
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut acc = 0;
        for list in &nbrs {
            offsets.push(acc);
            acc += list.len();
        }
        offsets.push(acc);
        Neighborhood { nbrs, offsets }
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.nbrs[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.nbrs[v].len()
    }

    pub fn position(&self, u: usize, v: usize) -> Option<usize> {
        self.nbrs[u].binary_search_by_key(&v, |e| e.0).ok()
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        self.position(u, v).is_some()
    }

    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        self.position(u, v).map(|k| self.offsets[u] + k)
    }

    pub fn edge_count(&self) -> usize {
        *self.offsets.last().unwrap()
    }
}

fn adjacent(g: &CircuitGraph, t: usize, x: usize, traversal: Traversal) -> bool {
    g.out_neighbors(t).iter().any(|e| e.0 == x)
        || (traversal == Traversal::Undirected && g.in_neighbors(t).iter().any(|e| e.0 == x))
}

/// Hop distance between `t` and `x`, clamped to 2.
pub fn shortest_hop(
    g: &CircuitGraph,
    t: usize,
    x: usize,
    traversal: Traversal,
) -> Result<u8, EmbedError> {
    for node in [t, x] {
        if node >= g.node_count() {
            return Err(EmbedError::UnknownNode(node));
        }
    }
    Ok(if t == x {
        0
    } else if adjacent(g, t, x, traversal) {
        1
    } else {
        2
    })
}

fn search_bias(hop: u8, p: f64, q: f64) -> f64 {
    match hop {
        0 => 1.0 / p,
        1 => 1.0,
        _ => 1.0 / q,
    }
}

/// Normalized probability of stepping `v -> x` after arriving via `t -> v`,
/// evaluated directly from the graph.
pub fn transition_probability(
    g: &CircuitGraph,
    t: usize,
    v: usize,
    x: usize,
    params: &WalkParams,
) -> Result<f64, EmbedError> {
    for node in [t, v, x] {
        if node >= g.node_count() {
            return Err(EmbedError::UnknownNode(node));
        }
    }
    let nb = Neighborhood::new(g, params.traversal);
    if !nb.contains(t, v) {
        return Err(EmbedError::NotAnEdge(t, v));
    }
    let Some(k) = nb.position(v, x) else {
        return Err(EmbedError::NotAnEdge(v, x));
    };
    let unnormalized = |&(cand, w): &(usize, f64)| -> Result<f64, EmbedError> {
        Ok(search_bias(shortest_hop(g, t, cand, params.traversal)?, params.p, params.q) * w)
    };
    let terms: Vec<f64> = nb.neighbors(v).iter().map(unnormalized).collect::<Result<_, _>>()?;
    let z: f64 = terms.iter().sum();
    Ok(terms[k] / z)
}

/// Alias tables for every traversal edge plus a first-step table per node.
#[derive(Debug, Clone)]
pub struct TransitionTables {
    nb: Neighborhood,
    first_step: Vec<AliasTable>,
    edge_tables: Vec<AliasTable>,
    isolated: Vec<usize>,
}

impl TransitionTables {
    pub fn build(g: &CircuitGraph, params: &WalkParams) -> Result<Self, EmbedError> {
        let params = params.clone().validated()?;
        let nb = Neighborhood::new(g, params.traversal);
        let n = g.node_count();
        let first_step: Vec<AliasTable> = (0..n)
            .map(|u| AliasTable::new(&nb.neighbors(u).iter().map(|e| e.1).collect::<Vec<_>>()))
            .collect();
        let edge_tables: Vec<AliasTable> = (0..n)
            .into_par_iter()
            .flat_map_iter(|t| {
                let nb = &nb;
                nb.neighbors(t).iter().map(move |&(v, _)| {
                    let weights: Vec<f64> = nb
                        .neighbors(v)
                        .iter()
                        .map(|&(x, w)| {
                            let hop = if x == t {
                                0
                            } else if nb.contains(t, x) {
                                1
                            } else {
                                2
                            };
                            search_bias(hop, params.p, params.q) * w
                        })
                        .collect();
                    AliasTable::new(&weights)
                })
            })
            .collect();
        let isolated: Vec<usize> = (0..n).filter(|&v| nb.degree(v) == 0).collect();
        for &v in &isolated {
            warn!("node {} ({}) has no traversal neighbors; walks from it stop immediately", v, g.nodes()[v].label);
        }
        Ok(TransitionTables { nb, first_step, edge_tables, isolated })
    }

    pub fn neighborhood(&self) -> &Neighborhood {
        &self.nb
    }

    pub fn isolated_nodes(&self) -> &[usize] {
        &self.isolated
    }

    pub fn node_count(&self) -> usize {
        self.first_step.len()
    }

    /// Table for state `(t, v)`, indexed like `neighborhood().neighbors(v)`.
    pub fn edge_table(&self, t: usize, v: usize) -> Option<&AliasTable> {
        self.nb.edge_index(t, v).map(|e| &self.edge_tables[e])
    }

    pub fn first_step_table(&self, u: usize) -> &AliasTable {
        &self.first_step[u]
    }

    /// Probability of `x` implied by the alias table of state `(t, v)`.
    pub fn probability(&self, t: usize, v: usize, x: usize) -> Option<f64> {
        let table = self.edge_table(t, v)?;
        let k = self.nb.position(v, x)?;
        Some(table.implied_probabilities()[k])
    }

    pub fn sample_first<R: Rng + ?Sized>(&self, u: usize, rng: &mut R) -> Option<usize> {
        self.first_step[u].sample(rng).map(|k| self.nb.neighbors(u)[k].0)
    }

    pub fn sample_next<R: Rng + ?Sized>(&self, t: usize, v: usize, rng: &mut R) -> Option<usize> {
        let table = self.edge_table(t, v)?;
        table.sample(rng).map(|k| self.nb.neighbors(v)[k].0)
    }

    fn walk(&self, start: usize, length: usize, seed: u64, round: usize) -> Vec<u32> {
        let mut rng = seed::rng(seed, &[start as u64, round as u64]);
        let mut walk = Vec::with_capacity(length);
        walk.push(start as u32);
        let Some(first) = self.sample_first(start, &mut rng) else {
            return walk;
        };
        walk.push(first as u32);
        let (mut prev, mut cur) = (start, first);
        while walk.len() < length {
            match self.sample_next(prev, cur, &mut rng) {
                Some(next) => {
                    walk.push(next as u32);
                    prev = cur;
                    cur = next;
                }
                None => break,
            }
        }
        walk
    }
}

/// `walks_per_node` rounds; each round visits every node once in a seeded
/// shuffled order. Each walk draws from its own RNG stream keyed by
/// (seed, start node, round), so the corpus does not depend on thread count.
pub fn sample_walks(tables: &TransitionTables, params: &WalkParams) -> Vec<Vec<u32>> {
    let n = tables.node_count();
    let mut jobs = Vec::with_capacity(n * params.walks_per_node);
    for round in 0..params.walks_per_node {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut seed::rng(params.seed, &[u64::MAX, round as u64]));
        jobs.extend(order.into_iter().map(|u| (u, round)));
    }
    jobs.par_iter()
        .map(|&(u, round)| tables.walk(u, params.walk_length, params.seed, round))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeKind;

    /// t-v, t-x1, v-x1, v-x2 (ids 0..4), used undirected.
    fn four_node(w_vx2: f64) -> CircuitGraph {
        let nodes = ["t", "v", "x1", "x2"].iter().map(|s| (s.to_string(), NodeKind::Comb)).collect();
        CircuitGraph::new(nodes, vec![(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0), (1, 3, w_vx2)]).unwrap()
    }

    fn params(p: f64, q: f64) -> WalkParams {
        WalkParams { p, q, ..WalkParams::default() }
    }

    #[test]
    fn hop_distances() {
        let g = CircuitGraph::new(
            ["a", "b", "c"].iter().map(|s| (s.to_string(), NodeKind::Comb)).collect(),
            vec![(0, 1, 1.0), (1, 2, 1.0)],
        )
        .unwrap();
        assert_eq!(shortest_hop(&g, 0, 0, Traversal::Undirected).unwrap(), 0);
        assert_eq!(shortest_hop(&g, 0, 1, Traversal::Undirected).unwrap(), 1);
        assert_eq!(shortest_hop(&g, 1, 0, Traversal::Undirected).unwrap(), 1);
        assert_eq!(shortest_hop(&g, 1, 0, Traversal::Directed).unwrap(), 2);
        assert_eq!(shortest_hop(&g, 0, 2, Traversal::Undirected).unwrap(), 2);
        assert!(matches!(shortest_hop(&g, 0, 9, Traversal::Undirected), Err(EmbedError::UnknownNode(9))));
    }

    #[test]
    fn uniform_when_unbiased() {
        let g = four_node(1.0);
        for x in [0, 2, 3] {
            let pr = transition_probability(&g, 0, 1, x, &params(1.0, 1.0)).unwrap();
            assert!((pr - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn biased_hand_example() {
        let g = four_node(1.0);
        let pp = params(2.0, 0.5);
        let expected = [(0, 1.0 / 7.0), (2, 2.0 / 7.0), (3, 4.0 / 7.0)];
        for (x, want) in expected {
            assert!((transition_probability(&g, 0, 1, x, &pp).unwrap() - want).abs() < 1e-15);
        }
    }

    #[test]
    fn weighted_hand_example() {
        let g = four_node(3.0);
        let pr = transition_probability(&g, 0, 1, 3, &params(2.0, 0.5)).unwrap();
        assert!((pr - 0.8).abs() < 1e-15);
    }

    #[test]
    fn not_an_edge() {
        let g = four_node(1.0);
        assert!(matches!(
            transition_probability(&g, 0, 3, 1, &params(1.0, 1.0)),
            Err(EmbedError::NotAnEdge(0, 3))
        ));
    }

    #[test]
    fn tables_match_formula() {
        let g = four_node(3.0);
        for (p, q) in [(1.0, 1.0), (2.0, 0.5), (0.25, 4.0)] {
            let pp = params(p, q);
            let tables = TransitionTables::build(&g, &pp).unwrap();
            let nb = tables.neighborhood();
            for t in 0..4 {
                for &(v, _) in nb.neighbors(t) {
                    let mut sum = 0.0;
                    for &(x, _) in nb.neighbors(v) {
                        let exact = transition_probability(&g, t, v, x, &pp).unwrap();
                        let table = tables.probability(t, v, x).unwrap();
                        assert!((exact - table).abs() <= 1e-15, "{t}->{v}->{x}");
                        sum += exact;
                    }
                    assert!((sum - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn triangle_tables_uniform() {
        let g = CircuitGraph::new(
            ["a", "b", "c"].iter().map(|s| (s.to_string(), NodeKind::Comb)).collect(),
            vec![(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)],
        )
        .unwrap();
        let tables = TransitionTables::build(&g, &params(1.0, 1.0)).unwrap();
        for (t, v) in [(0, 1), (1, 2), (2, 0), (1, 0)] {
            let probs = tables.edge_table(t, v).unwrap().implied_probabilities();
            assert_eq!(probs.len(), 2);
            assert!(probs.iter().all(|p| (p - 0.5).abs() < 1e-15));
        }
    }

    #[test]
    fn isolated_node_gets_empty_table() {
        let g = CircuitGraph::new(
            ["a", "b", "lonely"].iter().map(|s| (s.to_string(), NodeKind::Comb)).collect(),
            vec![(0, 1, 1.0)],
        )
        .unwrap();
        let pp = WalkParams { walk_length: 5, walks_per_node: 2, ..params(1.0, 1.0) };
        let tables = TransitionTables::build(&g, &pp).unwrap();
        assert_eq!(tables.isolated_nodes(), &[2]);
        assert!(tables.first_step_table(2).is_empty());
        let corpus = sample_walks(&tables, &pp);
        assert!(corpus.iter().filter(|w| w[0] == 2).all(|w| w.len() == 1));
    }

    #[test]
    fn directed_dead_end() {
        let g = CircuitGraph::new(
            ["a", "b"].iter().map(|s| (s.to_string(), NodeKind::Comb)).collect(),
            vec![(0, 1, 1.0)],
        )
        .unwrap();
        let pp = WalkParams { walk_length: 2, walks_per_node: 3, traversal: Traversal::Directed, ..params(1.0, 1.0) };
        let tables = TransitionTables::build(&g, &pp).unwrap();
        let corpus = sample_walks(&tables, &pp);
        assert_eq!(corpus.len(), 6);
        for w in corpus {
            match w[0] {
                0 => assert_eq!(w, vec![0, 1]),
                _ => assert_eq!(w, vec![1]),
            }
        }
    }

    #[test]
    fn walks_are_seeded() {
        let g = four_node(2.0);
        let pp = WalkParams { walk_length: 20, walks_per_node: 4, seed: 99, ..params(0.5, 2.0) };
        let tables = TransitionTables::build(&g, &pp).unwrap();
        let a = sample_walks(&tables, &pp);
        let b = sample_walks(&tables, &pp);
        assert_eq!(a, b);
        assert!(a.iter().all(|w| w.len() == 20));
        let other = sample_walks(&tables, &WalkParams { seed: 100, ..pp.clone() });
        assert_ne!(a, other);
        // every consecutive pair is a traversal edge
        let nb = tables.neighborhood();
        assert!(a.iter().all(|w| w.windows(2).all(|s| nb.contains(s[0] as usize, s[1] as usize))));
    }

    #[test]
    fn walks_independent_of_thread_count() {
        let g = four_node(2.0);
        let pp = WalkParams { walk_length: 30, walks_per_node: 8, seed: 5, ..params(2.0, 0.5) };
        let tables = TransitionTables::build(&g, &pp).unwrap();
        let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let wide = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = serial.install(|| sample_walks(&tables, &pp));
        let b = wide.install(|| sample_walks(&tables, &pp));
        assert_eq!(a, b);
    }
}

// SPDX-License-Identifier: Apache-2.0

//! Directed, weighted circuit graph built from a netlist.
//!
//! Nodes are primary inputs, cell instances and primary outputs. An edge
//! `u -> v` exists when an output pin of `u` drives an input pin of `v`
//! (or the primary output `v`). Parallel driver/load pairs collapse to a
//! single edge of weight 1.

mod gml;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::{CellKind, Driver, Netlist};

pub use gml::{read_gml, read_gml_with_warnings, write_gml, GmlError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    FlipFlop,
    Comb,
    Input,
    Output,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::FlipFlop => "FF",
            NodeKind::Comb => "COMB",
            NodeKind::Input => "INPUT",
            NodeKind::Output => "OUTPUT",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "FF" => Ok(NodeKind::FlipFlop),
            "COMB" => Ok(NodeKind::Comb),
            "INPUT" => Ok(NodeKind::Input),
            "OUTPUT" => Ok(NodeKind::Output),
            other => Err(format!("unknown node kind `{other}`")),
        }
    }
}

impl From<CellKind> for NodeKind {
    fn from(k: CellKind) -> Self {
        match k {
            CellKind::Comb => NodeKind::Comb,
            CellKind::FlipFlop => NodeKind::FlipFlop,
            CellKind::Input => NodeKind::Input,
            CellKind::Output => NodeKind::Output,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub label: String,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("duplicate node label `{0}`")]
    DuplicateLabel(String),
    #[error("edge {src} -> {dst} references a missing node")]
    DanglingEdge { src: usize, dst: usize },
    #[error("edge {src} -> {dst} has non-positive weight {weight}")]
    NonPositiveWeight { src: usize, dst: usize, weight: f64 },
    #[error("duplicate edge {src} -> {dst}")]
    DuplicateEdge { src: usize, dst: usize },
}

/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    out_adj: Vec<Vec<(usize, f64)>>,
    in_adj: Vec<Vec<(usize, f64)>>,
}

impl CircuitGraph {
    /// Node ids are assigned densely in the given order.
    pub fn new(
        nodes: Vec<(String, NodeKind)>,
        edges: Vec<(usize, usize, f64)>,
    ) -> Result<Self, GraphError> {
        let mut labels = BTreeSet::new();
        for (label, _) in &nodes {
            if !labels.insert(label.as_str()) {
                return Err(GraphError::DuplicateLabel(label.clone()));
            }
        }
        let n = nodes.len();
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        let mut edge_list = Vec::with_capacity(edges.len());
        for (source, target, weight) in edges {
            if source >= n || target >= n {
                return Err(GraphError::DanglingEdge { src: source, dst: target });
            }
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(GraphError::NonPositiveWeight { src: source, dst: target, weight });
            }
            if !seen.insert((source, target)) {
                return Err(GraphError::DuplicateEdge { src: source, dst: target });
            }
            out_adj[source].push((target, weight));
            in_adj[target].push((source, weight));
            edge_list.push(Edge { source, target, weight });
        }
        let nodes = nodes
            .into_iter()
            .enumerate()
            .map(|(id, (label, kind))| Node { id, label, kind })
            .collect();
        Ok(CircuitGraph { nodes, edges: edge_list, out_adj, in_adj })
    }

    pub fn empty() -> Self {
        CircuitGraph::new(Vec::new(), Vec::new()).unwrap()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn out_neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.out_adj[v]
    }

    pub fn in_neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.in_adj[v]
    }

    pub fn label_index(&self) -> HashMap<&str, usize> {
        self.nodes.iter().map(|n| (n.label.as_str(), n.id)).collect()
    }
}

/// Convert a validated netlist into its circuit graph.
///
/// Node order: primary inputs (declaration order), instances
/// (lexicographic), primary outputs (declaration order). Edges are sorted
/// by (source, target).
pub fn netlist_to_graph(n: &Netlist) -> CircuitGraph {
    let mut nodes: Vec<(String, NodeKind)> = Vec::new();
    for pi in &n.primary_inputs {
        nodes.push((pi.clone(), NodeKind::Input));
    }
    let mut inst_order: Vec<usize> = (0..n.instances.len()).collect();
    inst_order.sort_by(|&a, &b| n.instances[a].name.cmp(&n.instances[b].name));
    let mut inst_node = vec![0usize; n.instances.len()];
    for &i in &inst_order {
        inst_node[i] = nodes.len();
        let kind = n.cells[&n.instances[i].cell].kind;
        nodes.push((n.instances[i].name.clone(), kind.into()));
    }
    let first_output = nodes.len();
    for po in &n.primary_outputs {
        nodes.push((po.clone(), NodeKind::Output));
    }

    let drivers = n.drivers();
    let loads = n.loads();
    let mut edges = BTreeSet::new();
    for (net, ds) in &drivers {
        let mut targets: Vec<usize> = loads
            .get(net)
            .into_iter()
            .flatten()
            .map(|&(i, _)| inst_node[i])
            .collect();
        targets.extend(
            n.primary_outputs
                .iter()
                .enumerate()
                .filter(|(_, po)| po.as_str() == *net)
                .map(|(k, _)| first_output + k),
        );
        for d in ds {
            let src = match *d {
                Driver::PrimaryInput(k) => k,
                Driver::Pin(i, _) => inst_node[i],
            };
            for &t in &targets {
                edges.insert((src, t));
            }
        }
    }
    let edges = edges.into_iter().map(|(s, t)| (s, t, 1.0)).collect();
    CircuitGraph::new(nodes, edges).expect("validated netlist yields a valid graph")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{parse_netlist, CellLibrary};

    fn lib() -> CellLibrary {
        CellLibrary::parse(
            "cell INV kind=comb function=INV in=A out=Y\n\
             cell AND2 kind=comb function=AND in=A,B out=Y\n",
        )
        .unwrap()
    }

    #[test]
    fn single_inverter_graph() {
        let n = parse_netlist(
            "module t (a, y); input a; output y; INV inv1 (.A(a), .Y(y)); endmodule",
            &lib(),
        )
        .unwrap();
        let g = netlist_to_graph(&n);
        let labels: Vec<_> = g.nodes().iter().map(|n| n.label.as_str()).collect();
        assert_eq!(labels, ["a", "inv1", "y"]);
        let e: Vec<_> = g.edges().iter().map(|e| (e.source, e.target, e.weight)).collect();
        assert_eq!(e, [(0, 1, 1.0), (1, 2, 1.0)]);
    }

    #[test]
    fn parallel_pins_collapse() {
        let n = parse_netlist(
            "module t (a, y); input a; output y; INV i (.A(a), .Y(n)); AND2 g (.A(n), .B(n), .Y(y)); endmodule",
            &lib(),
        )
        .unwrap();
        let g = netlist_to_graph(&n);
        let idx = g.label_index();
        let count = g.edges().iter().filter(|e| e.source == idx["i"] && e.target == idx["g"]).count();
        assert_eq!(count, 1);
    }

    #[test]
    fn rejects_bad_graphs() {
        let nodes = || vec![("a".to_string(), NodeKind::Input), ("b".to_string(), NodeKind::Comb)];
        assert!(matches!(
            CircuitGraph::new(nodes(), vec![(0, 1, 0.0)]),
            Err(GraphError::NonPositiveWeight { .. })
        ));
        assert!(matches!(
            CircuitGraph::new(nodes(), vec![(0, 1, 1.0), (0, 1, 2.0)]),
            Err(GraphError::DuplicateEdge { .. })
        ));
        assert!(matches!(
            CircuitGraph::new(nodes(), vec![(0, 5, 1.0)]),
            Err(GraphError::DanglingEdge { .. })
        ));
        assert!(matches!(
            CircuitGraph::new(vec![("a".into(), NodeKind::Input), ("a".into(), NodeKind::Comb)], vec![]),
            Err(GraphError::DuplicateLabel(_))
        ));
    }
}

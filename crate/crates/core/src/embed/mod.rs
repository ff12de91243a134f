// SPDX-License-Identifier: Apache-2.0

//! node2vec feature learning: second-order biased random walks over the
//! circuit graph, followed by skip-gram training with negative sampling.

mod alias;
mod io;
mod skipgram;
mod walk;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::CircuitGraph;

pub use alias::AliasTable;
pub use io::{
    read_embedding_cache, read_embeddings_csv, write_embedding_cache, write_embeddings_csv,
    write_walks,
};
pub use skipgram::{sgns_gradients, sgns_loss, train_skipgram, train_skipgram_with_noise, SgnsGradients, TrainSummary};
pub use walk::{
    sample_walks, shortest_hop, transition_probability, Neighborhood, TransitionTables,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Traversal {
    Directed,
    Undirected,
}

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("invalid walk parameter: {0}")]
    InvalidParam(String),
    #[error("node {0} is not in the graph")]
    UnknownNode(usize),
    #[error("{0} -> {1} is not an edge under the chosen traversal")]
    NotAnEdge(usize, usize),
    #[error("walk corpus contains no (center, context) pairs")]
    EmptyCorpus,
    #[error("corpus references node {id} but the graph has {nodes} nodes")]
    NodeOutOfRange { id: usize, nodes: usize },
    #[error("skip-gram loss became non-finite in epoch {0}")]
    NonFiniteLoss(usize),
    #[error("malformed embedding file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Walk and training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkParams {
    /// Return parameter.
    pub p: f64,
    /// In-out parameter.
    pub q: f64,
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub window: usize,
    pub dimensions: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Initial SGD step; decays linearly to 1e-4 of this value.
    pub learning_rate: f64,
    pub seed: u64,
    pub traversal: Traversal,
}

impl Default for WalkParams {
    fn default() -> Self {
        WalkParams {
            p: 1.0,
            q: 1.0,
            walk_length: 80,
            walks_per_node: 10,
            window: 10,
            dimensions: 8,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            seed: 0,
            traversal: Traversal::Undirected,
        }
    }
}

impl WalkParams {
    /// Check every bound; returns the params unchanged on success.
    pub fn validated(self) -> Result<Self, EmbedError> {
        let bad = |m: &str| Err(EmbedError::InvalidParam(m.to_string()));
        if !(self.p > 0.0 && self.p.is_finite()) {
            return bad("p must be > 0");
        }
        if !(self.q > 0.0 && self.q.is_finite()) {
            return bad("q must be > 0");
        }
        if self.walk_length < 2 {
            return bad("walk_length must be >= 2");
        }
        if self.walks_per_node < 1 {
            return bad("walks_per_node must be >= 1");
        }
        if self.window < 1 {
            return bad("window must be >= 1");
        }
        if self.dimensions < 1 {
            return bad("dimensions must be >= 1");
        }
        if self.negatives < 1 {
            return bad("negatives must be >= 1");
        }
        if self.epochs < 1 {
            return bad("epochs must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be > 0");
        }
        Ok(self)
    }
}

/// One learned vector per graph node, in graph node order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub node_labels: Vec<String>,
    pub dim: usize,
    /// Row-major |V| x dim input embeddings.
    pub vectors: Vec<f64>,
    /// Row-major |V| x dim output (context) embeddings. Empty when loaded
    /// from an exported file.
    pub context_vectors: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn rows(&self) -> usize {
        self.node_labels.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }
}

#[derive(Debug, Clone, Default)]
pub struct EmbedReport {
    /// Nodes without traversal neighbors.
    pub isolated_nodes: Vec<usize>,
    pub walks: usize,
    pub training: TrainSummary,
}

/// Walks + skip-gram. A pure function of (graph, params).
pub fn embed(g: &CircuitGraph, params: &WalkParams) -> Result<EmbeddingMatrix, EmbedError> {
    embed_with_report(g, params).map(|(m, _)| m)
}

pub fn embed_with_report(
    g: &CircuitGraph,
    params: &WalkParams,
) -> Result<(EmbeddingMatrix, EmbedReport), EmbedError> {
    let params = params.clone().validated()?;
    let tables = TransitionTables::build(g, &params)?;
    let corpus = sample_walks(&tables, &params);
    let noise: Vec<f64> = (0..g.node_count())
        .map(|v| (tables.neighborhood().degree(v) as f64).powf(0.75))
        .collect();
    let (mut matrix, training) = train_skipgram_with_noise(&corpus, g.node_count(), &params, &noise)?;
    matrix.node_labels = g.nodes().iter().map(|n| n.label.clone()).collect();
    let report = EmbedReport {
        isolated_nodes: tables.isolated_nodes().to_vec(),
        walks: corpus.len(),
        training,
    };
    Ok((matrix, report))
}

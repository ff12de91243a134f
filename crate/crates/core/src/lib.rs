// SPDX-License-Identifier: Apache-2.0

//! Gate-level netlist to functional-derating regression toolkit.
//!
//! The flow: parse a structural netlist ([`netlist`]), convert it to a
//! directed circuit graph and GML ([`graph`]), learn node2vec features
//! ([`embed`]), compute per-flip-flop functional derating by SEU fault
//! injection ([`fault`]), and fit/evaluate an RBF ε-SVR and an MLP on
//! the features ([`regress`], [`metrics`]). [`pipeline`] ties the stages
//! together behind a config file and the `gatefdr` CLI.

pub mod embed;
pub mod fault;
pub mod graph;
pub mod metrics;
pub mod netlist;
pub mod pipeline;
pub mod regress;
pub mod seed;
pub mod synth;

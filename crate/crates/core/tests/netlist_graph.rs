// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use gatefdr::graph::{netlist_to_graph, read_gml, write_gml, NodeKind};
use gatefdr::netlist::{parse_netlist, validate_netlist, CellLibrary, DiagnosticKind, Netlist, PinDirection};
use gatefdr::synth::chain_netlist;

const FIXTURES: [(&str, &str); 6] = [
    ("toy_counter", include_str!("../fixtures/toy_counter.v")),
    ("shift3", include_str!("../fixtures/shift3.v")),
    ("island", include_str!("../fixtures/island.v")),
    ("toggle", include_str!("../fixtures/toggle.v")),
    ("chains_4x5", include_str!("../fixtures/chains_4x5.v")),
    ("chains_20x10", include_str!("../fixtures/chains_20x10.v")),
];

fn load(src: &str) -> Netlist {
    parse_netlist(src, &CellLibrary::standard()).unwrap()
}

/// Element-level (driver, load) pairs found by scanning every net
/// directly, without going through the netlist's driver/load indices.
fn scan_pairs(n: &Netlist) -> BTreeSet<(String, String)> {
    let mut pairs = BTreeSet::new();
    for net in &n.nets {
        let mut drivers: Vec<String> = n.primary_inputs.iter().filter(|p| *p == net).cloned().collect();
        let mut loads: Vec<String> = n.primary_outputs.iter().filter(|p| *p == net).cloned().collect();
        for inst in &n.instances {
            let cell = &n.cells[&inst.cell];
            for (pin, pin_net) in &inst.pins {
                if pin_net != net {
                    continue;
                }
                match cell.pin(pin).unwrap().direction {
                    PinDirection::Out => drivers.push(inst.name.clone()),
                    PinDirection::In => loads.push(inst.name.clone()),
                }
            }
        }
        for d in &drivers {
            for l in &loads {
                pairs.insert((d.clone(), l.clone()));
            }
        }
    }
    pairs
}

#[test]
fn toy_counter_structure() {
    let n = load(include_str!("../fixtures/toy_counter.v"));
    assert_eq!(n.flip_flops, ["ff0", "ff1"]);
    assert_eq!(n.instances.len(), 6);
    assert!(validate_netlist(&n).is_empty());
}

#[test]
fn floating_data_pin_is_reported() {
    let mut n = load(include_str!("../fixtures/toy_counter.v"));
    let ff0 = n.instances.iter_mut().find(|i| i.name == "ff0").unwrap();
    ff0.pins.remove("D");
    let diags = validate_netlist(&n);
    assert_eq!(diags.len(), 1);
    assert_eq!(diags[0].kind, DiagnosticKind::UnconnectedPin { instance: "ff0".into(), pin: "D".into() });
}

#[test]
fn toy_counter_graph_matches_schematic() {
    let g = netlist_to_graph(&load(include_str!("../fixtures/toy_counter.v")));
    let labels: Vec<&str> = g.nodes().iter().map(|n| n.label.as_str()).collect();
    assert_eq!(labels, ["clk", "en", "a0", "a1", "ff0", "ff1", "x0", "x1", "y"]);
    let kinds: Vec<NodeKind> = g.nodes().iter().map(|n| n.kind).collect();
    use NodeKind::*;
    assert_eq!(kinds, [Input, Input, Comb, Comb, FlipFlop, FlipFlop, Comb, Comb, Output]);

    let expected: BTreeSet<(&str, &str)> = [
        ("clk", "ff0"), ("clk", "ff1"), ("en", "x0"), ("en", "a0"), ("x0", "ff0"), ("a0", "x1"),
        ("x1", "ff1"), ("a1", "y"), ("ff0", "x0"), ("ff0", "a0"), ("ff0", "a1"), ("ff1", "x1"), ("ff1", "a1"),
    ]
    .into_iter()
    .collect();
    let got: BTreeSet<(&str, &str)> =
        g.edges().iter().map(|e| (labels[e.source], labels[e.target])).collect();
    assert_eq!(got, expected);
    assert!(g.edges().iter().all(|e| e.weight == 1.0));
}

#[test]
fn edges_match_net_scanning_oracle() {
    for (name, src) in FIXTURES {
        let n = load(src);
        let g = netlist_to_graph(&n);
        let labels: Vec<&str> = g.nodes().iter().map(|n| n.label.as_str()).collect();
        let got: BTreeSet<(String, String)> = g
            .edges()
            .iter()
            .map(|e| (labels[e.source].to_string(), labels[e.target].to_string()))
            .collect();
        assert_eq!(got, scan_pairs(&n), "{name}");
        assert_eq!(g.edge_count(), got.len(), "{name}: duplicate edges");
        let out: usize = (0..g.node_count()).map(|v| g.out_neighbors(v).len()).sum();
        let inn: usize = (0..g.node_count()).map(|v| g.in_neighbors(v).len()).sum();
        assert_eq!((out, inn), (g.edge_count(), g.edge_count()), "{name}");
    }
}

#[test]
fn fixtures_round_trip_through_gml() {
    for (name, src) in FIXTURES {
        let g = netlist_to_graph(&load(src));
        let text = write_gml(&g);
        assert_eq!(read_gml(&text).unwrap(), g, "{name}");
        assert_eq!(write_gml(&read_gml(&text).unwrap()), text, "{name}");
    }
    let four = include_str!("../fixtures/four_node.gml");
    assert_eq!(write_gml(&read_gml(four).unwrap()), four);
}

#[test]
fn shipped_chain_fixtures_match_generator() {
    assert_eq!(include_str!("../fixtures/chains_20x10.v"), chain_netlist(20, 10));
    assert_eq!(include_str!("../fixtures/chains_4x5.v"), chain_netlist(4, 5));
}

#[test]
fn bundled_library_is_the_fixture_library() {
    let lib = CellLibrary::parse(include_str!("../fixtures/cells.lib")).unwrap();
    assert_eq!(lib, CellLibrary::standard());
}

// SPDX-License-Identifier: Apache-2.0

//! Elaborated gate-level netlist IR.

mod library;
mod parse;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use library::{CellDef, CellKind, CellLibrary, GateFn, LibraryError, PinDef, PinDirection, PinRole, STANDARD_LIBRARY};
pub use parse::{parse_netlist, ParseError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourceLoc {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for SourceLoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub name: String,
    pub cell: String,
    /// pin name -> net name
    pub pins: BTreeMap<String, String>,
    pub loc: SourceLoc,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Netlist {
    pub name: String,
    pub instances: Vec<Instance>,
    pub nets: BTreeSet<String>,
    pub primary_inputs: Vec<String>,
    pub primary_outputs: Vec<String>,
    /// FF-kind instance names, lexicographic.
    pub flip_flops: Vec<String>,
    /// Definitions of every cell type referenced by `instances`.
    pub cells: BTreeMap<String, CellDef>,
}

/// Something that drives a net.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Driver {
    PrimaryInput(usize),
    /// (instance index, pin index within the cell definition)
    Pin(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "ERROR",
            Severity::Warning => "WARNING",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagnosticKind {
    UnknownCellType { instance: String, cell: String },
    UnknownPin { instance: String, pin: String },
    UnconnectedPin { instance: String, pin: String },
    /// Pin connected to a net that is not in the netlist's net set.
    UndeclaredNet { instance: String, net: String },
    MultipleDrivers { net: String, drivers: Vec<String> },
    CombinationalLoop { cycle: Vec<String> },
    FlipFlopSetMismatch { expected: Vec<String>, found: Vec<String> },
    DuplicateName { name: String },
    /// Net with loads but no driver; simulated as constant 0.
    UndrivenNet { net: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub kind: DiagnosticKind,
    pub loc: Option<SourceLoc>,
}

impl Diagnostic {
    fn error(kind: DiagnosticKind, loc: Option<SourceLoc>) -> Self {
        Diagnostic { severity: Severity::Error, kind, loc }
    }

    /// `SEVERITY file:line:col message`
    pub fn render(&self, file: &str) -> String {
        let loc = self.loc.unwrap_or(SourceLoc { line: 0, col: 0 });
        format!("{} {}:{}:{} {}", self.severity, file, loc.line, loc.col, self.kind)
    }
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use DiagnosticKind::*;
        match self {
            UnknownCellType { instance, cell } => {
                write!(f, "instance `{instance}` uses unknown cell type `{cell}`")
            }
            UnknownPin { instance, pin } => {
                write!(f, "instance `{instance}` connects pin `{pin}` that its cell does not have")
            }
            UnconnectedPin { instance, pin } => {
                write!(f, "pin `{pin}` of instance `{instance}` is unconnected")
            }
            UndeclaredNet { instance, net } => {
                write!(f, "instance `{instance}` references unknown net `{net}`")
            }
            MultipleDrivers { net, drivers } => {
                write!(f, "net `{net}` has multiple drivers: {}", drivers.join(", "))
            }
            CombinationalLoop { cycle } => {
                write!(f, "combinational loop through {}", cycle.join(" -> "))
            }
            FlipFlopSetMismatch { expected, found } => write!(
                f,
                "flip-flop list [{}] does not match FF instances [{}]",
                found.join(", "),
                expected.join(", ")
            ),
            DuplicateName { name } => write!(f, "name `{name}` declared more than once"),
            UndrivenNet { net } => write!(f, "net `{net}` has no driver, tied to 0"),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.severity, self.kind)
    }
}

impl Netlist {
    pub fn instance_index(&self) -> HashMap<&str, usize> {
        self.instances.iter().enumerate().map(|(i, inst)| (inst.name.as_str(), i)).collect()
    }

    pub fn cell_of(&self, inst: &Instance) -> Option<&CellDef> {
        self.cells.get(&inst.cell)
    }

    /// Every driver of every net. Nets without drivers are absent.
    pub fn drivers(&self) -> BTreeMap<&str, Vec<Driver>> {
        let mut map: BTreeMap<&str, Vec<Driver>> = BTreeMap::new();
        for (i, pi) in self.primary_inputs.iter().enumerate() {
            map.entry(pi.as_str()).or_default().push(Driver::PrimaryInput(i));
        }
        for (i, inst) in self.instances.iter().enumerate() {
            let Some(cell) = self.cell_of(inst) else { continue };
            for (p, pin) in cell.pins.iter().enumerate() {
                if pin.direction != PinDirection::Out {
                    continue;
                }
                if let Some(net) = inst.pins.get(&pin.name) {
                    map.entry(net.as_str()).or_default().push(Driver::Pin(i, p));
                }
            }
        }
        map
    }

    /// Instances (index, pin index) reading each net.
    pub fn loads(&self) -> BTreeMap<&str, Vec<(usize, usize)>> {
        let mut map: BTreeMap<&str, Vec<(usize, usize)>> = BTreeMap::new();
        for (i, inst) in self.instances.iter().enumerate() {
            let Some(cell) = self.cell_of(inst) else { continue };
            for (p, pin) in cell.pins.iter().enumerate() {
                if pin.direction != PinDirection::In {
                    continue;
                }
                if let Some(net) = inst.pins.get(&pin.name) {
                    map.entry(net.as_str()).or_default().push((i, p));
                }
            }
        }
        map
    }

    fn is_combinational(&self, inst: &Instance) -> bool {
        self.cell_of(inst).is_some_and(|c| c.kind != CellKind::FlipFlop)
    }

    /// Topological order of the non-FF instances (gates and pad cells).
    ///
    /// On failure returns one combinational cycle, rotated so that it
    /// starts at its lexicographically smallest instance name.
    pub fn comb_topo_order(&self) -> Result<Vec<usize>, Vec<String>> {
        let n = self.instances.len();
        let drivers = self.drivers();
        let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        let mut indeg = vec![0usize; n];
        for (v, inst) in self.instances.iter().enumerate() {
            if !self.is_combinational(inst) {
                continue;
            }
            let cell = self.cell_of(inst).unwrap();
            for pin in cell.inputs() {
                let Some(net) = inst.pins.get(&pin.name) else { continue };
                for d in drivers.get(net.as_str()).into_iter().flatten() {
                    if let Driver::Pin(u, _) = *d {
                        if self.is_combinational(&self.instances[u]) && succ[u].insert(v) {
                            indeg[v] += 1;
                        }
                    }
                }
            }
        }
        let comb: Vec<usize> =
            (0..n).filter(|&i| self.is_combinational(&self.instances[i])).collect();
        let mut ready: BTreeSet<(String, usize)> = comb
            .iter()
            .filter(|&&i| indeg[i] == 0)
            .map(|&i| (self.instances[i].name.clone(), i))
            .collect();
        let mut order = Vec::with_capacity(comb.len());
        while let Some(first) = ready.pop_first() {
            let u = first.1;
            order.push(u);
            for &v in &succ[u] {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    ready.insert((self.instances[v].name.clone(), v));
                }
            }
        }
        if order.len() == comb.len() {
            return Ok(order);
        }
        // Every leftover node has a leftover predecessor, so walking
        // predecessors must close a cycle.
        let remaining: BTreeSet<usize> = comb.into_iter().filter(|&i| indeg[i] > 0).collect();
        let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &u in &remaining {
            for &v in &succ[u] {
                if remaining.contains(&v) {
                    pred[v].push(u);
                }
            }
        }
        let start = *remaining
            .iter()
            .min_by_key(|&&i| self.instances[i].name.as_str())
            .unwrap();
        let mut seen: HashMap<usize, usize> = HashMap::new();
        let mut path = Vec::new();
        let mut cur = start;
        while !seen.contains_key(&cur) {
            seen.insert(cur, path.len());
            path.push(cur);
            cur = pred[cur][0];
        }
        let mut cycle: Vec<usize> = path[seen[&cur]..].to_vec();
        cycle.reverse(); // predecessor walk -> signal direction
        let names: Vec<String> = cycle.iter().map(|&i| self.instances[i].name.clone()).collect();
        let min = names.iter().enumerate().min_by_key(|(_, n)| n.as_str()).unwrap().0;
        let mut rotated = names[min..].to_vec();
        rotated.extend_from_slice(&names[..min]);
        Err(rotated)
    }
}

/// Check every netlist invariant. Returns one diagnostic per violation;
/// an empty list means the netlist is well formed.
pub fn validate_netlist(n: &Netlist) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    let mut seen = BTreeSet::new();
    for inst in &n.instances {
        if !seen.insert(inst.name.as_str()) {
            out.push(Diagnostic::error(
                DiagnosticKind::DuplicateName { name: inst.name.clone() },
                Some(inst.loc),
            ));
        }
    }

    for inst in &n.instances {
        let Some(cell) = n.cell_of(inst) else {
            out.push(Diagnostic::error(
                DiagnosticKind::UnknownCellType { instance: inst.name.clone(), cell: inst.cell.clone() },
                Some(inst.loc),
            ));
            continue;
        };
        for pin in &cell.pins {
            if !inst.pins.contains_key(&pin.name) {
                out.push(Diagnostic::error(
                    DiagnosticKind::UnconnectedPin { instance: inst.name.clone(), pin: pin.name.clone() },
                    Some(inst.loc),
                ));
            }
        }
        for (pin, net) in &inst.pins {
            if cell.pin(pin).is_none() {
                out.push(Diagnostic::error(
                    DiagnosticKind::UnknownPin { instance: inst.name.clone(), pin: pin.clone() },
                    Some(inst.loc),
                ));
            } else if !n.nets.contains(net) {
                out.push(Diagnostic::error(
                    DiagnosticKind::UndeclaredNet { instance: inst.name.clone(), net: net.clone() },
                    Some(inst.loc),
                ));
            }
        }
    }

    for (net, drivers) in n.drivers() {
        if drivers.len() > 1 {
            let names = drivers
                .iter()
                .map(|d| match *d {
                    Driver::PrimaryInput(i) => n.primary_inputs[i].clone(),
                    Driver::Pin(i, p) => {
                        let inst = &n.instances[i];
                        format!("{}.{}", inst.name, n.cells[&inst.cell].pins[p].name)
                    }
                })
                .collect();
            let loc = drivers.iter().find_map(|d| match *d {
                Driver::Pin(i, _) => Some(n.instances[i].loc),
                _ => None,
            });
            out.push(Diagnostic::error(
                DiagnosticKind::MultipleDrivers { net: net.to_string(), drivers: names },
                loc,
            ));
        }
    }

    let mut expected: Vec<String> = n
        .instances
        .iter()
        .filter(|i| n.cell_of(i).is_some_and(|c| c.kind == CellKind::FlipFlop))
        .map(|i| i.name.clone())
        .collect();
    expected.sort();
    if expected != n.flip_flops {
        out.push(Diagnostic::error(
            DiagnosticKind::FlipFlopSetMismatch { expected, found: n.flip_flops.clone() },
            None,
        ));
    }

    if let Err(cycle) = n.comb_topo_order() {
        let loc = n.instances.iter().find(|i| i.name == cycle[0]).map(|i| i.loc);
        out.push(Diagnostic::error(DiagnosticKind::CombinationalLoop { cycle }, loc));
    }
    out
}

/// Non-fatal findings: nets that are read but never driven.
pub fn netlist_warnings(n: &Netlist) -> Vec<Diagnostic> {
    let drivers = n.drivers();
    let mut read: BTreeSet<&str> = n.loads().keys().copied().collect();
    read.extend(n.primary_outputs.iter().map(String::as_str));
    read.into_iter()
        .filter(|net| !drivers.contains_key(net))
        .map(|net| Diagnostic {
            severity: Severity::Warning,
            kind: DiagnosticKind::UndrivenNet { net: net.to_string() },
            loc: None,
        })
        .collect()
}

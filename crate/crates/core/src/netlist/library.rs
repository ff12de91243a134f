// SPDX-License-Identifier: Apache-2.0

//! Cell library: the set of cell types a netlist may instantiate.
//!
//! The library is a line-oriented key/value text file. Each non-empty,
//! non-comment line declares one cell:
//!
//! ```text
//! # comment
//! cell AND2  kind=comb  function=AND  in=A,B  out=Y
//! cell INV   kind=comb  function=INV  in=A    out=Y
//! cell MUX2  kind=comb  function=MUX2 in=A,B,S out=Y
//! cell DFF   kind=ff    data=D  clock=CK  q=Q
//! cell DFFR  kind=ff    data=D  clock=CK  q=Q  reset=R
//! cell IBUF  kind=input  in=I  out=O
//! cell OBUF  kind=output in=I  out=O
//! ```
//!
//! Input pins of a `comb` cell are evaluated in declaration order; for
//! `MUX2` that order is `(d0, d1, select)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CellKind {
    Comb,
    FlipFlop,
    Input,
    Output,
}

impl fmt::Display for CellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CellKind::Comb => "COMB",
            CellKind::FlipFlop => "FF",
            CellKind::Input => "INPUT",
            CellKind::Output => "OUTPUT",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PinDirection {
    In,
    Out,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PinRole {
    Data,
    Clock,
    Reset,
    Q,
}

/// Boolean function of a combinational cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateFn {
    And,
    Nand,
    Or,
    Nor,
    Xor,
    Xnor,
    Inv,
    Buf,
    Mux2,
}

impl GateFn {
    pub fn eval(self, inputs: &[bool]) -> bool {
        match self {
            GateFn::And => inputs.iter().all(|&b| b),
            GateFn::Nand => !inputs.iter().all(|&b| b),
            GateFn::Or => inputs.iter().any(|&b| b),
            GateFn::Nor => !inputs.iter().any(|&b| b),
            GateFn::Xor => inputs.iter().fold(false, |acc, &b| acc ^ b),
            GateFn::Xnor => !inputs.iter().fold(false, |acc, &b| acc ^ b),
            GateFn::Inv => !inputs[0],
            GateFn::Buf => inputs[0],
            GateFn::Mux2 => {
                if inputs[2] {
                    inputs[1]
                } else {
                    inputs[0]
                }
            }
        }
    }

    fn arity_ok(self, n: usize) -> bool {
        match self {
            GateFn::Inv | GateFn::Buf => n == 1,
            GateFn::Mux2 => n == 3,
            _ => n >= 1,
        }
    }
}

impl FromStr for GateFn {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        // Accept both the bare name and the arity-suffixed form (AND2, NOR3, ...).
        let base = s.trim_end_matches(|c: char| c.is_ascii_digit());
        Ok(match (s, base) {
            ("MUX2", _) => GateFn::Mux2,
            (_, "AND") => GateFn::And,
            (_, "NAND") => GateFn::Nand,
            (_, "OR") => GateFn::Or,
            (_, "NOR") => GateFn::Nor,
            (_, "XOR") => GateFn::Xor,
            (_, "XNOR") => GateFn::Xnor,
            (_, "INV") | (_, "NOT") => GateFn::Inv,
            (_, "BUF") => GateFn::Buf,
            _ => return Err(format!("unknown boolean function `{s}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PinDef {
    pub name: String,
    pub direction: PinDirection,
    pub role: PinRole,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellDef {
    pub name: String,
    pub kind: CellKind,
    pub pins: Vec<PinDef>,
    /// Present for `Comb` cells only.
    pub function: Option<GateFn>,
}

impl CellDef {
    pub fn pin(&self, name: &str) -> Option<&PinDef> {
        self.pins.iter().find(|p| p.name == name)
    }

    pub fn inputs(&self) -> impl Iterator<Item = &PinDef> {
        self.pins.iter().filter(|p| p.direction == PinDirection::In)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &PinDef> {
        self.pins.iter().filter(|p| p.direction == PinDirection::Out)
    }

    pub fn pin_with_role(&self, role: PinRole) -> Option<&PinDef> {
        self.pins.iter().find(|p| p.role == role)
    }

    fn check(&self) -> Result<(), String> {
        let n_in = self.inputs().count();
        let n_out = self.outputs().count();
        match self.kind {
            CellKind::Comb => {
                if n_out != 1 || n_in == 0 {
                    return Err("comb cell needs exactly one output and at least one input".into());
                }
                match self.function {
                    Some(f) if f.arity_ok(n_in) => {}
                    Some(f) => return Err(format!("function {f:?} does not take {n_in} inputs")),
                    None => return Err("comb cell needs a function".into()),
                }
            }
            CellKind::FlipFlop => {
                let count = |role| self.pins.iter().filter(|p| p.role == role).count();
                if count(PinRole::Data) != 1 || count(PinRole::Clock) != 1 || count(PinRole::Q) != 1
                {
                    return Err("flip-flop needs exactly one data, clock and q pin".into());
                }
                if count(PinRole::Reset) > 1 {
                    return Err("flip-flop has more than one reset pin".into());
                }
            }
            CellKind::Input | CellKind::Output => {
                if n_in != 1 || n_out != 1 {
                    return Err("pad cell needs exactly one input and one output".into());
                }
            }
        }
        let mut names: Vec<&str> = self.pins.iter().map(|p| p.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err("duplicate pin name".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("cell library line {line}: {message}")]
pub struct LibraryError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellLibrary {
    pub entries: BTreeMap<String, CellDef>,
}

/// The bundled standard-cell library (INV, BUF, two-input gates, MUX2,
/// DFF and DFFR).
pub const STANDARD_LIBRARY: &str = include_str!("../../fixtures/cells.lib");

impl CellLibrary {
    pub fn standard() -> Self {
        Self::parse(STANDARD_LIBRARY).expect("bundled library parses")
    }

    pub fn get(&self, name: &str) -> Option<&CellDef> {
        self.entries.get(name)
    }

    pub fn insert(&mut self, cell: CellDef) {
        self.entries.insert(cell.name.clone(), cell);
    }

    pub fn parse(text: &str) -> Result<Self, LibraryError> {
        let mut lib = CellLibrary::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| LibraryError { line, message };
            let mut words = content.split_whitespace();
            if words.next() != Some("cell") {
                return Err(err("expected `cell <NAME> key=value ...`".into()));
            }
            let name = words.next().ok_or_else(|| err("missing cell name".into()))?;
            let mut kind = None;
            let mut function = None;
            let mut pins = Vec::new();
            for word in words {
                let (key, value) = word
                    .split_once('=')
                    .ok_or_else(|| err(format!("expected key=value, got `{word}`")))?;
                let pin_list = |direction, role| {
                    value
                        .split(',')
                        .filter(|s| !s.is_empty())
                        .map(|p| PinDef { name: p.to_string(), direction, role })
                        .collect::<Vec<_>>()
                };
                match key {
                    "kind" => {
                        kind = Some(match value {
                            "comb" => CellKind::Comb,
                            "ff" => CellKind::FlipFlop,
                            "input" => CellKind::Input,
                            "output" => CellKind::Output,
                            other => return Err(err(format!("unknown kind `{other}`"))),
                        })
                    }
                    "function" => function = Some(value.parse::<GateFn>().map_err(err)?),
                    "in" | "data" => pins.extend(pin_list(PinDirection::In, PinRole::Data)),
                    "clock" => pins.extend(pin_list(PinDirection::In, PinRole::Clock)),
                    "reset" => pins.extend(pin_list(PinDirection::In, PinRole::Reset)),
                    "out" | "q" => pins.extend(pin_list(PinDirection::Out, PinRole::Q)),
                    other => return Err(err(format!("unknown key `{other}`"))),
                }
            }
            let kind = kind.ok_or_else(|| err("missing kind=".into()))?;
            if kind != CellKind::Comb && function.is_some() {
                return Err(err("function= is only valid for comb cells".into()));
            }
            let cell = CellDef { name: name.to_string(), kind, pins, function };
            cell.check().map_err(err)?;
            if lib.entries.contains_key(name) {
                return Err(err(format!("cell `{name}` declared twice")));
            }
            lib.insert(cell);
        }
        Ok(lib)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_mixed_library() {
        let lib = CellLibrary::parse(
            "# gates\ncell NAND2 kind=comb function=NAND2 in=A,B out=Y\n\
             cell DFFR kind=ff data=D clock=CK q=Q reset=R # with reset\n",
        )
        .unwrap();
        let nand = lib.get("NAND2").unwrap();
        assert_eq!(nand.function, Some(GateFn::Nand));
        assert_eq!(nand.inputs().count(), 2);
        let ff = lib.get("DFFR").unwrap();
        assert_eq!(ff.kind, CellKind::FlipFlop);
        assert_eq!(ff.pin_with_role(PinRole::Reset).unwrap().name, "R");
    }

    #[test]
    fn rejects_comb_without_output() {
        let e = CellLibrary::parse("cell BAD kind=comb function=AND in=A,B").unwrap_err();
        assert_eq!(e.line, 1);
    }

    #[test]
    fn rejects_ff_without_clock() {
        assert!(CellLibrary::parse("cell F kind=ff data=D q=Q").is_err());
    }

    #[test]
    fn rejects_wrong_arity() {
        assert!(CellLibrary::parse("cell I kind=comb function=INV in=A,B out=Y").is_err());
    }

    #[test]
    fn gate_functions() {
        assert!(GateFn::Xor.eval(&[true, false, false]));
        assert!(!GateFn::Xnor.eval(&[true, false]));
        assert!(GateFn::Mux2.eval(&[false, true, true]));
        assert!(!GateFn::Mux2.eval(&[false, true, false]));
        assert!(GateFn::Nor.eval(&[false, false]));
    }
}

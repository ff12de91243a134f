// SPDX-License-Identifier: Apache-2.0

//! Parser for a flattened, single-module subset of structural Verilog.
//!
//! Supported: `module name (ports);`, `input`/`output`/`wire` declarations
//! of scalar nets, and cell instances with named port connections
//! (`CELL inst (.A(n1), .Y(n2));`). Line and block comments are skipped.
//! Buses, `assign`, behavioral code and positional connections are rejected.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::{
    validate_netlist, CellLibrary, Diagnostic, DiagnosticKind, Instance, Netlist, SourceLoc,
};
use crate::netlist::CellKind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("{loc}: syntax error: {message}")]
    Syntax { loc: SourceLoc, message: String },
    #[error("{loc}: unknown cell type `{cell}`")]
    UnknownCellType { loc: SourceLoc, cell: String },
    #[error("{loc}: net `{net}` has multiple drivers")]
    MultipleDrivers { loc: SourceLoc, net: String },
    #[error("{loc}: pin `{pin}` of instance `{instance}` is unconnected")]
    UnconnectedPin { loc: SourceLoc, instance: String, pin: String },
    #[error("{loc}: combinational loop through {}", cycle.join(" -> "))]
    CombinationalLoop { loc: SourceLoc, cycle: Vec<String> },
    #[error("{loc}: {kind}")]
    Invalid { loc: SourceLoc, kind: DiagnosticKind },
}

impl ParseError {
    pub fn loc(&self) -> SourceLoc {
        match self {
            ParseError::Syntax { loc, .. }
            | ParseError::UnknownCellType { loc, .. }
            | ParseError::MultipleDrivers { loc, .. }
            | ParseError::UnconnectedPin { loc, .. }
            | ParseError::CombinationalLoop { loc, .. }
            | ParseError::Invalid { loc, .. } => *loc,
        }
    }

    /// Message without the location prefix.
    pub fn message(&self) -> String {
        let full = self.to_string();
        let prefix = format!("{}: ", self.loc());
        full.strip_prefix(&prefix).map(str::to_string).unwrap_or(full)
    }

    fn from_diagnostic(d: Diagnostic) -> Self {
        let loc = d.loc.unwrap_or_default();
        match d.kind {
            DiagnosticKind::MultipleDrivers { net, .. } => ParseError::MultipleDrivers { loc, net },
            DiagnosticKind::UnconnectedPin { instance, pin } => {
                ParseError::UnconnectedPin { loc, instance, pin }
            }
            DiagnosticKind::CombinationalLoop { cycle } => {
                ParseError::CombinationalLoop { loc, cycle }
            }
            DiagnosticKind::UnknownCellType { cell, .. } => ParseError::UnknownCellType { loc, cell },
            kind => ParseError::Invalid { loc, kind },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Punct(char),
}

struct Token {
    tok: Tok,
    loc: SourceLoc,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }
    while i < chars.len() {
        let c = chars[i];
        let loc = SourceLoc { line, col };
        if c.is_whitespace() {
            bump!();
        } else if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
        } else if c == '/' && chars.get(i + 1) == Some(&'*') {
            bump!();
            bump!();
            loop {
                if i >= chars.len() {
                    return Err(ParseError::Syntax { loc, message: "unterminated comment".into() });
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
        } else if c == '\\' {
            // Escaped identifier: runs to the next whitespace.
            bump!();
            let mut s = String::new();
            while i < chars.len() && !chars[i].is_whitespace() {
                s.push(chars[i]);
                bump!();
            }
            if s.is_empty() {
                return Err(ParseError::Syntax { loc, message: "empty escaped identifier".into() });
            }
            out.push(Token { tok: Tok::Ident(s), loc });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len()
                && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '$')
            {
                s.push(chars[i]);
                bump!();
            }
            out.push(Token { tok: Tok::Ident(s), loc });
        } else if "(),;.".contains(c) {
            out.push(Token { tok: Tok::Punct(c), loc });
            bump!();
        } else {
            let message = match c {
                '[' => "bus ranges are not supported".to_string(),
                '\'' => "literal constants are not supported".to_string(),
                _ => format!("unexpected character `{c}`"),
            };
            return Err(ParseError::Syntax { loc, message });
        }
    }
    Ok(out)
}

const KEYWORDS: &[&str] = &["module", "endmodule", "input", "output", "wire", "inout", "assign"];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    eof: SourceLoc,
}

impl Parser {
    fn loc(&self) -> SourceLoc {
        self.toks.get(self.pos).map(|t| t.loc).unwrap_or(self.eof)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax { loc: self.loc(), message: message.into() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn punct(&mut self, c: char) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Punct(p)) if *p == c => {
                self.pos += 1;
                Ok(())
            }
            Some(Tok::Ident(s)) => self.err(format!("expected `{c}`, found `{s}`")),
            Some(Tok::Punct(p)) => self.err(format!("expected `{c}`, found `{p}`")),
            None => self.err(format!("expected `{c}`, found end of file")),
        }
    }

    fn eat_punct(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Punct(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<(String, SourceLoc), ParseError> {
        let loc = self.loc();
        match self.peek() {
            Some(Tok::Ident(s)) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.pos += 1;
                Ok((s, loc))
            }
            Some(Tok::Ident(s)) => self.err(format!("expected identifier, found keyword `{s}`")),
            Some(Tok::Punct(p)) => self.err(format!("expected identifier, found `{p}`")),
            None => self.err("expected identifier, found end of file"),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err(format!("expected `{kw}`")),
        }
    }

    fn ident_list(&mut self) -> Result<Vec<(String, SourceLoc)>, ParseError> {
        let mut names = vec![self.ident()?];
        while self.eat_punct(',') {
            names.push(self.ident()?);
        }
        self.punct(';')?;
        Ok(names)
    }
}

/// Parse and elaborate a structural netlist against `lib`.
pub fn parse_netlist(text: &str, lib: &CellLibrary) -> Result<Netlist, ParseError> {
    let toks = lex(text)?;
    let eof = toks.last().map(|t| t.loc).unwrap_or(SourceLoc { line: 1, col: 1 });
    let mut p = Parser { toks, pos: 0, eof };

    p.keyword("module")?;
    let (name, _) = p.ident()?;
    let mut port_list = Vec::new();
    if p.eat_punct('(') {
        if !p.eat_punct(')') {
            port_list.push(p.ident()?);
            while p.eat_punct(',') {
                port_list.push(p.ident()?);
            }
            p.punct(')')?;
        }
    }
    p.punct(';')?;

    let mut inputs: Vec<String> = Vec::new();
    let mut outputs: Vec<String> = Vec::new();
    let mut nets: BTreeSet<String> = BTreeSet::new();
    let mut instances: Vec<Instance> = Vec::new();
    let mut inst_names: BTreeSet<String> = BTreeSet::new();

    loop {
        let loc = p.loc();
        let word = match p.peek() {
            Some(Tok::Ident(s)) => s.clone(),
            Some(Tok::Punct(c)) => return p.err(format!("unexpected `{c}`")),
            None => return p.err("missing `endmodule`"),
        };
        match word.as_str() {
            "endmodule" => {
                p.pos += 1;
                break;
            }
            "input" | "output" => {
                p.pos += 1;
                let list = if word == "input" { &mut inputs } else { &mut outputs };
                for (n, nloc) in p.ident_list()? {
                    if list.contains(&n) {
                        return Err(ParseError::Invalid {
                            loc: nloc,
                            kind: DiagnosticKind::DuplicateName { name: n },
                        });
                    }
                    nets.insert(n.clone());
                    list.push(n);
                }
            }
            "wire" => {
                p.pos += 1;
                for (n, _) in p.ident_list()? {
                    nets.insert(n);
                }
            }
            "inout" | "assign" | "module" => {
                return p.err(format!("`{word}` is not supported in a structural netlist"))
            }
            _ => {
                let (cell_name, cell_loc) = p.ident()?;
                let (inst_name, inst_loc) = p.ident()?;
                let cell = lib
                    .get(&cell_name)
                    .ok_or(ParseError::UnknownCellType { loc: cell_loc, cell: cell_name.clone() })?;
                p.punct('(')?;
                let mut pins = BTreeMap::new();
                if !p.eat_punct(')') {
                    loop {
                        if p.peek() != Some(&Tok::Punct('.')) {
                            return p.err("only named port connections (`.PIN(net)`) are supported");
                        }
                        p.pos += 1;
                        let (pin, pin_loc) = p.ident()?;
                        if cell.pin(&pin).is_none() {
                            return Err(ParseError::Invalid {
                                loc: pin_loc,
                                kind: DiagnosticKind::UnknownPin { instance: inst_name, pin },
                            });
                        }
                        p.punct('(')?;
                        if p.eat_punct(')') {
                            return Err(ParseError::UnconnectedPin {
                                loc: pin_loc,
                                instance: inst_name,
                                pin,
                            });
                        }
                        let (net, _) = p.ident()?;
                        p.punct(')')?;
                        if pins.insert(pin.clone(), net.clone()).is_some() {
                            return Err(ParseError::Syntax {
                                loc: pin_loc,
                                message: format!("pin `{pin}` connected twice"),
                            });
                        }
                        nets.insert(net);
                        if !p.eat_punct(',') {
                            break;
                        }
                    }
                    p.punct(')')?;
                }
                p.punct(';')?;
                if !inst_names.insert(inst_name.clone()) {
                    return Err(ParseError::Invalid {
                        loc: inst_loc,
                        kind: DiagnosticKind::DuplicateName { name: inst_name },
                    });
                }
                instances.push(Instance { name: inst_name, cell: cell_name, pins, loc });
            }
        }
    }
    if p.pos < p.toks.len() {
        return p.err("content after `endmodule`");
    }

    for (port, loc) in &port_list {
        if !inputs.contains(port) && !outputs.contains(port) {
            return Err(ParseError::Syntax {
                loc: *loc,
                message: format!("port `{port}` has no input/output declaration"),
            });
        }
    }
    if let Some(both) = inputs.iter().find(|i| outputs.contains(i)) {
        return Err(ParseError::Invalid {
            loc: SourceLoc::default(),
            kind: DiagnosticKind::DuplicateName { name: both.clone() },
        });
    }
    // Graph labels are shared between ports and instances.
    for inst in &instances {
        if inputs.contains(&inst.name) || outputs.contains(&inst.name) {
            return Err(ParseError::Invalid {
                loc: inst.loc,
                kind: DiagnosticKind::DuplicateName { name: inst.name.clone() },
            });
        }
    }

    let cells = instances
        .iter()
        .map(|i| (i.cell.clone(), lib.entries[&i.cell].clone()))
        .collect::<BTreeMap<_, _>>();
    let mut flip_flops: Vec<String> = instances
        .iter()
        .filter(|i| cells[&i.cell].kind == CellKind::FlipFlop)
        .map(|i| i.name.clone())
        .collect();
    flip_flops.sort();

    let netlist = Netlist {
        name,
        instances,
        nets,
        primary_inputs: inputs,
        primary_outputs: outputs,
        flip_flops,
        cells,
    };
    if let Some(d) = validate_netlist(&netlist).into_iter().next() {
        return Err(ParseError::from_diagnostic(d));
    }
    Ok(netlist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{netlist_warnings, Severity};

    const LIB: &str = "\
cell INV kind=comb function=INV in=A out=Y
cell AND2 kind=comb function=AND in=A,B out=Y
cell DFF kind=ff data=D clock=CK q=Q
";

    fn lib() -> CellLibrary {
        CellLibrary::parse(LIB).unwrap()
    }

    #[test]
    fn single_inverter() {
        let src = "module top (a, y);\n  input a;\n  output y;\n  INV inv1 (.A(a), .Y(y));\nendmodule\n";
        let n = parse_netlist(src, &lib()).unwrap();
        assert_eq!(n.instances.len(), 1);
        assert_eq!(n.primary_inputs, vec!["a"]);
        assert_eq!(n.primary_outputs, vec!["y"]);
        assert_eq!(n.nets.len(), 2);
        assert!(n.flip_flops.is_empty());
    }

    #[test]
    fn two_drivers_on_one_net() {
        let src = "module top (a, y); input a; output y;\n\
                   INV u1 (.A(a), .Y(y));\nINV u2 (.A(a), .Y(y));\nendmodule";
        match parse_netlist(src, &lib()) {
            Err(ParseError::MultipleDrivers { net, .. }) => assert_eq!(net, "y"),
            other => panic!("expected MultipleDrivers, got {other:?}"),
        }
    }

    #[test]
    fn unknown_cell() {
        let src = "module top (a); input a;\n  FOO u (.A(a));\nendmodule";
        match parse_netlist(src, &lib()) {
            Err(ParseError::UnknownCellType { cell, loc }) => {
                assert_eq!(cell, "FOO");
                assert_eq!(loc, SourceLoc { line: 2, col: 3 });
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_pin_is_unconnected() {
        let src = "module top (a, y); input a; output y; AND2 g (.A(a), .Y(y)); endmodule";
        match parse_netlist(src, &lib()) {
            Err(ParseError::UnconnectedPin { instance, pin, .. }) => {
                assert_eq!((instance.as_str(), pin.as_str()), ("g", "B"))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_connection_is_unconnected() {
        let src = "module top (a, y); input a; output y; INV g (.A(), .Y(y)); endmodule";
        assert!(matches!(parse_netlist(src, &lib()), Err(ParseError::UnconnectedPin { .. })));
    }

    #[test]
    fn loop_detected() {
        let src = "module top (y); output y;\n\
                   INV b (.A(n1), .Y(n2));\nINV a (.A(n2), .Y(n1));\nINV c (.A(n2), .Y(y));\nendmodule";
        match parse_netlist(src, &lib()) {
            Err(ParseError::CombinationalLoop { cycle, .. }) => assert_eq!(cycle, vec!["a", "b"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn loop_through_ff_is_fine() {
        let src = "module t (clk, q); input clk; output q;\n\
                   DFF f (.D(nq), .CK(clk), .Q(q));\nINV i (.A(q), .Y(nq));\nendmodule";
        let n = parse_netlist(src, &lib()).unwrap();
        assert_eq!(n.flip_flops, vec!["f"]);
    }

    #[test]
    fn syntax_error_position() {
        let src = "module top (a);\ninput a\nendmodule";
        match parse_netlist(src, &lib()) {
            Err(ParseError::Syntax { loc, .. }) => assert_eq!(loc, SourceLoc { line: 3, col: 1 }),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_positional_and_buses() {
        let pos = "module t (a, y); input a; output y; INV u (a, y); endmodule";
        assert!(matches!(parse_netlist(pos, &lib()), Err(ParseError::Syntax { .. })));
        let bus = "module t (a); input [3:0] a; endmodule";
        assert!(matches!(parse_netlist(bus, &lib()), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn comments_and_escaped_names() {
        let src = "/* header */ module t (a, y); // ports\n input a; output y;\n\
                   INV \\u$1  (.A(a), .Y(y)); endmodule";
        let n = parse_netlist(src, &lib()).unwrap();
        assert_eq!(n.instances[0].name, "u$1");
    }

    #[test]
    fn instance_named_like_port_rejected() {
        let src = "module t (a, y); input a; output y; INV y (.A(a), .Y(y)); endmodule";
        assert!(matches!(parse_netlist(src, &lib()), Err(ParseError::Invalid { .. })));
    }

    #[test]
    fn undriven_net_warning() {
        let src = "module t (y); output y; INV u (.A(floating), .Y(y)); endmodule";
        let n = parse_netlist(src, &lib()).unwrap();
        let w = netlist_warnings(&n);
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].severity, Severity::Warning);
        assert_eq!(w[0].kind, DiagnosticKind::UndrivenNet { net: "floating".into() });
    }
}

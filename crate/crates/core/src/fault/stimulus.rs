// SPDX-License-Identifier: Apache-2.0

//! Stimulus: per-cycle input vectors, initial FF state and the set of
//! observed outputs.
//!
//! Text format (one directive per line, `#` starts a comment):
//!
//! ```text
//! inputs clk en          # bit order of the vectors below, LSB first
//! observe y              # observed primary outputs
//! init 0                 # optional; hex, bit i = i-th flip-flop (lexicographic)
//! 2                      # one hex vector per cycle
//! 3
//! ```

use std::fmt::Write as _;

use rand::Rng;

use super::FaultError;
use crate::netlist::Netlist;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stimulus {
    /// Primary-input names, in vector bit order.
    pub inputs: Vec<String>,
    /// `vectors[cycle][k]` drives `inputs[k]`.
    pub vectors: Vec<Vec<bool>>,
    /// One bit per flip-flop, in netlist `flip_flops` order.
    pub initial_state: Vec<bool>,
    pub observed_outputs: Vec<String>,
}

impl Stimulus {
    pub fn cycles(&self) -> usize {
        self.vectors.len()
    }

    /// Uniform random vectors over every primary input, zero initial state,
    /// all primary outputs observed.
    pub fn random(n: &Netlist, cycles: usize, seed: u64) -> Self {
        let mut rng = seed::rng(seed, &[0x7374_696d]);
        let k = n.primary_inputs.len();
        let vectors = (0..cycles).map(|_| (0..k).map(|_| rng.gen::<bool>()).collect()).collect();
        Stimulus {
            inputs: n.primary_inputs.clone(),
            vectors,
            initial_state: vec![false; n.flip_flops.len()],
            observed_outputs: n.primary_outputs.clone(),
        }
    }

    pub fn parse(text: &str, n: &Netlist) -> Result<Self, FaultError> {
        let mut inputs = None;
        let mut observed = None;
        let mut init = None;
        let mut vectors = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut words = content.split_whitespace();
            let first = words.next().unwrap();
            let err = |message: String| FaultError::StimulusFormat { line, message };
            match first {
                "inputs" => inputs = Some(words.map(str::to_string).collect::<Vec<_>>()),
                "observe" => observed = Some(words.map(str::to_string).collect::<Vec<_>>()),
                "init" => {
                    let hex = words.next().ok_or_else(|| err("missing value".into()))?;
                    init = Some(parse_hex(hex, n.flip_flops.len()).map_err(err)?);
                }
                hex => {
                    let width = inputs
                        .as_ref()
                        .ok_or_else(|| err("vector before `inputs` directive".into()))?
                        .len();
                    if words.next().is_some() {
                        return Err(err("one hex vector per line".into()));
                    }
                    vectors.push(parse_hex(hex, width).map_err(err)?);
                }
            }
        }
        let s = Stimulus {
            inputs: inputs.ok_or(FaultError::StimulusFormat { line: 0, message: "missing `inputs`".into() })?,
            vectors,
            initial_state: init.unwrap_or_else(|| vec![false; n.flip_flops.len()]),
            observed_outputs: observed.unwrap_or_else(|| n.primary_outputs.clone()),
        };
        s.check(n)?;
        Ok(s)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "inputs {}", self.inputs.join(" "));
        let _ = writeln!(out, "observe {}", self.observed_outputs.join(" "));
        let _ = writeln!(out, "init {}", to_hex(&self.initial_state));
        for v in &self.vectors {
            let _ = writeln!(out, "{}", to_hex(v));
        }
        out
    }

    /// Every primary input is driven, every observed output exists and the
    /// initial state covers every flip-flop.
    pub fn check(&self, n: &Netlist) -> Result<(), FaultError> {
        if let Some(bad) = self.inputs.iter().find(|i| !n.primary_inputs.contains(i)) {
            return Err(FaultError::UnknownInput(bad.clone()));
        }
        if let Some(missing) = n.primary_inputs.iter().find(|i| !self.inputs.contains(i)) {
            return Err(FaultError::MissingInput(missing.clone()));
        }
        if self.observed_outputs.is_empty() {
            return Err(FaultError::NothingObserved);
        }
        if let Some(bad) = self.observed_outputs.iter().find(|o| !n.primary_outputs.contains(o)) {
            return Err(FaultError::UnknownOutput(bad.clone()));
        }
        if self.initial_state.len() != n.flip_flops.len() {
            return Err(FaultError::UninitializedState {
                expected: n.flip_flops.len(),
                found: self.initial_state.len(),
            });
        }
        if let Some(c) = self.vectors.iter().position(|v| v.len() != self.inputs.len()) {
            return Err(FaultError::StimulusFormat {
                line: 0,
                message: format!("cycle {c} assigns {} of {} inputs", self.vectors[c].len(), self.inputs.len()),
            });
        }
        Ok(())
    }
}

/// Hex string to `width` bits, LSB first. Extra set bits are an error.
fn parse_hex(hex: &str, width: usize) -> Result<Vec<bool>, String> {
    let hex = hex.strip_prefix("0x").unwrap_or(hex);
    let mut bits = vec![false; width];
    for (nibble_idx, c) in hex.chars().rev().enumerate() {
        let v = c.to_digit(16).ok_or_else(|| format!("`{c}` is not a hex digit"))?;
        for b in 0..4 {
            if v >> b & 1 == 1 {
                let pos = nibble_idx * 4 + b;
                if pos >= width {
                    return Err(format!("`{hex}` has bits beyond width {width}"));
                }
                bits[pos] = true;
            }
        }
    }
    Ok(bits)
}

fn to_hex(bits: &[bool]) -> String {
    if bits.is_empty() {
        return "0".into();
    }
    bits.chunks(4)
        .rev()
        .map(|chunk| {
            let v = chunk.iter().enumerate().fold(0u32, |acc, (i, &b)| acc | (b as u32) << i);
            std::char::from_digit(v, 16).unwrap()
        })
        .collect()
}

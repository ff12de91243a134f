// SPDX-License-Identifier: Apache-2.0

//! Cycle-based two-valued simulation of a single-clock netlist.
//!
//! Each cycle: apply the input vector, evaluate combinational cells in
//! topological order, sample the observed outputs, then clock every
//! flip-flop at once (`Q <= D`, or `Q <= 0` while its reset pin is high).
//! Resets are sampled at the clock edge like any other input; clock pins
//! are structural only. Undriven nets read as 0.

use std::collections::HashMap;

use super::{FaultError, Stimulus};
use crate::netlist::{CellKind, GateFn, Netlist, PinRole};

#[derive(Debug, Clone)]
struct Gate {
    function: GateFn,
    inputs: Vec<usize>,
    output: usize,
}

#[derive(Debug, Clone)]
struct FlipFlop {
    d: usize,
    q: usize,
    reset: Option<usize>,
}

/// Per-cycle traces of a fault-free run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldenRun {
    /// `outputs[c][k]`: observed output k during cycle c.
    pub outputs: Vec<Vec<bool>>,
    /// `states[c][i]`: flip-flop i during cycle c (before its closing edge).
    pub states: Vec<Vec<bool>>,
    /// State after the last clock edge.
    pub final_state: Vec<bool>,
}

/// A netlist compiled against one stimulus.
#[derive(Debug, Clone)]
pub struct Simulator {
    net_count: usize,
    gates: Vec<Gate>,
    ffs: Vec<FlipFlop>,
    input_nets: Vec<usize>,
    observed_nets: Vec<usize>,
    stimulus: Stimulus,
}

impl Simulator {
    pub fn new(n: &Netlist, s: &Stimulus) -> Result<Self, FaultError> {
        s.check(n)?;
        let order = n.comb_topo_order().map_err(FaultError::CombinationalLoop)?;
        let net_id: HashMap<&str, usize> =
            n.nets.iter().enumerate().map(|(i, name)| (name.as_str(), i)).collect();
        let id = |name: &str| -> Result<usize, FaultError> {
            net_id.get(name).copied().ok_or_else(|| FaultError::UnknownNet(name.to_string()))
        };

        let mut gates = Vec::with_capacity(order.len());
        for i in order {
            let inst = &n.instances[i];
            let cell = &n.cells[&inst.cell];
            let inputs = cell
                .inputs()
                .map(|p| id(&inst.pins[&p.name]))
                .collect::<Result<Vec<_>, _>>()?;
            let output = id(&inst.pins[&cell.outputs().next().unwrap().name])?;
            let function = match cell.kind {
                CellKind::Comb => cell.function.expect("comb cell has a function"),
                _ => GateFn::Buf,
            };
            gates.push(Gate { function, inputs, output });
        }

        let index = n.instance_index();
        let mut ffs = Vec::with_capacity(n.flip_flops.len());
        for name in &n.flip_flops {
            let inst = &n.instances[index[name.as_str()]];
            let cell = &n.cells[&inst.cell];
            let pin_net = |role| cell.pin_with_role(role).map(|p| id(&inst.pins[&p.name])).transpose();
            ffs.push(FlipFlop {
                d: pin_net(PinRole::Data)?.unwrap(),
                q: pin_net(PinRole::Q)?.unwrap(),
                reset: pin_net(PinRole::Reset)?,
            });
        }

        let input_nets = s.inputs.iter().map(|i| id(i)).collect::<Result<_, _>>()?;
        let observed_nets = s.observed_outputs.iter().map(|o| id(o)).collect::<Result<_, _>>()?;
        Ok(Simulator {
            net_count: n.nets.len(),
            gates,
            ffs,
            input_nets,
            observed_nets,
            stimulus: s.clone(),
        })
    }

    pub fn cycles(&self) -> usize {
        self.stimulus.cycles()
    }

    pub fn flip_flop_count(&self) -> usize {
        self.ffs.len()
    }

    /// Evaluate one cycle from `state`; writes outputs and the next state.
    fn step(&self, nets: &mut [bool], cycle: usize, state: &[bool], outputs: &mut Vec<bool>, next: &mut Vec<bool>) {
        for (ff, &bit) in self.ffs.iter().zip(state) {
            nets[ff.q] = bit;
        }
        for (&net, &bit) in self.input_nets.iter().zip(&self.stimulus.vectors[cycle]) {
            nets[net] = bit;
        }
        let mut buf: Vec<bool> = Vec::with_capacity(4);
        for g in &self.gates {
            buf.clear();
            buf.extend(g.inputs.iter().map(|&i| nets[i]));
            nets[g.output] = g.function.eval(&buf);
        }
        outputs.clear();
        outputs.extend(self.observed_nets.iter().map(|&i| nets[i]));
        next.clear();
        next.extend(self.ffs.iter().map(|ff| match ff.reset {
            Some(r) if nets[r] => false,
            _ => nets[ff.d],
        }));
    }

    pub fn golden(&self) -> GoldenRun {
        let mut nets = vec![false; self.net_count];
        let mut state = self.stimulus.initial_state.clone();
        let mut outputs = Vec::with_capacity(self.cycles());
        let mut states = Vec::with_capacity(self.cycles());
        let (mut out, mut next) = (Vec::new(), Vec::new());
        for c in 0..self.cycles() {
            self.step(&mut nets, c, &state, &mut out, &mut next);
            outputs.push(out.clone());
            states.push(std::mem::replace(&mut state, next.clone()));
        }
        GoldenRun { outputs, states, final_state: state }
    }

    /// Full run with the given `(flip-flop index, cycle)` bit flips applied to
    /// the state held during that cycle. Flipping the same bit twice cancels.
    pub fn run_with_flips(&self, flips: &[(usize, usize)]) -> GoldenRun {
        let mut nets = vec![false; self.net_count];
        let mut state = self.stimulus.initial_state.clone();
        let mut outputs = Vec::with_capacity(self.cycles());
        let mut states = Vec::with_capacity(self.cycles());
        let (mut out, mut next) = (Vec::new(), Vec::new());
        for c in 0..self.cycles() {
            for &(ff, _) in flips.iter().filter(|f| f.1 == c) {
                state[ff] = !state[ff];
            }
            self.step(&mut nets, c, &state, &mut out, &mut next);
            outputs.push(out.clone());
            states.push(std::mem::replace(&mut state, next.clone()));
        }
        GoldenRun { outputs, states, final_state: state }
    }

    /// Flip flip-flop `ff` during `cycle` and report whether any observed
    /// output differs from `golden` in `[cycle, N)`.
    ///
    /// Stops early once the faulty state re-converges with the golden one.
    pub fn injection_fails(&self, golden: &GoldenRun, ff: usize, cycle: usize) -> bool {
        let mut nets = vec![false; self.net_count];
        let mut state = golden.states[cycle].clone();
        state[ff] = !state[ff];
        let (mut out, mut next) = (Vec::new(), Vec::new());
        for c in cycle..self.cycles() {
            self.step(&mut nets, c, &state, &mut out, &mut next);
            if out != golden.outputs[c] {
                return true;
            }
            let reference = golden.states.get(c + 1).unwrap_or(&golden.final_state);
            if &next == reference {
                return false;
            }
            std::mem::swap(&mut state, &mut next);
        }
        false
    }
}

// SPDX-License-Identifier: Apache-2.0

//! Ground-truth functional derating by single-event-upset injection.
//!
//! A failure is any mismatch on an observed output, at any cycle from the
//! injection to the end of the stimulus, against the fault-free run.
//! Internal state differences alone never count.

mod sim;
mod stimulus;

use std::io::{Read, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::Netlist;
use crate::seed;

pub use sim::{GoldenRun, Simulator};
pub use stimulus::Stimulus;

#[derive(Debug, Error)]
pub enum FaultError {
    #[error("stimulus drives `{0}`, which is not a primary input")]
    UnknownInput(String),
    #[error("stimulus does not drive primary input `{0}`")]
    MissingInput(String),
    #[error("observed output `{0}` is not a primary output")]
    UnknownOutput(String),
    #[error("stimulus observes no outputs")]
    NothingObserved,
    #[error("initial state has {found} bits but the netlist has {expected} flip-flops")]
    UninitializedState { expected: usize, found: usize },
    #[error("stimulus line {line}: {message}")]
    StimulusFormat { line: usize, message: String },
    #[error("netlist has a combinational loop through {}", .0.join(" -> "))]
    CombinationalLoop(Vec<String>),
    #[error("net `{0}` is not declared")]
    UnknownNet(String),
    #[error("`{0}` is not a flip-flop of this netlist")]
    UnknownFlipFlop(String),
    #[error("cycle {cycle} is outside the {cycles}-cycle stimulus")]
    CycleOutOfRange { cycle: usize, cycles: usize },
    #[error("random fault plan needs at least one sample per flip-flop")]
    ZeroSamples,
    #[error("malformed FDR table: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum FaultMode {
    /// Every cycle of every targeted flip-flop, once.
    Exhaustive,
    /// `samples` cycles per flip-flop, uniform with replacement.
    Random { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultPlan {
    pub mode: FaultMode,
    /// Flip-flop names; empty means all.
    pub targets: Vec<String>,
}

impl FaultPlan {
    pub fn exhaustive() -> Self {
        FaultPlan { mode: FaultMode::Exhaustive, targets: Vec::new() }
    }

    pub fn random(samples: usize, seed: u64) -> Self {
        FaultPlan { mode: FaultMode::Random { samples, seed }, targets: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdrRow {
    pub ff_name: String,
    pub injections: u64,
    pub failures: u64,
    pub fdr: f64,
}

impl FdrRow {
    fn new(ff_name: String, injections: u64, failures: u64) -> Self {
        let fdr = if injections == 0 { 0.0 } else { failures as f64 / injections as f64 };
        FdrRow { ff_name, injections, failures, fdr }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FdrTable {
    pub rows: Vec<FdrRow>,
}

impl FdrTable {
    pub fn get(&self, ff: &str) -> Option<&FdrRow> {
        self.rows.iter().find(|r| r.ff_name == ff)
    }

    /// CSV with header `ff_name,injections,failures,fdr`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), FaultError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["ff_name", "injections", "failures", "fdr"])?;
        for r in &self.rows {
            w.write_record([
                r.ff_name.clone(),
                r.injections.to_string(),
                r.failures.to_string(),
                r.fdr.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, FaultError> {
        let mut r = csv::Reader::from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header != ["ff_name", "injections", "failures", "fdr"] {
            return Err(FaultError::Format(format!("unexpected header {header:?}")));
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<u64, FaultError> {
                rec[i].parse().map_err(|_| FaultError::Format(format!("bad count `{}`", &rec[i])))
            };
            let row = FdrRow::new(rec[0].to_string(), num(1)?, num(2)?);
            if row.failures > row.injections {
                return Err(FaultError::Format(format!("`{}` has more failures than injections", row.ff_name)));
            }
            rows.push(row);
        }
        Ok(FdrTable { rows })
    }
}

/// Fault-free simulation of `s` on `n`.
pub fn simulate_golden(n: &Netlist, s: &Stimulus) -> Result<GoldenRun, FaultError> {
    Ok(Simulator::new(n, s)?.golden())
}

fn ff_index(n: &Netlist, ff: &str) -> Result<usize, FaultError> {
    n.flip_flops
        .iter()
        .position(|f| f == ff)
        .ok_or_else(|| FaultError::UnknownFlipFlop(ff.to_string()))
}

/// Flip `ff` during `cycle`; true when an observed output diverges.
pub fn inject_seu(n: &Netlist, s: &Stimulus, ff: &str, cycle: usize) -> Result<bool, FaultError> {
    let sim = Simulator::new(n, s)?;
    let idx = ff_index(n, ff)?;
    if cycle >= sim.cycles() {
        return Err(FaultError::CycleOutOfRange { cycle, cycles: sim.cycles() });
    }
    Ok(sim.injection_fails(&sim.golden(), idx, cycle))
}

/// Run a fault campaign. Rows follow netlist flip-flop order; the result
/// does not depend on the rayon pool size.
pub fn run_campaign(n: &Netlist, s: &Stimulus, plan: &FaultPlan) -> Result<FdrTable, FaultError> {
    let sim = Simulator::new(n, s)?;
    let golden = sim.golden();
    let cycles = sim.cycles();

    let targets: Vec<usize> = if plan.targets.is_empty() {
        (0..n.flip_flops.len()).collect()
    } else {
        let mut idx = plan.targets.iter().map(|t| ff_index(n, t)).collect::<Result<Vec<_>, _>>()?;
        idx.sort_unstable();
        idx.dedup();
        idx
    };

    let jobs: Vec<(usize, Vec<usize>)> = match plan.mode {
        FaultMode::Exhaustive => targets.iter().map(|&f| (f, (0..cycles).collect())).collect(),
        FaultMode::Random { samples, seed: plan_seed } => {
            if samples == 0 {
                return Err(FaultError::ZeroSamples);
            }
            targets
                .iter()
                .map(|&f| {
                    let mut rng = seed::rng(plan_seed, &[f as u64]);
                    let picks = if cycles == 0 {
                        Vec::new()
                    } else {
                        (0..samples).map(|_| rng.gen_range(0..cycles)).collect()
                    };
                    (f, picks)
                })
                .collect()
        }
    };

    let flat: Vec<(usize, usize)> =
        jobs.iter().flat_map(|(f, cs)| cs.iter().map(move |&c| (*f, c))).collect();
    let outcomes: Vec<bool> =
        flat.par_iter().map(|&(f, c)| sim.injection_fails(&golden, f, c)).collect();

    let mut rows = Vec::with_capacity(jobs.len());
    let mut offset = 0;
    for (f, cs) in &jobs {
        let failures = outcomes[offset..offset + cs.len()].iter().filter(|&&b| b).count();
        offset += cs.len();
        rows.push(FdrRow::new(n.flip_flops[*f].clone(), cs.len() as u64, failures as u64));
    }
    Ok(FdrTable { rows })
}

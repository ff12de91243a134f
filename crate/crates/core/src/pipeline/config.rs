// SPDX-License-Identifier: Apache-2.0

//! TOML pipeline configuration.
//!
//! ```toml
//! seed = 42
//! train_fraction = 0.6
//!
//! [paths]
//! netlist = "toy_counter.v"   # relative paths resolve against this file
//! library = "cells.lib"       # optional, bundled library otherwise
//! stimulus = "stim.txt"       # optional, seeded random stimulus otherwise
//! out_dir = "out"
//!
//! [stimulus]
//! cycles = 256
//!
//! [campaign]
//! mode = "exhaustive"         # or "random" with `samples`
//!
//! [walk]                      # any WalkParams field
//! [svr]                       # any SvrParams field
//! [mlp]                       # any MlpParams field
//! ```
//!
//! Every stage seed left unset is derived from the global seed and the
//! stage name, so a `--seed` override reseeds all of them at once.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::PipelineError;
use crate::embed::WalkParams;
use crate::fault::{FaultMode, FaultPlan};
use crate::regress::{MlpParams, SvrParams};
use crate::seed::stage_seed;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub netlist: PathBuf,
    pub library: Option<PathBuf>,
    pub stimulus: Option<PathBuf>,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StimulusSpec {
    pub cycles: usize,
    pub seed: Option<u64>,
}

impl Default for StimulusSpec {
    fn default() -> Self {
        StimulusSpec { cycles: 256, seed: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CampaignMode {
    Exhaustive,
    Random,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignSpec {
    pub mode: CampaignMode,
    pub samples: usize,
    pub seed: Option<u64>,
    pub targets: Vec<String>,
}

impl Default for CampaignSpec {
    fn default() -> Self {
        CampaignSpec { mode: CampaignMode::Exhaustive, samples: 4096, seed: None, targets: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_fraction")]
    train_fraction: f64,
    split_seed: Option<u64>,
    paths: Paths,
    #[serde(default)]
    stimulus: StimulusSpec,
    #[serde(default)]
    campaign: CampaignSpec,
    #[serde(default)]
    walk: WalkParams,
    #[serde(default)]
    svr: SvrParams,
    #[serde(default)]
    mlp: MlpParams,
}

fn default_fraction() -> f64 {
    0.6
}

/// Which seeds the file set explicitly; those survive `--seed`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct ExplicitSeeds {
    walk: bool,
    svr: bool,
    mlp: bool,
    mlp_input_dim: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub train_fraction: f64,
    pub split_seed: u64,
    pub paths: Paths,
    pub stimulus: StimulusSpec,
    pub campaign: CampaignSpec,
    pub walk: WalkParams,
    pub svr: SvrParams,
    pub mlp: MlpParams,
    explicit: ExplicitSeeds,
    split_explicit: Option<u64>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => PipelineError::FileNotFound(path.to_path_buf()),
            _ => PipelineError::Config(format!("{}: {e}", path.display())),
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&text, base).map_err(|e| match e {
            PipelineError::Config(m) => PipelineError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Parse config text; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, PipelineError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| PipelineError::Config(e.to_string()))?;
        let has = |section: &str, key: &str| {
            table.get(section).and_then(|s| s.as_table()).is_some_and(|s| s.contains_key(key))
        };
        let explicit = ExplicitSeeds {
            walk: has("walk", "seed"),
            svr: has("svr", "seed"),
            mlp: has("mlp", "seed"),
            mlp_input_dim: has("mlp", "input_dim"),
        };
        let raw: RawConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| PipelineError::Config(e.to_string()))?;
        if !(raw.train_fraction > 0.0 && raw.train_fraction < 1.0) {
            return Err(PipelineError::Config(format!("train_fraction {} must lie in (0, 1)", raw.train_fraction)));
        }
        if raw.campaign.mode == CampaignMode::Random && raw.campaign.samples == 0 {
            return Err(PipelineError::Config("campaign.samples must be >= 1".into()));
        }
        if raw.stimulus.cycles == 0 {
            return Err(PipelineError::Config("stimulus.cycles must be >= 1".into()));
        }
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };
        let paths = Paths {
            netlist: resolve(raw.paths.netlist),
            library: raw.paths.library.map(resolve),
            stimulus: raw.paths.stimulus.map(resolve),
            out_dir: resolve(raw.paths.out_dir),
        };
        let mut cfg = PipelineConfig {
            seed: raw.seed,
            train_fraction: raw.train_fraction,
            split_seed: 0,
            paths,
            stimulus: raw.stimulus,
            campaign: raw.campaign,
            walk: raw.walk,
            svr: raw.svr,
            mlp: raw.mlp,
            explicit,
            split_explicit: raw.split_seed,
        };
        cfg.reseed(raw.seed);
        Ok(cfg)
    }

    /// Replace the global seed and re-derive every seed not set explicitly.
    pub fn reseed(&mut self, global: u64) {
        self.seed = global;
        if !self.explicit.walk {
            self.walk.seed = stage_seed(global, "embed");
        }
        if !self.explicit.svr {
            self.svr.seed = stage_seed(global, "svr");
        }
        if !self.explicit.mlp {
            self.mlp.seed = stage_seed(global, "mlp");
        }
        if !self.explicit.mlp_input_dim {
            self.mlp.input_dim = self.walk.dimensions;
        }
        self.split_seed = self.split_explicit.unwrap_or_else(|| stage_seed(global, "split"));
    }

    pub fn stimulus_seed(&self) -> u64 {
        self.stimulus.seed.unwrap_or_else(|| stage_seed(self.seed, "stimulus"))
    }

    pub fn fault_plan(&self) -> FaultPlan {
        let mode = match self.campaign.mode {
            CampaignMode::Exhaustive => FaultMode::Exhaustive,
            CampaignMode::Random => FaultMode::Random {
                samples: self.campaign.samples,
                seed: self.campaign.seed.unwrap_or_else(|| stage_seed(self.seed, "campaign")),
            },
        };
        FaultPlan { mode, targets: self.campaign.targets.clone() }
    }
}

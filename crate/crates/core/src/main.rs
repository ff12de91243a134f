// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gatefdr::pipeline::{self, PipelineConfig, PipelineError};

#[derive(Parser)]
#[command(name = "gatefdr", version, about = "Predict flip-flop functional derating from gate-level netlists")]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override the global seed; re-derives every stage seed not pinned in the config.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Override the output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the netlist and write graph.gml.
    Graph,
    /// Learn node2vec features from graph.gml and write embeddings.csv.
    Embed,
    /// Run the SEU fault campaign and write fdr.csv.
    Campaign,
    /// Fit SVR and MLP on embeddings.csv + fdr.csv and write reports.
    TrainEval,
    /// Run graph, embed, campaign and train-eval in order.
    All,
    /// Print a generated chain benchmark netlist to stdout.
    Synth {
        #[arg(long, default_value_t = 20)]
        chains: usize,
        #[arg(long, default_value_t = 10)]
        depth: usize,
    },
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(PipelineError::Usage("--jobs must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| PipelineError::Internal(e.to_string()))?;
    }
    if let Command::Synth { chains, depth } = cli.command {
        if chains == 0 || depth == 0 {
            return Err(PipelineError::Usage("--chains and --depth must be >= 1".into()));
        }
        print!("{}", gatefdr::synth::chain_netlist(chains, depth));
        return Ok(());
    }

    let path = cli.config.ok_or_else(|| PipelineError::Usage("--config PATH is required".into()))?;
    let mut cfg = PipelineConfig::load(&path)?;
    if let Some(seed) = cli.seed {
        cfg.reseed(seed);
    }
    if let Some(out) = cli.out {
        cfg.paths.out_dir = out;
    }
    match cli.command {
        Command::Graph => pipeline::cmd_graph(&cfg).map(drop),
        Command::Embed => pipeline::cmd_embed(&cfg).map(drop),
        Command::Campaign => pipeline::cmd_campaign(&cfg).map(drop),
        Command::TrainEval => pipeline::cmd_train_eval(&cfg).map(drop),
        Command::All => pipeline::cmd_all(&cfg).map(drop),
        Command::Synth { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

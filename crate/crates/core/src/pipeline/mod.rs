// SPDX-License-Identifier: Apache-2.0

//! End-to-end flow behind the CLI: netlist → graph → embeddings → fault
//! campaign → split → train → validate → report.
//!
//! Each command reads its inputs from files and writes fixed-name
//! artifacts under the output directory, so stages compose through the
//! filesystem alone.
//!
//! | code | meaning                                   |
//! |------|-------------------------------------------|
//! | 0    | success                                   |
//! | 1    | internal error                            |
//! | 2    | usage error (bad command line)            |
//! | 3    | input file not found                      |
//! | 4    | invalid configuration                     |
//! | 5    | netlist or cell library rejected          |
//! | 6    | malformed GML                             |
//! | 7    | embedding failure                         |
//! | 8    | stimulus or fault campaign failure        |
//! | 9    | training or evaluation failure            |
//! | 10   | cannot write an output artifact           |

mod config;

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::embed::{self, EmbedError, EmbeddingMatrix};
use crate::fault::{self, FaultError, FdrTable, Stimulus};
use crate::graph::{self, GmlError, NodeKind};
use crate::metrics::{self, MetricsError, RegressionReport, SplitManifest};
use crate::netlist::{self, CellLibrary, Netlist};
use crate::regress::{self, MlpSummary, RegressError, SvrSummary};

pub use config::{CampaignMode, CampaignSpec, Paths, PipelineConfig, StimulusSpec};

/// Fixed artifact names under the output directory.
pub mod artifacts {
    pub const GRAPH: &str = "graph.gml";
    pub const EMBEDDINGS: &str = "embeddings.csv";
    pub const EMBED_SUMMARY: &str = "embed_summary.json";
    pub const STIMULUS: &str = "stimulus.txt";
    pub const FDR: &str = "fdr.csv";
    pub const SVR_MODEL: &str = "svr.model";
    pub const SVR_SUMMARY: &str = "svr.json";
    pub const MLP_MODEL: &str = "mlp.model";
    pub const MLP_SUMMARY: &str = "mlp.json";
    pub const REPORT_JSON: &str = "report.json";
    pub const REPORT_CSV: &str = "report.csv";
    /// Wall-clock timings; the only artifact that differs between reruns.
    pub const TIMING: &str = "timing.json";

    pub fn predictions(model: &str) -> String {
        format!("predictions_{model}.csv")
    }

    pub fn scatter(model: &str) -> String {
        format!("scatter_{model}.svg")
    }

    pub fn sorted(model: &str) -> String {
        format!("sorted_{model}.svg")
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Usage(String),
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Netlist(String),
    #[error("{}: {source}", path.display())]
    Gml { path: PathBuf, source: GmlError },
    #[error("embedding: {0}")]
    Embed(#[from] EmbedError),
    #[error("campaign: {0}")]
    Campaign(#[from] FaultError),
    #[error("training: {0}")]
    Regress(#[from] RegressError),
    #[error("evaluation: {0}")]
    Metrics(#[from] MetricsError),
    #[error("flip-flop `{ff}` appears in {present} but not in {missing}")]
    LabelMismatch { ff: String, present: &'static str, missing: &'static str },
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Internal(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Internal(_) => 1,
            PipelineError::Usage(_) => 2,
            PipelineError::FileNotFound(_) => 3,
            PipelineError::Config(_) => 4,
            PipelineError::Netlist(_) => 5,
            PipelineError::Gml { .. } => 6,
            PipelineError::Embed(_) => 7,
            PipelineError::Campaign(_) => 8,
            PipelineError::Regress(_) | PipelineError::Metrics(_) | PipelineError::LabelMismatch { .. } => 9,
            PipelineError::Write { .. } => 10,
        }
    }
}

fn read_text(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => PipelineError::FileNotFound(path.to_path_buf()),
        _ => PipelineError::Internal(format!("cannot read {}: {e}", path.display())),
    })
}

fn write_artifact(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, PipelineError> {
    let path = dir.join(name);
    fs::create_dir_all(dir)
        .and_then(|_| fs::write(&path, bytes))
        .map_err(|source| PipelineError::Write { path: path.clone(), source })?;
    log::info!("wrote {}", path.display());
    Ok(path)
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s.into_bytes()
}

/// Parse and validate the configured netlist; warnings go to the log.
pub fn load_netlist(cfg: &PipelineConfig) -> Result<Netlist, PipelineError> {
    let lib = match &cfg.paths.library {
        Some(path) => CellLibrary::parse(&read_text(path)?)
            .map_err(|e| PipelineError::Netlist(format!("ERROR {}: {e}", path.display())))?,
        None => CellLibrary::standard(),
    };
    let file = cfg.paths.netlist.display().to_string();
    let text = read_text(&cfg.paths.netlist)?;
    let n = netlist::parse_netlist(&text, &lib).map_err(|e| {
        let loc = e.loc();
        PipelineError::Netlist(format!("ERROR {file}:{}:{} {}", loc.line, loc.col, e.message()))
    })?;
    for w in netlist::netlist_warnings(&n) {
        log::warn!("{}", w.render(&file));
    }
    Ok(n)
}

fn load_graph(dir: &Path) -> Result<graph::CircuitGraph, PipelineError> {
    let path = dir.join(artifacts::GRAPH);
    let (g, warnings) = graph::read_gml_with_warnings(&read_text(&path)?)
        .map_err(|source| PipelineError::Gml { path: path.clone(), source })?;
    for w in warnings {
        log::warn!("{}: {w}", path.display());
    }
    Ok(g)
}

/// netlist → GML.
pub fn cmd_graph(cfg: &PipelineConfig) -> Result<graph::CircuitGraph, PipelineError> {
    let n = load_netlist(cfg)?;
    let g = graph::netlist_to_graph(&n);
    write_artifact(&cfg.paths.out_dir, artifacts::GRAPH, graph::write_gml(&g).as_bytes())?;
    log::info!("graph: {} nodes, {} edges", g.node_count(), g.edge_count());
    Ok(g)
}

/// GML → embeddings CSV.
pub fn cmd_embed(cfg: &PipelineConfig) -> Result<EmbeddingMatrix, PipelineError> {
    let g = load_graph(&cfg.paths.out_dir)?;
    let (m, report) = embed::embed_with_report(&g, &cfg.walk)?;
    let mut csv = Vec::new();
    embed::write_embeddings_csv(&m, &mut csv)?;
    write_artifact(&cfg.paths.out_dir, artifacts::EMBEDDINGS, &csv)?;
    let isolated: Vec<&str> = report.isolated_nodes.iter().map(|&i| g.nodes()[i].label.as_str()).collect();
    let summary = serde_json::json!({
        "params": cfg.walk,
        "nodes": m.rows(),
        "dimensions": m.dim,
        "walks": report.walks,
        "isolated_nodes": isolated,
        "pairs_per_epoch": report.training.pairs_per_epoch,
        "epoch_losses": report.training.epoch_losses,
    });
    write_artifact(&cfg.paths.out_dir, artifacts::EMBED_SUMMARY, &to_json(&summary))?;
    Ok(m)
}

/// Fault campaign → FDR CSV (and the stimulus actually used).
pub fn cmd_campaign(cfg: &PipelineConfig) -> Result<FdrTable, PipelineError> {
    let n = load_netlist(cfg)?;
    let stimulus = match &cfg.paths.stimulus {
        Some(path) => Stimulus::parse(&read_text(path)?, &n)?,
        None => Stimulus::random(&n, cfg.stimulus.cycles, cfg.stimulus_seed()),
    };
    let table = fault::run_campaign(&n, &stimulus, &cfg.fault_plan())?;
    write_artifact(&cfg.paths.out_dir, artifacts::STIMULUS, stimulus.to_text().as_bytes())?;
    let mut csv = Vec::new();
    table.write_csv(&mut csv)?;
    write_artifact(&cfg.paths.out_dir, artifacts::FDR, &csv)?;
    Ok(table)
}

#[derive(Debug, Clone, Serialize)]
pub struct CiComparison {
    pub model: String,
    pub mean_true: f64,
    pub mean_pred: f64,
    pub mean_difference: f64,
    pub intervals_overlap: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvaluationReport {
    /// Flip-flops in sample order; split indices refer to this list.
    pub samples: Vec<String>,
    /// Embedded nodes that carry no label (not flip-flops).
    pub excluded_nodes: Vec<String>,
    pub reports: Vec<RegressionReport>,
    pub ci_comparison: Vec<CiComparison>,
}

#[derive(Debug, Clone, Serialize)]
struct Timing {
    model: &'static str,
    fit_seconds: f64,
    predict_seconds: f64,
}

/// Join features to labels by flip-flop name. Returns (labels, X, y, excluded).
#[allow(clippy::type_complexity)]
fn join_samples(
    g: &graph::CircuitGraph,
    m: &EmbeddingMatrix,
    table: &FdrTable,
) -> Result<(Vec<String>, Vec<Vec<f64>>, Vec<f64>, Vec<String>), PipelineError> {
    let ffs: BTreeSet<&str> =
        g.nodes().iter().filter(|n| n.kind == NodeKind::FlipFlop).map(|n| n.label.as_str()).collect();
    let rows: HashMap<&str, usize> = m.node_labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let labelled: BTreeSet<&str> = table.rows.iter().map(|r| r.ff_name.as_str()).collect();

    if let Some(ff) = table.rows.iter().find(|r| !ffs.contains(r.ff_name.as_str())) {
        return Err(PipelineError::LabelMismatch { ff: ff.ff_name.clone(), present: "the FDR table", missing: "the graph" });
    }
    if let Some(ff) = ffs.iter().find(|f| !rows.contains_key(*f)) {
        return Err(PipelineError::LabelMismatch { ff: ff.to_string(), present: "the graph", missing: "the embeddings" });
    }
    if let Some(ff) = ffs.iter().find(|f| !labelled.contains(*f)) {
        return Err(PipelineError::LabelMismatch { ff: ff.to_string(), present: "the embeddings", missing: "the FDR table" });
    }

    let labels: Vec<String> = table.rows.iter().map(|r| r.ff_name.clone()).collect();
    let x = labels.iter().map(|l| m.row(rows[l.as_str()]).to_vec()).collect();
    let y = table.rows.iter().map(|r| r.fdr).collect();
    let excluded = m.node_labels.iter().filter(|l| !ffs.contains(l.as_str())).cloned().collect();
    Ok((labels, x, y, excluded))
}

/// Embeddings + FDR table → fitted models, reports and plots.
pub fn cmd_train_eval(cfg: &PipelineConfig) -> Result<EvaluationReport, PipelineError> {
    let dir = &cfg.paths.out_dir;
    let g = load_graph(dir)?;
    let emb_path = dir.join(artifacts::EMBEDDINGS);
    let m = embed::read_embeddings_csv(read_text(&emb_path)?.as_bytes())?;
    let fdr_path = dir.join(artifacts::FDR);
    let table = FdrTable::read_csv(read_text(&fdr_path)?.as_bytes())?;
    let (labels, x, y, excluded) = join_samples(&g, &m, &table)?;

    let (train, test) = metrics::split_dataset(labels.len(), cfg.train_fraction, cfg.split_seed)?;
    let manifest = SplitManifest { seed: cfg.split_seed, train_fraction: cfg.train_fraction, train: train.clone(), test: test.clone() };
    let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<f64>) { (idx.iter().map(|&i| x[i].clone()).collect(), idx.iter().map(|&i| y[i]).collect()) };
    let (x_train, y_train) = pick(&train);
    let (x_test, y_test) = pick(&test);
    let test_labels: Vec<String> = test.iter().map(|&i| labels[i].clone()).collect();

    let mut timings = Vec::new();
    let mut predictions = Vec::new();

    let t = Instant::now();
    let (svr, svr_fit) = regress::fit_svr_with_report(&x_train, &y_train, &cfg.svr)?;
    let fit_seconds = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let svr_pred = regress::predict_svr(&svr, &x_test)?;
    timings.push(Timing { model: "svr", fit_seconds, predict_seconds: t.elapsed().as_secs_f64() });
    let mut buf = Vec::new();
    regress::write_svr(&svr, &mut buf)?;
    write_artifact(dir, artifacts::SVR_MODEL, &buf)?;
    write_artifact(dir, artifacts::SVR_SUMMARY, &to_json(&SvrSummary::new(&cfg.svr, &svr, &svr_fit)))?;
    predictions.push(("svr", svr_pred));

    let t = Instant::now();
    let (mlp, mlp_fit) = regress::fit_mlp_with_report(&x_train, &y_train, &cfg.mlp)?;
    let fit_seconds = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let mlp_pred = regress::predict_mlp(&mlp, &x_test)?;
    timings.push(Timing { model: "mlp", fit_seconds, predict_seconds: t.elapsed().as_secs_f64() });
    let mut buf = Vec::new();
    regress::write_mlp(&mlp, &mut buf)?;
    write_artifact(dir, artifacts::MLP_MODEL, &buf)?;
    write_artifact(dir, artifacts::MLP_SUMMARY, &to_json(&MlpSummary::new(&cfg.mlp, &mlp, &mlp_fit)))?;
    predictions.push(("mlp", mlp_pred));

    let mut reports = Vec::new();
    let mut ci_comparison = Vec::new();
    let mut csv = format!("{}\n", RegressionReport::CSV_HEADER);
    for (name, pred) in &predictions {
        let r = RegressionReport::new(name, &y_test, pred, manifest.clone())?;
        log::info!("{name}: test mse {:.6} r2 {:.4} evs {:.4}", r.mse, r.r2, r.evs);
        csv.push_str(&r.csv_row());
        csv.push('\n');
        ci_comparison.push(CiComparison {
            model: name.to_string(),
            mean_true: r.mean_true,
            mean_pred: r.mean_pred,
            mean_difference: r.mean_pred - r.mean_true,
            intervals_overlap: r.ci95_pred.0 <= r.ci95_true.1 && r.ci95_true.0 <= r.ci95_pred.1,
        });
        reports.push(r);

        let mut buf = Vec::new();
        metrics::write_predictions_csv(&test_labels, &y_test, pred, &mut buf)
            .map_err(|e| PipelineError::Internal(e.to_string()))?;
        write_artifact(dir, &artifacts::predictions(name), &buf)?;
        let title = format!("{} : predicted vs true FDR (test set)", name.to_uppercase());
        write_artifact(dir, &artifacts::scatter(name), metrics::scatter_svg(&title, &y_test, pred).as_bytes())?;
        let title = format!("{} : sorted test predictions", name.to_uppercase());
        write_artifact(dir, &artifacts::sorted(name), metrics::sorted_overlay_svg(&title, &y_test, pred).as_bytes())?;
    }
    write_artifact(dir, artifacts::REPORT_CSV, csv.as_bytes())?;
    let report = EvaluationReport { samples: labels, excluded_nodes: excluded, reports, ci_comparison };
    write_artifact(dir, artifacts::REPORT_JSON, &to_json(&report))?;
    write_artifact(dir, artifacts::TIMING, &to_json(&timings))?;
    Ok(report)
}

/// Every stage in order.
pub fn cmd_all(cfg: &PipelineConfig) -> Result<EvaluationReport, PipelineError> {
    let stages: [(&str, &dyn Fn() -> Result<(), PipelineError>); 3] = [
        ("graph", &|| cmd_graph(cfg).map(drop)),
        ("embed", &|| cmd_embed(cfg).map(drop)),
        ("campaign", &|| cmd_campaign(cfg).map(drop)),
    ];
    for (name, stage) in stages {
        let t = Instant::now();
        stage()?;
        log::info!("{name} finished in {:.2?}", t.elapsed());
    }
    let t = Instant::now();
    let report = cmd_train_eval(cfg)?;
    log::info!("train-eval finished in {:.2?}", t.elapsed());
    Ok(report)
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "flowlens", version, about = "Flow feature extraction, intrusion-detection evaluation and SHAP explanations")]
pub struct Cli {
    /// key=value file supplying defaults for any long flag; flags on the command line win
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Master seed for every random choice
    #[arg(long, global = true, env = "FLOWLENS_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Worker threads (0 = one per core)
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// More log output (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the synthetic benign/attack capture and its ground truth
    Synth(SynthArgs),
    /// Turn a pcap into a flow feature CSV
    Extract(ExtractArgs),
    /// Attach labels to a feature CSV from ground-truth events
    Label(LabelArgs),
    /// Fit a scaler and model on a labelled CSV and save them
    Train(TrainArgs),
    /// Cross-validate a model kind, or score a saved model, on a labelled CSV
    Eval(EvalArgs),
    /// Shapley explanations of a saved model and their global ranking
    Explain(ExplainArgs),
    /// Result tables and SVG charts from eval and explain outputs
    Report(ReportArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Extract(_) => "extract",
            Command::Label(_) => "label",
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::Explain(_) => "explain",
            Command::Report(_) => "report",
        }
    }
}

// Paths are left out of serialisation: the config hash covers parameters
// that change results, not where files live.

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// Output capture
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub pcap: PathBuf,
    /// Output ground-truth CSV
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub truth: PathBuf,
    /// Benign TCP sessions
    #[arg(long, default_value_t = 700)]
    pub benign_sessions: usize,
    /// Benign DNS lookups
    #[arg(long, default_value_t = 300)]
    pub dns_queries: usize,
    /// SYN-flood flows
    #[arg(long, default_value_t = 500)]
    pub ddos_flows: usize,
    /// High-rate repetitive flows
    #[arg(long, default_value_t = 300)]
    pub dos_flows: usize,
    /// Length of the benign activity window in seconds
    #[arg(long, default_value_t = 900)]
    pub duration: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct ExtractArgs {
    /// Input capture (classic pcap, Ethernet)
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub pcap: PathBuf,
    /// Feature schema: netflow_v2_style or cic_style
    #[arg(long)]
    pub schema: String,
    /// Output feature CSV; the flow index goes next to it as <stem>.flows.csv
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub out: PathBuf,
    /// Seconds of silence that end a flow
    #[arg(long, default_value_t = 15.0)]
    pub idle_timeout: f64,
    /// Seconds after which a long flow is cut
    #[arg(long, default_value_t = 120.0)]
    pub active_timeout: f64,
    /// Gap in seconds separating active and idle periods
    #[arg(long, default_value_t = 5.0)]
    pub activity_timeout: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct LabelArgs {
    /// Feature CSV written by extract
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub features: PathBuf,
    /// Flow index (default: <features stem>.flows.csv)
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub flows: Option<PathBuf>,
    /// Ground-truth CSV: src_ip,dst_ip,protocol,start_ts,end_ts,category
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub truth: PathBuf,
    /// Output labelled CSV (identifier columns dropped)
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub out: PathBuf,
    /// Keep identifier columns in the output
    #[arg(long)]
    pub keep_identifiers: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// Forest: number of trees
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
    /// Forest: maximum tree depth
    #[arg(long, default_value_t = 16)]
    pub max_depth: usize,
    /// Forest: smallest node that may be split
    #[arg(long, default_value_t = 2)]
    pub min_samples_split: usize,
    /// Forest: features tried per split: sqrt, all, or a fraction in (0,1]
    #[arg(long, default_value = "sqrt")]
    pub max_features: String,
    /// Forest: grow every tree on the full training set
    #[arg(long)]
    pub no_bootstrap: bool,
    /// Network: hidden layer widths
    #[arg(long, value_delimiter = ',', default_value = "64,32,16")]
    pub hidden: Vec<usize>,
    /// Network: Adam learning rate
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    /// Network: training epochs
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    /// Network: mini-batch size
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    /// Weight classes inversely to their frequency
    #[arg(long)]
    pub balanced: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Labelled CSV
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub data: PathBuf,
    /// rf or dff
    #[arg(long)]
    pub model_kind: String,
    /// Output model file (JSON)
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Labelled CSV
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub data: PathBuf,
    /// Cross-validate this model kind (rf or dff)
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    pub model_kind: Option<String>,
    /// Score a saved model on the whole file instead of cross-validating
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub model: Option<PathBuf>,
    /// Output report CSV; <stem>.jsonl, <stem>.timing.csv and <stem>.txt go next to it
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub out: PathBuf,
    /// Dataset name in reports (default: file stem of --data)
    #[arg(long)]
    pub dataset: Option<String>,
    /// Number of folds
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Test rows per fold used for timing
    #[arg(long, default_value_t = 500)]
    pub timing_rows: usize,
    /// Timing passes; the median is reported
    #[arg(long, default_value_t = 7)]
    pub timing_repeats: usize,
    #[command(flatten)]
    pub model_params: ModelArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ExplainArgs {
    /// Labelled CSV supplying explained and background rows
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub data: PathBuf,
    /// Saved model
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub model: PathBuf,
    /// Output ranking CSV; <stem>.jsonl holds per-row explanations
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub out: PathBuf,
    /// exact, kernel or tree (default: tree for forests, kernel otherwise)
    #[arg(long)]
    pub method: Option<String>,
    /// Background rows sampled from --data
    #[arg(long, default_value_t = 100)]
    pub background: usize,
    /// Explained rows sampled from --data
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    /// Kernel coalition budget, counting the empty and full coalitions, or "full"
    #[arg(long, default_value = "512")]
    pub budget: String,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Report CSVs from eval (a sibling <stem>.timing.csv is picked up when present)
    #[arg(long, value_delimiter = ',', value_name = "FILE")]
    #[serde(skip)]
    pub reports: Vec<PathBuf>,
    /// Ranking CSVs from explain
    #[arg(long, value_delimiter = ',', value_name = "FILE")]
    #[serde(skip)]
    pub rankings: Vec<PathBuf>,
    /// Output directory for tables.txt, f1.svg and one <ranking stem>.svg per ranking
    #[arg(long, value_name = "DIR")]
    #[serde(skip)]
    pub out_dir: PathBuf,
    /// Bars per ranking chart
    #[arg(long, default_value_t = 20)]
    pub top_k: usize,
}

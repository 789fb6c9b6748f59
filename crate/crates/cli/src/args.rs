use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "capgraph",
    version,
    about = "Predict manufacturer capabilities from a manufacturer/service knowledge graph"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build canonical node/edge files from a corpus or existing graph files.
    Build(BuildArgs),
    /// Mask a target service, train one model and write its artifacts.
    Train(TrainArgs),
    /// Repeated runs of one method, reporting mean AUC-ROC and AUC-PR.
    Eval(EvalArgs),
    /// Run a method over a grid of oversampling scales or imbalance ratios.
    Sweep(SweepArgs),
    /// Score one manufacturer with a trained checkpoint.
    Predict(PredictArgs),
    /// Write a planted benchmark graph with a known capability label.
    GenPlanted(GenPlantedArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Manufacturer documents, one `name<TAB>text` record per line.
    #[arg(long, conflicts_with_all = ["nodes", "edges"])]
    pub corpus: Option<PathBuf>,
    /// Service vocabulary, one `category<TAB>name` record per line.
    #[arg(long, requires = "corpus")]
    pub services: Option<PathBuf>,
    /// Optional service-service links, one `name<TAB>name` per line.
    #[arg(long, requires = "corpus")]
    pub service_links: Option<PathBuf>,
    /// Existing node file to canonicalize.
    #[arg(long, requires = "edges")]
    pub nodes: Option<PathBuf>,
    /// Existing edge file to canonicalize.
    #[arg(long, requires = "nodes")]
    pub edges: Option<PathBuf>,
    /// Output directory for nodes.tsv and edges.tsv.
    #[arg(long)]
    pub out: PathBuf,
}

/// Dataset, method and hyperparameters shared by train, eval and sweep.
/// Unset flags fall back to the config file, then to the listed default.
#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Node file (`id<TAB>kind<TAB>category<TAB>name`).
    #[arg(long)]
    pub nodes: Option<PathBuf>,
    /// Edge file (`id<TAB>id`).
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Name of the service whose providers are predicted.
    #[arg(long)]
    pub target: Option<String>,
    /// Dataset label written to result tables [default: node file stem, or its directory for nodes.tsv]
    #[arg(long)]
    pub dataset: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Global seed [default: 0]
    #[arg(long, env = "CAPGRAPH_SEED")]
    pub seed: Option<u64>,
    /// plain, seng, fa or sf [default: sf]
    #[arg(long)]
    pub method: Option<String>,
    /// sage or gcn [default: sage]
    #[arg(long)]
    pub encoder: Option<String>,
    /// Adam learning rate [default: 0.01]
    #[arg(long)]
    pub lr: Option<f64>,
    /// Maximum training epochs [default: 415]
    #[arg(long)]
    pub max_epochs: Option<usize>,
    /// Hidden width [default: 16]
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Epochs without validation AUC-ROC gain before stopping [default: 50]
    #[arg(long)]
    pub patience: Option<usize>,
    /// Probability above which a node is labelled capable [default: 0.5]
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Neighbor cap per node and epoch [default: full neighborhood]
    #[arg(long)]
    pub fanout: Option<usize>,
    /// Class weights `w0,w1` [default: inverse training frequency]
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub class_weights: Option<Vec<f64>>,
    /// ReLU before the output sigmoid [default: true]
    #[arg(long)]
    pub head_relu: Option<bool>,
    /// Sum (true) or mean (false) of neighbor embeddings in the head [default: true]
    #[arg(long)]
    pub neighbor_sum: Option<bool>,
    /// Oversampling scale OS [default: 1]
    #[arg(long = "os")]
    pub oversampling_scale: Option<f64>,
    /// Skip oversampling above this training imbalance ratio [default: 0.7]
    #[arg(long)]
    pub ratio_threshold: Option<f64>,
    /// Generate (1+OS)·|c2| synthetic nodes instead of OS·|c2|
    #[arg(long)]
    pub literal_count: bool,
    /// Train/valid/test fractions [default: 0.8,0.1,0.1]
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub split: Option<Vec<f64>>,
    /// Paragraph-vector width [default: 64]
    #[arg(long)]
    pub embed_dim: Option<usize>,
    /// Paragraph-vector epochs [default: 40]
    #[arg(long)]
    pub embed_epochs: Option<usize>,
    /// Paragraph-vector initial learning rate [default: 0.025]
    #[arg(long)]
    pub embed_lr: Option<f64>,
    /// Negative samples per token [default: 5]
    #[arg(long)]
    pub negatives: Option<usize>,
    /// t-SNE perplexity [default: min(30, (n-1)/3)]
    #[arg(long)]
    pub perplexity: Option<f64>,
    /// t-SNE iterations [default: 500]
    #[arg(long)]
    pub tsne_iterations: Option<usize>,
    /// t-SNE learning rate [default: 200]
    #[arg(long)]
    pub tsne_lr: Option<f64>,
    /// Write wall_ms as 0 so result tables are byte-reproducible
    #[arg(long)]
    pub omit_timing: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// node or link [default: node]
    #[arg(long)]
    pub task: Option<String>,
    /// Independent repeats, seeded seed..seed+repeats [default: 3]
    #[arg(long)]
    pub repeats: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// os or ratio [default: os]
    #[arg(long)]
    pub axis: Option<String>,
    /// Comma-separated grid [default: 0.2,0.4,0.6,0.8,1.0,1.2 for os; 0.1,0.2,0.4,0.5866 for ratio]
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub values: Option<Vec<f64>>,
    /// Repeats per grid value [default: 3]
    #[arg(long)]
    pub repeats: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Checkpoint written by `train`.
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub nodes: PathBuf,
    #[arg(long)]
    pub edges: PathBuf,
    /// Feature matrix written by `train` [default: type codes only]
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Manufacturer to score.
    #[arg(long)]
    pub manufacturer: String,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct GenPlantedArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub manufacturers: usize,
    #[arg(long, default_value_t = 30)]
    pub services_per_category: usize,
    #[arg(long, default_value_t = 4)]
    pub clusters: usize,
    /// Probability that a manufacturer's home cluster follows its label.
    #[arg(long, default_value_t = 0.9)]
    pub signal: f64,
    /// Probability that an edge ignores the home cluster.
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    /// Service edges per manufacturer.
    #[arg(long, default_value_t = 5)]
    pub degree: usize,
    /// Capable nodes over all other nodes after masking.
    #[arg(long, default_value_t = 0.2)]
    pub ratio: f64,
    #[arg(long, env = "CAPGRAPH_SEED", default_value_t = 0)]
    pub seed: u64,
}

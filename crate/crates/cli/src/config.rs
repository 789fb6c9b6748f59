use std::path::{Path, PathBuf};

use capgraph::eval::{ExperimentConfig, MethodSpec, SweepSpec, TaskKind};
use capgraph::gnn::ModelKind;
use capgraph::graph::SplitRatios;
use serde::{Deserialize, Serialize};

use crate::args::RunArgs;
use crate::error::CliError;

/// Everything a train/eval/sweep invocation needs. Loaded from JSON, then
/// overridden by command-line flags; the result is echoed to the output
/// directory as `config.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub nodes: Option<PathBuf>,
    pub edges: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub dataset: Option<String>,
    pub target: Option<String>,
    pub method: MethodSpec,
    pub experiment: ExperimentConfig,
    pub sweep: SweepSpec,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            nodes: None,
            edges: None,
            output: None,
            dataset: None,
            target: None,
            method: MethodSpec::node(true, true, ModelKind::GraphSage),
            experiment: ExperimentConfig::default(),
            sweep: SweepSpec::default(),
            repeats: 3,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        if !path.is_file() {
            return Err(CliError::usage(format!(
                "config file {} does not exist",
                path.display()
            )));
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    pub fn from_args(args: &RunArgs) -> Result<Self, CliError> {
        let mut cfg = match &args.config {
            Some(p) => Self::load(p)?,
            None => RunConfig::default(),
        };
        cfg.apply(args)?;
        Ok(cfg)
    }

    fn apply(&mut self, a: &RunArgs) -> Result<(), CliError> {
        let set = |dst: &mut Option<PathBuf>, src: &Option<PathBuf>| {
            if src.is_some() {
                dst.clone_from(src);
            }
        };
        set(&mut self.nodes, &a.nodes);
        set(&mut self.edges, &a.edges);
        set(&mut self.output, &a.out);
        if a.dataset.is_some() {
            self.dataset.clone_from(&a.dataset);
        }
        if a.target.is_some() {
            self.target.clone_from(&a.target);
        }
        if let Some(s) = a.seed {
            self.seed = s;
        }
        if let Some(m) = &a.method {
            let parsed: MethodSpec = m.parse().map_err(CliError::from)?;
            self.method.use_seng = parsed.use_seng;
            self.method.use_fa = parsed.use_fa;
        }
        if let Some(e) = &a.encoder {
            self.method.encoder = e.parse().map_err(CliError::from)?;
        }

        let x = &mut self.experiment;
        let t = &mut x.train;
        if let Some(v) = a.lr {
            t.adam.lr = v;
        }
        if let Some(v) = a.max_epochs {
            t.max_epochs = v;
        }
        if let Some(v) = a.hidden {
            t.hidden = v;
        }
        if let Some(v) = a.patience {
            t.patience = v;
        }
        if let Some(v) = a.threshold {
            t.threshold = v;
        }
        if a.fanout.is_some() {
            t.fanout = a.fanout;
        }
        if let Some(w) = &a.class_weights {
            t.class_weights = Some([w[0], w[1]]);
        }
        if let Some(v) = a.head_relu {
            t.head.relu = v;
        }
        if let Some(v) = a.neighbor_sum {
            t.head.neighbor_sum = v;
        }
        if let Some(v) = a.oversampling_scale {
            x.seng.oversampling_scale = v;
        }
        if let Some(v) = a.ratio_threshold {
            x.seng.ratio_threshold = v;
        }
        if a.literal_count {
            x.seng.literal_count = true;
        }
        if let Some(s) = &a.split {
            x.ratios = SplitRatios {
                train: s[0],
                valid: s[1],
                test: s[2],
            };
        }
        let p = &mut x.features.paragraph;
        if let Some(v) = a.embed_dim {
            p.dim = v;
        }
        if let Some(v) = a.embed_epochs {
            p.epochs = v;
        }
        if let Some(v) = a.embed_lr {
            p.lr = v;
        }
        if let Some(v) = a.negatives {
            p.negatives = v;
        }
        let ts = &mut x.features.tsne;
        if a.perplexity.is_some() {
            ts.perplexity = a.perplexity;
        }
        if let Some(v) = a.tsne_iterations {
            ts.iterations = v;
        }
        if let Some(v) = a.tsne_lr {
            ts.lr = v;
        }
        if a.omit_timing {
            x.omit_timing = true;
        }
        Ok(())
    }

    pub fn set_task(&mut self, task: &str) -> Result<(), CliError> {
        self.method.task = match task.to_ascii_lowercase().as_str() {
            "node" | "node_classification" => TaskKind::NodeClassification,
            "link" | "link_prediction" => TaskKind::LinkPrediction,
            other => {
                return Err(CliError::usage(format!(
                    "unknown task {other:?} (expected node or link)"
                )))
            }
        };
        Ok(())
    }

    /// Checks the parts every command needs: inputs exist, target and
    /// output are set, and every hyperparameter is in range.
    pub fn validate(&self) -> Result<(), CliError> {
        for (flag, path) in [("--nodes", &self.nodes), ("--edges", &self.edges)] {
            match path {
                None => return Err(CliError::usage(format!("{flag} is required"))),
                Some(p) if !p.is_file() => {
                    return Err(CliError::usage(format!(
                        "{flag}: {} does not exist",
                        p.display()
                    )))
                }
                Some(_) => {}
            }
        }
        if self.target.as_deref().is_none_or(|t| t.trim().is_empty()) {
            return Err(CliError::usage("--target is required"));
        }
        if self.output.is_none() {
            return Err(CliError::usage("--out is required"));
        }
        self.method.validate().map_err(CliError::from)?;
        self.experiment.validate().map_err(CliError::from)?;
        Ok(())
    }

    pub fn nodes(&self) -> &Path {
        self.nodes.as_deref().expect("validated")
    }

    pub fn edges(&self) -> &Path {
        self.edges.as_deref().expect("validated")
    }

    pub fn output(&self) -> &Path {
        self.output.as_deref().expect("validated")
    }

    pub fn target(&self) -> &str {
        self.target.as_deref().expect("validated")
    }

    pub fn dataset_label(&self) -> String {
        if let Some(d) = &self.dataset {
            return d.clone();
        }
        let nodes = self.nodes();
        let stem = nodes.file_stem().map(|s| s.to_string_lossy().into_owned());
        let parent = nodes
            .parent()
            .and_then(|p| p.file_name())
            .map(|s| s.to_string_lossy().into_owned());
        match (stem, parent) {
            (Some(s), Some(p)) if s == "nodes" => p,
            (Some(s), _) => s,
            (None, _) => "dataset".into(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self).expect("config serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
    }
}

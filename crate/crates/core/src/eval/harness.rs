//! Repeated runs of the four method variants, sweeps and result tables.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{auc_pr, auc_roc};
use crate::error::{Error, Result};
use crate::features::{build_node_features, code_only_features, FeatureConfig};
use crate::gnn::{
    predict_probabilities, train_link_predictor, train_node_classifier, LinkConfig, LinkSplit,
    ModelKind, TrainConfig,
};
use crate::graph::{compute_imbalance, stratified_split, LabeledTask, NodeId, Split, SplitRatios};
use crate::seng::{oversample, AugmentedGraph, SengConfig};

/// Two ratios closer than this count as the same grid point.
pub const RATIO_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    NodeClassification,
    LinkPrediction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub use_seng: bool,
    pub use_fa: bool,
    pub encoder: ModelKind,
    pub task: TaskKind,
}

impl MethodSpec {
    pub fn node(use_seng: bool, use_fa: bool, encoder: ModelKind) -> Self {
        MethodSpec {
            use_seng,
            use_fa,
            encoder,
            task: TaskKind::NodeClassification,
        }
    }

    pub fn link(use_fa: bool, encoder: ModelKind) -> Self {
        MethodSpec {
            use_seng: false,
            use_fa,
            encoder,
            task: TaskKind::LinkPrediction,
        }
    }

    /// Short key used on the command line: plain, seng, fa or sf.
    pub fn key(&self) -> &'static str {
        match (self.use_seng, self.use_fa) {
            (false, false) => "plain",
            (true, false) => "seng",
            (false, true) => "fa",
            (true, true) => "sf",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.task == TaskKind::LinkPrediction && self.use_seng {
            return Err(Error::Config(
                "oversampling does not apply to link prediction".into(),
            ));
        }
        Ok(())
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let encoder = match self.encoder {
            ModelKind::GraphSage => "GraphSAGE",
            ModelKind::Gcn => "GCN",
        };
        let prefix = match (self.use_seng, self.use_fa) {
            (false, false) => "",
            (true, false) => "SENG-",
            (false, true) => "FA-",
            (true, true) => "SF-",
        };
        write!(f, "{prefix}{encoder}")
    }
}

/// Parses a method key (plain, seng, fa, sf) for node classification.
impl FromStr for MethodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (use_seng, use_fa) = match s.to_ascii_lowercase().as_str() {
            "plain" | "base" | "baseline" => (false, false),
            "seng" => (true, false),
            "fa" => (false, true),
            "sf" => (true, true),
            other => {
                return Err(Error::Config(format!(
                    "unknown method {other:?} (expected plain, seng, fa or sf)"
                )))
            }
        };
        Ok(MethodSpec::node(use_seng, use_fa, ModelKind::GraphSage))
    }
}

/// Everything a single run needs besides the dataset and seed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub ratios: SplitRatios,
    pub seng: SengConfig,
    pub features: FeatureConfig,
    pub train: TrainConfig,
    /// Write wall_ms as 0 so result tables are reproducible byte for byte.
    pub omit_timing: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.ratios.validate()?;
        self.seng.validate()?;
        self.features.paragraph.validate()?;
        self.train.validate()
    }

    /// The same configuration with every stage seeded from `seed`.
    pub fn seeded(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.seng.seed = seed;
        c.features.paragraph.seed = seed;
        c.features.tsne.seed = seed;
        c.train.seed = seed;
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatResult {
    pub repeat: usize,
    pub seed: u64,
    pub auc_roc: f64,
    pub auc_pr: f64,
    pub epochs_run: usize,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub auc_roc: f64,
    pub auc_pr: f64,
    pub repeats: usize,
    pub per_repeat: Vec<RepeatResult>,
}

impl MetricReport {
    pub fn from_repeats(per_repeat: Vec<RepeatResult>) -> Result<Self> {
        if per_repeat.is_empty() {
            return Err(Error::Config("a report needs at least one repeat".into()));
        }
        let n = per_repeat.len() as f64;
        Ok(MetricReport {
            auc_roc: per_repeat.iter().map(|r| r.auc_roc).sum::<f64>() / n,
            auc_pr: per_repeat.iter().map(|r| r.auc_pr).sum::<f64>() / n,
            repeats: per_repeat.len(),
            per_repeat,
        })
    }
}

/// Outcome of one node-classification run, with the pieces the CLI persists.
#[derive(Debug, Clone)]
pub struct NodeRun {
    pub augmented: AugmentedGraph,
    pub features: crate::gnn::DenseMatrix,
    pub model: crate::gnn::TrainedModel,
    pub probabilities: Vec<f64>,
    pub test_nodes: Vec<NodeId>,
    pub auc_roc: f64,
    pub auc_pr: f64,
}

/// split, optional oversampling, features, training, test-split scoring.
pub fn run_node_once(
    task: &LabeledTask,
    method: &MethodSpec,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<NodeRun> {
    let cfg = config.seeded(seed);
    let split = stratified_split(&task.labels, cfg.ratios, seed)?;
    let augmented = if method.use_seng {
        oversample(task, &split, &cfg.seng)?
    } else {
        AugmentedGraph::unchanged(task, &split)
    };
    let features = if method.use_fa {
        build_node_features(&augmented.graph, &cfg.features)?
            .features
            .into_inner()
    } else {
        code_only_features(&augmented.graph).into_inner()
    };
    let model = train_node_classifier(&augmented, &features, &cfg.train, method.encoder)?;
    let probabilities = predict_probabilities(&model.params, &augmented.graph, &features)?;
    let test_nodes: Vec<NodeId> = augmented.split.nodes_in(Split::Test).collect();
    let scores: Vec<f64> = test_nodes
        .iter()
        .map(|id| probabilities[id.index()])
        .collect();
    let labels: Vec<u8> = test_nodes
        .iter()
        .map(|id| augmented.labels[id.index()])
        .collect();
    Ok(NodeRun {
        auc_roc: auc_roc(&scores, &labels)?,
        auc_pr: auc_pr(&scores, &labels)?,
        augmented,
        features,
        model,
        probabilities,
        test_nodes,
    })
}

fn run_link_once(
    task: &LabeledTask,
    method: &MethodSpec,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<(f64, f64, usize)> {
    let cfg = config.seeded(seed);
    let (graph, target) = task.unmasked();
    let split = LinkSplit::new(&graph, &[target], cfg.ratios, seed)?;
    let features = if method.use_fa {
        build_node_features(&split.message_graph, &cfg.features)?
            .features
            .into_inner()
    } else {
        code_only_features(&split.message_graph).into_inner()
    };
    let link_cfg = LinkConfig {
        ratios: cfg.ratios,
        train: cfg.train.clone(),
    };
    let out = train_link_predictor(&split, &features, &link_cfg, method.encoder)?;
    Ok((out.test_auc_roc, out.test_auc_pr, out.epochs_run))
}

/// Runs `repeats` independent repeats seeded `base_seed + r`.
pub fn run_method(
    task: &LabeledTask,
    method: &MethodSpec,
    config: &ExperimentConfig,
    repeats: usize,
    base_seed: u64,
) -> Result<MetricReport> {
    method.validate()?;
    config.validate()?;
    if repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".into()));
    }
    let mut per_repeat = Vec::with_capacity(repeats);
    for r in 0..repeats {
        let seed = base_seed.wrapping_add(r as u64);
        let start = Instant::now();
        let (roc, pr, epochs_run) = match method.task {
            TaskKind::NodeClassification => {
                let run = run_node_once(task, method, config, seed)?;
                (run.auc_roc, run.auc_pr, run.model.epochs_run)
            }
            TaskKind::LinkPrediction => run_link_once(task, method, config, seed)?,
        };
        per_repeat.push(RepeatResult {
            repeat: r,
            seed,
            auc_roc: roc,
            auc_pr: pr,
            epochs_run,
            wall_ms: if config.omit_timing {
                0
            } else {
                start.elapsed().as_millis() as u64
            },
        });
    }
    MetricReport::from_repeats(per_repeat)
}

/// Imbalance ratio of the task over all of its nodes.
pub fn task_ratio(task: &LabeledTask) -> Result<f64> {
    Ok(compute_imbalance(&task.labels, task.graph.ids())?.imbalance_ratio)
}

/// Removes randomly chosen minority manufacturers (with their edges) until
/// the ratio is at most `target_ratio`.
pub fn downsample_to_ratio(
    task: &LabeledTask,
    target_ratio: f64,
    seed: u64,
) -> Result<LabeledTask> {
    let stats = compute_imbalance(&task.labels, task.graph.ids())?;
    if !(target_ratio > 0.0) {
        return Err(Error::Config(format!(
            "target ratio must be positive, got {target_ratio}"
        )));
    }
    if target_ratio >= stats.imbalance_ratio {
        return Err(Error::Config(format!(
            "cannot downsample upward: target {target_ratio} vs current {:.6}",
            stats.imbalance_ratio
        )));
    }
    let keep = (target_ratio * stats.majority_size as f64).floor() as usize;
    let mut candidates: Vec<NodeId> = task
        .graph
        .manufacturers()
        .filter(|id| task.labels[id.index()] == stats.minority_label)
        .collect();
    let drop = stats.minority_size - keep;
    if drop > candidates.len() {
        return Err(Error::Config(format!(
            "ratio {target_ratio} needs removing {drop} nodes but only {} minority manufacturers exist",
            candidates.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    candidates.shuffle(&mut rng);
    let mut remove = vec![false; task.graph.node_count()];
    for id in &candidates[..drop] {
        remove[id.index()] = true;
    }
    Ok(task.without_nodes(&remove))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    #[serde(alias = "os")]
    OversamplingScale,
    #[serde(alias = "ratio")]
    ImbalanceRatio,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::OversamplingScale => "os",
            SweepAxis::ImbalanceRatio => "ratio",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "os" | "oversampling" | "oversampling_scale" => Ok(SweepAxis::OversamplingScale),
            "ratio" | "imbalance" | "imbalance_ratio" => Ok(SweepAxis::ImbalanceRatio),
            other => Err(Error::Config(format!(
                "unknown sweep axis {other:?} (expected os or ratio)"
            ))),
        }
    }
}

pub const DEFAULT_OS_GRID: [f64; 6] = [0.2, 0.4, 0.6, 0.8, 1.0, 1.2];
pub const DEFAULT_RATIO_GRID: [f64; 4] = [0.1, 0.2, 0.4, 0.5866];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub repeats: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            axis: SweepAxis::OversamplingScale,
            values: DEFAULT_OS_GRID.to_vec(),
            repeats: 3,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        if let Some(v) = self.values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::Config(format!(
                "sweep values must be positive, got {v}"
            )));
        }
        if self.repeats == 0 {
            return Err(Error::Config("sweep repeats must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub value: f64,
    pub report: MetricReport,
}

/// One `run_method` per grid value, in grid order.
pub fn sweep(
    task: &LabeledTask,
    method: &MethodSpec,
    spec: &SweepSpec,
    config: &ExperimentConfig,
    base_seed: u64,
) -> Result<Vec<SweepCell>> {
    spec.validate()?;
    method.validate()?;
    if spec.axis == SweepAxis::OversamplingScale && !method.use_seng {
        return Err(Error::Config(format!(
            "an OS sweep needs an oversampling method, got {method}"
        )));
    }
    let current = match spec.axis {
        SweepAxis::ImbalanceRatio => Some(task_ratio(task)?),
        SweepAxis::OversamplingScale => None,
    };
    let mut cells = Vec::with_capacity(spec.values.len());
    for &value in &spec.values {
        let mut cfg = config.clone();
        let report = match spec.axis {
            SweepAxis::OversamplingScale => {
                cfg.seng.oversampling_scale = value;
                run_method(task, method, &cfg, spec.repeats, base_seed)?
            }
            SweepAxis::ImbalanceRatio => {
                cfg.seng.oversampling_scale = 1.0;
                let current = current.expect("ratio computed above");
                if (value - current).abs() <= RATIO_TOLERANCE {
                    run_method(task, method, &cfg, spec.repeats, base_seed)?
                } else {
                    let reduced = downsample_to_ratio(task, value, base_seed)?;
                    run_method(&reduced, method, &cfg, spec.repeats, base_seed)?
                }
            }
        };
        cells.push(SweepCell { value, report });
    }
    Ok(cells)
}

pub const CSV_HEADER: &str =
    "dataset,method,axis,value,repeat,auc_roc,auc_pr,seed,epochs_run,wall_ms";

/// One CSV line per repeat. Floats use the shortest representation that
/// parses back to the same value; `value` is empty outside sweeps.
pub fn csv_rows(
    dataset: &str,
    method: &MethodSpec,
    axis: Option<SweepAxis>,
    value: Option<f64>,
    report: &MetricReport,
) -> String {
    let mut out = String::new();
    let axis = axis.map_or("none", SweepAxis::as_str);
    let value = value.map(|v| v.to_string()).unwrap_or_default();
    for r in &report.per_repeat {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            csv_field(dataset),
            method,
            axis,
            value,
            r.repeat,
            r.auc_roc,
            r.auc_pr,
            r.seed,
            r.epochs_run,
            r.wall_ms
        );
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryCell {
    pub value: Option<f64>,
    pub auc_roc: f64,
    pub auc_pr: f64,
    pub repeats: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSummary {
    pub dataset: String,
    pub method: String,
    pub axis: String,
    pub cells: Vec<SummaryCell>,
}

impl ResultSummary {
    pub fn single(dataset: &str, method: &MethodSpec, report: &MetricReport) -> Self {
        ResultSummary {
            dataset: dataset.to_string(),
            method: method.to_string(),
            axis: "none".into(),
            cells: vec![SummaryCell {
                value: None,
                auc_roc: report.auc_roc,
                auc_pr: report.auc_pr,
                repeats: report.repeats,
            }],
        }
    }

    pub fn from_sweep(
        dataset: &str,
        method: &MethodSpec,
        axis: SweepAxis,
        cells: &[SweepCell],
    ) -> Self {
        ResultSummary {
            dataset: dataset.to_string(),
            method: method.to_string(),
            axis: axis.as_str().into(),
            cells: cells
                .iter()
                .map(|c| SummaryCell {
                    value: Some(c.value),
                    auc_roc: c.report.auc_roc,
                    auc_pr: c.report.auc_pr,
                    repeats: c.report.repeats,
                })
                .collect(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("summary serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names() {
        let names: Vec<String> = ["plain", "seng", "fa", "sf"]
            .iter()
            .map(|k| k.parse::<MethodSpec>().unwrap().to_string())
            .collect();
        assert_eq!(
            names,
            [
                "GraphSAGE",
                "SENG-GraphSAGE",
                "FA-GraphSAGE",
                "SF-GraphSAGE"
            ]
        );
        assert_eq!(MethodSpec::link(true, ModelKind::Gcn).to_string(), "FA-GCN");
        assert!("both".parse::<MethodSpec>().is_err());
        let bad = MethodSpec {
            use_seng: true,
            ..MethodSpec::link(false, ModelKind::Gcn)
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn report_mean_is_exact() {
        let rows: Vec<RepeatResult> = [0.7, 0.8, 0.65]
            .iter()
            .enumerate()
            .map(|(i, &v)| RepeatResult {
                repeat: i,
                seed: i as u64,
                auc_roc: v,
                auc_pr: v / 2.0,
                epochs_run: 1,
                wall_ms: 0,
            })
            .collect();
        let r = MetricReport::from_repeats(rows).unwrap();
        assert_eq!(r.auc_roc, (0.7 + 0.8 + 0.65) / 3.0);
        assert!(MetricReport::from_repeats(vec![]).is_err());
    }

    #[test]
    fn csv_layout() {
        let report = MetricReport::from_repeats(vec![RepeatResult {
            repeat: 0,
            seed: 7,
            auc_roc: 0.75,
            auc_pr: 0.5,
            epochs_run: 12,
            wall_ms: 0,
        }])
        .unwrap();
        let m: MethodSpec = "sf".parse().unwrap();
        assert_eq!(
            csv_rows(
                "planted",
                &m,
                Some(SweepAxis::OversamplingScale),
                Some(0.2),
                &report
            ),
            "planted,SF-GraphSAGE,os,0.2,0,0.75,0.5,7,12,0\n"
        );
        assert_eq!(
            csv_rows("a,b", &m, None, None, &report),
            "\"a,b\",SF-GraphSAGE,none,,0,0.75,0.5,7,12,0\n"
        );
    }

    #[test]
    fn sweep_spec_checks() {
        assert!(SweepSpec {
            values: vec![],
            ..SweepSpec::default()
        }
        .validate()
        .is_err());
        assert!(SweepSpec {
            values: vec![0.2, -1.0],
            ..SweepSpec::default()
        }
        .validate()
        .is_err());
        assert_eq!(
            "ratio".parse::<SweepAxis>().unwrap(),
            SweepAxis::ImbalanceRatio
        );
    }
}

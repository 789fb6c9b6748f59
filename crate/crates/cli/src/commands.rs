use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use capgraph::eval::{
    csv_rows, generate_planted_dataset, run_method, run_node_once, sweep, MetricReport,
    PlantedDatasetSpec, RepeatResult, ResultSummary, SweepAxis, CSV_HEADER, DEFAULT_OS_GRID,
    DEFAULT_RATIO_GRID,
};
use capgraph::features::code_only_features;
use capgraph::gnn::{
    load_checkpoint, predict_labels, predict_probabilities, save_checkpoint, DenseMatrix,
};
use capgraph::graph::{
    build_from_corpus, load_corpus, load_graph, load_service_links, load_service_vocabulary,
    mask_target, save_graph, Graph, LabeledTask,
};

use crate::args::{BuildArgs, EvalArgs, GenPlantedArgs, PredictArgs, SweepArgs, TrainArgs};
use crate::config::RunConfig;
use crate::error::{CliError, Stage};

pub const NODES_FILE: &str = "nodes.tsv";
pub const EDGES_FILE: &str = "edges.tsv";

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

fn require_file(flag: &str, path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::usage(format!(
            "{flag}: {} does not exist",
            path.display()
        )))
    }
}

fn save_canonical(graph: &Graph, out: &Path) -> Result<(), CliError> {
    ensure_dir(out)?;
    save_graph(graph, &out.join(NODES_FILE), &out.join(EDGES_FILE)).stage("write graph")
}

pub fn build(args: &BuildArgs) -> Result<(), CliError> {
    let graph = match (&args.corpus, &args.nodes, &args.edges) {
        (Some(corpus), _, _) => {
            let services = args
                .services
                .as_deref()
                .ok_or_else(|| CliError::usage("--services is required with --corpus"))?;
            require_file("--corpus", corpus)?;
            require_file("--services", services)?;
            if let Some(p) = &args.service_links {
                require_file("--service-links", p)?;
            }
            let docs = load_corpus(corpus).stage("read corpus")?;
            let vocab = load_service_vocabulary(services).stage("read services")?;
            let links = match &args.service_links {
                Some(p) => load_service_links(p).stage("read service links")?,
                None => Vec::new(),
            };
            build_from_corpus(&docs, &vocab, &links).stage("keyword matching")?
        }
        (None, Some(nodes), Some(edges)) => {
            require_file("--nodes", nodes)?;
            require_file("--edges", edges)?;
            load_graph(nodes, edges).stage("read graph")?
        }
        _ => {
            return Err(CliError::usage(
                "either --corpus and --services, or --nodes and --edges, are required",
            ))
        }
    };
    save_canonical(&graph, &args.out)?;
    println!("nodes\t{}", graph.node_count());
    println!("edges\t{}", graph.edge_count());
    Ok(())
}

fn load_task(cfg: &RunConfig) -> Result<LabeledTask, CliError> {
    let graph = load_graph(cfg.nodes(), cfg.edges()).stage("read graph")?;
    mask_target(&graph, cfg.target()).stage("mask target")
}

fn training_log(run: &capgraph::eval::NodeRun) -> String {
    let mut out = String::from("epoch\ttrain_loss\tval_auc_roc\n");
    for e in &run.model.log {
        let val = e.val_auc_roc.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{}\t{}\t{}", e.epoch, e.train_loss, val);
    }
    out
}

pub fn train(args: &TrainArgs) -> Result<(), CliError> {
    let cfg = RunConfig::from_args(&args.run)?;
    cfg.validate()?;
    if cfg.method.task != capgraph::eval::TaskKind::NodeClassification {
        return Err(CliError::usage(
            "train runs node classification; use `eval --task link` for link prediction",
        ));
    }
    let task = load_task(&cfg)?;
    let start = std::time::Instant::now();
    let run = run_node_once(&task, &cfg.method, &cfg.experiment, cfg.seed).stage("train")?;
    let wall_ms = if cfg.experiment.omit_timing {
        0
    } else {
        start.elapsed().as_millis() as u64
    };

    let out = cfg.output();
    ensure_dir(out)?;
    cfg.save(&out.join("config.json"))?;
    save_checkpoint(&run.model.params, &out.join("checkpoint.bin")).stage("write checkpoint")?;
    run.features
        .save(&out.join("features.bin"))
        .stage("write features")?;
    save_canonical(&run.augmented.graph, out)?;
    run.augmented
        .write_audit(&out.join("synthetic.tsv"))
        .stage("write audit")?;
    write_text(&out.join("training_log.tsv"), &training_log(&run))?;

    let report = MetricReport::from_repeats(vec![RepeatResult {
        repeat: 0,
        seed: cfg.seed,
        auc_roc: run.auc_roc,
        auc_pr: run.auc_pr,
        epochs_run: run.model.epochs_run,
        wall_ms,
    }])
    .stage("report")?;
    let dataset = cfg.dataset_label();
    let csv = format!(
        "{CSV_HEADER}\n{}",
        csv_rows(&dataset, &cfg.method, None, None, &report)
    );
    write_text(&out.join("results.csv"), &csv)?;
    ResultSummary::single(&dataset, &cfg.method, &report)
        .save(&out.join("summary.json"))
        .stage("write summary")?;

    println!(
        "{}\tauc_roc={}\tauc_pr={}\tepochs={}\tsynthetic={}",
        cfg.method,
        run.auc_roc,
        run.auc_pr,
        run.model.epochs_run,
        run.augmented.synthetic.len()
    );
    Ok(())
}

pub fn eval(args: &EvalArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::from_args(&args.run)?;
    if let Some(t) = &args.task {
        cfg.set_task(t)?;
    }
    if let Some(r) = args.repeats {
        cfg.repeats = r;
    }
    if cfg.repeats == 0 {
        return Err(CliError::usage("--repeats must be at least 1"));
    }
    cfg.validate()?;
    let task = load_task(&cfg)?;
    let report =
        run_method(&task, &cfg.method, &cfg.experiment, cfg.repeats, cfg.seed).stage("evaluate")?;

    let out = cfg.output();
    ensure_dir(out)?;
    cfg.save(&out.join("config.json"))?;
    let dataset = cfg.dataset_label();
    let csv = format!(
        "{CSV_HEADER}\n{}",
        csv_rows(&dataset, &cfg.method, None, None, &report)
    );
    write_text(&out.join("results.csv"), &csv)?;
    ResultSummary::single(&dataset, &cfg.method, &report)
        .save(&out.join("summary.json"))
        .stage("write summary")?;
    println!(
        "{}\tauc_roc={}\tauc_pr={}\trepeats={}",
        cfg.method, report.auc_roc, report.auc_pr, report.repeats
    );
    Ok(())
}

pub fn sweep_cmd(args: &SweepArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::from_args(&args.run)?;
    if let Some(a) = &args.axis {
        let axis: SweepAxis = a.parse().map_err(CliError::from)?;
        if axis != cfg.sweep.axis && args.values.is_none() {
            cfg.sweep.values = match axis {
                SweepAxis::OversamplingScale => DEFAULT_OS_GRID.to_vec(),
                SweepAxis::ImbalanceRatio => DEFAULT_RATIO_GRID.to_vec(),
            };
        }
        cfg.sweep.axis = axis;
    }
    if let Some(v) = &args.values {
        cfg.sweep.values.clone_from(v);
    }
    if let Some(r) = args.repeats {
        cfg.sweep.repeats = r;
    }
    cfg.sweep.validate().map_err(CliError::from)?;
    cfg.validate()?;
    let task = load_task(&cfg)?;
    let cells = sweep(&task, &cfg.method, &cfg.sweep, &cfg.experiment, cfg.seed).stage("sweep")?;

    let out = cfg.output();
    ensure_dir(out)?;
    cfg.save(&out.join("config.json"))?;
    let dataset = cfg.dataset_label();
    let mut csv = format!("{CSV_HEADER}\n");
    for c in &cells {
        csv.push_str(&csv_rows(
            &dataset,
            &cfg.method,
            Some(cfg.sweep.axis),
            Some(c.value),
            &c.report,
        ));
        println!(
            "{}={}\tauc_roc={}\tauc_pr={}",
            cfg.sweep.axis.as_str(),
            c.value,
            c.report.auc_roc,
            c.report.auc_pr
        );
    }
    write_text(&out.join("results.csv"), &csv)?;
    ResultSummary::from_sweep(&dataset, &cfg.method, cfg.sweep.axis, &cells)
        .save(&out.join("summary.json"))
        .stage("write summary")?;
    Ok(())
}

pub fn predict(args: &PredictArgs) -> Result<(), CliError> {
    require_file("--checkpoint", &args.checkpoint)?;
    require_file("--nodes", &args.nodes)?;
    require_file("--edges", &args.edges)?;
    if !(0.0..=1.0).contains(&args.threshold) {
        return Err(CliError::usage(format!(
            "--threshold must lie in [0, 1], got {}",
            args.threshold
        )));
    }
    let params = load_checkpoint(&args.checkpoint).stage("read checkpoint")?;
    let graph = load_graph(&args.nodes, &args.edges).stage("read graph")?;
    let id = graph
        .find_manufacturer(&args.manufacturer)
        .stage("lookup")?;
    let features = match &args.features {
        Some(p) => {
            require_file("--features", p)?;
            DenseMatrix::load(p).stage("read features")?
        }
        None => code_only_features(&graph).into_inner(),
    };
    if features.rows() != graph.node_count() {
        return Err(CliError::data(format!(
            "checkpoint/graph mismatch: feature matrix has {} rows, graph has {} nodes",
            features.rows(),
            graph.node_count()
        )));
    }
    let probs = predict_probabilities(&params, &graph, &features).stage("predict")?;
    let p = probs[id.index()];
    let label = predict_labels(&[p], args.threshold)[0];
    println!("{}\t{}\t{}", graph.node(id).name, p, label);
    Ok(())
}

pub fn gen_planted(args: &GenPlantedArgs) -> Result<(), CliError> {
    let spec = PlantedDatasetSpec {
        n_manufacturers: args.manufacturers,
        services_per_category: args.services_per_category,
        clusters: args.clusters,
        signal: args.signal,
        noise: args.noise,
        services_per_manufacturer: args.degree,
        imbalance_ratio: args.ratio,
        seed: args.seed,
    };
    let (graph, target) = generate_planted_dataset(&spec).stage("generate")?;
    save_canonical(&graph, &args.out)?;
    println!("target\t{}", graph.node(target).name);
    println!("nodes\t{}", graph.node_count());
    println!("edges\t{}", graph.edge_count());
    Ok(())
}

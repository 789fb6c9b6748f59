use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use capgraph::eval::ExperimentConfig;
use capgraph::gnn::{save_checkpoint, HeadOptions, ModelKind, ModelParameters};
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_capgraph"));
    c.env_remove("CAPGRAPH_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small planted graph; returns its directory.
fn planted(dir: &Path, ratio: f64) -> PathBuf {
    let data = dir.join("data");
    let ratio = ratio.to_string();
    ok(&[
        "gen-planted",
        "--out",
        s(&data),
        "--manufacturers",
        "160",
        "--services-per-category",
        "6",
        "--ratio",
        &ratio,
        "--seed",
        "3",
    ]);
    data
}

/// Arguments for a fast run against a planted graph.
fn fast(data: &Path, out: &Path) -> Vec<String> {
    [
        "--nodes",
        s(&data.join("nodes.tsv")),
        "--edges",
        s(&data.join("edges.tsv")),
        "--target",
        "Machining",
        "--out",
        s(out),
        "--max-epochs",
        "20",
        "--embed-epochs",
        "5",
        "--tsne-iterations",
        "120",
        "--omit-timing",
    ]
    .iter()
    .map(|a| a.to_string())
    .collect()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn build_from_corpus_counts_and_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let corpus = tmp.path().join("corpus.tsv");
    let services = tmp.path().join("services.tsv");
    fs::write(
        &corpus,
        "Acme\tPrecision CNC machining of aluminum parts\n\
         Bolt Works\tWelding and machining, ISO 9001 certified\n\
         Cast Co\tSand casting for the automotive industry\n",
    )
    .unwrap();
    fs::write(
        &services,
        "process\tmachining\nprocess\twelding\nmaterial\taluminum\ncertification\tISO 9001\n",
    )
    .unwrap();

    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let args = |out: &Path| {
        vec![
            "build".to_string(),
            "--corpus".into(),
            s(&corpus).into(),
            "--services".into(),
            s(&services).into(),
            "--out".into(),
            s(out).into(),
        ]
    };
    let a_args = args(&a);
    let stdout = ok(&a_args.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(stdout.contains("nodes\t7"), "{stdout}");
    // Acme: machining, aluminum; Bolt Works: machining, welding, ISO 9001
    assert!(stdout.contains("edges\t5"), "{stdout}");
    let b_args = args(&b);
    ok(&b_args.iter().map(String::as_str).collect::<Vec<_>>());
    for f in ["nodes.tsv", "edges.tsv"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }

    let missing = run(&[
        "build",
        "--corpus",
        s(&tmp.path().join("nope.tsv")),
        "--services",
        s(&services),
        "--out",
        s(&tmp.path().join("c")),
    ]);
    assert_eq!(code(&missing), 1);
    assert!(!String::from_utf8_lossy(&missing.stderr).is_empty());
}

#[test]
fn build_canonicalizes_existing_graph() {
    let tmp = TempDir::new().unwrap();
    let data = planted(tmp.path(), 0.2);
    let out = tmp.path().join("canon");
    ok(&[
        "build",
        "--nodes",
        s(&data.join("nodes.tsv")),
        "--edges",
        s(&data.join("edges.tsv")),
        "--out",
        s(&out),
    ]);
    for f in ["nodes.tsv", "edges.tsv"] {
        assert_eq!(
            fs::read(data.join(f)).unwrap(),
            fs::read(out.join(f)).unwrap(),
            "{f}"
        );
    }
    assert_eq!(code(&run(&["build", "--out", s(&out)])), 1);
}

#[test]
fn train_writes_artifacts_and_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let data = planted(tmp.path(), 0.2);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        ok_owned(&train_args(&data, out, &["--seed", "7"]));
    }
    for f in [
        "checkpoint.bin",
        "features.bin",
        "results.csv",
        "summary.json",
        "training_log.tsv",
        "synthetic.tsv",
        "nodes.tsv",
        "edges.tsv",
    ] {
        let x = fs::read(a.join(f)).unwrap_or_else(|_| panic!("missing {f}"));
        assert_eq!(
            x,
            fs::read(b.join(f)).unwrap(),
            "{f} differs between identical runs"
        );
    }
    let csv = fs::read_to_string(a.join("results.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "dataset,method,axis,value,repeat,auc_roc,auc_pr,seed,epochs_run,wall_ms"
    );
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "data");
    assert_eq!(rows[0][1], "SF-GraphSAGE");
    assert_eq!(rows[0][2], "none");
    assert_eq!(rows[0][3], "");
    assert_eq!(rows[0][7], "7");
    assert_eq!(rows[0][9], "0");
    let auc: f64 = rows[0][5].parse().unwrap();
    assert!((0.0..=1.0).contains(&auc));
}

fn train_args(data: &Path, out: &Path, extra: &[&str]) -> Vec<String> {
    let mut v = vec!["train".to_string()];
    v.extend(fast(data, out));
    v.extend(extra.iter().map(|s| s.to_string()));
    v
}

fn ok_owned(args: &[String]) -> String {
    ok(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

fn run_owned(args: &[String]) -> Output {
    run(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn zero_oversampling_matches_plain_baseline() {
    let tmp = TempDir::new().unwrap();
    let data = planted(tmp.path(), 0.2);
    let (a, b) = (tmp.path().join("seng"), tmp.path().join("plain"));
    let sa = ok_owned(&train_args(
        &data,
        &a,
        &["--method", "seng", "--os", "0", "--seed", "5"],
    ));
    ok_owned(&train_args(
        &data,
        &b,
        &["--method", "plain", "--seed", "5"],
    ));
    assert!(sa.contains("synthetic=0"), "{sa}");
    assert_eq!(
        fs::read(a.join("checkpoint.bin")).unwrap(),
        fs::read(b.join("checkpoint.bin")).unwrap()
    );
    let ra = data_rows(&fs::read_to_string(a.join("results.csv")).unwrap());
    let rb = data_rows(&fs::read_to_string(b.join("results.csv")).unwrap());
    assert_eq!(ra[0][1], "SENG-GraphSAGE");
    assert_eq!(rb[0][1], "GraphSAGE");
    assert_eq!(ra[0][5..], rb[0][5..]);
}

#[test]
fn seed_comes_from_environment() {
    let tmp = TempDir::new().unwrap();
    let data = planted(tmp.path(), 0.2);
    let (a, b) = (tmp.path().join("env"), tmp.path().join("flag"));
    let args = train_args(&data, &a, &["--method", "plain"]);
    let out = bin()
        .args(&args)
        .env("CAPGRAPH_SEED", "11")
        .output()
        .unwrap();
    assert!(out.status.success());
    ok_owned(&train_args(
        &data,
        &b,
        &["--method", "plain", "--seed", "11"],
    ));
    assert_eq!(
        fs::read(a.join("checkpoint.bin")).unwrap(),
        fs::read(b.join("checkpoint.bin")).unwrap()
    );
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = TempDir::new().unwrap();
    let data = planted(tmp.path(), 0.2);
    let cfg_path = tmp.path().join("run.json");
    fs::write(
        &cfg_path,
        r#"{"seed": 4, "dataset": "bench", "experiment": {"train": {"max_epochs": 3, "hidden": 8}}}"#,
    )
    .unwrap();
    let out = tmp.path().join("o");
    ok_owned(&train_args(
        &data,
        &out,
        &[
            "--config",
            s(&cfg_path),
            "--method",
            "plain",
            "--hidden",
            "12",
        ],
    ));
    let echoed: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(echoed["seed"], 4);
    assert_eq!(echoed["dataset"], "bench");
    assert_eq!(echoed["experiment"]["train"]["hidden"], 12);
    // the fast preset passes --max-epochs 20 which wins over the file
    assert_eq!(echoed["experiment"]["train"]["max_epochs"], 20);
    assert_eq!(echoed["experiment"]["train"]["adam"]["lr"], 0.01);
    let rows = data_rows(&fs::read_to_string(out.join("results.csv")).unwrap());
    assert_eq!(rows[0][0], "bench");

    let bad = tmp.path().join("bad.json");
    fs::write(&bad, "{not json").unwrap();
    assert_eq!(
        code(&run_owned(&train_args(&data, &out, &["--config", s(&bad)]))),
        1
    );
}

#[test]
fn usage_and_numeric_failures_map_to_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let data = planted(tmp.path(), 0.2);
    let out = tmp.path().join("o");

    let missing = run(&[
        "train",
        "--nodes",
        s(&tmp.path().join("none.tsv")),
        "--edges",
        s(&data.join("edges.tsv")),
        "--target",
        "Machining",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&missing), 1);

    assert_eq!(
        code(&run_owned(&train_args(&data, &out, &["--lr", "-1"]))),
        1
    );
    assert_eq!(
        code(&run_owned(&train_args(&data, &out, &["--method", "magic"]))),
        1
    );
    assert_eq!(code(&run(&["train", "--bogus"])), 1);

    let mut unknown_target = train_args(&data, &out, &[]);
    let i = unknown_target
        .iter()
        .position(|a| a == "Machining")
        .unwrap();
    unknown_target[i] = "Teleportation".into();
    assert_eq!(code(&run_owned(&unknown_target)), 2);

    let blown = run_owned(&train_args(
        &data,
        &out,
        &["--method", "plain", "--lr", "1e308", "--head-relu", "false"],
    ));
    assert_eq!(
        code(&blown),
        3,
        "{}",
        String::from_utf8_lossy(&blown.stderr)
    );

    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
}

#[test]
fn help_lists_documented_defaults() {
    let help = ok(&["train", "--help"]);
    let d = ExperimentConfig::default();
    let expect = [
        ("Adam learning rate", d.train.adam.lr.to_string()),
        ("Maximum training epochs", d.train.max_epochs.to_string()),
        (
            "Oversampling scale OS",
            d.seng.oversampling_scale.to_string(),
        ),
        ("imbalance ratio", d.seng.ratio_threshold.to_string()),
        ("Hidden width", d.train.hidden.to_string()),
        ("validation AUC-ROC gain", d.train.patience.to_string()),
        ("t-SNE iterations", d.features.tsne.iterations.to_string()),
        (
            "Paragraph-vector width",
            d.features.paragraph.dim.to_string(),
        ),
    ];
    for (needle, value) in expect {
        let line = help
            .lines()
            .find(|l| l.contains(needle))
            .unwrap_or_else(|| panic!("no help line for {needle}"));
        assert!(line.contains(&format!("[default: {value}]")), "{line}");
    }
    assert!(help.contains("[default: 0.01]"));
    assert!(help.contains("[default: 415]"));
    assert!(help.contains("[default: 1]"));
    assert!(help.contains("[default: 0.7]"));
}

fn sweep_args(data: &Path, out: &Path, extra: &[&str]) -> Vec<String> {
    let mut v = vec!["sweep".to_string()];
    v.extend(fast(data, out));
    v.extend(["--repeats", "1"].iter().map(|s| s.to_string()));
    v.extend(extra.iter().map(|s| s.to_string()));
    v
}

#[test]
fn oversampling_sweep_covers_default_grid() {
    let tmp = TempDir::new().unwrap();
    let data = planted(tmp.path(), 0.2);
    let out = tmp.path().join("os");
    ok_owned(&sweep_args(
        &data,
        &out,
        &["--method", "seng", "--axis", "os"],
    ));
    let rows = data_rows(&fs::read_to_string(out.join("results.csv")).unwrap());
    let values: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert_eq!(values, vec![0.2, 0.4, 0.6, 0.8, 1.0, 1.2]);
    assert!(rows.iter().all(|r| r[2] == "os"));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["cells"].as_array().unwrap().len(), 6);

    let plain = run_owned(&sweep_args(
        &data,
        &tmp.path().join("p"),
        &["--method", "plain", "--axis", "os"],
    ));
    assert_ne!(code(&plain), 0);
}

#[test]
fn ratio_sweep_and_empty_grid() {
    let tmp = TempDir::new().unwrap();
    let data = planted(tmp.path(), 0.5);
    let out = tmp.path().join("ratio");
    ok_owned(&sweep_args(
        &data,
        &out,
        &[
            "--method",
            "seng",
            "--axis",
            "ratio",
            "--values",
            "0.1,0.2,0.4",
        ],
    ));
    let rows = data_rows(&fs::read_to_string(out.join("results.csv")).unwrap());
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[2] == "ratio"));

    let empty = run_owned(&sweep_args(
        &data,
        &tmp.path().join("e"),
        &["--method", "seng", "--values", ""],
    ));
    assert_eq!(
        code(&empty),
        1,
        "{}",
        String::from_utf8_lossy(&empty.stderr)
    );
    let upward = run_owned(&sweep_args(
        &data,
        &tmp.path().join("u"),
        &["--method", "seng", "--axis", "ratio", "--values", "0.9"],
    ));
    assert_ne!(code(&upward), 0);
}

#[test]
fn eval_reports_repeat_rows_and_mean() {
    let tmp = TempDir::new().unwrap();
    let data = planted(tmp.path(), 0.2);
    let out = tmp.path().join("ev");
    let mut args = vec!["eval".to_string()];
    args.extend(fast(&data, &out));
    args.extend(
        ["--method", "plain", "--repeats", "2", "--seed", "9"]
            .iter()
            .map(|s| s.to_string()),
    );
    ok_owned(&args);
    let rows = data_rows(&fs::read_to_string(out.join("results.csv")).unwrap());
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][7], "9");
    assert_eq!(rows[1][7], "10");
    let mean = (rows[0][5].parse::<f64>().unwrap() + rows[1][5].parse::<f64>().unwrap()) / 2.0;
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let reported = summary["cells"][0]["auc_roc"].as_f64().unwrap();
    assert!((reported - mean).abs() < 1e-12, "{reported} vs {mean}");

    let link = tmp.path().join("link");
    let mut args = vec!["eval".to_string()];
    args.extend(fast(&data, &link));
    args.extend(
        [
            "--task",
            "link",
            "--method",
            "fa",
            "--encoder",
            "gcn",
            "--repeats",
            "1",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    ok_owned(&args);
    let rows = data_rows(&fs::read_to_string(link.join("results.csv")).unwrap());
    assert_eq!(rows[0][1], "FA-GCN");

    let mut args = vec!["eval".to_string()];
    args.extend(fast(&data, &link));
    args.extend(
        ["--task", "link", "--method", "seng"]
            .iter()
            .map(|s| s.to_string()),
    );
    assert_eq!(code(&run_owned(&args)), 1);
}

#[test]
fn predict_prints_name_probability_label() {
    let tmp = TempDir::new().unwrap();
    let data = planted(tmp.path(), 0.2);
    let out = tmp.path().join("t");
    ok_owned(&train_args(&data, &out, &["--method", "fa", "--seed", "1"]));
    let line = ok(&[
        "predict",
        "--checkpoint",
        s(&out.join("checkpoint.bin")),
        "--nodes",
        s(&out.join("nodes.tsv")),
        "--edges",
        s(&out.join("edges.tsv")),
        "--features",
        s(&out.join("features.bin")),
        "--manufacturer",
        "manufacturer00000",
    ]);
    let fields: Vec<&str> = line.trim_end().split('\t').collect();
    assert_eq!(fields.len(), 3, "{line}");
    assert_eq!(fields[0], "manufacturer00000");
    let p: f64 = fields[1].parse().unwrap();
    assert!((0.0..=1.0).contains(&p));
    assert_eq!(fields[2], if p > 0.5 { "1" } else { "0" });

    let unknown = run(&[
        "predict",
        "--checkpoint",
        s(&out.join("checkpoint.bin")),
        "--nodes",
        s(&out.join("nodes.tsv")),
        "--edges",
        s(&out.join("edges.tsv")),
        "--features",
        s(&out.join("features.bin")),
        "--manufacturer",
        "Nobody Inc",
    ]);
    assert_eq!(code(&unknown), 2);
}

#[test]
fn predict_at_exactly_one_half_is_negative() {
    let tmp = TempDir::new().unwrap();
    let data = planted(tmp.path(), 0.2);
    let ckpt = tmp.path().join("zero.bin");
    let params = ModelParameters::zeros(ModelKind::GraphSage, 3, 4, HeadOptions::default());
    save_checkpoint(&params, &ckpt).unwrap();
    let line = ok(&[
        "predict",
        "--checkpoint",
        s(&ckpt),
        "--nodes",
        s(&data.join("nodes.tsv")),
        "--edges",
        s(&data.join("edges.tsv")),
        "--manufacturer",
        "manufacturer00001",
    ]);
    assert_eq!(line, "manufacturer00001\t0.5\t0\n");
}

#![allow(
    dead_code,
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord
)]

use std::collections::BTreeSet;

use capgraph::gnn::{
    backward, forward, min_relu_margin, weighted_bce_loss, DenseMatrix, HeadOptions, ModelKind,
    ModelParameters, Structure,
};
use capgraph::graph::{
    compute_imbalance, mask_target, stratified_split, Graph, LabeledTask, Node, NodeId,
    ServiceCategory, Split, SplitRatios,
};
use capgraph::seng::{oversample, SengConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Problem {
    pub graph: Graph,
    pub structure: Structure,
    pub features: DenseMatrix,
    pub params: ModelParameters,
    pub labels: Vec<u8>,
    pub mask: Vec<NodeId>,
    pub weights: [f64; 2],
}

/// Three manufacturers, three services, one isolated-ish manufacturer.
pub fn six_node_graph() -> Graph {
    let nodes = vec![
        Node::manufacturer("m0"),
        Node::manufacturer("m1"),
        Node::manufacturer("m2"),
        Node::service(ServiceCategory::Process, "machining"),
        Node::service(ServiceCategory::Material, "copper"),
        Node::service(ServiceCategory::Certification, "iso 9001"),
    ];
    let edges = [(0, 3), (0, 4), (1, 3), (1, 5), (3, 4), (4, 5), (2, 5)];
    Graph::new(nodes, edges.iter().map(|&(a, b)| (NodeId(a), NodeId(b)))).unwrap()
}

/// Random smooth point: resamples until every ReLU pre-activation is at
/// least 0.05 away from its kink and at least two outputs are live.
pub fn six_node_problem(kind: ModelKind, head: HeadOptions, seed: u64) -> Problem {
    let graph = six_node_graph();
    let structure = Structure::for_model(kind, &graph);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10_000 {
        let mut features = DenseMatrix::zeros(6, 3);
        for j in 0..6 {
            features.set(j, 0, f64::from(graph.kind(NodeId(j)).type_code()));
            if graph.kind(NodeId(j)).is_manufacturer() {
                features.set(j, 1, rng.gen_range(-2.0..2.0));
                features.set(j, 2, rng.gen_range(-2.0..2.0));
            }
        }
        let params = ModelParameters::init(kind, 3, 4, head, &mut rng);
        let pass = forward(&params, &features, &structure).unwrap();
        let live_outputs = pass.logits.iter().filter(|&&z| z > 0.0).count();
        if min_relu_margin(&pass) > 0.05 && live_outputs >= 2 {
            return Problem {
                graph: graph.clone(),
                structure,
                features,
                params,
                labels: vec![1, 0, 1, 0, 0, 0],
                mask: (0..6).map(NodeId).collect(),
                weights: [0.75, 1.5],
            };
        }
    }
    panic!("no kink-free point found for seed {seed}");
}

#[derive(Debug)]
pub struct FdReport {
    pub max_rel_err: f64,
    pub nonzero_entries: usize,
    pub checked: usize,
}

fn loss_at(p: &Problem, params: &ModelParameters) -> f64 {
    let pass = forward(params, &p.features, &p.structure).unwrap();
    weighted_bce_loss(&pass.probs, &p.labels, &p.mask, p.weights)
        .unwrap()
        .loss
}

/// Compares the analytic gradient of every weight entry with a central
/// difference of step 1e-4. Relative error uses a 1e-8 floor on the
/// denominator so entries that are zero on both sides compare as equal.
pub fn finite_difference_report(kind: ModelKind, head: HeadOptions, seed: u64) -> FdReport {
    let p = six_node_problem(kind, head, seed);
    let pass = forward(&p.params, &p.features, &p.structure).unwrap();
    let loss = weighted_bce_loss(&pass.probs, &p.labels, &p.mask, p.weights).unwrap();
    let grads = backward(&p.params, &pass, &p.structure, &loss.d_probs);
    let h = 1e-4;
    let mut max_rel_err = 0.0f64;
    let mut nonzero = 0;
    let mut checked = 0;
    for block in 0..3 {
        let len = p.params.weights()[block].data().len();
        for i in 0..len {
            let mut plus = p.params.clone();
            plus.weights_mut()[block].data_mut()[i] += h;
            let mut minus = p.params.clone();
            minus.weights_mut()[block].data_mut()[i] -= h;
            let numeric = (loss_at(&p, &plus) - loss_at(&p, &minus)) / (2.0 * h);
            let analytic = grads[block].data()[i];
            let denom = analytic.abs().max(numeric.abs()).max(1e-8);
            max_rel_err = max_rel_err.max((analytic - numeric).abs() / denom);
            if analytic.abs() > 1e-8 {
                nonzero += 1;
            }
            checked += 1;
        }
    }
    FdReport {
        max_rel_err,
        nonzero_entries: nonzero,
        checked,
    }
}

/// Pairwise definition: P(score_pos > score_neg) + half the ties.
pub fn roc_pairs(scores: &[f64], labels: &[u8]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if labels[i] == 1 && labels[j] == 0 {
                den += 1.0;
                if scores[i] > scores[j] {
                    num += 1.0;
                } else if scores[i] == scores[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / den
}

/// Step-wise precision-recall sum over every distinct threshold.
pub fn ap_thresholds(scores: &[f64], labels: &[u8]) -> f64 {
    let total_pos = labels.iter().filter(|&&l| l == 1).count() as f64;
    let mut thresholds = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for t in thresholds {
        let selected = scores.iter().filter(|&&s| s >= t).count() as f64;
        let tp = scores
            .iter()
            .zip(labels)
            .filter(|(&s, &l)| s >= t && l == 1)
            .count() as f64;
        let recall = tp / total_pos;
        ap += (recall - prev_recall) * (tp / selected);
        prev_recall = recall;
    }
    ap
}

const CATEGORIES: [ServiceCategory; 4] = [
    ServiceCategory::Industry,
    ServiceCategory::Process,
    ServiceCategory::Material,
    ServiceCategory::Certification,
];

/// Random bipartite-plus-service-links graph whose service "Target" is
/// attached to roughly `positive_rate` of the manufacturers.
pub fn random_task(seed: u64) -> LabeledTask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(40..120);
    let s = rng.gen_range(6..20);
    let positive_rate = rng.gen_range(0.08..0.35);
    let mut nodes: Vec<Node> = (0..m)
        .map(|i| Node::manufacturer(format!("m{i}")))
        .collect();
    nodes.push(Node::service(ServiceCategory::Process, "Target"));
    for j in 0..s {
        nodes.push(Node::service(CATEGORIES[j % 4], format!("s{j}")));
    }
    let target = NodeId(m);
    let svc = |j: usize| NodeId(m + 1 + j);
    let mut edges = Vec::new();
    for i in 0..m {
        let deg = rng.gen_range(1..=4.min(s));
        let mut picked = BTreeSet::new();
        while picked.len() < deg {
            picked.insert(rng.gen_range(0..s));
        }
        edges.extend(picked.into_iter().map(|j| (NodeId(i), svc(j))));
        if rng.gen_bool(positive_rate) {
            edges.push((NodeId(i), target));
        }
    }
    // guarantee enough positives for a three-way split
    for i in 0..3 {
        edges.push((NodeId(i), target));
    }
    for _ in 0..rng.gen_range(0..s) {
        let (a, b) = (rng.gen_range(0..s), rng.gen_range(0..s));
        if a != b {
            edges.push((svc(a), svc(b)));
        }
    }
    if rng.gen_bool(0.5) {
        edges.push((svc(0), target));
    }
    let graph = Graph::new(nodes, edges).unwrap();
    mask_target(&graph, "Target").unwrap()
}

fn service_set(graph: &Graph, id: NodeId) -> BTreeSet<NodeId> {
    graph
        .neighbors(id)
        .iter()
        .copied()
        .filter(|&n| graph.kind(n).is_service())
        .collect()
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !($cond) {
            return Err(format!($($fmt)+));
        }
    };
}

/// Runs the structural checks of oversampling on `random_task(seed)`.
/// Returns whether oversampling happened at all.
pub fn check_seng_structure(seed: u64) -> Result<bool, String> {
    let task = random_task(seed);
    let split =
        stratified_split(&task.labels, SplitRatios::default(), seed).map_err(|e| e.to_string())?;
    let before =
        compute_imbalance(&task.labels, split.nodes_in(Split::Train)).map_err(|e| e.to_string())?;
    let os = [0.2, 0.4, 0.6, 0.8, 1.0, 1.2][seed as usize % 6];
    let config = SengConfig {
        oversampling_scale: os,
        seed,
        ..SengConfig::default()
    };
    let aug = oversample(&task, &split, &config).map_err(|e| e.to_string())?;
    let base = &task.graph;
    let g = &aug.graph;

    if before.imbalance_ratio > config.ratio_threshold {
        ensure!(
            aug.synthetic.is_empty() && g == base,
            "seed {seed}: oversampled above the threshold"
        );
        return Ok(false);
    }
    let expected = (os * before.minority_size as f64).round() as usize;
    ensure!(
        aug.synthetic.len() == expected,
        "seed {seed}: {} synthetic nodes, want {expected}",
        aug.synthetic.len()
    );
    ensure!(
        g.node_count() == base.node_count() + expected,
        "seed {seed}: node count"
    );
    ensure!(
        g.services().count() == base.services().count(),
        "seed {seed}: service count changed"
    );

    let minority: BTreeSet<NodeId> = split
        .nodes_in(Split::Train)
        .filter(|&i| task.labels[i.0] == before.minority_label)
        .collect();
    let mut synthetic_edges = 0;
    for rec in &aug.synthetic {
        ensure!(
            aug.is_synthetic(rec.node) && g.kind(rec.node).is_manufacturer(),
            "seed {seed}: bad synthetic id"
        );
        ensure!(
            config.alpha_choices.contains(&rec.alpha),
            "seed {seed}: alpha {}",
            rec.alpha
        );
        ensure!(
            rec.seed_manufacturers.len() == rec.alpha,
            "seed {seed}: seed count"
        );
        let mut pool = BTreeSet::new();
        for s in &rec.seed_manufacturers {
            ensure!(
                minority.contains(s),
                "seed {seed}: seed manufacturer {s} outside the training minority"
            );
            pool.extend(service_set(base, *s));
        }
        let attached: BTreeSet<NodeId> = g.neighbors(rec.node).iter().copied().collect();
        ensure!(
            attached.iter().all(|&n| g.kind(n).is_service()),
            "seed {seed}: non-bipartite synthetic edge"
        );
        ensure!(
            attached.is_subset(&pool),
            "seed {seed}: neighborhood subset violated"
        );
        ensure!(
            attached.len() == pool.len().div_ceil(rec.alpha),
            "seed {seed}: attached share"
        );
        ensure!(
            attached == rec.attached_services.iter().copied().collect(),
            "seed {seed}: audit record disagrees with graph"
        );
        ensure!(
            aug.labels[rec.node.0] == before.minority_label,
            "seed {seed}: synthetic label"
        );
        ensure!(
            aug.split.assignment[rec.node.0] == Split::Train,
            "seed {seed}: synthetic split"
        );
        synthetic_edges += attached.len();
    }
    ensure!(
        g.edge_count() == base.edge_count() + synthetic_edges,
        "seed {seed}: edge count"
    );
    ensure!(
        &aug.strip_synthetic() == base,
        "seed {seed}: base graph not restored"
    );

    let after = compute_imbalance(&aug.labels, aug.split.nodes_in(Split::Train))
        .map_err(|e| e.to_string())?;
    let (c2, c1) = (before.minority_size as f64, before.majority_size as f64);
    let post_minority = if after.minority_label == before.minority_label {
        after.minority_size
    } else {
        after.majority_size
    } as f64;
    let want = (1.0 + os) * c2 / c1;
    ensure!(
        (post_minority / c1 - want).abs() <= 0.5 / c1 + 1e-12,
        "seed {seed}: post ratio {} vs {want}",
        post_minority / c1
    );
    Ok(true)
}

mod common;

use capgraph::graph::{compute_imbalance, stratified_split, Split, SplitRatios};
use capgraph::seng::{oversample, SengConfig};
use common::{check_seng_structure, random_task};

#[test]
fn structural_properties_on_random_graphs() {
    let mut oversampled = 0;
    for seed in 0..50u64 {
        match check_seng_structure(seed) {
            Ok(true) => oversampled += 1,
            Ok(false) => {}
            Err(e) => panic!("{e}"),
        }
    }
    assert!(
        oversampled >= 40,
        "only {oversampled} graphs were oversampled"
    );
}

#[test]
fn literal_count_and_threshold_flags() {
    let task = random_task(7);
    let split = stratified_split(&task.labels, SplitRatios::default(), 7).unwrap();
    let stats = compute_imbalance(&task.labels, split.nodes_in(Split::Train)).unwrap();
    let literal = SengConfig {
        oversampling_scale: 0.5,
        literal_count: true,
        ..SengConfig::default()
    };
    let aug = oversample(&task, &split, &literal).unwrap();
    assert_eq!(
        aug.synthetic.len(),
        (1.5 * stats.minority_size as f64).round() as usize
    );

    let strict = SengConfig {
        ratio_threshold: stats.imbalance_ratio * 0.99,
        ..SengConfig::default()
    };
    assert!(oversample(&task, &split, &strict)
        .unwrap()
        .synthetic
        .is_empty());
    let at = SengConfig {
        ratio_threshold: stats.imbalance_ratio,
        ..SengConfig::default()
    };
    assert!(!oversample(&task, &split, &at).unwrap().synthetic.is_empty());

    let zero = SengConfig {
        oversampling_scale: 0.0,
        ..SengConfig::default()
    };
    assert!(oversample(&task, &split, &zero)
        .unwrap()
        .synthetic
        .is_empty());
}

#[test]
fn same_seed_same_augmentation() {
    let task = random_task(3);
    let split = stratified_split(&task.labels, SplitRatios::default(), 3).unwrap();
    let cfg = SengConfig {
        seed: 99,
        ..SengConfig::default()
    };
    let a = oversample(&task, &split, &cfg).unwrap();
    let b = oversample(&task, &split, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.audit_lines(), b.audit_lines());
    let c = oversample(&task, &split, &SengConfig { seed: 100, ..cfg }).unwrap();
    assert_ne!(a.synthetic, c.synthetic);
}

#[test]
fn invalid_configurations_rejected() {
    let task = random_task(1);
    let split = stratified_split(&task.labels, SplitRatios::default(), 1).unwrap();
    for cfg in [
        SengConfig {
            oversampling_scale: -0.1,
            ..SengConfig::default()
        },
        SengConfig {
            alpha_choices: vec![1, 2],
            ..SengConfig::default()
        },
        SengConfig {
            alpha_choices: vec![],
            ..SengConfig::default()
        },
        SengConfig {
            ratio_threshold: 0.0,
            ..SengConfig::default()
        },
    ] {
        assert!(oversample(&task, &split, &cfg).is_err(), "{cfg:?}");
    }
}

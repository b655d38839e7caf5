//! Shared fixtures: synthetic datasets written to disk plus ready configs.
//!
//! Not every test target uses every helper.
#![allow(dead_code)]
#![allow(clippy::too_many_arguments)]

use std::fs;
use std::path::{Path, PathBuf};

use gccl_cli::config::RunConfig;
use gccl_core::graph::SplitSpec;
use gccl_core::synth::{generate_sbm, SbmConfig};
use gccl_core::{eval, io};

pub struct Fixture {
    pub edges: PathBuf,
    pub features: PathBuf,
    pub labels: PathBuf,
    pub splits: Option<PathBuf>,
    pub n: usize,
    pub num_classes: usize,
}

/// Write a block-model dataset (edge list, binary features, labels and an
/// optional split file) under `dir`.
pub fn write_sbm_dataset(
    dir: &Path,
    block_sizes: &[usize],
    p_intra: f64,
    p_inter: f64,
    feature_dim: usize,
    feature_noise: f64,
    seed: u64,
    split: Option<(usize, usize, usize)>,
) -> Fixture {
    let sample = generate_sbm(
        &SbmConfig {
            block_sizes: block_sizes.to_vec(),
            p_intra,
            p_inter,
            feature_dim,
            feature_noise,
        },
        seed,
    );
    let edges = dir.join("edges.txt");
    let features = dir.join("features.bin");
    let labels = dir.join("labels.txt");
    io::write_edge_list(&edges, &sample.graph.edge_list()).unwrap();
    io::write_matrix_binary(&features, &sample.graph.features().view()).unwrap();
    io::write_labels(&labels, sample.labels.as_slice()).unwrap();
    let splits = split.map(|(per_class, n_valid, n_test)| {
        let spec: SplitSpec =
            eval::balanced_split(&sample.labels, per_class, n_valid, n_test, seed).unwrap();
        let path = dir.join("splits.json");
        io::write_splits(&path, &spec).unwrap();
        path
    });
    Fixture {
        edges,
        features,
        labels,
        splits,
        n: sample.graph.node_count(),
        num_classes: sample.labels.num_classes(),
    }
}

/// A small but complete run config over the fixture.
pub fn fixture_config(fx: &Fixture) -> RunConfig {
    let json = serde_json::json!({
        "data": {
            "edges": fx.edges,
            "features": fx.features,
            "labels": fx.labels,
        },
        "partition": { "m": 8, "seed": 0 },
        "encoder": { "d": 16 },
        "loss": { "variant": "linear_combination", "alpha": 0.6, "tau": 0.5, "p": 0.1 },
        "train": { "lr": 0.01, "epoch": 5, "distill_epoch": 40, "seed": 0 },
        "propagate": { "k_hop": 2 },
        "eval": {
            "task": "classify",
            "seeds": [0, 1],
            "probe_epochs": 150,
            "probe_lr": 0.05,
            "per_class_train": 5,
            "n_valid": 20,
            "n_test": 60
        }
    });
    let config: RunConfig = serde_json::from_value(json).unwrap();
    config.validate().unwrap();
    config
}

pub fn write_config(dir: &Path, config: &RunConfig) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}

//! Scaling benchmark: loss cost (kernelized vs brute force) and inference
//! cost (propagated vs distilled) on synthetic block-model graphs.

use std::time::Instant;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use gccl_core::distill::{final_representation, Activation, DistillMlp};
use gccl_core::loss::{loss_fast, loss_oracle, FeatureMapKind, LossConfig, Variant};
use gccl_core::partition::{coarsen, CoarsenNormalization, Partition};
use gccl_core::synth::{generate_sbm, SbmConfig};
use gccl_core::Result;

/// Benchmark knobs; the defaults mirror the large-scale training regime
/// (deep propagation, moderate feature width).
#[derive(Debug, Clone, Serialize)]
pub struct BenchParams {
    pub d: usize,
    pub m: usize,
    pub k_hop: usize,
    pub mean_degree: f64,
    pub repeats: usize,
    /// The brute-force loss is skipped above this node count.
    pub naive_cap: usize,
    pub seed: u64,
}

impl Default for BenchParams {
    fn default() -> Self {
        Self {
            d: 128,
            m: 64,
            k_hop: 10,
            mean_degree: 24.0,
            repeats: 5,
            naive_cap: 20_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchEntry {
    pub n: usize,
    pub edges: usize,
    pub fast_loss_ms: f64,
    pub naive_loss_ms: Option<f64>,
    pub gnn_infer_ms: f64,
    pub mlp_infer_ms: f64,
    /// Adjacency reads recorded during one distilled inference (must be 0).
    pub mlp_adjacency_reads: u64,
    pub train_mem_estimate_bytes: u64,
    pub infer_mem_estimate_bytes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub params: BenchParams,
    pub entries: Vec<BenchEntry>,
}

/// Median wall time of `repeats` runs after one warmup call, in
/// milliseconds. The warmup absorbs first-touch page faults; the median is
/// robust against cache-state outliers in both directions.
fn time_median<F: FnMut()>(repeats: usize, mut f: F) -> f64 {
    f();
    let mut times: Vec<f64> = (0..repeats.max(1))
        .map(|_| {
            let start = Instant::now();
            f();
            start.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times[times.len() / 2]
}

/// Time the loss paths and both inference paths at every grid size.
pub fn bench(params: &BenchParams, n_grid: &[usize]) -> Result<BenchReport> {
    let mut entries = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        entries.push(bench_at(params, n)?);
    }
    Ok(BenchReport {
        params: params.clone(),
        entries,
    })
}

fn bench_at(params: &BenchParams, n: usize) -> Result<BenchEntry> {
    let m = params.m.min(n);
    let block = n.div_ceil(m);
    let mut block_sizes = vec![block; m];
    let excess: usize = block * m - n;
    for s in block_sizes.iter_mut().take(excess) {
        *s -= 1;
    }
    // split the target mean degree: two thirds intra, one third inter
    let p_intra = (2.0 / 3.0 * params.mean_degree / (block as f64 - 1.0).max(1.0)).min(1.0);
    let p_inter = (1.0 / 3.0 * params.mean_degree / (n - block) as f64).min(1.0);
    let sample = generate_sbm(
        &SbmConfig {
            block_sizes: block_sizes.clone(),
            p_intra,
            p_inter,
            feature_dim: 64,
            feature_noise: 1.0,
        },
        params.seed,
    );
    let graph = sample.graph;

    // ground-truth blocks as the partition; benchmarking targets the loss
    // and inference, not the partitioner
    let partition = Partition::from_assignment(sample.labels.as_slice())?;
    let coarse = coarsen(&graph, &partition, CoarsenNormalization::Symmetric);

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 1);
    let d = params.d;
    let v = Array2::from_shape_fn((n, d), |_| rng.gen_range(-1.0..1.0));
    let c = Array2::from_shape_fn((m, d), |_| rng.gen_range(-1.0..1.0));
    let cfg = LossConfig {
        variant: Variant::LinearCombination,
        alpha: 0.5,
        tau: 0.5,
        feature_map: FeatureMapKind::Sigmoid,
        include_self_community: true,
        epsilon_clamp: 1e-12,
    };

    let fast_loss_ms = time_median(params.repeats, || {
        let _ = loss_fast(&v.view(), &c.view(), &partition, &coarse, &cfg).unwrap();
    });
    let naive_loss_ms = if n <= params.naive_cap {
        Some(time_median(params.repeats.min(2), || {
            let _ = loss_oracle(&v.view(), &c.view(), &partition, &coarse, &cfg).unwrap();
        }))
    } else {
        None
    };

    let h = graph.feature_dim();
    let w_g = Array2::from_shape_fn((h, d), |_| rng.gen_range(-0.1..0.1));
    let mlp = DistillMlp::init(d, d, d, params.seed ^ 2);
    let gnn_infer_ms = time_median(params.repeats, || {
        let _ = final_representation(&graph, &w_g.view(), None, params.k_hop, Activation::Relu)
            .unwrap();
    });
    graph.reset_adjacency_read_count();
    let mlp_infer_ms = time_median(params.repeats, || {
        let _ =
            final_representation(&graph, &w_g.view(), Some(&mlp), params.k_hop, Activation::Relu)
                .unwrap();
    });
    let mlp_adjacency_reads = graph.adjacency_read_count();

    let nnz = 2 * graph.edge_count() + n;
    let f = 8u64;
    let train_mem_estimate_bytes =
        f * (3 * n as u64 * d as u64 + (m * m) as u64 + (m * d) as u64 + nnz as u64 * 2);
    let infer_mem_estimate_bytes = f * (2 * n as u64 * d as u64 + nnz as u64 * 2);

    Ok(BenchEntry {
        n,
        edges: graph.edge_count(),
        fast_loss_ms,
        naive_loss_ms,
        gnn_infer_ms,
        mlp_infer_ms,
        mlp_adjacency_reads,
        train_mem_estimate_bytes,
        infer_mem_estimate_bytes,
    })
}

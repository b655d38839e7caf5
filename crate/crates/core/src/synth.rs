//! Synthetic stochastic block model graphs for tests and benchmarks.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{LabelVector, SparseGraph};

/// Stochastic block model parameters: one block per entry of `block_sizes`,
/// edge probability `p_intra` within a block and `p_inter` across blocks.
#[derive(Debug, Clone)]
pub struct SbmConfig {
    pub block_sizes: Vec<usize>,
    pub p_intra: f64,
    pub p_inter: f64,
    /// Feature dimension of the generated node features.
    pub feature_dim: usize,
    /// Noise-to-signal scale of the block-mean features; larger is harder.
    pub feature_noise: f64,
}

/// Sampled graph plus ground-truth block labels.
pub struct SbmSample {
    pub graph: SparseGraph,
    pub labels: LabelVector,
}

/// Sample an SBM graph with Gaussian block-mean features, deterministic per seed.
pub fn generate_sbm(cfg: &SbmConfig, seed: u64) -> SbmSample {
    let n: usize = cfg.block_sizes.iter().sum();
    let num_blocks = cfg.block_sizes.len();
    let mut block_of = Vec::with_capacity(n);
    let mut starts = Vec::with_capacity(num_blocks);
    let mut offset = 0;
    for (b, &size) in cfg.block_sizes.iter().enumerate() {
        starts.push(offset);
        for _ in 0..size {
            block_of.push(b);
        }
        offset += size;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    // upper-triangular pair regions, sampled by geometric gap skipping
    for bi in 0..num_blocks {
        for bj in bi..num_blocks {
            let p = if bi == bj { cfg.p_intra } else { cfg.p_inter };
            if p <= 0.0 {
                continue;
            }
            let (si, sj) = (cfg.block_sizes[bi], cfg.block_sizes[bj]);
            let total: u64 = if bi == bj {
                (si as u64) * (si as u64 - 1) / 2
            } else {
                (si as u64) * (sj as u64)
            };
            sample_pairs(&mut rng, total, p, |idx| {
                let (u, v) = if bi == bj {
                    let (a, b) = triangle_index(idx, si as u64);
                    (starts[bi] + a as usize, starts[bi] + b as usize)
                } else {
                    let a = idx / sj as u64;
                    let b = idx % sj as u64;
                    (starts[bi] + a as usize, starts[bj] + b as usize)
                };
                edges.push((u, v));
            });
        }
    }

    // block-mean features with isotropic noise
    let mut means = Array2::<f64>::zeros((num_blocks, cfg.feature_dim));
    for b in 0..num_blocks {
        for d in 0..cfg.feature_dim {
            means[[b, d]] = standard_normal(&mut rng);
        }
    }
    let mut features = Array2::<f64>::zeros((n, cfg.feature_dim));
    for v in 0..n {
        let b = block_of[v];
        for d in 0..cfg.feature_dim {
            features[[v, d]] = means[[b, d]] + cfg.feature_noise * standard_normal(&mut rng);
        }
    }

    let graph = SparseGraph::from_edges(n, &edges, features).expect("generated edges are valid");
    SbmSample {
        graph,
        labels: LabelVector::new(block_of, num_blocks).expect("labels in range"),
    }
}

/// Visit each index in `[0, total)` independently with probability `p`,
/// via geometric gap skipping (O(expected hits), not O(total)).
fn sample_pairs<R: Rng>(rng: &mut R, total: u64, p: f64, mut visit: impl FnMut(u64)) {
    if p >= 1.0 {
        for idx in 0..total {
            visit(idx);
        }
        return;
    }
    let log1mp = (1.0 - p).ln();
    let mut idx: u64 = 0;
    loop {
        let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let gap = (u.ln() / log1mp).floor() as u64;
        idx = match idx.checked_add(gap) {
            Some(i) => i,
            None => return,
        };
        if idx >= total {
            return;
        }
        visit(idx);
        idx += 1;
    }
}

/// Map a linear index into the strict upper triangle of an s x s block
/// to its (row, col) pair, row < col.
fn triangle_index(idx: u64, s: u64) -> (u64, u64) {
    // row r owns (s - 1 - r) pairs; scan rows (s is small relative to cost elsewhere)
    let mut remaining = idx;
    for r in 0..s {
        let row_pairs = s - 1 - r;
        if remaining < row_pairs {
            return (r, r + 1 + remaining);
        }
        remaining -= row_pairs;
    }
    unreachable!("triangle index out of range");
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

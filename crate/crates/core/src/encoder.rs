//! Stage-1 encoder: the two linear projections and the dropout-augmented
//! bi-level (node, community) feature pair.

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::partition::Partition;

/// The stage-1 trainables: node projection and community projection.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub w_g: Array2<f64>,
    pub w_p: Array2<f64>,
}

impl EncoderParams {
    pub fn input_dim(&self) -> usize {
        self.w_g.nrows()
    }

    pub fn node_dim(&self) -> usize {
        self.w_g.ncols()
    }

    pub fn community_dim(&self) -> usize {
        self.w_p.ncols()
    }
}

/// Inverted-dropout configuration; `probability < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropoutSpec {
    pub probability: f64,
    pub seed: u64,
}

/// Element-wise inverted dropout mask: entries are 0 (dropped) or
/// 1/(1-p) (kept), one Bernoulli draw per node per dimension.
pub type DropoutMask = Array2<f64>;

/// Node-level matrix, community-level matrix and the mask that produced it.
#[derive(Debug, Clone)]
pub struct BiLevelFeatures {
    pub node: Array2<f64>,
    pub community: Array2<f64>,
    pub mask: DropoutMask,
}

/// Glorot-uniform initialization of both projections, deterministic per seed.
pub fn init_params(h: usize, d_g: usize, d_p: usize, seed: u64) -> Result<EncoderParams> {
    if h == 0 || d_g == 0 || d_p == 0 {
        return Err(Error::Argument("dimensions must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w_g = glorot(h, d_g, &mut rng);
    let w_p = glorot(h, d_p, &mut rng);
    Ok(EncoderParams { w_g, w_p })
}

fn glorot<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-bound..bound))
}

/// Node-level features: plain projection, no activation, no dropout.
pub fn node_level_features(x: &ArrayView2<f64>, w_g: &ArrayView2<f64>) -> Result<Array2<f64>> {
    if x.ncols() != w_g.nrows() {
        return Err(Error::Argument(format!(
            "feature dim {} does not match projection rows {}",
            x.ncols(),
            w_g.nrows()
        )));
    }
    Ok(x.dot(w_g))
}

/// Draw a fresh inverted-dropout mask for an n x d matrix.
pub fn draw_mask<R: Rng>(n: usize, d: usize, p: f64, rng: &mut R) -> Result<DropoutMask> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Argument(format!(
            "dropout probability {p} must lie in [0, 1)"
        )));
    }
    if p == 0.0 {
        return Ok(Array2::ones((n, d)));
    }
    let keep_scale = 1.0 / (1.0 - p);
    Ok(Array2::from_shape_fn((n, d), |_| {
        if rng.gen::<f64>() < p {
            0.0
        } else {
            keep_scale
        }
    }))
}

/// Community-level features under a given mask:
/// c_j = sum_{t in P_j} w_t * (mask ⊙ (x_t W_P)).
pub fn community_level_features_with_mask(
    x: &ArrayView2<f64>,
    w_p: &ArrayView2<f64>,
    partition: &Partition,
    mask: &DropoutMask,
) -> Result<Array2<f64>> {
    if x.ncols() != w_p.nrows() {
        return Err(Error::Argument(format!(
            "feature dim {} does not match projection rows {}",
            x.ncols(),
            w_p.nrows()
        )));
    }
    let projected = x.dot(w_p);
    if mask.dim() != projected.dim() {
        return Err(Error::Argument(format!(
            "mask shape {:?} does not match projected shape {:?}",
            mask.dim(),
            projected.dim()
        )));
    }
    let dropped = &projected * mask;
    Ok(aggregate_rows(&dropped.view(), partition))
}

/// Weighted per-community row aggregation of an n x d matrix.
pub fn aggregate_rows(rows: &ArrayView2<f64>, partition: &Partition) -> Array2<f64> {
    let d = rows.ncols();
    let mut out = Array2::<f64>::zeros((partition.num_communities(), d));
    for c in 0..partition.num_communities() {
        let mut acc = out.row_mut(c);
        for &t in partition.members(c) {
            let w = partition.weight(t);
            acc.scaled_add(w, &rows.row(t));
        }
    }
    out
}

/// Community-level features with a freshly drawn mask; returns the mask so
/// the epoch's backward pass can reuse it.
pub fn community_level_features<R: Rng>(
    x: &ArrayView2<f64>,
    w_p: &ArrayView2<f64>,
    partition: &Partition,
    p: f64,
    rng: &mut R,
) -> Result<(Array2<f64>, DropoutMask)> {
    let mask = draw_mask(x.nrows(), w_p.ncols(), p, rng)?;
    let c = community_level_features_with_mask(x, w_p, partition, &mask)?;
    Ok((c, mask))
}

/// Both feature levels for one epoch.
pub fn bi_level_features<R: Rng>(
    x: &ArrayView2<f64>,
    params: &EncoderParams,
    partition: &Partition,
    p: f64,
    rng: &mut R,
) -> Result<BiLevelFeatures> {
    let node = node_level_features(x, &params.w_g.view())?;
    let (community, mask) = community_level_features(x, &params.w_p.view(), partition, p, rng)?;
    Ok(BiLevelFeatures {
        node,
        community,
        mask,
    })
}

/// Closed form for the expected number of feature dimensions whose dropout
/// mask alters the community aggregate: d_p * (1 - (1-p)^{|P_j|}).
pub fn substructure_count_expectation(d_p: usize, p: f64, community_size: usize) -> f64 {
    d_p as f64 * (1.0 - (1.0 - p).powi(community_size as i32))
}

/// Monte-Carlo companion of [`substructure_count_expectation`]: over `draws`
/// mask resamples, count dimensions that drop at least one member.
pub fn substructure_count_monte_carlo(
    d_p: usize,
    p: f64,
    community_size: usize,
    draws: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0u64;
    for _ in 0..draws {
        let mut altered = 0u64;
        for _ in 0..d_p {
            let mut any_dropped = false;
            for _ in 0..community_size {
                if rng.gen::<f64>() < p {
                    any_dropped = true;
                }
            }
            if any_dropped {
                altered += 1;
            }
        }
        total += altered;
    }
    total as f64 / draws as f64
}

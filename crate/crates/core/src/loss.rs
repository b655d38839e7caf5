//! The community contrastive loss: brute-force reference, linear-time
//! kernelized form, and analytical gradients for both projections.
//!
//! Per anchor node i in community j, the loss ratio is
//!   num / den with
//!   num = sum over connected communities k of A^P_jk * sum_{t in P_k} w_t * kB(i, t)
//!   den = sum over all communities k of sum_{t in P_k} w_t * kB(i, t)
//! where the bi-level kernel kB is either the product
//! kP(c_j, c_k) * phi(v_i) . phi(v_t) or the convex mix
//! alpha * phi(v_i) . phi(v_t) + (1 - alpha) * kP(c_j, c_k).
//! Factoring phi(v_i) out of both sums turns the quadratic pair sum into
//! per-community aggregates shared by every anchor.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rayon::prelude::*;

use crate::encoder::{DropoutMask, EncoderParams};
use crate::error::{Error, Result};
use crate::partition::{CoarsenedGraph, Partition};

/// Upper bound for the O(n^2) reference implementation.
const ORACLE_NODE_LIMIT: usize = 10_000;

/// Which kernel combination builds the bi-level kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    TensorProduct,
    LinearCombination,
}

/// Element-wise map whose inner product realizes the node-level kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMapKind {
    /// Bounded in (0, 1); keeps the shared denominator finite at any scale.
    Sigmoid,
    Relu,
    EluPlusOne,
}

impl FeatureMapKind {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            FeatureMapKind::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            FeatureMapKind::Relu => x.max(0.0),
            FeatureMapKind::EluPlusOne => {
                if x >= 0.0 {
                    x + 1.0
                } else {
                    x.exp()
                }
            }
        }
    }

    #[inline]
    fn derivative(self, x: f64) -> f64 {
        match self {
            FeatureMapKind::Sigmoid => {
                let s = 1.0 / (1.0 + (-x).exp());
                s * (1.0 - s)
            }
            FeatureMapKind::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            FeatureMapKind::EluPlusOne => {
                if x >= 0.0 {
                    1.0
                } else {
                    x.exp()
                }
            }
        }
    }
}

/// Loss configuration; `alpha` is meaningful for the linear combination only.
#[derive(Debug, Clone, PartialEq)]
pub struct LossConfig {
    pub variant: Variant,
    pub alpha: f64,
    pub tau: f64,
    pub feature_map: FeatureMapKind,
    /// Keep the coarse self-loop term in the positive set when A^P_jj > 0.
    pub include_self_community: bool,
    pub epsilon_clamp: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            variant: Variant::LinearCombination,
            alpha: 0.5,
            tau: 0.5,
            feature_map: FeatureMapKind::Sigmoid,
            include_self_community: true,
            epsilon_clamp: 1e-12,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.tau.is_finite() || self.tau <= 0.0 {
            return Err(Error::Argument(format!("tau {} must be positive", self.tau)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Argument(format!(
                "alpha {} must lie in [0, 1]",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Shared aggregates of one loss evaluation.
#[derive(Debug, Clone)]
pub struct LossAggregates {
    /// Mapped node features phi(V), n x d_g.
    pub phi_v: Array2<f64>,
    /// Per-community weighted sums of mapped features, m x d_g.
    pub community_sums: Array2<f64>,
    /// Global sum of the community sums, d_g.
    pub total_sum: Array1<f64>,
    /// Community kernel matrix on L2-normalized rows, m x m.
    pub kernel: Array2<f64>,
    /// Number of anchor numerators clamped to epsilon before the log.
    pub clamped_numerators: usize,
}

/// Gradients of the loss with respect to the two projections.
#[derive(Debug, Clone)]
pub struct LossGradients {
    pub d_w_g: Array2<f64>,
    pub d_w_p: Array2<f64>,
}

/// Apply the feature map element-wise.
pub fn feature_map(v: &ArrayView2<f64>, kind: FeatureMapKind) -> Array2<f64> {
    v.mapv(|x| kind.apply(x))
}

/// L2-normalize rows (zero rows stay zero) and exponentiate scaled cosines:
/// K[j,k] = exp(c_hat_j . c_hat_k / tau).
pub fn community_kernel(c: &ArrayView2<f64>, tau: f64) -> Result<Array2<f64>> {
    if !tau.is_finite() || tau <= 0.0 {
        return Err(Error::Argument(format!("tau {tau} must be positive")));
    }
    let (c_hat, _) = normalize_rows(c);
    Ok(kernel_from_normalized(&c_hat, tau))
}

fn normalize_rows(c: &ArrayView2<f64>) -> (Array2<f64>, Vec<f64>) {
    let mut c_hat = c.to_owned();
    let mut norms = Vec::with_capacity(c.nrows());
    for mut row in c_hat.rows_mut() {
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.mapv_inplace(|x| x / norm);
        }
        norms.push(norm);
    }
    (c_hat, norms)
}

fn kernel_from_normalized(c_hat: &Array2<f64>, tau: f64) -> Array2<f64> {
    let mut k = c_hat.dot(&c_hat.t());
    k.mapv_inplace(|x| (x / tau).exp());
    k
}

/// A^P with the positive-set mask applied: entries outside N(P_j) (and the
/// diagonal, when self-positives are excluded) are zeroed.
fn masked_coarse(ap: &Array2<f64>, include_self: bool) -> Array2<f64> {
    let mut masked = ap.clone();
    if !include_self {
        for j in 0..masked.nrows() {
            masked[[j, j]] = 0.0;
        }
    }
    masked
}

// ============================================================================
// Brute-force reference
// ============================================================================

/// Reference implementation: expands the full double sum over
/// (anchor, community-member) pairs. O(n^2 d); guarded at 10^4 nodes.
pub fn loss_oracle(
    v: &ArrayView2<f64>,
    c: &ArrayView2<f64>,
    partition: &Partition,
    coarse: &CoarsenedGraph,
    cfg: &LossConfig,
) -> Result<f64> {
    cfg.validate()?;
    let n = v.nrows();
    if n > ORACLE_NODE_LIMIT {
        return Err(Error::Argument(format!(
            "oracle is quadratic; refusing n = {n} > {ORACLE_NODE_LIMIT}"
        )));
    }
    let m = partition.num_communities();
    let ap = &coarse.matrix;

    // independent re-derivations of the map and the kernel
    let phi = v.mapv(|x| cfg.feature_map.apply(x));
    let mut c_hat = c.to_owned();
    for mut row in c_hat.rows_mut() {
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.mapv_inplace(|x| x / norm);
        }
    }
    let kernel_pair = |j: usize, k: usize| -> f64 {
        let dot: f64 = c_hat
            .row(j)
            .iter()
            .zip(c_hat.row(k).iter())
            .map(|(a, b)| a * b)
            .sum();
        (dot / cfg.tau).exp()
    };

    let (alpha, beta) = (cfg.alpha, 1.0 - cfg.alpha);
    let terms: Vec<Result<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let j = partition.community_of(i);
            let phi_i = phi.row(i);
            let mut num = 0.0;
            let mut den = 0.0;
            for k in 0..m {
                let kp = kernel_pair(j, k);
                let weight_jk = ap[[j, k]];
                let in_positive_set =
                    weight_jk != 0.0 && (cfg.include_self_community || k != j);
                for &t in partition.members(k) {
                    let w_t = partition.weight(t);
                    let pair_dot: f64 = phi_i
                        .iter()
                        .zip(phi.row(t).iter())
                        .map(|(a, b)| a * b)
                        .sum();
                    let kb = match cfg.variant {
                        Variant::TensorProduct => kp * pair_dot,
                        Variant::LinearCombination => alpha * pair_dot + beta * kp,
                    };
                    den += w_t * kb;
                    if in_positive_set {
                        num += weight_jk * w_t * kb;
                    }
                }
            }
            if num <= cfg.epsilon_clamp {
                return Err(Error::DegeneratePositiveSet(format!(
                    "node {i} has numerator {num} <= {}",
                    cfg.epsilon_clamp
                )));
            }
            Ok(num.ln() - den.max(cfg.epsilon_clamp).ln())
        })
        .collect();

    let mut acc = 0.0;
    for t in terms {
        acc += t?;
    }
    Ok(-acc / n as f64)
}

// ============================================================================
// Linear-time path
// ============================================================================

struct Forward {
    value: f64,
    num: Vec<f64>,
    den: Vec<f64>,
    num_clamped: Vec<bool>,
    den_clamped: Vec<bool>,
    phi: Array2<f64>,
    community_sums: Array2<f64>,
    total_sum: Array1<f64>,
    kernel: Array2<f64>,
    c_hat: Array2<f64>,
    c_norms: Vec<f64>,
    masked_ap: Array2<f64>,
    // tensor product brackets (m x d_g)
    bracket_num: Option<Array2<f64>>,
    bracket_den: Option<Array2<f64>>,
    // linear combination aggregate
    node_num: Option<Array2<f64>>, // m x d_g: masked A^P . S
    clamped: usize,
}

fn forward_fast(
    v: &ArrayView2<f64>,
    c: &ArrayView2<f64>,
    partition: &Partition,
    coarse: &CoarsenedGraph,
    cfg: &LossConfig,
) -> Result<Forward> {
    cfg.validate()?;
    let n = v.nrows();
    let m = partition.num_communities();
    if c.nrows() != m {
        return Err(Error::Argument(format!(
            "community features have {} rows, partition has {m} communities",
            c.nrows()
        )));
    }
    if partition.num_nodes() != n {
        return Err(Error::Argument(format!(
            "node features have {n} rows, partition covers {} nodes",
            partition.num_nodes()
        )));
    }
    let ap = &coarse.matrix;

    let phi = feature_map(v, cfg.feature_map);
    let (c_hat, c_norms) = normalize_rows(c);
    let kernel = kernel_from_normalized(&c_hat, cfg.tau);
    let masked_ap = masked_coarse(ap, cfg.include_self_community);

    // s_k = sum_{t in P_k} w_t phi(v_t), computed once per community
    let d_g = phi.ncols();
    let mut community_sums = Array2::<f64>::zeros((m, d_g));
    community_sums
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(k, mut row)| {
            for &t in partition.members(k) {
                row.scaled_add(partition.weight(t), &phi.row(t));
            }
        });
    let total_sum = community_sums.sum_axis(Axis(0));

    let (alpha, beta) = (cfg.alpha, 1.0 - cfg.alpha);
    let mut bracket_num = None;
    let mut bracket_den = None;
    let mut node_num = None;
    let mut scalar_num = None;
    let mut scalar_den = None;
    match cfg.variant {
        Variant::TensorProduct => {
            bracket_num = Some((&masked_ap * &kernel).dot(&community_sums));
            bracket_den = Some(kernel.dot(&community_sums));
        }
        Variant::LinearCombination => {
            let wc = Array1::from(partition.community_weight_sums());
            node_num = Some(masked_ap.dot(&community_sums));
            scalar_num = Some((&masked_ap * &kernel).dot(&wc));
            scalar_den = Some(kernel.dot(&wc));
        }
    }

    let phi_std = phi.as_standard_layout();
    let phi_slice = phi_std.as_slice().expect("standard layout");
    let ratios: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let j = partition.community_of(i);
            let phi_i = &phi_slice[i * d_g..(i + 1) * d_g];
            match cfg.variant {
                Variant::TensorProduct => {
                    let bn = bracket_num.as_ref().unwrap();
                    let bd = bracket_den.as_ref().unwrap();
                    (
                        dot_slice(phi_i, bn.row(j).as_slice().unwrap()),
                        dot_slice(phi_i, bd.row(j).as_slice().unwrap()),
                    )
                }
                Variant::LinearCombination => {
                    let mut num = 0.0;
                    let mut den = 0.0;
                    if alpha != 0.0 {
                        let an = node_num.as_ref().unwrap();
                        num += alpha * dot_slice(phi_i, an.row(j).as_slice().unwrap());
                        den += alpha * dot_slice(phi_i, total_sum.as_slice().unwrap());
                    }
                    if beta != 0.0 {
                        num += beta * scalar_num.as_ref().unwrap()[j];
                        den += beta * scalar_den.as_ref().unwrap()[j];
                    }
                    (num, den)
                }
            }
        })
        .collect();

    let mut num = Vec::with_capacity(n);
    let mut den = Vec::with_capacity(n);
    let mut num_clamped = vec![false; n];
    let mut den_clamped = vec![false; n];
    let mut clamped = 0usize;
    let mut acc = 0.0;
    for (i, &(raw_num, raw_den)) in ratios.iter().enumerate() {
        let mut ni = raw_num;
        if ni <= cfg.epsilon_clamp {
            ni = cfg.epsilon_clamp;
            num_clamped[i] = true;
            clamped += 1;
        }
        let mut di = raw_den;
        if di <= cfg.epsilon_clamp {
            di = cfg.epsilon_clamp;
            den_clamped[i] = true;
        }
        acc += ni.ln() - di.ln();
        num.push(ni);
        den.push(di);
    }
    let value = -acc / n as f64;

    Ok(Forward {
        value,
        num,
        den,
        num_clamped,
        den_clamped,
        phi,
        community_sums,
        total_sum,
        kernel,
        c_hat,
        c_norms,
        masked_ap,
        bracket_num,
        bracket_den,
        node_num,
        clamped,
    })
}

#[inline]
fn dot_slice(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Linear-time loss via shared per-community aggregates.
pub fn loss_fast(
    v: &ArrayView2<f64>,
    c: &ArrayView2<f64>,
    partition: &Partition,
    coarse: &CoarsenedGraph,
    cfg: &LossConfig,
) -> Result<(f64, LossAggregates)> {
    let fwd = forward_fast(v, c, partition, coarse, cfg)?;
    Ok((
        fwd.value,
        LossAggregates {
            phi_v: fwd.phi,
            community_sums: fwd.community_sums,
            total_sum: fwd.total_sum,
            kernel: fwd.kernel,
            clamped_numerators: fwd.clamped,
        },
    ))
}

/// Fast-path loss and exact gradients of it with respect to both
/// projections, chaining through the feature map, the kernel's row
/// normalization, and the masked community aggregation.
pub fn loss_and_grad(
    x: &ArrayView2<f64>,
    params: &EncoderParams,
    partition: &Partition,
    coarse: &CoarsenedGraph,
    cfg: &LossConfig,
    mask: &DropoutMask,
) -> Result<(f64, LossGradients)> {
    let n = x.nrows();
    let (d_g, d_p) = (params.node_dim(), params.community_dim());
    if mask.dim() != (n, d_p) {
        return Err(Error::Argument(format!(
            "mask shape {:?} does not match ({n}, {d_p})",
            mask.dim()
        )));
    }
    let v = x.dot(&params.w_g);
    let projected = x.dot(&params.w_p);
    let dropped = &projected * mask;
    let c = crate::encoder::aggregate_rows(&dropped.view(), partition);

    let fwd = forward_fast(&v.view(), &c.view(), partition, coarse, cfg)?;
    let m = partition.num_communities();
    let (alpha, beta) = (cfg.alpha, 1.0 - cfg.alpha);

    // adjoints of the per-anchor numerator and denominator
    let inv_n = 1.0 / n as f64;
    let nbar: Vec<f64> = (0..n)
        .map(|i| {
            if fwd.num_clamped[i] {
                0.0
            } else {
                -inv_n / fwd.num[i]
            }
        })
        .collect();
    let dbar: Vec<f64> = (0..n)
        .map(|i| {
            if fwd.den_clamped[i] {
                0.0
            } else {
                inv_n / fwd.den[i]
            }
        })
        .collect();

    // per-community adjoint aggregates over member anchors
    let mut num_adjoint = Array2::<f64>::zeros((m, d_g)); // sum nbar_i phi_i
    let mut den_adjoint = Array2::<f64>::zeros((m, d_g)); // sum dbar_i phi_i
    let mut num_adjoint_scalar = vec![0.0; m];
    let mut den_adjoint_scalar = vec![0.0; m];
    for j in 0..m {
        let mut na = num_adjoint.row_mut(j);
        for &i in partition.members(j) {
            na.scaled_add(nbar[i], &fwd.phi.row(i));
            num_adjoint_scalar[j] += nbar[i];
        }
        let mut da = den_adjoint.row_mut(j);
        for &i in partition.members(j) {
            da.scaled_add(dbar[i], &fwd.phi.row(i));
            den_adjoint_scalar[j] += dbar[i];
        }
    }

    // gradient into the community sums s_k, and into the kernel matrix
    let (s_adjoint, kernel_adjoint): (Array2<f64>, Array2<f64>) = match cfg.variant {
        Variant::TensorProduct => {
            let weighted = &fwd.masked_ap * &fwd.kernel; // m x m
            let s_adj = weighted.t().dot(&num_adjoint) + fwd.kernel.t().dot(&den_adjoint);
            let k_adj = &fwd.masked_ap * &num_adjoint.dot(&fwd.community_sums.t())
                + den_adjoint.dot(&fwd.community_sums.t());
            (s_adj, k_adj)
        }
        Variant::LinearCombination => {
            let mut s_adj = fwd.masked_ap.t().dot(&num_adjoint);
            let dsum = den_adjoint.sum_axis(Axis(0));
            for mut row in s_adj.rows_mut() {
                row += &dsum;
            }
            s_adj.mapv_inplace(|x| x * alpha);
            let wc = Array1::from(partition.community_weight_sums());
            let mut k_adj = Array2::<f64>::zeros((m, m));
            for j in 0..m {
                for k in 0..m {
                    k_adj[[j, k]] = beta
                        * wc[k]
                        * (fwd.masked_ap[[j, k]] * num_adjoint_scalar[j]
                            + den_adjoint_scalar[j]);
                }
            }
            (s_adj, k_adj)
        }
    };

    // gradient into phi: direct anchor terms plus the shared-sum term
    let mut phi_adjoint = Array2::<f64>::zeros((n, d_g));
    phi_adjoint
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            let j = partition.community_of(i);
            match cfg.variant {
                Variant::TensorProduct => {
                    row.scaled_add(nbar[i], &fwd.bracket_num.as_ref().unwrap().row(j));
                    row.scaled_add(dbar[i], &fwd.bracket_den.as_ref().unwrap().row(j));
                }
                Variant::LinearCombination => {
                    if alpha != 0.0 {
                        row.scaled_add(
                            alpha * nbar[i],
                            &fwd.node_num.as_ref().unwrap().row(j),
                        );
                        row.scaled_add(alpha * dbar[i], &fwd.total_sum.view());
                    }
                }
            }
            row.scaled_add(partition.weight(i), &s_adjoint.row(j));
        });

    // through the feature map and the node projection
    let mut v_adjoint = phi_adjoint;
    v_adjoint.zip_mut_with(&v, |g, &pre| *g *= cfg.feature_map.derivative(pre));
    let d_w_g = x.t().dot(&v_adjoint);

    // through the kernel, the row normalization, and the masked aggregation
    let mut mixed = &kernel_adjoint * &fwd.kernel;
    mixed += &(&kernel_adjoint * &fwd.kernel).t().to_owned();
    let c_hat_adjoint = mixed.dot(&fwd.c_hat) / cfg.tau;
    let mut c_adjoint = Array2::<f64>::zeros((m, d_p));
    for j in 0..m {
        let norm = fwd.c_norms[j];
        if norm > 0.0 {
            let gh = c_hat_adjoint.row(j);
            let ch = fwd.c_hat.row(j);
            let radial: f64 = gh.iter().zip(ch.iter()).map(|(a, b)| a * b).sum();
            let mut row = c_adjoint.row_mut(j);
            row.assign(&gh);
            row.scaled_add(-radial, &ch);
            row.mapv_inplace(|g| g / norm);
        }
    }
    let mut dropped_adjoint = Array2::<f64>::zeros((n, d_p));
    dropped_adjoint
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(t, mut row)| {
            row.scaled_add(partition.weight(t), &c_adjoint.row(partition.community_of(t)));
        });
    let projected_adjoint = &dropped_adjoint * mask;
    let d_w_p = x.t().dot(&projected_adjoint);

    if !fwd.value.is_finite() {
        return Err(Error::Numerical(format!(
            "loss value is not finite ({})",
            fwd.value
        )));
    }
    for (name, grad) in [("d_w_g", &d_w_g), ("d_w_p", &d_w_p)] {
        if grad.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical(format!(
                "{name} contains non-finite entries"
            )));
        }
    }

    Ok((fwd.value, LossGradients { d_w_g, d_w_p }))
}

//! Two-stage training: contrastive encoder training, then distillation of
//! the propagated representations into the MLP. One Adam optimizer drives
//! both stages; everything is deterministic given (data, config, seed).

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::distill::{distill_loss_and_grad, DistillMlp};
use crate::encoder::{self, EncoderParams};
use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::loss::{loss_and_grad, LossConfig};
use crate::partition::{CoarsenedGraph, Partition};
use crate::sparse::k_hop_mean;

/// Bias-corrected Adam over a fixed set of parameter tensors.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    step: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(sizes: &[usize], lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
            step: 0,
            first_moment: sizes.iter().map(|&s| vec![0.0; s]).collect(),
            second_moment: sizes.iter().map(|&s| vec![0.0; s]).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update over all tensors. Gradients must be finite.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        assert_eq!(params.len(), self.first_moment.len());
        assert_eq!(grads.len(), params.len());
        for (idx, grad) in grads.iter().enumerate() {
            if let Some(pos) = grad.iter().position(|g| !g.is_finite()) {
                return Err(Error::Numerical(format!(
                    "non-finite gradient in tensor {idx} at flat index {pos}"
                )));
            }
        }
        self.step += 1;
        let bias1 = 1.0 - self.beta1.powi(self.step as i32);
        let bias2 = 1.0 - self.beta2.powi(self.step as i32);
        for ((param, grad), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first_moment.iter_mut().zip(&mut self.second_moment))
        {
            assert_eq!(param.len(), m.len(), "parameter/moment size mismatch");
            for i in 0..param.len() {
                let g = grad[i] + self.weight_decay * param[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
                let m_hat = m[i] / bias1;
                let v_hat = v[i] / bias2;
                param[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

/// Epochs, learning rate, seed and the nested loss/dropout settings.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// Contrastive epochs T^g.
    pub encoder_epochs: usize,
    /// Distillation epochs T^d.
    pub distill_epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub loss: LossConfig,
    pub dropout_p: f64,
    /// Propagation depth K for the distillation target.
    pub k_hops: usize,
    pub weight_decay: f64,
    pub d_g: usize,
    pub d_p: usize,
    pub d_hidden: Option<usize>,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.encoder_epochs == 0 || self.distill_epochs == 0 {
            return Err(Error::Argument("epoch counts must be >= 1".into()));
        }
        if !self.lr.is_finite() || self.lr <= 0.0 {
            return Err(Error::Argument(format!(
                "learning rate {} must be positive",
                self.lr
            )));
        }
        if self.k_hops == 0 {
            return Err(Error::Argument("k_hops must be >= 1".into()));
        }
        self.loss.validate()
    }
}

/// Per-epoch record of the training trace.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EpochStat {
    pub epoch: usize,
    pub loss: f64,
    pub wall_ms: f64,
}

const MASK_STREAM_SALT: u64 = 0x6d61_736b_7374_7265; // distinct rng stream for masks

/// Stage 1: per epoch, resample the dropout mask, build bi-level features,
/// take one full-batch Adam step on the contrastive loss.
pub fn train_stage1(
    graph: &SparseGraph,
    partition: &Partition,
    coarse: &CoarsenedGraph,
    cfg: &TrainConfig,
) -> Result<(EncoderParams, Vec<EpochStat>)> {
    cfg.validate()?;
    let h = graph.feature_dim();
    let mut params = encoder::init_params(h, cfg.d_g, cfg.d_p, cfg.seed)?;
    let mut mask_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ MASK_STREAM_SALT);
    let mut adam = AdamState::new(&[h * cfg.d_g, h * cfg.d_p], cfg.lr);
    adam.weight_decay = cfg.weight_decay;
    let x = graph.features().view();
    let mut trace = Vec::with_capacity(cfg.encoder_epochs);
    for epoch in 1..=cfg.encoder_epochs {
        let start = std::time::Instant::now();
        let mask = encoder::draw_mask(graph.node_count(), cfg.d_p, cfg.dropout_p, &mut mask_rng)?;
        let (value, grads) = loss_and_grad(&x, &params, partition, coarse, &cfg.loss, &mask)?;
        {
            let (w_g_slice, w_p_slice) = (
                params.w_g.as_slice_mut().expect("standard layout"),
                params.w_p.as_slice_mut().expect("standard layout"),
            );
            adam.step(
                &mut [w_g_slice, w_p_slice],
                &[
                    grads.d_w_g.as_standard_layout().as_slice().unwrap(),
                    grads.d_w_p.as_standard_layout().as_slice().unwrap(),
                ],
            )?;
        }
        trace.push(EpochStat {
            epoch,
            loss: value,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok((params, trace))
}

/// Stage 2: freeze the propagation target once, then regress the MLP onto it
/// with full-batch Adam steps.
pub fn train_stage2(
    graph: &SparseGraph,
    w_g: &Array2<f64>,
    cfg: &TrainConfig,
) -> Result<(DistillMlp, Vec<EpochStat>)> {
    cfg.validate()?;
    let v = graph.features().dot(w_g);
    let adj = graph.normalized_adjacency();
    let target = k_hop_mean(&adj, &v.view(), cfg.k_hops)?;
    train_stage2_on_target(&v, &target, cfg)
}

/// Distillation loop against an already-computed target (the target is
/// frozen; recomputation never happens inside the loop).
pub fn train_stage2_on_target(
    v: &Array2<f64>,
    target: &Array2<f64>,
    cfg: &TrainConfig,
) -> Result<(DistillMlp, Vec<EpochStat>)> {
    let d_g = v.ncols();
    let d_hidden = cfg.d_hidden.unwrap_or(d_g);
    let mut mlp = DistillMlp::init(d_g, d_hidden, target.ncols(), cfg.seed);
    let mut adam = AdamState::new(
        &[
            d_g * d_hidden,
            d_hidden,
            d_hidden * target.ncols(),
            target.ncols(),
        ],
        cfg.lr,
    );
    adam.weight_decay = cfg.weight_decay;
    let mut trace = Vec::with_capacity(cfg.distill_epochs);
    for epoch in 1..=cfg.distill_epochs {
        let start = std::time::Instant::now();
        let (value, grads) = distill_loss_and_grad(&mlp, &v.view(), &target.view())?;
        {
            let DistillMlp { w1, b1, w2, b2 } = &mut mlp;
            adam.step(
                &mut [
                    w1.as_slice_mut().unwrap(),
                    b1.as_slice_mut().unwrap(),
                    w2.as_slice_mut().unwrap(),
                    b2.as_slice_mut().unwrap(),
                ],
                &[
                    grads.d_w1.as_standard_layout().as_slice().unwrap(),
                    grads.d_b1.as_slice().unwrap(),
                    grads.d_w2.as_standard_layout().as_slice().unwrap(),
                    grads.d_b2.as_slice().unwrap(),
                ],
            )?;
        }
        trace.push(EpochStat {
            epoch,
            loss: value,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok((mlp, trace))
}

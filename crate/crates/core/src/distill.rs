//! Decoupled propagation, the distillation MLP, and final-representation
//! assembly for both inference paths.
//!
//! The propagated path reads the adjacency; the distilled path is pure
//! per-node compute over X, W_G and the MLP parameters.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::sparse::k_hop_mean;

/// Two-layer perceptron with relu hidden activation; output dimension
/// matches the propagation target's.
#[derive(Debug, Clone, PartialEq)]
pub struct DistillMlp {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

impl DistillMlp {
    /// Glorot weights and zero biases, deterministic per seed.
    pub fn init(d_in: usize, d_hidden: usize, d_out: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let glorot = |rows: usize, cols: usize, rng: &mut ChaCha8Rng| {
            let bound = (6.0 / (rows + cols) as f64).sqrt();
            Array2::from_shape_fn((rows, cols), |_| {
                rand::Rng::gen_range(rng, -bound..bound)
            })
        };
        Self {
            w1: glorot(d_in, d_hidden, &mut rng),
            b1: Array1::zeros(d_hidden),
            w2: glorot(d_hidden, d_out, &mut rng),
            b2: Array1::zeros(d_out),
        }
    }

    pub fn zeros(d_in: usize, d_hidden: usize, d_out: usize) -> Self {
        Self {
            w1: Array2::zeros((d_in, d_hidden)),
            b1: Array1::zeros(d_hidden),
            w2: Array2::zeros((d_hidden, d_out)),
            b2: Array1::zeros(d_out),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.nrows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.w2.ncols()
    }
}

/// Gradients for every MLP parameter.
#[derive(Debug, Clone)]
pub struct MlpGradients {
    pub d_w1: Array2<f64>,
    pub d_b1: Array1<f64>,
    pub d_w2: Array2<f64>,
    pub d_b2: Array1<f64>,
}

/// Final output activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
    /// Leaky slope 0.25 on the negative side.
    Prelu,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::Prelu => {
                if x >= 0.0 {
                    x
                } else {
                    0.25 * x
                }
            }
        }
    }
}

/// Which path produced a final representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepresentationSource {
    GnnPropagated,
    Distilled,
}

/// Final node representations plus the path that produced them.
#[derive(Debug, Clone)]
pub struct FinalRepresentation {
    pub z_star: Array2<f64>,
    pub source: RepresentationSource,
}

/// Distillation target: mean of the first K propagation steps of X W_G.
pub fn propagation_target(g: &SparseGraph, w_g: &ArrayView2<f64>, k_hops: usize) -> Result<Array2<f64>> {
    let v = g.features().dot(w_g);
    let adj = g.normalized_adjacency();
    k_hop_mean(&adj, &v.view(), k_hops)
}

/// relu(V W1 + b1) W2 + b2.
pub fn mlp_forward(mlp: &DistillMlp, v: &ArrayView2<f64>) -> Result<Array2<f64>> {
    if v.ncols() != mlp.input_dim() {
        return Err(Error::Argument(format!(
            "input dim {} does not match MLP input {}",
            v.ncols(),
            mlp.input_dim()
        )));
    }
    let mut hidden = v.dot(&mlp.w1);
    hidden += &mlp.b1;
    hidden.mapv_inplace(|x| x.max(0.0));
    let mut out = hidden.dot(&mlp.w2);
    out += &mlp.b2;
    Ok(out)
}

/// Squared Frobenius distance between the MLP output and the target
/// (unnormalized), with exact gradients for every parameter.
pub fn distill_loss_and_grad(
    mlp: &DistillMlp,
    v: &ArrayView2<f64>,
    target: &ArrayView2<f64>,
) -> Result<(f64, MlpGradients)> {
    if v.ncols() != mlp.input_dim() {
        return Err(Error::Argument(format!(
            "input dim {} does not match MLP input {}",
            v.ncols(),
            mlp.input_dim()
        )));
    }
    if target.dim() != (v.nrows(), mlp.output_dim()) {
        return Err(Error::Argument(format!(
            "target shape {:?} does not match ({}, {})",
            target.dim(),
            v.nrows(),
            mlp.output_dim()
        )));
    }
    let mut pre = v.dot(&mlp.w1);
    pre += &mlp.b1;
    let hidden = pre.mapv(|x| x.max(0.0));
    let mut out = hidden.dot(&mlp.w2);
    out += &mlp.b2;

    let residual = &out - target;
    let loss = residual.iter().map(|r| r * r).sum::<f64>();

    let d_out = residual.mapv(|r| 2.0 * r);
    let d_w2 = hidden.t().dot(&d_out);
    let d_b2 = d_out.sum_axis(Axis(0));
    let mut d_hidden = d_out.dot(&mlp.w2.t());
    d_hidden.zip_mut_with(&pre, |g, &p| {
        if p <= 0.0 {
            *g = 0.0;
        }
    });
    let d_w1 = v.t().dot(&d_hidden);
    let d_b1 = d_hidden.sum_axis(Axis(0));

    Ok((
        loss,
        MlpGradients {
            d_w1,
            d_b1,
            d_w2,
            d_b2,
        },
    ))
}

/// Assemble Z*: `sigma(X W_G + MLP(X W_G))` on the distilled path (no
/// adjacency reads), or `sigma(X W_G + k-hop mean)` on the propagated path.
pub fn final_representation(
    g: &SparseGraph,
    w_g: &ArrayView2<f64>,
    mlp: Option<&DistillMlp>,
    k_hops: usize,
    activation: Activation,
) -> Result<FinalRepresentation> {
    let v = g.features().dot(w_g);
    let (mut z, source) = match mlp {
        Some(mlp) => {
            let out = mlp_forward(mlp, &v.view())?;
            (v + out, RepresentationSource::Distilled)
        }
        None => {
            let adj = g.normalized_adjacency();
            let propagated = k_hop_mean(&adj, &v.view(), k_hops)?;
            (v + propagated, RepresentationSource::GnnPropagated)
        }
    };
    z.mapv_inplace(|x| activation.apply(x));
    Ok(FinalRepresentation { z_star: z, source })
}

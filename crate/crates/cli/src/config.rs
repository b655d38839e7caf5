//! Run configuration: one JSON document mirroring the hyperparameter table
//! (lr, epoch, partition rate, k_hop, d, alpha, p, tau), plus data paths.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use gccl_core::distill::Activation;
use gccl_core::loss::{FeatureMapKind, LossConfig, Variant};
use gccl_core::partition::{CoarsenNormalization, WeightMode};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub edges: PathBuf,
    pub features: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splits: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionConfig {
    /// Explicit community count; exclusive with `rate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Partition rate: m = max(1, round(rate * n)).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_normalization")]
    pub normalization: CoarsenNormalization,
    #[serde(default = "default_weights")]
    pub weights: WeightMode,
    /// External partition file; overrides the built-in partitioner.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

fn default_normalization() -> CoarsenNormalization {
    CoarsenNormalization::Symmetric
}

fn default_weights() -> WeightMode {
    WeightMode::Mean
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderConfig {
    /// Shared embedding dimension (sets both levels).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_g: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_p: Option<usize>,
}

impl EncoderConfig {
    pub fn node_dim(&self) -> usize {
        self.d_g.or(self.d).unwrap_or(0)
    }

    pub fn community_dim(&self) -> usize {
        self.d_p.or(self.d).unwrap_or(0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSection {
    pub variant: Variant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub tau: f64,
    #[serde(default = "default_feature_map")]
    pub feature_map: FeatureMapKind,
    /// Dropout probability for the community-level features.
    pub p: f64,
    #[serde(default = "default_true")]
    pub include_self_community: bool,
    #[serde(default = "default_clamp")]
    pub epsilon_clamp: f64,
}

fn default_feature_map() -> FeatureMapKind {
    FeatureMapKind::Sigmoid
}

fn default_true() -> bool {
    true
}

fn default_clamp() -> f64 {
    1e-12
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub lr: f64,
    /// Contrastive training epochs T^g.
    pub epoch: usize,
    /// Distillation epochs T^d.
    #[serde(default = "default_distill_epoch")]
    pub distill_epoch: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub weight_decay: f64,
    /// Hidden width of the distillation MLP; defaults to d_g.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_hidden: Option<usize>,
}

fn default_distill_epoch() -> usize {
    300
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagateSection {
    pub k_hop: usize,
    #[serde(default = "default_sigma")]
    pub sigma: Activation,
}

fn default_sigma() -> Activation {
    Activation::Relu
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalTask {
    Classify,
    Cluster,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub task: EvalTask,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_probe_epochs")]
    pub probe_epochs: usize,
    #[serde(default = "default_probe_lr")]
    pub probe_lr: f64,
    /// Per-class train nodes when splits are generated rather than loaded.
    #[serde(default = "default_per_class")]
    pub per_class_train: usize,
    #[serde(default = "default_n_valid")]
    pub n_valid: usize,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

fn default_probe_epochs() -> usize {
    300
}

fn default_probe_lr() -> f64 {
    0.01
}

fn default_per_class() -> usize {
    20
}

fn default_n_valid() -> usize {
    500
}

fn default_n_test() -> usize {
    1000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub partition: PartitionConfig,
    pub encoder: EncoderConfig,
    pub loss: LossSection,
    pub train: TrainSection,
    pub propagate: PropagateSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval: Option<EvalSection>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let c = |msg: String| Err(CliError::Config(msg));
        for (name, path, required) in [
            ("data.edges", Some(&self.data.edges), true),
            ("data.features", Some(&self.data.features), true),
            ("data.labels", self.data.labels.as_ref(), false),
            ("data.splits", self.data.splits.as_ref(), false),
            ("partition.path", self.partition.path.as_ref(), false),
        ] {
            if let Some(path) = path {
                if !path.exists() {
                    return c(format!("{name}: file {} does not exist", path.display()));
                }
            } else if required {
                return c(format!("{name} is required"));
            }
        }
        if self.partition.path.is_none() {
            match (self.partition.m, self.partition.rate) {
                (None, None) => {
                    return c("partition needs m, rate, or an external path".into())
                }
                (Some(_), Some(_)) => {
                    return c("partition.m and partition.rate are mutually exclusive".into())
                }
                (Some(0), _) => return c("partition.m must be >= 1".into()),
                (_, Some(r)) if !r.is_finite() || r <= 0.0 => {
                    return c("partition.rate must be positive".into())
                }
                _ => {}
            }
        }
        if self.encoder.node_dim() == 0 || self.encoder.community_dim() == 0 {
            return c("encoder needs d, or both d_g and d_p".into());
        }
        match (self.loss.variant, self.loss.alpha) {
            (Variant::TensorProduct, Some(_)) => {
                return c("loss.alpha is not accepted under the tensor_product variant".into())
            }
            (Variant::LinearCombination, None) => {
                return c("loss.alpha is required for the linear_combination variant".into())
            }
            (Variant::LinearCombination, Some(a)) if !(0.0..=1.0).contains(&a) => {
                return c(format!("loss.alpha {a} must lie in [0, 1]"))
            }
            _ => {}
        }
        if !self.loss.tau.is_finite() || self.loss.tau <= 0.0 {
            return c(format!("loss.tau {} must be positive", self.loss.tau));
        }
        if !(0.0..1.0).contains(&self.loss.p) {
            return c(format!("loss.p {} must lie in [0, 1)", self.loss.p));
        }
        if self.train.epoch == 0 || self.train.distill_epoch == 0 {
            return c("train.epoch and train.distill_epoch must be >= 1".into());
        }
        if !self.train.lr.is_finite() || self.train.lr <= 0.0 {
            return c(format!("train.lr {} must be positive", self.train.lr));
        }
        if self.propagate.k_hop == 0 {
            return c("propagate.k_hop must be >= 1".into());
        }
        if let Some(eval) = &self.eval {
            if eval.seeds.is_empty() {
                return c("eval.seeds must not be empty".into());
            }
            if self.data.labels.is_none() {
                return c("eval requires data.labels".into());
            }
        }
        Ok(())
    }

    /// SHA-256 over the canonical serialized form; names the run directory
    /// and is embedded in every checkpoint.
    pub fn digest(&self) -> [u8; 32] {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        hasher.finalize().into()
    }

    pub fn digest_hex(&self) -> String {
        hex_string(&self.digest())
    }

    pub fn loss_config(&self) -> LossConfig {
        LossConfig {
            variant: self.loss.variant,
            alpha: self.loss.alpha.unwrap_or(0.0),
            tau: self.loss.tau,
            feature_map: self.loss.feature_map,
            include_self_community: self.loss.include_self_community,
            epsilon_clamp: self.loss.epsilon_clamp,
        }
    }

    pub fn train_config(&self) -> gccl_core::train::TrainConfig {
        gccl_core::train::TrainConfig {
            encoder_epochs: self.train.epoch,
            distill_epochs: self.train.distill_epoch,
            lr: self.train.lr,
            seed: self.train.seed,
            loss: self.loss_config(),
            dropout_p: self.loss.p,
            k_hops: self.propagate.k_hop,
            weight_decay: self.train.weight_decay,
            d_g: self.encoder.node_dim(),
            d_p: self.encoder.community_dim(),
            d_hidden: self.train.d_hidden,
        }
    }
}

pub fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

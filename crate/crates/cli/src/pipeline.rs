//! End-to-end pipeline: each step writes its artifact into a run directory
//! named by the config digest and reuses artifacts that already exist.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use gccl_core::distill::{final_representation, DistillMlp, RepresentationSource};
use gccl_core::encoder::EncoderParams;
use gccl_core::eval::{self, MetricsReport};
use gccl_core::graph::{self, LabelVector, SparseGraph, SplitSpec};
use gccl_core::io;
use gccl_core::partition::{
    coarsen, communities_from_rate, edge_cut, load_partition, partition_graph, CoarsenedGraph,
    Partition,
};
use gccl_core::train::{train_stage1, train_stage2, EpochStat};

use crate::config::{hex_string, EvalTask, RunConfig};
use crate::{CliError, CliResult};

pub const PARTITION_FILE: &str = "partition.txt";
pub const PARTITION_REPORT: &str = "partition.json";
pub const ENCODER_CKPT: &str = "encoder.ckpt";
pub const DISTILL_CKPT: &str = "distill.ckpt";
pub const EMBED_GNN: &str = "embeddings_gnn.bin";
pub const EMBED_MLP: &str = "embeddings_mlp.bin";
pub const TRAIN_LOG: &str = "train_log.jsonl";
pub const METRICS: &str = "metrics.json";

/// Run directory for a config: `<out_root>/run-<digest prefix>`.
pub fn run_dir(out_root: &Path, config: &RunConfig) -> PathBuf {
    out_root.join(format!("run-{}", &config.digest_hex()[..12]))
}

pub struct PipelineContext {
    pub config: RunConfig,
    pub dir: PathBuf,
    pub graph: SparseGraph,
    pub labels: Option<LabelVector>,
    pub splits: Option<SplitSpec>,
}

impl PipelineContext {
    pub fn new(config: RunConfig, out_root: &Path) -> CliResult<Self> {
        config.validate()?;
        let dir = run_dir(out_root, &config);
        fs::create_dir_all(&dir).map_err(gccl_core::Error::from)?;
        let graph = graph::load_graph(&config.data.edges, &config.data.features)?;
        let labels = match &config.data.labels {
            Some(path) => {
                let raw = io::read_labels(path)?;
                if raw.len() != graph.node_count() {
                    return Err(CliError::Core(gccl_core::Error::Input(format!(
                        "label file has {} rows, graph has {} nodes",
                        raw.len(),
                        graph.node_count()
                    ))));
                }
                Some(LabelVector::from_labels(raw))
            }
            None => None,
        };
        let splits = match &config.data.splits {
            Some(path) => {
                let s = io::read_splits(path)?;
                s.validate(graph.node_count())?;
                Some(s)
            }
            None => None,
        };
        Ok(Self {
            config,
            dir,
            graph,
            labels,
            splits,
        })
    }

    fn digest(&self) -> [u8; 32] {
        self.config.digest()
    }

    /// Partition from the external file or the built-in partitioner; writes
    /// the assignment file and a `{m, edge_cut, sizes}` report.
    pub fn ensure_partition(&self) -> CliResult<Partition> {
        let file = self.dir.join(PARTITION_FILE);
        let mut partition = if let Some(external) = &self.config.partition.path {
            load_partition(external, self.graph.node_count())?
        } else if file.exists() {
            load_partition(&file, self.graph.node_count())?
        } else {
            let m = match (self.config.partition.m, self.config.partition.rate) {
                (Some(m), _) => m,
                (None, Some(rate)) => communities_from_rate(rate, self.graph.node_count()),
                (None, None) => unreachable!("validated"),
            };
            partition_graph(&self.graph, m, self.config.partition.seed)?
        };
        partition.set_weights(self.config.partition.weights);
        io::write_partition_file(&file, partition.assignment())?;
        let report = serde_json::json!({
            "m": partition.num_communities(),
            "edge_cut": edge_cut(&self.graph, &partition),
            "sizes": partition.sizes(),
            "config_digest": self.config.digest_hex(),
        });
        write_json(&self.dir.join(PARTITION_REPORT), &report)?;
        Ok(partition)
    }

    pub fn coarsen(&self, partition: &Partition) -> CoarsenedGraph {
        coarsen(&self.graph, partition, self.config.partition.normalization)
    }

    /// Stage-1 training (or checkpoint reuse); returns the encoder params.
    pub fn ensure_encoder(&self) -> CliResult<EncoderParams> {
        let path = self.dir.join(ENCODER_CKPT);
        if path.exists() {
            let ck = io::read_encoder_checkpoint(&path)?;
            self.check_digest(&ck.digest, ENCODER_CKPT)?;
            return Ok(EncoderParams {
                w_g: ck.w_g,
                w_p: ck.w_p,
            });
        }
        let partition = self.ensure_partition()?;
        let coarse = self.coarsen(&partition);
        let (params, trace) =
            train_stage1(&self.graph, &partition, &coarse, &self.config.train_config())?;
        io::write_encoder_checkpoint(
            &path,
            &params.w_g.view(),
            &params.w_p.view(),
            &self.digest(),
        )?;
        self.append_log(1, &trace)?;
        Ok(params)
    }

    /// Stage-2 distillation (or checkpoint reuse).
    pub fn ensure_distill(&self) -> CliResult<DistillMlp> {
        let path = self.dir.join(DISTILL_CKPT);
        if path.exists() {
            let ck = io::read_mlp_checkpoint(&path)?;
            self.check_digest(&ck.digest, DISTILL_CKPT)?;
            return Ok(DistillMlp {
                w1: ck.w1,
                b1: ck.b1.into(),
                w2: ck.w2,
                b2: ck.b2.into(),
            });
        }
        let params = self.ensure_encoder()?;
        let (mlp, trace) = train_stage2(&self.graph, &params.w_g, &self.config.train_config())?;
        io::write_mlp_checkpoint(
            &path,
            &mlp.w1.view(),
            mlp.b1.as_slice().unwrap(),
            &mlp.w2.view(),
            mlp.b2.as_slice().unwrap(),
            &self.digest(),
        )?;
        self.append_log(2, &trace)?;
        Ok(mlp)
    }

    /// Final representations for one inference path, written as a binary
    /// matrix sharing the feature format.
    pub fn ensure_embeddings(&self, source: RepresentationSource) -> CliResult<PathBuf> {
        let (file, mlp) = match source {
            RepresentationSource::GnnPropagated => (self.dir.join(EMBED_GNN), None),
            RepresentationSource::Distilled => {
                (self.dir.join(EMBED_MLP), Some(self.ensure_distill()?))
            }
        };
        let params = self.ensure_encoder()?;
        let rep = final_representation(
            &self.graph,
            &params.w_g.view(),
            mlp.as_ref(),
            self.config.propagate.k_hop,
            self.config.propagate.sigma,
        )?;
        io::write_matrix_binary(&file, &rep.z_star.view())?;
        Ok(file)
    }

    /// Downstream evaluation over the configured seeds; writes metrics.json.
    pub fn evaluate(&self) -> CliResult<serde_json::Value> {
        let eval_cfg = self
            .config
            .eval
            .clone()
            .ok_or_else(|| CliError::Config("config has no eval section".into()))?;
        let labels = self
            .labels
            .as_ref()
            .ok_or_else(|| CliError::Config("eval requires data.labels".into()))?;
        if labels.num_classes() < 2 {
            return Err(CliError::Core(gccl_core::Error::Input(
                "evaluation needs at least two classes".into(),
            )));
        }
        let gnn_path = self.ensure_embeddings(RepresentationSource::GnnPropagated)?;
        let mlp_path = self.ensure_embeddings(RepresentationSource::Distilled)?;
        // refuse checkpoints from another config
        let enc = io::read_encoder_checkpoint(&self.dir.join(ENCODER_CKPT))?;
        self.check_digest(&enc.digest, ENCODER_CKPT)?;
        let z_gnn = io::read_matrix_binary(&gnn_path)?;
        let z_mlp = io::read_matrix_binary(&mlp_path)?;

        let digest_hex = self.config.digest_hex();
        let mut per_seed = Vec::new();
        let mut acc_gnn = Vec::new();
        let mut acc_mlp = Vec::new();
        let mut nmis = Vec::new();
        let mut aris = Vec::new();
        for &seed in &eval_cfg.seeds {
            match eval_cfg.task {
                EvalTask::Classify => {
                    let split = match &self.splits {
                        Some(s) => s.clone(),
                        None => eval::balanced_split(
                            labels,
                            eval_cfg.per_class_train,
                            eval_cfg.n_valid,
                            eval_cfg.n_test,
                            seed,
                        )?,
                    };
                    let mut seed_report = serde_json::Map::new();
                    seed_report.insert("seed".into(), seed.into());
                    for (name, z, accs) in [
                        ("accuracy_gnn", &z_gnn, &mut acc_gnn),
                        ("accuracy_mlp", &z_mlp, &mut acc_mlp),
                    ] {
                        let probe = eval::train_probe(
                            &z.view(),
                            labels,
                            &split.train,
                            eval_cfg.probe_epochs,
                            eval_cfg.probe_lr,
                            seed,
                        )?;
                        let acc = eval::accuracy(&probe, &z.view(), labels, &split.test);
                        accs.push(acc);
                        seed_report.insert(name.into(), acc.into());
                    }
                    seed_report.insert(
                        "split_sizes".into(),
                        serde_json::json!([
                            split.train.len(),
                            split.valid.len(),
                            split.test.len()
                        ]),
                    );
                    per_seed.push(serde_json::Value::Object(seed_report));
                }
                EvalTask::Cluster => {
                    let assignment =
                        eval::kmeans(&z_gnn.view(), labels.num_classes(), seed, 10)?;
                    let nmi = eval::nmi(&assignment, labels.as_slice());
                    let ari = eval::ari(&assignment, labels.as_slice());
                    nmis.push(nmi);
                    aris.push(ari);
                    let report = MetricsReport {
                        seed,
                        accuracy: None,
                        nmi: Some(nmi),
                        ari: Some(ari),
                        split_sizes: (0, 0, 0),
                        config_digest: digest_hex.clone(),
                    };
                    per_seed.push(serde_json::to_value(&report).unwrap());
                }
            }
        }

        let mut metrics = serde_json::Map::new();
        metrics.insert("config_digest".into(), digest_hex.into());
        metrics.insert(
            "task".into(),
            match eval_cfg.task {
                EvalTask::Classify => "classify",
                EvalTask::Cluster => "cluster",
            }
            .into(),
        );
        metrics.insert(
            "encoder_checkpoint_sha256".into(),
            file_sha256(&self.dir.join(ENCODER_CKPT))?.into(),
        );
        metrics.insert(
            "distill_checkpoint_sha256".into(),
            file_sha256(&self.dir.join(DISTILL_CKPT))?.into(),
        );
        metrics.insert("seeds".into(), serde_json::json!(eval_cfg.seeds));
        metrics.insert("per_seed".into(), serde_json::Value::Array(per_seed));
        match eval_cfg.task {
            EvalTask::Classify => {
                let (gm, gs) = mean_std(&acc_gnn);
                let (mm, ms) = mean_std(&acc_mlp);
                metrics.insert("accuracy_gnn_mean".into(), gm.into());
                metrics.insert("accuracy_gnn_std".into(), gs.into());
                metrics.insert("accuracy_mlp_mean".into(), mm.into());
                metrics.insert("accuracy_mlp_std".into(), ms.into());
            }
            EvalTask::Cluster => {
                let (nm, ns) = mean_std(&nmis);
                let (am, as_) = mean_std(&aris);
                metrics.insert("nmi_mean".into(), nm.into());
                metrics.insert("nmi_std".into(), ns.into());
                metrics.insert("ari_mean".into(), am.into());
                metrics.insert("ari_std".into(), as_.into());
            }
        }
        let value = serde_json::Value::Object(metrics);
        write_json(&self.dir.join(METRICS), &value)?;
        Ok(value)
    }

    fn check_digest(&self, found: &[u8; 32], artifact: &str) -> CliResult<()> {
        if found != &self.digest() {
            return Err(CliError::Config(format!(
                "{artifact} was produced by config {}, current config is {}; refusing \
                 mismatched checkpoint/config pair",
                hex_string(&found[..6]),
                &self.config.digest_hex()[..12],
            )));
        }
        Ok(())
    }

    fn append_log(&self, stage: u8, trace: &[EpochStat]) -> CliResult<()> {
        let mut file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.dir.join(TRAIN_LOG))
            .map_err(gccl_core::Error::from)?;
        for stat in trace {
            let line = serde_json::json!({
                "stage": stage,
                "epoch": stat.epoch,
                "loss": stat.loss,
                "wall_ms": stat.wall_ms,
            });
            writeln!(file, "{line}").map_err(gccl_core::Error::from)?;
        }
        Ok(())
    }
}

/// Run everything: partition, both training stages, both embeddings, and
/// evaluation when configured.
pub fn run_pipeline(config: RunConfig, out_root: &Path) -> CliResult<PathBuf> {
    let ctx = PipelineContext::new(config, out_root)?;
    ctx.ensure_partition()?;
    ctx.ensure_encoder()?;
    ctx.ensure_distill()?;
    ctx.ensure_embeddings(RepresentationSource::GnnPropagated)?;
    ctx.ensure_embeddings(RepresentationSource::Distilled)?;
    if ctx.config.eval.is_some() {
        ctx.evaluate()?;
    }
    Ok(ctx.dir.clone())
}

pub fn file_sha256(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(gccl_core::Error::from)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hex_string(&hasher.finalize()))
}

fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Config(format!("serialize: {e}")))?;
    fs::write(path, text).map_err(gccl_core::Error::from)?;
    Ok(())
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    (mean, var.sqrt())
}

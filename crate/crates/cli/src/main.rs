use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use gccl_cli::config::RunConfig;
use gccl_cli::pipeline::{run_pipeline, PipelineContext};
use gccl_cli::{bench, CliError, CliResult};
use gccl_core::distill::RepresentationSource;

#[derive(Parser)]
#[command(
    name = "gccl",
    about = "Community-contrastive graph representation learning pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Classify,
    Cluster,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmbedPath {
    /// Propagated representations (reads the adjacency).
    Gnn,
    /// Distilled representations (per-node compute only).
    Mlp,
}

#[derive(Subcommand)]
enum Command {
    /// Run the whole pipeline: partition, train, distill, embed, eval.
    Run(CommonArgs),
    /// Partition the graph and write the assignment plus a cut report.
    Partition(CommonArgs),
    /// Stage-1 contrastive training of the encoder.
    Train(CommonArgs),
    /// Stage-2 distillation of the propagated representations.
    Distill(CommonArgs),
    /// Write final representations for one inference path.
    Embed {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        path: EmbedPath,
    },
    /// Evaluate frozen representations (classification or clustering).
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        /// Override the configured eval task.
        #[arg(long, value_enum)]
        task: Option<TaskArg>,
    },
    /// Time the loss and inference paths over a grid of graph sizes.
    Bench {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated node counts, ascending.
        #[arg(long, default_value = "4000,8000,20000,40000,80000")]
        n_grid: String,
    },
}

#[derive(clap::Args)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output root; run artifacts land in <out>/run-<digest>/.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Override train.seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl CommonArgs {
    fn load(&self) -> CliResult<RunConfig> {
        let mut config = RunConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            config.train.seed = seed;
        }
        Ok(config)
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run(args) => {
            let dir = run_pipeline(args.load()?, &args.out)?;
            println!("run artifacts in {}", dir.display());
        }
        Command::Partition(args) => {
            let ctx = PipelineContext::new(args.load()?, &args.out)?;
            let partition = ctx.ensure_partition()?;
            println!(
                "partitioned into {} communities -> {}",
                partition.num_communities(),
                ctx.dir.display()
            );
        }
        Command::Train(args) => {
            let ctx = PipelineContext::new(args.load()?, &args.out)?;
            ctx.ensure_encoder()?;
            println!("encoder checkpoint in {}", ctx.dir.display());
        }
        Command::Distill(args) => {
            let ctx = PipelineContext::new(args.load()?, &args.out)?;
            ctx.ensure_distill()?;
            println!("distilled checkpoint in {}", ctx.dir.display());
        }
        Command::Embed { common, path } => {
            let ctx = PipelineContext::new(common.load()?, &common.out)?;
            let source = match path {
                EmbedPath::Gnn => RepresentationSource::GnnPropagated,
                EmbedPath::Mlp => RepresentationSource::Distilled,
            };
            let file = ctx.ensure_embeddings(source)?;
            println!("embeddings in {}", file.display());
        }
        Command::Eval { common, task } => {
            let mut config = common.load()?;
            if let Some(task) = task {
                let eval = config.eval.as_mut().ok_or_else(|| {
                    CliError::Config("--task given but config has no eval section".into())
                })?;
                eval.task = match task {
                    TaskArg::Classify => gccl_cli::config::EvalTask::Classify,
                    TaskArg::Cluster => gccl_cli::config::EvalTask::Cluster,
                };
            }
            let ctx = PipelineContext::new(config, &common.out)?;
            let metrics = ctx.evaluate()?;
            println!("{}", serde_json::to_string_pretty(&metrics).unwrap());
        }
        Command::Bench { common, n_grid } => {
            let config = common.load()?;
            let grid: Vec<usize> = n_grid
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<usize>()
                        .map_err(|_| CliError::Config(format!("bad n-grid entry {tok:?}")))
                })
                .collect::<CliResult<Vec<usize>>>()?;
            if grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(CliError::Config("n-grid must be strictly ascending".into()));
            }
            let params = bench::BenchParams {
                k_hop: config.propagate.k_hop,
                ..Default::default()
            };
            let report = bench::bench(&params, &grid)?;
            let ctx = PipelineContext::new(config, &common.out)?;
            let path = ctx.dir.join("bench.json");
            std::fs::write(&path, serde_json::to_string_pretty(&report).unwrap())
                .map_err(gccl_core::Error::from)?;
            println!("{}", serde_json::to_string_pretty(&report).unwrap());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

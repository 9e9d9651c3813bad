//! Command-line front end for `loopmesh`: train, predict, evaluate, sweep.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod svg;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use loopmesh::eval::DEFAULT_GRID;
use loopmesh::train::TrainMode;

use crate::commands::{EvaluateOptions, PredictOptions, SweepOptions};
use crate::config::{ConfigFile, Overrides};
pub use crate::error::{CliError, CliResult};
use crate::svg::Viewport;

fn parse_mode(s: &str) -> Result<TrainMode, String> {
    s.parse().map_err(|e: loopmesh::Error| e.to_string())
}

fn parse_view(s: &str) -> Result<Viewport, String> {
    s.parse().map_err(|e: CliError| e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "loopmesh",
    version,
    about = "Generate mesh points around an airfoil from its boundary loop"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// JSON file with TrainConfig fields; flags override it
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Directory for all outputs
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,

    /// raw, stand or stand-clamp
    #[arg(long, global = true, value_parser = parse_mode)]
    pub mode: Option<TrainMode>,

    /// Number of generated points
    #[arg(long, global = true)]
    pub nodes: Option<usize>,

    /// Repulsion weight relative to a unit Chamfer weight
    #[arg(long, global = true)]
    pub ratio: Option<f64>,

    #[arg(long, global = true)]
    pub epochs: Option<usize>,

    /// Interior-penalty weight (default 10, or 0 with stand-clamp)
    #[arg(long, global = true)]
    pub interior: Option<f64>,

    #[arg(long, global = true)]
    pub lr: Option<f64>,
}

impl GlobalArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            mode: self.mode,
            seed: self.seed,
            nodes: self.nodes,
            ratio: self.ratio,
            interior: self.interior,
            epochs: self.epochs,
            lr: self.lr,
        }
    }

    fn train_config(&self) -> CliResult<loopmesh::train::TrainConfig> {
        let file = self.config.as_deref().map(ConfigFile::load).transpose()?;
        config::resolve(file.as_ref(), &self.overrides())
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train on a dataset manifest
    Train {
        manifest: PathBuf,
        /// Sample names to leave out of training
        #[arg(long, value_delimiter = ',')]
        holdout: Vec<String>,
    },
    /// Predict points for a contour with a trained checkpoint
    Predict {
        checkpoint: PathBuf,
        dat: PathBuf,
        /// Training sample whose transform to use (default: the first)
        #[arg(long)]
        sample: Option<String>,
        /// Mesh to overlay in green
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Plot extent as x0,x1,y0,y1
        #[arg(long, value_parser = parse_view, default_value = "-0.5,1.5,-0.6,0.6")]
        view: Viewport,
    },
    /// KL divergence of a prediction CSV or checkpoint against a mesh
    Evaluate {
        pred: PathBuf,
        truth: PathBuf,
        /// Contour for chord normalisation (required for a checkpoint)
        #[arg(long)]
        dat: Option<PathBuf>,
        #[arg(long)]
        sample: Option<String>,
        /// Grid cells per axis
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
    },
    /// Train or reuse a ratio x node-count grid and tabulate KL
    Sweep {
        manifest: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3")]
        ratios: Vec<f64>,
        #[arg(
            long = "nodes-list",
            value_delimiter = ',',
            default_value = "300,400,500,1000"
        )]
        nodes_list: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        holdout: Vec<String>,
        #[arg(long, value_parser = parse_view, default_value = "-0.5,1.5,-0.6,0.6")]
        view: Viewport,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
    },
}

/// Run a parsed command, printing a short summary to stdout.
pub fn run(cli: Cli) -> CliResult<()> {
    let g = &cli.global;
    match cli.command {
        Command::Train { manifest, holdout } => {
            let config = g.train_config()?;
            let out = commands::cmd_train(&manifest, &config, &holdout, &g.out_dir)?;
            if let (Some(first), Some(last)) = (out.model.log.first(), out.model.log.last()) {
                println!("chamfer: {} -> {}", first.chamfer, last.chamfer);
            }
            println!("checkpoint: {}", out.checkpoint.display());
        }
        Command::Predict {
            checkpoint,
            dat,
            sample,
            truth,
            view,
        } => {
            let opts = PredictOptions {
                sample,
                truth,
                view,
                nodes: g.nodes,
                mode: g.mode,
            };
            let out = commands::cmd_predict(&checkpoint, &dat, &opts, &g.out_dir)?;
            println!("points: {}", out.points.len());
            println!("interior: {}", out.interior);
        }
        Command::Evaluate {
            pred,
            truth,
            dat,
            sample,
            grid,
        } => {
            let opts = EvaluateOptions {
                dat,
                sample,
                grid,
                ratio: g.ratio,
            };
            let report = commands::cmd_evaluate(&pred, &truth, &opts, &g.out_dir)?;
            print!("{}", report.to_csv());
        }
        Command::Sweep {
            manifest,
            ratios,
            nodes_list,
            holdout,
            view,
            grid,
        } => {
            let base = g.train_config()?;
            let opts = SweepOptions {
                ratios,
                nodes: nodes_list,
                holdout,
                view,
                grid,
            };
            let out = commands::cmd_sweep(&manifest, &base, &opts, &g.out_dir)?;
            print!("{}", out.report.to_table());
            println!(
                "trained {}, reused {}, failed {}",
                out.trained,
                out.reused,
                out.failed.len()
            );
        }
    }
    Ok(())
}

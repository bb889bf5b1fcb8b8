mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::CONFIG_KEYS;

/// Transparent-object reconstruction from refractive correspondences.
///
/// Subcommands exchange data only through files in `paths.output`:
/// simulate writes scene.json, view_NNN.corr and view_NNN.pgm; carve
/// writes hull.ply; reconstruct writes stage_L.ply, final.ply and loss.csv;
/// evaluate writes error.csv and error.ply.
#[derive(Parser, Debug)]
#[command(name = "glassmesh", version, after_long_help = CONFIG_KEYS)]
struct Cli {
    /// Caps the worker pool.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Ordered reductions everywhere. Reductions are always ordered, so this
    /// only documents intent.
    #[arg(long, global = true)]
    deterministic: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `paths.output`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Overrides `scene.rig.views`. Later stages use an evenly spaced
    /// subset of the simulated views.
    #[arg(long)]
    views: Option<usize>,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Traces the ground-truth mesh into per-view correspondences and masks.
    #[command(after_long_help = CONFIG_KEYS)]
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Decode correspondences from rendered Gray-code stripes instead of
        /// taking the traced monitor hits.
        #[arg(long)]
        matting: bool,
    },
    /// Carves the visual hull from the masks.
    #[command(after_long_help = CONFIG_KEYS)]
    Carve {
        #[command(flatten)]
        common: Common,
        /// Overrides `carve.resolution`.
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Refines the hull against the correspondences.
    #[command(after_long_help = CONFIG_KEYS)]
    Reconstruct {
        #[command(flatten)]
        common: Common,
        /// Overrides `schedule.stages`.
        #[arg(long)]
        stages: Option<usize>,
        /// Overrides `schedule.iters_per_stage`.
        #[arg(long)]
        iters: Option<usize>,
        /// Overrides `weights.alpha`.
        #[arg(long = "weights.alpha")]
        alpha: Option<f64>,
        /// Overrides `weights.beta`.
        #[arg(long = "weights.beta")]
        beta: Option<f64>,
        /// Overrides `weights.gamma`.
        #[arg(long = "weights.gamma")]
        gamma: Option<f64>,
    },
    /// Measures per-vertex error against the ground truth.
    #[command(after_long_help = CONFIG_KEYS)]
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Reconstruction to measure (default `<output>/final.ply`).
        #[arg(long)]
        recon: Option<PathBuf>,
        /// Ground truth (default `scene.mesh`).
        #[arg(long)]
        gt: Option<PathBuf>,
        /// Rigidly align the reconstruction with ICP first, with at most
        /// this many iterations.
        #[arg(long)]
        align: Option<usize>,
        /// Also report the symmetric Hausdorff distance.
        #[arg(long)]
        hausdorff: bool,
    },
    /// Writes one of the built-in test shapes.
    MakeShape {
        #[arg(long, value_enum)]
        shape: Shape,
        /// Output mesh, .obj or .ply.
        #[arg(long)]
        out: PathBuf,
        /// Icosphere subdivision level for round shapes.
        #[arg(long, default_value_t = 4)]
        subdiv: u32,
        /// Radius, or edge length for boxes.
        #[arg(long, default_value_t = 0.5)]
        size: f64,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Shape {
    Sphere,
    Blob,
    Cube,
    LBlock,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    if cli.deterministic {
        log::debug!("deterministic mode");
    }
    match cli.command {
        Command::Simulate { common, matting } => commands::simulate(&common, matting),
        Command::Carve { common, resolution } => commands::carve(&common, resolution),
        Command::Reconstruct { common, stages, iters, alpha, beta, gamma } => {
            commands::reconstruct(&common, stages, iters, [alpha, beta, gamma])
        }
        Command::Evaluate { common, recon, gt, align, hausdorff } => {
            commands::evaluate(&common, recon, gt, align, hausdorff)
        }
        Command::MakeShape { shape, out, subdiv, size } => commands::make_shape(shape, &out, subdiv, size),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let algorithmic = e.chain().any(|c| {
                matches!(
                    c.downcast_ref::<glassmesh::Error>(),
                    Some(glassmesh::Error::AllCarved | glassmesh::Error::NoSurface)
                )
            });
            ExitCode::from(if algorithmic { 2 } else { 1 })
        }
    }
}

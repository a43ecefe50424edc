mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use sisr_core::degradation::KernelType;
use sisr_core::solver::Preconditioner;

use config::{Command, DenoiserKind, ProfileArg, RunManifest};

/// Super-resolution from a single low-resolution image.
///
/// Settings come from built-in defaults, then `--config`, then flags. Every
/// command writes `manifest.toml` beside its outputs; passing that file back
/// through `--config` reruns the command with identical results.
#[derive(Debug, Parser)]
#[command(name = "sisr", version)]
struct Cli {
    /// TOML config or a manifest written by an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for noise synthesis and training.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory receiving outputs and the manifest.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Fidelity profile: intensity only (v1) or joint (v2).
    #[arg(long, global = true, value_enum)]
    profile: Option<ProfileArg>,
    #[arg(long, global = true, value_enum)]
    denoiser: Option<DenoiserKind>,
    /// Trained model for `--denoiser cnn`.
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Blur, decimate and add noise to a high-resolution image.
    Degrade {
        input: Option<PathBuf>,
        #[command(flatten)]
        degradation: DegradationArgs,
    },
    /// Reconstruct a high-resolution estimate from a degraded image.
    Reconstruct {
        input: Option<PathBuf>,
        #[command(flatten)]
        degradation: DegradationArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Compare an estimate against a reference image.
    Eval {
        reference: Option<PathBuf>,
        estimate: Option<PathBuf>,
    },
    /// Run both fidelity profiles over a grid of degradations.
    Ablate {
        images: Vec<PathBuf>,
        #[command(flatten)]
        degradation: DegradationArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Blur kernels in the grid.
        #[arg(long, value_delimiter = ',')]
        kernels: Option<Vec<KernelType>>,
        /// Noise levels in the grid.
        #[arg(long, value_delimiter = ',')]
        noise_levels: Option<Vec<f64>>,
    },
    /// Train the residual CNN denoiser on clean images.
    Train {
        images: Vec<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batches_per_epoch: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        patch_size: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        /// Training noise range as `low,high`.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        noise_range: Option<Vec<f64>>,
        /// Channels of the encoder blocks, e.g. `16,32,32`.
        #[arg(long, value_delimiter = ',')]
        channels: Option<Vec<usize>>,
    },
}

#[derive(Debug, Args)]
struct DegradationArgs {
    #[arg(long)]
    kernel: Option<KernelType>,
    #[arg(long)]
    kernel_size: Option<usize>,
    #[arg(long)]
    kernel_sigma: Option<f64>,
    #[arg(long)]
    factor: Option<usize>,
    /// Standard deviation of the additive noise, in intensity levels.
    #[arg(long)]
    noise: Option<f64>,
}

#[derive(Debug, Args)]
struct SolverArgs {
    #[arg(long)]
    outer_iters: Option<usize>,
    #[arg(long)]
    gamma0: Option<f64>,
    #[arg(long)]
    gamma_growth: Option<f64>,
    #[arg(long)]
    lambda_reg: Option<f64>,
    #[arg(long)]
    cg_tol: Option<f64>,
    #[arg(long)]
    cg_max_iters: Option<usize>,
    #[arg(long, value_parser = parse_preconditioner)]
    preconditioner: Option<Preconditioner>,
}

fn parse_preconditioner(s: &str) -> Result<Preconditioner, String> {
    match s {
        "none" => Ok(Preconditioner::None),
        "jacobi" => Ok(Preconditioner::Jacobi),
        other => Err(format!("unknown preconditioner `{other}` (expected none or jacobi)")),
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl DegradationArgs {
    fn apply(self, m: &mut RunManifest) {
        let d = &mut m.degradation;
        set(&mut d.kernel_type, self.kernel);
        set(&mut d.kernel_size, self.kernel_size);
        set(&mut d.kernel_sigma, self.kernel_sigma);
        set(&mut d.factor, self.factor);
        set(&mut d.noise_sigma, self.noise);
    }
}

impl SolverArgs {
    fn apply(self, m: &mut RunManifest) {
        let s = &mut m.solver;
        set(&mut s.outer_iters, self.outer_iters);
        set(&mut s.gamma0, self.gamma0);
        set(&mut s.gamma_growth, self.gamma_growth);
        set(&mut s.lambda_reg, self.lambda_reg);
        set(&mut s.cg_tol, self.cg_tol);
        set(&mut s.cg_max_iters, self.cg_max_iters);
        set(&mut s.preconditioner, self.preconditioner);
    }
}

/// Merges defaults, the config file and flags into one resolved manifest.
fn build_manifest(cli: Cli) -> Result<RunManifest> {
    let mut m = match &cli.config {
        Some(path) => RunManifest::load(path)?,
        None => RunManifest::default(),
    };
    let (command, inputs) = match cli.command {
        Cmd::Degrade { input, degradation } => {
            degradation.apply(&mut m);
            (Command::Degrade, input.into_iter().collect())
        }
        Cmd::Reconstruct {
            input,
            degradation,
            solver,
        } => {
            degradation.apply(&mut m);
            solver.apply(&mut m);
            (Command::Reconstruct, input.into_iter().collect())
        }
        Cmd::Eval { reference, estimate } => {
            let inputs: Vec<PathBuf> = reference.into_iter().chain(estimate).collect();
            (Command::Eval, inputs)
        }
        Cmd::Ablate {
            images,
            degradation,
            solver,
            kernels,
            noise_levels,
        } => {
            degradation.apply(&mut m);
            solver.apply(&mut m);
            set(&mut m.ablation.kernels, kernels);
            set(&mut m.ablation.noise_levels, noise_levels);
            (Command::Ablate, images)
        }
        Cmd::Train {
            images,
            epochs,
            batches_per_epoch,
            batch_size,
            patch_size,
            learning_rate,
            noise_range,
            channels,
        } => {
            let t = &mut m.train;
            set(&mut t.epochs, epochs);
            set(&mut t.batches_per_epoch, batches_per_epoch);
            set(&mut t.batch_size, batch_size);
            set(&mut t.patch_size, patch_size);
            set(&mut t.learning_rate, learning_rate);
            set(&mut t.architecture.channels, channels);
            if let Some(r) = noise_range {
                t.noise_sigma_range = [r[0], r[1]];
            }
            (Command::Train, images)
        }
    };
    // inputs recorded by a manifest of the same command are reused when none are given
    if !inputs.is_empty() || m.command != Some(command) {
        m.inputs = inputs;
    }
    m.command = Some(command);
    if cli.seed.is_some() {
        m.seed = cli.seed;
    }
    if let Some(p) = cli.profile {
        m.profile = Some(p.into());
    }
    if cli.denoiser.is_some() {
        m.denoiser = cli.denoiser;
    }
    if cli.model.is_some() {
        m.model = cli.model;
    }
    if cli.out_dir.is_some() {
        m.out_dir = cli.out_dir;
    }
    m.resolve();
    if m.inputs.is_empty() {
        bail!("`{command}` needs input images");
    }
    Ok(m)
}

fn run() -> Result<()> {
    let manifest = build_manifest(Cli::parse())?;
    commands::run(&manifest)
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

//! `manifold-flow`: build a density on a sphere (or a product of spheres)
//! from a JSON config, then verify its chart geometry, draw samples,
//! evaluate log densities, or fit its flow chain to data.
//!
//! Every command writes its artifacts atomically and drops a run manifest
//! next to the primary output, pinning the config hash, seeds, and settings
//! needed to reproduce the files bit-for-bit.

mod commands;
mod config;
mod manifest;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use manifold_density::flows::LayerKind;

/// A command failure carrying its exit code: 2 for configuration or contract
/// errors, 3 for numerical failures, 4 for data validation failures.
/// Success exits 0; a failed verification threshold exits 1.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
    Data(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Data(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numerical(m) | Failure::Data(m) => m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Planar,
    Radial,
}

impl From<KindArg> for LayerKind {
    fn from(kind: KindArg) -> Self {
        match kind {
            KindArg::Planar => LayerKind::Planar,
            KindArg::Radial => LayerKind::Radial,
        }
    }
}

#[derive(Parser)]
#[command(name = "manifold-flow", version)]
#[command(about = "Densities on spheres built from flows in a stereographic chart")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Histogram uniform sphere samples by chart radius and compare the
    /// empirical profile against the analytic and naive curves.
    Verify {
        /// Model config JSON; its chart is what gets verified.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Samples to draw (at least 1000).
        #[arg(long)]
        count: usize,
        /// Histogram bins over the radial range [0, 5].
        #[arg(long, default_value_t = 50)]
        bins: usize,
        /// Monte Carlo chunks; defaults to MANIFOLD_FLOW_CHUNKS, then 1.
        #[arg(long)]
        chunks: Option<usize>,
        /// Output CSV; the summary JSON and manifest land next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw model samples: ambient coordinates plus model log density.
    Sample {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        count: usize,
        /// Monte Carlo chunks; defaults to MANIFOLD_FLOW_CHUNKS, then 1.
        #[arg(long)]
        chunks: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the model log density at points read from a CSV file.
    /// Needs a config with an empty flow: a flow chain has no closed-form
    /// inverse, so flowed models cannot be evaluated at given points.
    Logprob {
        #[arg(long)]
        config: PathBuf,
        /// Input CSV whose header starts with x0,...,x{m-1}.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a flow chain to on-manifold data by maximum likelihood.
    /// A config with a non-empty flow is refined from its own parameters;
    /// an empty flow starts a fresh fit with --layers/--kind.
    Fit {
        #[arg(long)]
        config: PathBuf,
        /// Seed for the near-identity initialization of a fresh fit.
        #[arg(long)]
        seed: u64,
        /// Training data CSV whose header starts with x0,...,x{m-1}.
        #[arg(long)]
        data: PathBuf,
        /// Layer count for a fresh fit (default 0: evaluate the base only).
        #[arg(long)]
        layers: Option<usize>,
        /// Layer kind for a fresh fit (default planar).
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        #[arg(long, default_value_t = 2000)]
        max_iters: usize,
        /// Initial gradient-ascent step.
        #[arg(long, default_value_t = 1e-2)]
        step_size: f64,
        /// Stop when the gradient norm falls to or below this.
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        /// Central-difference step for parameter gradients.
        #[arg(long, default_value_t = 1e-5)]
        fd_step: f64,
        /// Output fit report JSON; the manifest lands next to it.
        #[arg(long)]
        out: PathBuf,
        /// Where to write the fitted model config.
        #[arg(long)]
        model_out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify { config, seed, count, bins, chunks, out } => {
            commands::cmd_verify(&config, seed, count, bins, chunks, &out)
        }
        Command::Sample { config, seed, count, chunks, out } => {
            commands::cmd_sample(&config, seed, count, chunks, &out)
        }
        Command::Logprob { config, input, out } => commands::cmd_logprob(&config, &input, &out),
        Command::Fit {
            config,
            seed,
            data,
            layers,
            kind,
            max_iters,
            step_size,
            tol,
            fd_step,
            out,
            model_out,
        } => commands::cmd_fit(commands::FitArgs {
            config: &config,
            seed,
            data: &data,
            layers,
            kind: kind.map(LayerKind::from),
            max_iters,
            step_size,
            tol,
            fd_step,
            out: &out,
            model_out: &model_out,
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.exit_code())
        }
    }
}

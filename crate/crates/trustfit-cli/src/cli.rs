//! Command-line argument definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "trustfit",
    version,
    about = "Trust region curve fitting, dataset generation, and benchmarking"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Fit a built-in model to a CSV table or a binary image.
    Fit(FitArgs),
    /// Generate a reproducible corpus of noisy 2-d Gaussian images.
    Generate(GenerateArgs),
    /// Time fits over a generated corpus and emit per-length statistics.
    Benchmark(BenchmarkArgs),
}

#[derive(Args)]
pub struct FitArgs {
    /// Model name: linear | exponential | polynomial:<degree> | gaussian2d.
    #[arg(long)]
    pub model: String,

    /// Input file: .csv (header row, y columns then z last) or .bin image
    /// with a .json sidecar.
    #[arg(long)]
    pub input: PathBuf,

    /// Starting parameters, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Vec<f64>,

    /// Cost-reduction tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub ftol: f64,

    /// Step-size tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub xtol: f64,

    /// Gradient tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub gtol: f64,

    /// Iteration cap (default: 100 times the parameter count).
    #[arg(long)]
    pub max_iter: Option<usize>,

    /// Pad the dataset to this many rows with masked duplicates.
    #[arg(long)]
    pub fixed_size: Option<usize>,

    /// CSV column holding per-point standard deviations.
    #[arg(long)]
    pub sigma_col: Option<String>,

    /// Dense covariance matrix: binary float64, row-major, with a .json
    /// shape sidecar next to it.
    #[arg(long)]
    pub cov: Option<PathBuf>,

    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Log the per-iteration trace to stderr.
    #[arg(long)]
    pub verbose: bool,
}

#[derive(Args)]
pub struct GenerateArgs {
    /// Dataset lengths: either a comma list ("1000,4096") or a log-spaced
    /// range "<min>..<max>:<count>" ("1e3..1e5:5").
    #[arg(long)]
    pub lengths: String,

    /// Images per length.
    #[arg(long, default_value_t = 10)]
    pub per_length: usize,

    /// Gaussian noise standard deviation added per pixel.
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,

    /// Master seed; every image derives from it and its own index.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output directory for the corpus.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct BenchmarkArgs {
    /// Corpus directory produced by `generate` (holds manifest.json).
    #[arg(long)]
    pub dataset: PathBuf,

    /// Timed fits per image, after one untimed warmup fit.
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,

    /// Worker threads fitting images in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,

    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

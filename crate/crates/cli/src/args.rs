//! Command-line surface. Every argument struct is serializable so a run can
//! be recorded in its manifest and replayed.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use localcoh::NoiseModel;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "localcoh",
    version,
    about = "Variable-density Fourier sampling and TV / l1-Haar reconstruction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Exact local coherence, analytic bounds, and a bound report.
    Coherence(CoherenceArgs),
    /// Draw a sampling plan and render its K-space mask.
    Sample(SampleArgs),
    /// Simulate measurements of an image and reconstruct it.
    Reconstruct(ReconstructArgs),
    /// Error over a grid of power-law exponents, noise levels, and trials.
    Sweep(SweepArgs),
    /// Numerical checks of the Haar lemmas, univariate incoherence, isotropy, and RIP.
    Verify(VerifyArgs),
    /// Re-run the command recorded in a manifest and compare output hashes.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Total-variation minimization.
    Tv,
    /// l1 minimization of Haar coefficients.
    Haar,
}

fn parse_noise_model(s: &str) -> Result<NoiseModel, String> {
    s.parse::<NoiseModel>().map_err(|e| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CommonArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; defaults to all cores. Outputs do not depend on it.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CoherenceArgs {
    /// Side length, a power of two.
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SampleArgs {
    #[arg(long)]
    pub n: usize,
    /// uniform | inv-square | inv-max | power:<alpha> | power:inf | lowpass | radial:<L>
    #[arg(long)]
    pub density: String,
    /// Number of draws (mask size for lowpass).
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
}

/// Input image: a PGM file or a built-in phantom.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ImageArgs {
    /// Grayscale PGM (P5 or P2, 8 or 16 bit), square with power-of-two side.
    #[arg(long, conflicts_with = "phantom")]
    pub image: Option<PathBuf>,
    /// rectangles | shepp-logan | compressible
    #[arg(long)]
    pub phantom: Option<String>,
    /// Side length for phantoms.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value_t = SolverKind::Tv)]
    pub solver: SolverKind,
    /// weighted | unweighted (residual scaled by rho or not)
    #[arg(long, default_value = "unweighted", value_parser = parse_noise_model)]
    pub noise_model: NoiseModel,
    #[arg(long, default_value_t = 20_000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReconstructArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: ImageArgs,
    /// Sampling density or mask; ignored when --plan is given.
    #[arg(long, default_value = "inv-square")]
    pub density: String,
    /// Plan CSV (`j,k1,k2,rho`) as written by `sample`.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Noise level; the residual radius is eps * sqrt(m).
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: ImageArgs,
    /// Comma-separated exponents; `inf` selects the lowest-frequency mask.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,6,inf")]
    pub alphas: Vec<String>,
    #[arg(long)]
    pub m: usize,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// Base seed; cell `i` uses `seed + i`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct VerifyArgs {
    /// Side lengths for the lemma checks.
    #[arg(long, value_delimiter = ',', default_value = "2,4,8,16,32,64")]
    pub sizes: Vec<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// Manifest written by a previous run.
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
}

impl Command {
    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Coherence(a) => &a.common,
            Command::Sample(a) => &a.common,
            Command::Reconstruct(a) => &a.common,
            Command::Sweep(a) => &a.common,
            Command::Verify(a) => &a.common,
            Command::Replay(a) => &a.common,
        }
    }

    pub fn common_mut(&mut self) -> &mut CommonArgs {
        match self {
            Command::Coherence(a) => &mut a.common,
            Command::Sample(a) => &mut a.common,
            Command::Reconstruct(a) => &mut a.common,
            Command::Sweep(a) => &mut a.common,
            Command::Verify(a) => &mut a.common,
            Command::Replay(a) => &mut a.common,
        }
    }
}

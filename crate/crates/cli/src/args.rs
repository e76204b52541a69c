use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rho_lab_core::walk::PartitionMode;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "rho-lab", version, about = "Seeded experiments on the Pollard rho walk")]
pub struct Cli {
    /// 64-bit seed; drawn from system entropy and recorded when omitted.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// JSON-lines file that receives one record per run.
    #[arg(long, global = true, env = "RHO_LAB_OUT", default_value = "results/records.jsonl")]
    pub out: PathBuf,

    /// Write the table to stdout as CSV.
    #[arg(long, global = true)]
    pub csv: bool,

    #[command(subcommand)]
    pub action: Action,
}

#[derive(Debug, Subcommand)]
pub enum Action {
    #[command(flatten)]
    Run(Command),
    /// Re-run a recorded experiment and compare outputs.
    Replay(ReplayArgs),
}

/// A recordable experiment. Serializes as `{"command": ..., "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", content = "params", rename_all = "kebab-case")]
pub enum Command {
    /// Recover k with x^k = y in the order-p subgroup of Z_q^*.
    Solve(SolveArgs),
    /// Collision times of the exponent walk against the collision bound.
    Collide(CollideArgs),
    /// Exact separation mixing time.
    Mix(MixArgs),
    /// Spectral gap bounds, canonical-path congestion and exact gaps.
    Spectral(SpectralArgs),
    /// Strong stationary time experiments.
    Sst(SstArgs),
    /// L2 bounds, exact L2 distances and separating-function moments.
    Fourier(FourierArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Solve(_) => "solve",
            Self::Collide(_) => "collide",
            Self::Mix(_) => "mix",
            Self::Spectral(_) => "spectral",
            Self::Sst(_) => "sst",
            Self::Fourier(_) => "fourier",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionArg {
    Hashed,
    LazyRandom,
}

impl From<PartitionArg> for PartitionMode {
    fn from(p: PartitionArg) -> Self {
        match p {
            PartitionArg::Hashed => PartitionMode::Hashed,
            PartitionArg::LazyRandom => PartitionMode::LazyRandom,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SolveArgs {
    #[arg(long)]
    pub q: u64,
    #[arg(long)]
    pub p: u64,
    #[arg(long)]
    pub x: u64,
    #[arg(long)]
    pub y: u64,
    #[arg(long, default_value_t = 64)]
    pub max_attempts: u32,
    #[arg(long, value_enum, default_value_t = PartitionArg::LazyRandom)]
    pub partition: PartitionArg,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CollideArgs {
    #[arg(long)]
    pub p: u64,
    /// Defaults to p - 1.
    #[arg(long)]
    pub k: Option<u64>,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 2000)]
    pub trials: u64,
    /// Also report the block-walk collision budget.
    #[arg(long)]
    pub block: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct MixArgs {
    #[arg(long)]
    pub p: u64,
    /// Defaults to p - 1. Ignored with --block.
    #[arg(long)]
    pub k: Option<u64>,
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    /// Mix the block walk instead of R.
    #[arg(long)]
    pub block: bool,
    #[arg(long, default_value_t = 100_000)]
    pub max_steps: u64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SpectralArgs {
    #[arg(long)]
    pub p: u64,
    /// Defaults to p - 1.
    #[arg(long)]
    pub k: Option<u64>,
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    /// Compute exact gaps and tau_s (dense, small p only).
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SstArgs {
    /// The cycle is Z_p with p = 2^m - 1.
    #[arg(long)]
    pub m: u32,
    /// Defaults to p - 1.
    #[arg(long)]
    pub k: Option<u64>,
    /// Blocks per super-round; defaults to ceil(3 ln m / ln(9/7)).
    #[arg(long)]
    pub r: Option<u32>,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    /// Tail threshold; defaults to the 9mr step budget.
    #[arg(long)]
    pub t: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FourierArgs {
    #[arg(long)]
    pub p: u64,
    /// Block counts; defaults to m, 2m, ..., 5m.
    #[arg(long, value_delimiter = ',')]
    pub s: Vec<u64>,
    /// Rounds for the separating-function moments (p = 2^t - 1 only).
    #[arg(long, default_value_t = 2)]
    pub r: u32,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// Record file.
    pub file: PathBuf,
    /// 1-based line number.
    #[arg(long, default_value_t = 1)]
    pub line: usize,
}

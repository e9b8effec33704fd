use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_240_611;

/// Trajectory count selected by `--full-scale`.
pub const FULL_SCALE_TRAJ: u64 = 10_000_000;

#[derive(Debug, Parser)]
#[command(
    name = "pdpstar",
    version,
    about = "Piecewise deterministic Monte Carlo for the spin star and generic models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form Bloch curves.
    Analytic(AnalyticArgs),
    /// Monte Carlo estimate of one observable against its exact curve.
    Mc(McArgs),
    /// Reduced density matrix of a model file, sampled and exact.
    Generic(GenericArgs),
    /// Exact curves by diagonalizing the full Hamiltonian.
    Oracle(OracleArgs),
    /// Deterministic invariant checks.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Finite,
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Observable {
    V3,
    Vminus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Pdp1,
    Pdp2,
    Generic1,
    Generic2,
    Analytic,
    Oracle,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long = "tmax", default_value_t = 1.5, allow_negative_numbers = true)]
    pub t_max: f64,
    /// Number of intervals; the grid has `steps + 1` points.
    #[arg(long, default_value_t = 15)]
    pub steps: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SpinStarArgs {
    #[arg(long, value_enum, default_value_t = ModelKind::Finite)]
    pub model: ModelKind,
    #[arg(long = "n-bath", default_value_t = 100)]
    pub n_bath: u32,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub coupling: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SamplingArgs {
    #[arg(long = "traj", default_value_t = 1_000_000)]
    pub n_traj: u64,
    /// Use 10^7 trajectories.
    #[arg(long = "full-scale", conflicts_with = "n_traj")]
    pub full_scale: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, env = "PDPSTAR_WORKERS")]
    pub workers: Option<usize>,
}

impl SamplingArgs {
    pub fn trajectories(&self) -> u64 {
        if self.full_scale {
            FULL_SCALE_TRAJ
        } else {
            self.n_traj
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct AnalyticArgs {
    #[command(flatten)]
    pub star: SpinStarArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    #[arg(long, value_enum, default_value_t = EngineKind::Pdp1)]
    pub engine: EngineKind,
    #[arg(long, value_enum, default_value_t = Observable::V3)]
    pub observable: Observable,
    #[command(flatten)]
    pub star: SpinStarArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GenericArgs {
    #[arg(long = "model-file")]
    pub model_file: PathBuf,
    /// Overrides the engine named in the model file (generic1 or generic2).
    #[arg(long, value_enum)]
    pub engine: Option<EngineKind>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[arg(long = "n-bath", default_value_t = 6)]
    pub n_bath: u32,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub coupling: f64,
    /// Exact reduced states of this model instead of the spin star.
    #[arg(long = "model-file")]
    pub model_file: Option<PathBuf>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SelftestArgs {
    /// Perturb the coupling seen by the closed forms; checks should fail.
    #[arg(long)]
    pub mutate: bool,
}

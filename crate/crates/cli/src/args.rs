use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "natmap", version, about = "Barycenter natural maps of measurable cocycles on hyperbolic space")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GlobalOpts {
    /// Boundary quadrature nodes; 2048 on S^1 and 4096 on S^2 when omitted.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quad_order: Option<usize>,
    /// Barycenter residual tolerance.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = 100)]
    pub max_iter: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; falls back to NATMAP_NUM_THREADS, then to all cores.
    #[arg(long, global = true, env = "NATMAP_NUM_THREADS")]
    #[serde(skip)]
    pub parallelism: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Per-cell CSV dump for volume commands.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub dump_cells: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMode {
    Full,
    DomainOnly,
    Floor,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Barycenter of a boundary measure given as JSON.
    Barycenter(BarycenterArgs),
    /// Density-ratio identity and orbit-sum comparison for the visual measure.
    PsCheck(PsCheckArgs),
    /// Natural map at one point or over the domain cells.
    #[command(subcommand)]
    Natmap(NatmapCommand),
    /// Same as `natmap jacobian-scan`.
    JacobianScan(ScanArgs),
    /// Volume of an equivariant map given as JSON.
    Volume(VolumeArgs),
    /// Natural volume of a cocycle, with the rigidity audit.
    NaturalVolume(NaturalVolumeArgs),
    /// Degree experiment along a covering.
    Degree(DegreeArgs),
    /// Quick invariant suite.
    Selftest,
}

#[derive(Debug, Subcommand)]
pub enum NatmapCommand {
    /// Natural map, differential and form audit at one point.
    Eval(EvalArgs),
    /// Jacobians over the domain cells and all points of X.
    JacobianScan(ScanArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DomainArgs {
    /// Built-in instance: genus2 or genus2-cover-a1.
    #[arg(long, default_value = "genus2")]
    pub domain: String,
    #[arg(long, default_value_t = 4096)]
    pub cells: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BarycenterArgs {
    pub measure: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PsCheckArgs {
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Random basepoint pairs for the density-ratio identity.
    #[arg(long, default_value_t = 20)]
    pub pairs: usize,
    /// Group for the orbit-sum comparison; only genus2 is available.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    #[arg(long, default_value_t = 1.05)]
    pub s: f64,
    #[arg(long, default_value_t = 14.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 16)]
    pub bins: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cocycle: Option<PathBuf>,
    #[command(flatten)]
    pub domain: DomainArgs,
    /// Poincare ball coordinates of `a`, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub ball: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub x: usize,
    /// Jacobian order; the domain dimension when omitted.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScanArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cocycle: Option<PathBuf>,
    #[command(flatten)]
    pub domain: DomainArgs,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VolumeOpts {
    #[command(flatten)]
    pub domain: DomainArgs,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[arg(long, value_enum, default_value_t = ErrorMode::Full)]
    pub error: ErrorMode,
    #[arg(long, default_value_t = 20)]
    pub equivariance_samples: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VolumeArgs {
    #[arg(long)]
    pub map: PathBuf,
    #[command(flatten)]
    pub opts: VolumeOpts,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct NaturalVolumeArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cocycle: Option<PathBuf>,
    #[command(flatten)]
    pub opts: VolumeOpts,
    /// Sample cells per point of X for the rigidity fit; 0 skips the audit.
    #[arg(long, default_value_t = 8)]
    pub rigidity_samples: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DegreeArgs {
    #[arg(long)]
    pub covering: PathBuf,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cocycle: Option<PathBuf>,
    #[command(flatten)]
    pub opts: VolumeOpts,
}

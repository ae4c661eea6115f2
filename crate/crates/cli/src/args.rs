use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use frv_core::models::ModelSpec;
use frv_core::spectra::Bounds;

#[derive(Debug, Parser)]
#[command(name = "frv", version, about = "Eigenvalue densities of free sums of unitary and Hermitian random matrices")]
pub struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "FRV_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate G, -C and the density on a grid.
    Solve(SolveArgs),
    /// Sample eigenvalues of a model.
    Sample(SampleArgs),
    /// Compare a sampled cloud with theory.
    Verify(VerifyArgs),
    /// Trace the border of the eigenvalue support.
    Border(BorderArgs),
    /// Render SVG figures.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Engine {
    /// Closed-form solutions.
    Closed,
    /// Newton inversion of the quaternion addition law.
    Newton,
}

/// `x0:x1:y0:y1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsArg(pub Bounds);

impl FromStr for BoundsArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}")))
            .collect::<Result<_, _>>()?;
        let [x0, x1, y0, y1] = parts[..] else {
            return Err(format!("expected x0:x1:y0:y1, got '{s}'"));
        };
        Bounds::new(x0, x1, y0, y1).map(BoundsArg).map_err(|e| e.to_string())
    }
}

fn parse_model(s: &str) -> Result<ModelSpec, String> {
    s.parse().map_err(|e: frv_core::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct ModelArg {
    /// `cue+cue`, `mcue:M`, `mcue:M@scale`, `mcue:M@norm` or `cue+gue:p`.
    #[arg(long, value_parser = parse_model)]
    pub model: ModelSpec,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub model: ModelArg,
    #[arg(long, value_enum, default_value_t = Engine::Closed)]
    pub engine: Engine,
    /// Defaults to the border's bounding box padded by 20%.
    #[arg(long, allow_hyphen_values = true)]
    pub bounds: Option<BoundsArg>,
    /// Points per axis.
    #[arg(long, default_value_t = 101, value_parser = clap::value_parser!(u32).range(2..))]
    pub grid: u32,
    /// Finite-difference step for the Newton engine's density.
    #[arg(long, default_value_t = 1e-4)]
    pub fd_step: f64,
    /// Output CSV, `-` for stdout.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    /// Also write the closed-form border curves here.
    #[arg(long)]
    pub border_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArg,
    /// Matrix size.
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Eigenvalue CSV; the sidecar goes to `<out>.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Eigenvalue CSV written by `sample`.
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to `<input>.json`.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    /// Radial bins (circular models).
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    /// Planar cells per axis.
    #[arg(long, default_value_t = 20)]
    pub grid: usize,
    /// Report JSON, `-` for stdout.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BorderArgs {
    #[command(flatten)]
    pub model: ModelArg,
    #[arg(long, value_enum, default_value_t = Engine::Closed)]
    pub engine: Engine,
    /// Points per curve.
    #[arg(long, default_value_t = 512)]
    pub points: usize,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    /// Eigenvalue scatter with the border overlay.
    Scatter,
    /// Radial density histogram with the theory curve.
    Radial,
    /// Heat map of a `solve` grid.
    Density,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(value_enum)]
    pub kind: PlotKind,
    /// Eigenvalue CSV (scatter, radial) or solve CSV (density).
    #[arg(long)]
    pub input: PathBuf,
    /// Overrides the model recorded in the sidecar.
    #[arg(long, value_parser = parse_model)]
    pub model: Option<ModelSpec>,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    #[arg(long)]
    pub out: PathBuf,
}

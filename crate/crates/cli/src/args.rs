use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ace_core::planner::CheckerKind;

/// Worst-case clearance and attitude evaluation for rocker-bogie rovers.
///
/// Exit codes: 0 safe (or success), 1 unsafe, 2 unevaluatable, 3 usage
/// error, 4 input or IO error.
#[derive(Debug, Parser)]
#[command(name = "ace", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one pose and print bounds and verdict as JSON.
    Evaluate(EvaluateArgs),
    /// Bounds, oracle and plane-fit estimates on z = a x^2 for a range of a.
    Sweep(SweepArgs),
    /// Replay a waypoint path, settling the oracle and evaluating at each step.
    Drive(DriveArgs),
    /// Planner benchmark on random rock fields.
    Benchmark(BenchmarkArgs),
    /// Write a synthetic DEM and its metadata.
    GenTerrain(GenTerrainArgs),
    /// Per-pose latency of ACE and plane fitting.
    Timing(TimingArgs),
}

/// Built-in rover name (`canonical`, `canonical-rocker`, `curiosity`) or a
/// path to a rover model file.
pub type RoverSpec = String;

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// ESRI ASCII grid.
    #[arg(long)]
    pub dem: PathBuf,
    #[arg(long, default_value = "canonical")]
    pub rover: RoverSpec,
    /// x,y,psi_deg
    #[arg(long, allow_hyphen_values = true)]
    pub pose: String,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon_mm: f64,
    /// Minimum belly-pan clearance, meters.
    #[arg(long)]
    pub min_clearance: Option<f64>,
    #[arg(long)]
    pub max_tilt_deg: Option<f64>,
    /// Maximum wheel drop, meters.
    #[arg(long)]
    pub max_wheel_drop: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long, default_value_t = -0.2, allow_negative_numbers = true)]
    pub a_min: f64,
    #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
    pub a_max: f64,
    /// Number of evenly spaced values of a, endpoints included.
    #[arg(long, default_value_t = 41)]
    pub steps: usize,
    #[arg(long, default_value = "canonical")]
    pub rover: RoverSpec,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon_mm: f64,
    /// Height noise added to the map ACE and the plane fit read.
    #[arg(long, default_value_t = 0.0)]
    pub noise_sigma_mm: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Side of the square terrain, meters.
    #[arg(long, default_value_t = 12.0)]
    pub extent: f64,
    #[arg(long, default_value_t = 0.05)]
    pub resolution: f64,
    /// Plane-fit window radius, meters.
    #[arg(long, default_value_t = 1.25)]
    pub planefit_radius: f64,
    /// CSV output; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct DriveArgs {
    #[arg(long)]
    pub dem: PathBuf,
    #[arg(long, default_value = "canonical")]
    pub rover: RoverSpec,
    /// x1,y1;x2,y2;... in meters.
    #[arg(long, allow_hyphen_values = true)]
    pub waypoints: String,
    /// Sample spacing along the path, meters.
    #[arg(long, default_value_t = 0.05)]
    pub step: f64,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon_mm: f64,
    /// Height noise added to the map ACE reads.
    #[arg(long, default_value_t = 0.0)]
    pub noise_sigma_mm: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchmarkArgs {
    /// Comma-separated rock coverage fractions.
    #[arg(long, default_value = "0.05,0.10,0.15,0.20")]
    pub cfa: String,
    /// Maps per coverage level.
    #[arg(long, default_value_t = 20)]
    pub maps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Checkers to run; repeat or comma-separate.
    #[arg(long, value_delimiter = ',', default_value = "ace,planefit,ideal")]
    pub checker: Vec<CheckerKind>,
    #[arg(long, default_value = "curiosity")]
    pub rover: RoverSpec,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon_mm: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerrainKind {
    RockField,
    Quadratic,
    Bump,
}

#[derive(Debug, Args, Serialize)]
pub struct GenTerrainArgs {
    #[arg(long, value_enum, default_value = "rock-field")]
    pub kind: TerrainKind,
    /// Output ESRI ASCII grid.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub resolution: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Map size along x (north) and y (east): X,Y meters.
    #[arg(long, default_value = "40,30")]
    pub size: String,
    /// Rock field: target coverage fraction.
    #[arg(long, default_value_t = 0.10)]
    pub cfa: f64,
    /// Rock field: rock-free disc x,y,r (repeatable).
    #[arg(long)]
    pub keep_out: Vec<String>,
    /// Quadratic: curvature of z = a x^2 (z-down).
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub a: f64,
    /// Quadratic: side of the square, meters.
    #[arg(long, default_value_t = 12.0)]
    pub extent: f64,
    /// Bump: center x,y.
    #[arg(long, default_value = "5,5")]
    pub bump_center: String,
    /// Bump: semi-axes along x,y.
    #[arg(long, default_value = "0.6,3")]
    pub bump_radius: String,
    /// Bump: peak height above the base, meters.
    #[arg(long, default_value_t = 0.2)]
    pub bump_height: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct TimingArgs {
    #[arg(long, default_value_t = 1000)]
    pub poses: usize,
    /// Evaluations per pose; the per-call average is one sample.
    #[arg(long, default_value_t = 20)]
    pub repeats: usize,
    /// Plane-fit window size in cells.
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    /// Terrain types as rock coverage fractions; 0 is flat ground.
    #[arg(long, default_value = "0,0.2")]
    pub cfa: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "curiosity")]
    pub rover: RoverSpec,
    /// JSON output; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

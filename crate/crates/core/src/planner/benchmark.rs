use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{plan, CheckerKind, CollisionChecker, PlannerConfig};
use crate::ace::SafetyThresholds;
use crate::kinematics::{ModelError, RoverModel, RoverParams};
use crate::sig9;
use crate::terrain::{generate_rock_field, Pose2D, RockFieldSpec, TerrainError};

pub const BENCHMARK_CSV_HEADER: &str =
    "cfa,checker,map_seed,success,path_length_m,inefficiency,checker_calls,wall_time_s";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub cfa_levels: Vec<f64>,
    pub maps_per_level: usize,
    pub seed: u64,
    pub checkers: Vec<CheckerKind>,
    pub map_size: [f64; 2],
    pub resolution: f64,
    pub start: Pose2D,
    pub goal: [f64; 2],
    /// Rock-free radius around the start and the goal.
    pub keep_out_radius: f64,
    pub epsilon: f64,
    pub rover: RoverParams,
    pub planner: PlannerConfig,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            cfa_levels: vec![0.05, 0.10, 0.15, 0.20],
            maps_per_level: 20,
            seed: 1,
            checkers: CheckerKind::ALL.to_vec(),
            map_size: [40.0, 30.0],
            resolution: 0.1,
            start: Pose2D::new(10.0, 15.0, 0.0),
            goal: [30.0, 15.0],
            keep_out_radius: 4.0,
            epsilon: 0.0,
            rover: RoverParams::curiosity_sized(),
            planner: PlannerConfig::default(),
        }
    }
}

impl BenchmarkConfig {
    /// Seed of map `index` at CFA level `level`.
    pub fn map_seed(&self, level: usize, index: usize) -> u64 {
        self.seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(((level as u64) << 32) | index as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub cfa: f64,
    pub checker: CheckerKind,
    pub map_seed: u64,
    pub success: bool,
    pub path_length_m: f64,
    /// NaN when the run failed.
    pub inefficiency: f64,
    pub checker_calls: usize,
    pub wall_time_s: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchmarkError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Terrain(#[from] TerrainError),
    #[error("{0}")]
    Config(String),
}

/// Runs every checker on `maps_per_level` rock fields per CFA level. Maps
/// run in parallel; rows come back in (level, map, checker) order.
pub fn benchmark(cfg: &BenchmarkConfig) -> Result<Vec<BenchmarkRow>, BenchmarkError> {
    cfg.planner.validate().map_err(BenchmarkError::Config)?;
    let model = RoverModel::new(cfg.rover.clone())?;
    let thresholds = SafetyThresholds::for_model(&model);
    let jobs: Vec<(usize, usize)> = (0..cfg.cfa_levels.len())
        .flat_map(|l| (0..cfg.maps_per_level).map(move |m| (l, m)))
        .collect();
    let per_map: Result<Vec<Vec<BenchmarkRow>>, BenchmarkError> = jobs
        .par_iter()
        .map(|&(l, m)| {
            let cfa = cfg.cfa_levels[l];
            let map_seed = cfg.map_seed(l, m);
            let mut spec = RockFieldSpec::new(cfa, cfg.map_size, cfg.resolution, map_seed);
            spec.keep_out = vec![
                [cfg.start.x, cfg.start.y, cfg.keep_out_radius],
                [cfg.goal[0], cfg.goal[1], cfg.keep_out_radius],
            ];
            let field = generate_rock_field(&spec)?;
            Ok(cfg
                .checkers
                .iter()
                .map(|&kind| {
                    let checker = CollisionChecker::with_options(
                        kind,
                        &field.dem,
                        &model,
                        thresholds,
                        cfg.epsilon,
                        &Default::default(),
                    );
                    let out = plan(&cfg.start, cfg.goal, &checker, &cfg.planner);
                    BenchmarkRow {
                        cfa,
                        checker: kind,
                        map_seed,
                        success: out.success,
                        path_length_m: out.path_length,
                        inefficiency: out.inefficiency,
                        checker_calls: out.checker_calls,
                        wall_time_s: out.wall_time_s,
                    }
                })
                .collect())
        })
        .collect();
    Ok(per_map?.into_iter().flatten().collect())
}

pub fn write_benchmark_csv<W: Write>(rows: &[BenchmarkRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{BENCHMARK_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            sig9(r.cfa),
            r.checker,
            r.map_seed,
            r.success as u8,
            sig9(r.path_length_m),
            sig9(r.inefficiency),
            r.checker_calls,
            sig9(r.wall_time_s)
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub cfa: f64,
    pub checker: CheckerKind,
    pub maps: usize,
    pub success_rate: f64,
    pub success_stderr: f64,
    /// Over successful runs; NaN when there are none.
    pub mean_inefficiency: f64,
    pub inefficiency_stderr: f64,
}

fn mean_stderr(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Per (CFA, checker) success rate and mean inefficiency, in first-seen
/// order.
pub fn summarize(rows: &[BenchmarkRow]) -> Vec<BenchmarkSummary> {
    let mut keys: Vec<(f64, CheckerKind)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|k| k.0 == r.cfa && k.1 == r.checker) {
            keys.push((r.cfa, r.checker));
        }
    }
    keys.into_iter()
        .map(|(cfa, checker)| {
            let sel: Vec<&BenchmarkRow> = rows
                .iter()
                .filter(|r| r.cfa == cfa && r.checker == checker)
                .collect();
            let succ: Vec<f64> = sel.iter().map(|r| r.success as u8 as f64).collect();
            let ineff: Vec<f64> = sel
                .iter()
                .filter(|r| r.success)
                .map(|r| r.inefficiency)
                .collect();
            let (sr, se) = mean_stderr(&succ);
            let (mi, ie) = mean_stderr(&ineff);
            BenchmarkSummary {
                cfa,
                checker,
                maps: sel.len(),
                success_rate: sr,
                success_stderr: se,
                mean_inefficiency: mi,
                inefficiency_stderr: ie,
            }
        })
        .collect()
}

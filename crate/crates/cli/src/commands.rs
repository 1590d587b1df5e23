use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, ensure, Context, Result};
use serde::Serialize;

use ace_core::ace::{evaluate_pose, Overall, SafetyThresholds};
use ace_core::analysis::{
    coefficient_of_variation, drive_maps, random_poses, sweep_row, time_ace, time_planefit,
    LatencyStats, SweepOptions, DRIVE_CSV_HEADER, SWEEP_CSV_HEADER,
};
use ace_core::kinematics::{RoverModel, RoverParams};
use ace_core::planner::{benchmark, summarize, write_benchmark_csv, BenchmarkConfig};
use ace_core::sig9;
use ace_core::terrain::{
    add_gaussian_noise, esri, generate_bump, generate_quadratic, generate_rock_field, Bump, Dem,
    Pose2D, RockFieldSpec, TerrainMeta,
};

use crate::args::*;
use crate::manifest::{sidecar_path, RunManifest};

/// Input or output problem; maps to exit code 4.
pub const EXIT_INPUT: i32 = 4;

fn read_input(path: &Path, manifest: &mut RunManifest) -> Result<Vec<u8>> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    manifest.add_input(path, &bytes);
    Ok(bytes)
}

fn load_dem(path: &Path, manifest: &mut RunManifest) -> Result<Dem> {
    let bytes = read_input(path, manifest)?;
    esri::read_esri_ascii(&bytes[..]).with_context(|| format!("parsing {}", path.display()))
}

fn load_rover(spec: &str, manifest: &mut RunManifest) -> Result<RoverModel> {
    let params = match spec {
        "canonical" => RoverParams::canonical(),
        "canonical-rocker" => RoverParams::canonical_rocker(),
        "curiosity" => RoverParams::curiosity_sized(),
        path => {
            let path = Path::new(path);
            let bytes = read_input(path, manifest)?;
            let text = String::from_utf8(bytes)
                .with_context(|| format!("{} is not UTF-8", path.display()))?;
            RoverParams::parse_model_file(&text)
                .with_context(|| format!("parsing {}", path.display()))?
        }
    };
    RoverModel::new(params).context("invalid rover model")
}

fn parse_floats(s: &str, n: usize, what: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| anyhow!("{what} `{s}`: {e}"))?;
    ensure!(
        v.len() == n,
        "{what} `{s}`: expected {n} comma-separated numbers"
    );
    ensure!(
        v.iter().all(|x| x.is_finite()),
        "{what} `{s}`: values must be finite"
    );
    Ok(v)
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| anyhow!("{what} `{s}`: {e}"))?;
    ensure!(
        v.iter().all(|x| x.is_finite()),
        "{what} `{s}`: values must be finite"
    );
    Ok(v)
}

fn parse_pose(s: &str) -> Result<Pose2D> {
    let v = parse_floats(s, 3, "pose")?;
    Ok(Pose2D::new(v[0], v[1], v[2].to_radians()))
}

fn parse_waypoints(s: &str) -> Result<Vec<[f64; 2]>> {
    let w: Vec<[f64; 2]> = s
        .split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| parse_floats(t, 2, "waypoint").map(|v| [v[0], v[1]]))
        .collect::<Result<_>>()?;
    ensure!(w.len() >= 2, "need at least two waypoints");
    Ok(w)
}

fn nonneg_mm(v: f64, what: &str) -> Result<f64> {
    ensure!(
        v.is_finite() && v >= 0.0,
        "{what} must be a non-negative number of millimeters"
    );
    Ok(v * 1e-3)
}

fn csv_line(fields: &[f64]) -> String {
    fields
        .iter()
        .map(|&x| sig9(x))
        .collect::<Vec<_>>()
        .join(",")
}

/// Writes `text` to `out` with a manifest sidecar, or to stdout.
fn emit(text: &str, out: Option<&Path>, manifest: &mut RunManifest) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            manifest.write_sidecar(path)?;
        }
        None => print_stdout(text)?,
    }
    Ok(())
}

/// Writes to stdout, treating a closed pipe as success.
pub fn print_stdout(text: &str) -> Result<()> {
    let mut so = std::io::stdout().lock();
    match so.write_all(text.as_bytes()).and_then(|_| so.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

#[derive(Serialize)]
struct EvaluateOutput<'a> {
    #[serde(flatten)]
    evaluation: &'a ace_core::ace::Evaluation,
    thresholds: SafetyThresholds,
    manifest: RunManifest,
}

/// Returns the verdict's exit code.
pub fn evaluate(a: &EvaluateArgs) -> Result<i32> {
    let mut manifest = RunManifest::new("evaluate", a)?;
    let pose = parse_pose(&a.pose)?;
    let eps = nonneg_mm(a.epsilon_mm, "--epsilon-mm")?;
    let dem = load_dem(&a.dem, &mut manifest)?;
    let model = load_rover(&a.rover, &mut manifest)?;
    let mut t = SafetyThresholds::for_model(&model);
    if let Some(c) = a.min_clearance {
        t.min_clearance = c;
    }
    if let Some(d) = a.max_tilt_deg {
        t.max_tilt = d.to_radians();
    }
    if let Some(w) = a.max_wheel_drop {
        t.max_wheel_drop = w;
    }
    let evaluation = evaluate_pose(&dem, &pose, &model, &t, eps);
    let code = match evaluation.verdict.overall {
        Overall::Safe => 0,
        Overall::Unsafe => 1,
        Overall::Unevaluatable => 2,
    };
    let out = EvaluateOutput {
        evaluation: &evaluation,
        thresholds: t,
        manifest,
    };
    print_stdout(&(serde_json::to_string_pretty(&out)? + "\n"))?;
    Ok(code)
}

pub fn sweep(a: &SweepArgs) -> Result<i32> {
    let mut manifest = RunManifest::new("sweep", a)?;
    ensure!(
        a.a_min.is_finite() && a.a_max.is_finite() && a.a_min <= a.a_max,
        "a range must be finite and ordered"
    );
    ensure!(a.steps >= 1, "--steps must be at least 1");
    ensure!(
        a.resolution > 0.0 && a.extent > 0.0,
        "--extent and --resolution must be positive"
    );
    let model = load_rover(&a.rover, &mut manifest)?;
    let opts = SweepOptions {
        extent: a.extent,
        resolution: a.resolution,
        epsilon: nonneg_mm(a.epsilon_mm, "--epsilon-mm")?,
        noise_sigma: nonneg_mm(a.noise_sigma_mm, "--noise-sigma-mm")?,
        seed: a.seed,
        planefit_radius: a.planefit_radius,
    };
    manifest.seeds.push(a.seed);
    let n_fields = SWEEP_CSV_HEADER.split(',').count();
    let mut text = format!("{SWEEP_CSV_HEADER}\n");
    for k in 0..a.steps {
        let v = if a.steps == 1 {
            a.a_min
        } else {
            a.a_min + (a.a_max - a.a_min) * k as f64 / (a.steps - 1) as f64
        };
        match sweep_row(v, &model, &opts) {
            Ok(row) => text += &csv_line(&row.csv_fields()),
            Err(e) => {
                eprintln!("warning: a = {v}: {e}");
                let mut f = vec![f64::NAN; n_fields];
                f[0] = v;
                f[n_fields - 2] = 0.0;
                f[n_fields - 1] = 0.0;
                text += &csv_line(&f);
            }
        }
        text.push('\n');
    }
    emit(&text, a.out.as_deref(), &mut manifest)?;
    Ok(0)
}

pub fn drive(a: &DriveArgs) -> Result<i32> {
    let mut manifest = RunManifest::new("drive", a)?;
    ensure!(
        a.step > 0.0 && a.step.is_finite(),
        "--step must be positive"
    );
    let waypoints = parse_waypoints(&a.waypoints)?;
    let eps = nonneg_mm(a.epsilon_mm, "--epsilon-mm")?;
    let sigma = nonneg_mm(a.noise_sigma_mm, "--noise-sigma-mm")?;
    let truth = load_dem(&a.dem, &mut manifest)?;
    let model = load_rover(&a.rover, &mut manifest)?;
    for w in &waypoints {
        ensure!(
            truth.contains_point(*w),
            "waypoint ({}, {}) is outside the DEM",
            w[0],
            w[1]
        );
    }
    manifest.seeds.push(a.seed);
    let ace_dem = if sigma > 0.0 {
        add_gaussian_noise(&truth, sigma, 3.0 * sigma, a.seed)
    } else {
        truth.clone()
    };
    let rows = drive_maps(&ace_dem, &truth, &model, &waypoints, a.step, eps)?;
    let uncontained = rows
        .iter()
        .filter(|r| r.bounds.is_some() && !r.contained)
        .count();
    let unconverged = rows.iter().filter(|r| !r.converged).count();
    if uncontained + unconverged > 0 {
        eprintln!(
            "note: {uncontained} rows outside bounds, {unconverged} oracle runs not converged"
        );
    }
    let mut text = format!("{DRIVE_CSV_HEADER}\n");
    for r in &rows {
        text += &csv_line(&r.csv_fields());
        text.push('\n');
    }
    emit(&text, a.out.as_deref(), &mut manifest)?;
    Ok(0)
}

pub fn run_benchmark(a: &BenchmarkArgs) -> Result<i32> {
    let mut manifest = RunManifest::new("benchmark", a)?;
    let levels = parse_list(&a.cfa, "--cfa")?;
    ensure!(
        !levels.is_empty() && levels.iter().all(|&c| (0.0..1.0).contains(&c)),
        "--cfa values must lie in [0, 1)"
    );
    ensure!(!a.checker.is_empty(), "no checkers selected");
    let model = load_rover(&a.rover, &mut manifest)?;
    let cfg = BenchmarkConfig {
        cfa_levels: levels,
        maps_per_level: a.maps,
        seed: a.seed,
        checkers: a.checker.clone(),
        epsilon: nonneg_mm(a.epsilon_mm, "--epsilon-mm")?,
        rover: model.params().clone(),
        ..Default::default()
    };
    manifest.seeds.push(a.seed);
    manifest.parameters["resolved"] = serde_json::to_value(&cfg)?;
    let rows = benchmark(&cfg)?;
    eprintln!(
        "{:>6} {:>9} {:>5} {:>14} {:>20}",
        "cfa", "checker", "maps", "success", "inefficiency"
    );
    for s in summarize(&rows) {
        eprintln!(
            "{:>6.2} {:>9} {:>5} {:>6.3} ± {:<5.3} {:>9.4} ± {:<7.4}",
            s.cfa,
            s.checker.as_str(),
            s.maps,
            s.success_rate,
            s.success_stderr,
            s.mean_inefficiency,
            s.inefficiency_stderr
        );
    }
    let mut buf = Vec::new();
    write_benchmark_csv(&rows, &mut buf)?;
    emit(&String::from_utf8(buf)?, a.out.as_deref(), &mut manifest)?;
    Ok(0)
}

pub fn gen_terrain(a: &GenTerrainArgs) -> Result<i32> {
    let mut manifest = RunManifest::new("gen-terrain", a)?;
    ensure!(
        a.resolution > 0.0 && a.resolution.is_finite(),
        "--resolution must be positive"
    );
    let (dem, meta) = match a.kind {
        TerrainKind::RockField => {
            let size = parse_floats(&a.size, 2, "--size")?;
            ensure!(size.iter().all(|&s| s > 0.0), "--size must be positive");
            ensure!((0.0..1.0).contains(&a.cfa), "--cfa must lie in [0, 1)");
            let mut spec = RockFieldSpec::new(a.cfa, [size[0], size[1]], a.resolution, a.seed);
            for k in &a.keep_out {
                let v = parse_floats(k, 3, "--keep-out")?;
                spec.keep_out.push([v[0], v[1], v[2]]);
            }
            manifest.seeds.push(a.seed);
            let field = generate_rock_field(&spec)?;
            let meta = field.meta(&spec);
            (field.dem, meta)
        }
        TerrainKind::Quadratic => {
            ensure!(a.extent > 0.0, "--extent must be positive");
            let meta = TerrainMeta {
                generator: "quadratic".into(),
                parameters: serde_json::json!({
                    "a": a.a,
                    "extent_m": a.extent,
                    "resolution_m": a.resolution,
                    "surface": "z = a x^2, z down",
                }),
                seed: None,
                achieved_cfa: None,
            };
            (generate_quadratic(a.a, a.extent, a.resolution), meta)
        }
        TerrainKind::Bump => {
            let size = parse_floats(&a.size, 2, "--size")?;
            let c = parse_floats(&a.bump_center, 2, "--bump-center")?;
            let r = parse_floats(&a.bump_radius, 2, "--bump-radius")?;
            ensure!(r.iter().all(|&v| v > 0.0), "--bump-radius must be positive");
            let bump = Bump {
                center: [c[0], c[1]],
                radius: [r[0], r[1]],
                height: a.bump_height,
            };
            let meta = TerrainMeta {
                generator: "bump".into(),
                parameters: serde_json::json!({
                    "size_m": size,
                    "resolution_m": a.resolution,
                    "bump": bump,
                    "profile": "raised cosine",
                }),
                seed: None,
                achieved_cfa: None,
            };
            (generate_bump([size[0], size[1]], a.resolution, &bump), meta)
        }
    };
    esri::save(&dem, &a.out)?;
    let meta_path = sidecar_path(&a.out, "meta.json");
    std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)? + "\n")
        .with_context(|| format!("writing {}", meta_path.display()))?;
    manifest.outputs = vec![a.out.display().to_string(), meta_path.display().to_string()];
    manifest.write_sidecar(&a.out)?;
    Ok(0)
}

#[derive(Serialize)]
struct TerrainTiming {
    cfa: f64,
    ace: LatencyStats,
    planefit: LatencyStats,
}

#[derive(Serialize)]
struct TimingReport {
    poses: usize,
    repeats: usize,
    planefit_points: usize,
    terrains: Vec<TerrainTiming>,
    /// Across terrain types, of the per-terrain ACE means.
    ace_mean_cv: f64,
    planefit_over_ace: f64,
    manifest: RunManifest,
}

pub fn timing(a: &TimingArgs) -> Result<i32> {
    let mut manifest = RunManifest::new("timing", a)?;
    let levels = parse_list(&a.cfa, "--cfa")?;
    ensure!(
        !levels.is_empty() && levels.iter().all(|&c| (0.0..1.0).contains(&c)),
        "--cfa values must lie in [0, 1)"
    );
    ensure!(
        a.poses > 0 && a.repeats > 0 && a.points > 0,
        "--poses, --repeats and --points must be positive"
    );
    let model = load_rover(&a.rover, &mut manifest)?;
    manifest.seeds.push(a.seed);
    let (size, res) = (30.0, 0.1);
    let n = (size / res) as usize;
    let mut terrains = Vec::new();
    let mut poses = Vec::new();
    for (k, &cfa) in levels.iter().enumerate() {
        let dem = if cfa == 0.0 {
            Dem::flat(n, n, res, [0.0, 0.0], 0.0)
        } else {
            generate_rock_field(&RockFieldSpec::new(
                cfa,
                [size, size],
                res,
                a.seed.wrapping_add(k as u64),
            ))?
            .dem
        };
        if poses.is_empty() {
            poses = random_poses(&dem, 5.0, a.poses, a.seed);
        }
        // Warm-up builds the lazily constructed range index.
        time_ace(&dem, &model, &poses[..poses.len().min(10)], 1);
        terrains.push(TerrainTiming {
            cfa,
            ace: time_ace(&dem, &model, &poses, a.repeats),
            planefit: time_planefit(&dem, &poses, a.points, a.repeats),
        });
    }
    let ace_means: Vec<f64> = terrains.iter().map(|t| t.ace.mean).collect();
    let ratio =
        terrains.iter().map(|t| t.planefit.mean).sum::<f64>() / ace_means.iter().sum::<f64>();
    for t in &terrains {
        eprintln!(
            "cfa {:.2}: ACE mean {:.2} us p99 {:.2} us; planefit mean {:.2} us p99 {:.2} us",
            t.cfa,
            t.ace.mean * 1e6,
            t.ace.p99 * 1e6,
            t.planefit.mean * 1e6,
            t.planefit.p99 * 1e6
        );
    }
    let out_path = a.out.clone();
    let mut report = TimingReport {
        poses: a.poses,
        repeats: a.repeats,
        planefit_points: a.points,
        ace_mean_cv: coefficient_of_variation(&ace_means),
        planefit_over_ace: ratio,
        terrains,
        manifest,
    };
    if let Some(p) = &out_path {
        report.manifest.outputs.push(p.display().to_string());
    }
    let text = serde_json::to_string_pretty(&report)? + "\n";
    match out_path {
        Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print_stdout(&text)?,
    }
    Ok(0)
}

pub fn check_out_dir(out: Option<&Path>) -> Result<()> {
    if let Some(dir) = out
        .and_then(Path::parent)
        .filter(|d| !d.as_os_str().is_empty())
    {
        if !dir.is_dir() {
            bail!("output directory {} does not exist", dir.display());
        }
    }
    Ok(())
}

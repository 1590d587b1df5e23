//! Experiment drivers shared by the command line and the acceptance suite:
//! undulation sweeps, trajectory replays, containment checks and latency
//! measurement.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ace::{evaluate_pose, Evaluation, SafetyThresholds, StateBounds};
use crate::interval::Interval;
use crate::kinematics::RoverModel;
use crate::oracle::{settle_with, true_clearance, OracleError, SettleOptions, SettleResult};
use crate::planner::planefit::{plane_fit, planefit_estimate};
use crate::terrain::{add_gaussian_noise, generate_quadratic, Dem, Pose2D};

/// Slack for floating-point rounding in containment checks.
pub const CONTAINMENT_TOL: f64 = 1e-9;

/// Names of the bounded quantities the settled state falls outside of.
/// Clearance is checked against its lower bound only.
pub fn containment_violations(
    b: &StateBounds,
    truth: &SettleResult,
    clearance: f64,
) -> Vec<&'static str> {
    let s = &truth.suspension;
    let body = &truth.body;
    let checks: [(&'static str, Interval, f64); 13] = [
        ("delta_l", b.delta, s.delta_l),
        ("delta_r", -b.delta, s.delta_r),
        ("beta_l", b.beta_l, s.beta_l),
        ("beta_r", b.beta_r, s.beta_r),
        ("z_d_l", b.z_d_l, s.z_d_l),
        ("z_d_r", b.z_d_r, s.z_d_r),
        ("z_b_l", b.z_b_l, s.z_b_l),
        ("z_b_r", b.z_b_r, s.z_b_r),
        ("phi", b.phi, body.phi),
        ("theta", b.theta, body.theta),
        ("z_o", b.z_o, body.z_o),
        ("z_p", b.z_p, body.z_p),
        (
            "clearance",
            Interval::new(b.clearance.map_or(f64::INFINITY, |c| c.lo), f64::INFINITY),
            clearance,
        ),
    ];
    checks
        .into_iter()
        .filter(|(_, iv, v)| !iv.contains_within(*v, CONTAINMENT_TOL))
        .map(|(n, _, _)| n)
        .collect()
}

/// Oracle settle that keeps results outside the joint limits.
pub fn settle_truth(
    dem: &Dem,
    pose: &Pose2D,
    model: &RoverModel,
    constrained: bool,
) -> Result<SettleResult, OracleError> {
    let opts = SettleOptions {
        enforce_limits: false,
        ..Default::default()
    };
    let regions = constrained.then(|| model.wheel_center_regions());
    settle_with(dem, pose, model, regions, &opts)
}

/// ACE evaluation next to the oracle state at one pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub evaluation: Evaluation,
    pub truth: SettleResult,
    pub true_clearance: f64,
    /// Empty when every bound holds; None when ACE produced no bounds.
    pub violations: Option<Vec<String>>,
}

/// Evaluates ACE on `ace_dem` and settles the oracle on `truth_dem` with
/// contacts held in the wheel boxes.
pub fn compare_at(
    ace_dem: &Dem,
    truth_dem: &Dem,
    pose: &Pose2D,
    model: &RoverModel,
    epsilon: f64,
    constrained: bool,
) -> Result<Comparison, OracleError> {
    let thresholds = SafetyThresholds::for_model(model);
    let evaluation = evaluate_pose(ace_dem, pose, model, &thresholds, epsilon);
    let truth = settle_truth(truth_dem, pose, model, constrained)?;
    let c = true_clearance(truth_dem, pose, model, &truth.body)?;
    let violations = evaluation
        .bounds
        .filter(|b| b.clearance.is_some())
        .map(|b| {
            containment_violations(&b, &truth, c)
                .into_iter()
                .map(String::from)
                .collect()
        });
    Ok(Comparison {
        evaluation,
        truth,
        true_clearance: c,
        violations,
    })
}

pub const SWEEP_CSV_HEADER: &str = "a,ace_clearance_lo,ace_clearance_hi,truth_clearance,planefit_clearance,\
ace_phi_lo,ace_phi_hi,truth_phi,planefit_phi,ace_theta_lo,ace_theta_hi,truth_theta,planefit_theta,\
ace_delta_lo,ace_delta_hi,truth_delta,ace_beta_l_lo,ace_beta_l_hi,truth_beta_l,ace_beta_r_lo,ace_beta_r_hi,truth_beta_r,\
converged,contained";

/// One point of the undulation sweep on `z = a x^2`. Angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub a: f64,
    pub ace_clearance: Interval,
    pub truth_clearance: f64,
    pub planefit_clearance: f64,
    pub ace_phi: Interval,
    pub truth_phi: f64,
    pub planefit_phi: f64,
    pub ace_theta: Interval,
    pub truth_theta: f64,
    pub planefit_theta: f64,
    pub ace_delta: Interval,
    pub truth_delta: f64,
    pub ace_beta_l: Interval,
    pub truth_beta_l: f64,
    pub ace_beta_r: Interval,
    pub truth_beta_r: f64,
    pub converged: bool,
    pub contained: bool,
}

impl SweepRow {
    pub fn csv_fields(&self) -> Vec<f64> {
        vec![
            self.a,
            self.ace_clearance.lo,
            self.ace_clearance.hi,
            self.truth_clearance,
            self.planefit_clearance,
            self.ace_phi.lo,
            self.ace_phi.hi,
            self.truth_phi,
            self.planefit_phi,
            self.ace_theta.lo,
            self.ace_theta.hi,
            self.truth_theta,
            self.planefit_theta,
            self.ace_delta.lo,
            self.ace_delta.hi,
            self.truth_delta,
            self.ace_beta_l.lo,
            self.ace_beta_l.hi,
            self.truth_beta_l,
            self.ace_beta_r.lo,
            self.ace_beta_r.hi,
            self.truth_beta_r,
            self.converged as u8 as f64,
            self.contained as u8 as f64,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub extent: f64,
    pub resolution: f64,
    pub epsilon: f64,
    /// Standard deviation of height noise added to the map ACE sees.
    pub noise_sigma: f64,
    pub seed: u64,
    pub planefit_radius: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            extent: 12.0,
            resolution: 0.05,
            epsilon: 0.0,
            noise_sigma: 0.0,
            seed: 0,
            planefit_radius: 1.25,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("oracle: {0}")]
    Oracle(#[from] OracleError),
    #[error("planefit: {0}")]
    Planefit(#[from] crate::planner::planefit::PlanefitError),
    #[error("ACE produced no bounds: {0}")]
    NoBounds(String),
}

/// Rover at the origin facing +x on `z = a x^2`.
pub fn sweep_row(a: f64, model: &RoverModel, opts: &SweepOptions) -> Result<SweepRow, SweepError> {
    let truth_dem = generate_quadratic(a, opts.extent, opts.resolution);
    let ace_dem = if opts.noise_sigma > 0.0 {
        add_gaussian_noise(
            &truth_dem,
            opts.noise_sigma,
            3.0 * opts.noise_sigma,
            opts.seed,
        )
    } else {
        truth_dem.clone()
    };
    let pose = Pose2D::new(0.0, 0.0, 0.0);
    let cmp = compare_at(&ace_dem, &truth_dem, &pose, model, opts.epsilon, false)?;
    let b = cmp.evaluation.bounds.ok_or_else(|| {
        SweepError::NoBounds(cmp.evaluation.verdict.reason.clone().unwrap_or_default())
    })?;
    let pf = planefit_estimate(&ace_dem, &pose, model, opts.planefit_radius)?;
    let t = &cmp.truth;
    Ok(SweepRow {
        a,
        ace_clearance: b.clearance.expect("evaluated"),
        truth_clearance: cmp.true_clearance,
        planefit_clearance: pf.clearance,
        ace_phi: b.phi,
        truth_phi: t.body.phi,
        planefit_phi: pf.body.phi,
        ace_theta: b.theta,
        truth_theta: t.body.theta,
        planefit_theta: pf.body.theta,
        ace_delta: b.delta,
        truth_delta: t.suspension.delta_l,
        ace_beta_l: b.beta_l,
        truth_beta_l: t.suspension.beta_l,
        ace_beta_r: b.beta_r,
        truth_beta_r: t.suspension.beta_r,
        converged: t.converged,
        contained: cmp.violations.as_ref().is_some_and(|v| v.is_empty()),
    })
}

pub const DRIVE_CSV_HEADER: &str = "s,x,y,psi,\
truth_phi,ace_phi_lo,ace_phi_hi,truth_theta,ace_theta_lo,ace_theta_hi,\
truth_delta_l,ace_delta_lo,ace_delta_hi,truth_beta_l,ace_beta_l_lo,ace_beta_l_hi,\
truth_beta_r,ace_beta_r_lo,ace_beta_r_hi,truth_z_o,ace_z_o_lo,ace_z_o_hi,converged,contained";

/// One replay sample. Bounds are NaN when ACE could not produce them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveRow {
    /// Distance along the path.
    pub s: f64,
    pub pose: Pose2D,
    pub truth: SettleResult,
    pub bounds: Option<StateBounds>,
    pub converged: bool,
    pub contained: bool,
}

impl DriveRow {
    pub fn csv_fields(&self) -> Vec<f64> {
        let nan = Interval {
            lo: f64::NAN,
            hi: f64::NAN,
        };
        let b = self.bounds;
        let g = |f: fn(&StateBounds) -> Interval| b.as_ref().map_or(nan, f);
        let (phi, theta, delta, bl, br, zo) = (
            g(|b| b.phi),
            g(|b| b.theta),
            g(|b| b.delta),
            g(|b| b.beta_l),
            g(|b| b.beta_r),
            g(|b| b.z_o),
        );
        let t = &self.truth;
        vec![
            self.s,
            self.pose.x,
            self.pose.y,
            self.pose.psi,
            t.body.phi,
            phi.lo,
            phi.hi,
            t.body.theta,
            theta.lo,
            theta.hi,
            t.suspension.delta_l,
            delta.lo,
            delta.hi,
            t.suspension.beta_l,
            bl.lo,
            bl.hi,
            t.suspension.beta_r,
            br.lo,
            br.hi,
            t.body.z_o,
            zo.lo,
            zo.hi,
            self.converged as u8 as f64,
            self.contained as u8 as f64,
        ]
    }
}

/// Poses every `step` meters along a polyline, heading along the segment.
pub fn sample_path(waypoints: &[[f64; 2]], step: f64) -> Vec<(f64, Pose2D)> {
    assert!(step > 0.0, "step must be positive");
    let mut out = Vec::new();
    let mut s0 = 0.0;
    for w in waypoints.windows(2) {
        let (dx, dy) = (w[1][0] - w[0][0], w[1][1] - w[0][1]);
        let len = dx.hypot(dy);
        if len == 0.0 {
            continue;
        }
        let psi = dy.atan2(dx);
        let n = (len / step).floor() as usize;
        let first = if out.is_empty() { 0 } else { 1 };
        for k in first..=n {
            let t = k as f64 * step;
            out.push((
                s0 + t,
                Pose2D::new(w[0][0] + dx * t / len, w[0][1] + dy * t / len, psi),
            ));
        }
        s0 += len;
    }
    out
}

/// Settles and evaluates at each sample of the path.
pub fn drive(
    dem: &Dem,
    model: &RoverModel,
    waypoints: &[[f64; 2]],
    step: f64,
    epsilon: f64,
) -> Result<Vec<DriveRow>, OracleError> {
    drive_maps(dem, dem, model, waypoints, step, epsilon)
}

/// Like [`drive`], with ACE reading `ace_dem` and the oracle `truth_dem`.
pub fn drive_maps(
    ace_dem: &Dem,
    truth_dem: &Dem,
    model: &RoverModel,
    waypoints: &[[f64; 2]],
    step: f64,
    epsilon: f64,
) -> Result<Vec<DriveRow>, OracleError> {
    sample_path(waypoints, step)
        .into_iter()
        .map(|(s, pose)| {
            let c = compare_at(ace_dem, truth_dem, &pose, model, epsilon, false)?;
            Ok(DriveRow {
                s,
                pose,
                converged: c.truth.converged,
                contained: c.violations.as_ref().is_some_and(|v| v.is_empty()),
                truth: c.truth,
                bounds: c.evaluation.bounds,
            })
        })
        .collect()
}

/// Per-pose latency statistics in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub samples: usize,
    pub mean: f64,
    pub p99: f64,
    pub std: f64,
}

impl LatencyStats {
    pub fn from_samples(mut v: Vec<f64>) -> Self {
        assert!(!v.is_empty(), "no samples");
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        let k = ((0.99 * n).ceil() as usize).clamp(1, v.len()) - 1;
        Self {
            samples: v.len(),
            mean,
            p99: v[k],
            std: var.sqrt(),
        }
    }
}

/// Coefficient of variation (population) of a set of values.
pub fn coefficient_of_variation(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt() / m
}

/// Random poses whose wheel boxes and pan region stay on the map.
pub fn random_poses(dem: &Dem, margin: f64, n: usize, seed: u64) -> Vec<Pose2D> {
    let (xe, ye) = dem.extent();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            Pose2D::new(
                rng.gen_range(xe.lo + margin..xe.hi - margin),
                rng.gen_range(ye.lo + margin..ye.hi - margin),
                rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
            )
        })
        .collect()
}

/// Radius whose window holds about `points` cells.
pub fn window_radius_for(points: usize, resolution: f64) -> f64 {
    (points as f64 / std::f64::consts::PI).sqrt() * resolution
}

/// Times single-pose ACE evaluation. Each pose is evaluated `repeats`
/// times and the per-call average kept.
pub fn time_ace(dem: &Dem, model: &RoverModel, poses: &[Pose2D], repeats: usize) -> LatencyStats {
    let t = SafetyThresholds::for_model(model);
    let samples = poses
        .iter()
        .map(|p| {
            let t0 = Instant::now();
            for _ in 0..repeats {
                std::hint::black_box(evaluate_pose(dem, std::hint::black_box(p), model, &t, 0.0));
            }
            t0.elapsed().as_secs_f64() / repeats as f64
        })
        .collect();
    LatencyStats::from_samples(samples)
}

/// Times a plane fit over a window of about `points` cells at each pose.
pub fn time_planefit(dem: &Dem, poses: &[Pose2D], points: usize, repeats: usize) -> LatencyStats {
    let r = window_radius_for(points, dem.resolution());
    let samples = poses
        .iter()
        .map(|p| {
            let t0 = Instant::now();
            for _ in 0..repeats {
                let _ = std::hint::black_box(plane_fit(dem, std::hint::black_box([p.x, p.y]), r));
            }
            t0.elapsed().as_secs_f64() / repeats as f64
        })
        .collect();
    LatencyStats::from_samples(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terrain::{generate_bump, Bump};

    #[test]
    fn flat_sweep_row_is_exact() {
        let m = RoverModel::canonical();
        let r = sweep_row(0.0, &m, &SweepOptions::default()).unwrap();
        assert!(r.contained && r.converged);
        assert_eq!(r.ace_clearance.width(), 0.0);
        assert!((r.ace_clearance.lo - r.truth_clearance).abs() < 1e-12);
        assert!((r.planefit_clearance - r.truth_clearance).abs() < 1e-12);
        assert_eq!(r.ace_theta.width(), 0.0);
    }

    #[test]
    fn sweep_truth_is_contained() {
        let m = RoverModel::canonical();
        for a in [-0.2, -0.05, 0.1, 0.2] {
            let r = sweep_row(a, &m, &SweepOptions::default()).unwrap();
            assert!(r.converged && r.contained, "{a}: {r:?}");
            assert!(r.ace_clearance.width() > 0.0);
            assert_eq!(r.csv_fields().len(), SWEEP_CSV_HEADER.split(',').count());
        }
    }

    #[test]
    fn path_sampling() {
        let p = sample_path(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]], 0.25);
        assert_eq!(p.len(), 9);
        assert!((p[4].0 - 1.0).abs() < 1e-12 && p[4].1.psi == 0.0);
        assert!((p[8].1.y - 1.0).abs() < 1e-12);
        assert!((p[5].1.psi - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn drive_over_bump_stays_contained() {
        let m = RoverModel::canonical();
        let dem = generate_bump(
            [10.0, 10.0],
            0.05,
            &Bump {
                center: [5.0, 5.0],
                radius: [0.6, 3.0],
                height: 0.2,
            },
        );
        let rows = drive(&dem, &m, &[[2.5, 5.0], [7.5, 5.0]], 0.25, 0.0).unwrap();
        assert_eq!(rows.len(), 21);
        for r in &rows {
            assert!(r.converged && r.contained, "{}", r.s);
            assert_eq!(r.csv_fields().len(), DRIVE_CSV_HEADER.split(',').count());
        }
        assert!(rows.iter().any(|r| r.bounds.unwrap().phi.width() > 1e-3));
        assert!(rows.iter().all(|r| r.truth.body.phi.abs() < 1e-9));
    }

    #[test]
    fn latency_stats() {
        let s = LatencyStats::from_samples((1..=100).map(|x| x as f64).collect());
        assert_eq!(s.p99, 99.0);
        assert_eq!(s.mean, 50.5);
        assert!((coefficient_of_variation(&[1.0, 3.0]) - 0.5).abs() < 1e-12);
        let r = window_radius_for(200, 0.1);
        let dem = Dem::flat(50, 50, 0.1, [0.0, 0.0], 0.0);
        let n = plane_fit(&dem, [2.5, 2.5], r).unwrap().points;
        assert!((180..=220).contains(&n), "{n}");
    }
}

//! Exact kinematic settling: finds the suspension state at which every
//! wheel rests on the terrain.
//!
//! The unknowns are the six contact heights. Each iteration solves the
//! forward kinematics for the current heights, places the wheels, and reads
//! back the highest terrain point under each wheel footprint. The update is
//! under-relaxed, and the relaxation is halved whenever the contact error
//! grows.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::Interval;
use crate::kinematics::{
    body_to_level, solve, BodyRect, BodyState, KinematicsError, RoverModel, SuspensionState,
    Variant, WheelHeights,
};
use crate::terrain::{Dem, Pose2D, TerrainError};

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_ITERATIONS: usize = 200;
const MIN_RELAXATION: f64 = 0.125;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("terrain: {0}")]
    Terrain(#[from] TerrainError),
    #[error("kinematics: {0}")]
    Kinematics(#[from] KinematicsError),
    #[error("settled state leaves the joint limits")]
    SuspensionLimitExceeded(Box<SettleResult>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettleResult {
    pub suspension: SuspensionState,
    pub body: BodyState,
    pub heights: WheelHeights,
    /// World `[x, y, z]` of each wheel's contact point; NaN for absent wheels.
    pub contacts: [[f64; 3]; 6],
    /// Largest gap between a wheel and the terrain under it.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettleOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Reject results outside the model's joint limits.
    pub enforce_limits: bool,
}

impl Default for SettleOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            enforce_limits: true,
        }
    }
}

/// Settles the rover with unconstrained contact locations.
pub fn settle(dem: &Dem, pose: &Pose2D, model: &RoverModel) -> Result<SettleResult, OracleError> {
    settle_with(dem, pose, model, None, &SettleOptions::default())
}

/// Settles the rover with each footprint center held inside its region.
pub fn settle_constrained(
    dem: &Dem,
    pose: &Pose2D,
    model: &RoverModel,
    regions: &[BodyRect; 6],
) -> Result<SettleResult, OracleError> {
    settle_with(dem, pose, model, Some(regions), &SettleOptions::default())
}

pub fn settle_with(
    dem: &Dem,
    pose: &Pose2D,
    model: &RoverModel,
    regions: Option<&[BodyRect; 6]>,
    opts: &SettleOptions,
) -> Result<SettleResult, OracleError> {
    let p = model.params();
    let (hx, hy) = (0.5 * p.wheel_box_x, 0.5 * p.wheel_box_y);
    let wheels = model.wheels();

    // Terrain under the footprint centered at a heading-frame position.
    let contact = |pos: [(f64, f64); 6]| -> Result<([f64; 6], [[f64; 3]; 6]), OracleError> {
        let mut h = [f64::NAN; 6];
        let mut c = [[f64::NAN; 3]; 6];
        for &w in wheels {
            let (mut x, mut y) = pos[w as usize];
            if let Some(r) = regions {
                let r = &r[w as usize];
                x = x.clamp(r.x.lo, r.x.hi);
                y = y.clamp(r.y.lo, r.y.hi);
            }
            let poly =
                pose.rect_to_world(Interval::new(x - hx, x + hx), Interval::new(y - hy, y + hy));
            let (z, at) = dem.highest_point_in_polygon(&poly)?;
            h[w as usize] = z;
            c[w as usize] = [at[0], at[1], z];
        }
        Ok((h, c))
    };

    let flat = model.wheel_positions_for(0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut h, _) = contact(flat)?;
    let mut omega: f64 = 1.0;
    let mut last_residual = f64::INFINITY;
    let mut best: Option<SettleResult> = None;
    let mut last_error = None;
    let mut iterations = 0;
    assert!(opts.max_iterations > 0, "max_iterations must be positive");

    while iterations < opts.max_iterations {
        iterations += 1;
        let (susp, body) = solve(&WheelHeights(h), model)?;
        let pos =
            model.wheel_positions_for(susp.delta_l, susp.beta_l, susp.beta_r, body.phi, body.theta);
        let (h_new, contacts) = contact(pos)?;
        let residual = wheels
            .iter()
            .map(|w| (h_new[*w as usize] - h[*w as usize]).abs())
            .fold(0.0, f64::max);
        // The reported state rests on the terrain actually read under the
        // placed wheels.
        if best.as_ref().is_none_or(|b| residual < b.residual) {
            match solve(&WheelHeights(h_new), model) {
                Ok((s, b)) => {
                    best = Some(SettleResult {
                        suspension: s,
                        body: b,
                        heights: WheelHeights(h_new),
                        contacts,
                        residual,
                        iterations,
                        converged: residual <= opts.tolerance,
                    })
                }
                Err(e) => last_error = Some(e),
            }
        }
        if residual <= opts.tolerance {
            break;
        }
        if residual > last_residual {
            omega = (omega * 0.5).max(MIN_RELAXATION);
        }
        last_residual = residual;
        for &w in wheels {
            let k = w as usize;
            h[k] += omega * (h_new[k] - h[k]);
        }
    }

    let mut result = match (best, last_error) {
        (Some(r), _) => r,
        (None, Some(e)) => return Err(e.into()),
        (None, None) => unreachable!("max_iterations is zero"),
    };
    result.iterations = iterations;
    if opts.enforce_limits && !within_limits(&result.suspension, model) {
        return Err(OracleError::SuspensionLimitExceeded(Box::new(result)));
    }
    Ok(result)
}

fn within_limits(s: &SuspensionState, model: &RoverModel) -> bool {
    let p = model.params();
    let d = p.delta_limits.as_interval();
    let mut ok = d.contains(s.delta_l) && d.contains(s.delta_r);
    if model.variant() == Variant::RockerBogie {
        let b = p.beta_limits.as_interval();
        ok &= b.contains(s.beta_l) && b.contains(s.beta_r);
    }
    ok
}

/// World corners of the belly pan for a settled body.
pub fn pan_polygon(pose: &Pose2D, body: &BodyState, model: &RoverModel) -> [[f64; 2]; 4] {
    let p = model.params();
    let (a, b) = (0.5 * p.l_p, 0.5 * p.w_p);
    [[a, b], [a, -b], [-a, -b], [-a, b]].map(|[x, y]| {
        let l = body_to_level(body.phi, body.theta, [x, y, -p.c_0]);
        pose.to_world(l[0], l[1])
    })
}

/// Gap between the lowest pan point and the highest ground under the pan.
pub fn true_clearance(
    dem: &Dem,
    pose: &Pose2D,
    model: &RoverModel,
    body: &BodyState,
) -> Result<f64, TerrainError> {
    let (z_g, _) = dem.highest_point_in_polygon(&pan_polygon(pose, body, model))?;
    Ok(z_g - body.z_p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{RoverParams, Wheel};
    use crate::terrain::{generate_bump, generate_quadratic, Bump};

    fn canonical() -> RoverModel {
        RoverModel::canonical()
    }

    #[test]
    fn flat_ground_settles_at_zero() {
        let m = canonical();
        let dem = Dem::flat(100, 100, 0.1, [-5.0, -5.0], 0.25);
        let r = settle(&dem, &Pose2D::new(0.3, -0.2, 1.1), &m).unwrap();
        assert!(r.converged && r.residual <= 1e-6);
        assert!((r.body.z_o - 0.25).abs() < 1e-12);
        for v in [
            r.body.phi,
            r.body.theta,
            r.suspension.delta_l,
            r.suspension.beta_l,
            r.suspension.beta_r,
        ] {
            assert!(v.abs() < 1e-12);
        }
        let c = true_clearance(&dem, &Pose2D::new(0.3, -0.2, 1.1), &m, &r.body).unwrap();
        assert!((c - 0.6).abs() < 1e-12);
    }

    #[test]
    fn uniform_slope_uphill() {
        let m = canonical();
        for s in [0.05f64, 0.15, -0.1] {
            let t = s.tan();
            let dem = Dem::from_fn(120, 120, 0.1, [-6.0, -6.0], |x, _| -t * x);
            let r = settle(&dem, &Pose2D::new(0.0, 0.0, 0.0), &m).unwrap();
            assert!(r.converged, "{s}: residual {}", r.residual);
            assert!((r.body.theta - s).abs() < 1e-4, "{s}: {}", r.body.theta);
            assert!(r.body.phi.abs() < 1e-9);
        }
    }

    #[test]
    fn right_wheels_on_bump_roll_the_body() {
        let m = canonical();
        let bump = Bump {
            center: [5.0, 5.8],
            radius: [0.8, 0.6],
            height: 0.2,
        };
        let dem = generate_bump([10.0, 10.0], 0.05, &bump);
        let r = settle(&dem, &Pose2D::new(5.0 + 0.2, 5.0, 0.0), &m).unwrap();
        assert!(r.converged);
        assert!(r.body.phi < -1e-3, "{}", r.body.phi);
        assert!(r.suspension.beta_r.abs() > 1e-3);
        assert!(r.suspension.beta_l.abs() < 0.5 * r.suspension.beta_r.abs());
    }

    #[test]
    fn fixed_point_consistency_on_rough_terrain() {
        let m = canonical();
        let dem =
            crate::terrain::add_gaussian_noise(&generate_quadratic(0.08, 10.0, 0.1), 0.03, 0.09, 5);
        let r = settle(&dem, &Pose2D::new(0.4, -0.3, 0.5), &m).unwrap();
        assert!(r.converged, "residual {}", r.residual);
        let (s, b) = solve(&r.heights, &m).unwrap();
        assert!((s.beta_l - r.suspension.beta_l).abs() < 1e-6);
        assert!((b.theta - r.body.theta).abs() < 1e-6);
        assert!((b.z_o - r.body.z_o).abs() < 1e-6);
        for w in Wheel::ALL {
            let c = r.contacts[w as usize];
            assert!((dem.surface_height(c[0], c[1]) - c[2]).abs() < 1e-12);
            assert_eq!(c[2], r.heights[w]);
        }
    }

    #[test]
    fn wide_regions_do_not_constrain() {
        let m = canonical();
        let dem = generate_quadratic(-0.1, 12.0, 0.1);
        let big = BodyRect {
            x: Interval::new(-10.0, 10.0),
            y: Interval::new(-10.0, 10.0),
        };
        let a = settle(&dem, &Pose2D::new(0.0, 0.0, 0.3), &m).unwrap();
        let b = settle_constrained(&dem, &Pose2D::new(0.0, 0.0, 0.3), &m, &[big; 6]).unwrap();
        assert_eq!(a, b);
        let dem = Dem::flat(100, 100, 0.1, [-5.0, -5.0], 0.0);
        let tiny = m.wheel_center_regions().map(|r| BodyRect {
            x: Interval::point(r.x.mid()),
            y: Interval::point(r.y.mid()),
        });
        let c = settle_constrained(&dem, &Pose2D::new(0.0, 0.0, 0.0), &m, &tiny).unwrap();
        assert!(c.body.phi.abs() < 1e-12 && c.body.theta.abs() < 1e-12);
    }

    #[test]
    fn rocker_variant_settles() {
        let m = RoverModel::new(RoverParams::canonical_rocker()).unwrap();
        let dem = generate_quadratic(0.05, 10.0, 0.1);
        let r = settle(&dem, &Pose2D::new(0.0, 0.0, 0.0), &m).unwrap();
        assert!(r.converged);
        assert!(r.contacts[Wheel::MiddleLeft as usize][0].is_nan());
    }

    #[test]
    fn deterministic() {
        let m = canonical();
        let dem =
            crate::terrain::add_gaussian_noise(&generate_quadratic(0.05, 10.0, 0.1), 0.03, 0.09, 2);
        let a = settle(&dem, &Pose2D::new(0.1, 0.2, 0.3), &m);
        let b = settle(&dem, &Pose2D::new(0.1, 0.2, 0.3), &m);
        assert_eq!(a, b);
    }
}

//! Closed-form conservative bounds on suspension, attitude, body height and
//! clearance from per-wheel terrain height intervals, and the safety gate
//! built on them.

mod bounds;
mod safety;

use serde::{Deserialize, Serialize};

use crate::interval::Interval;
use crate::kinematics::{RoverModel, Wheel};
use crate::terrain::{Dem, Pose2D, TerrainError};

pub use bounds::{bounds_via_extremes, propagate_bounds, StateBounds};
pub use safety::{
    evaluate_pose, tilt_of, Evaluation, MetricResult, Overall, SafetyThresholds, SafetyVerdict,
};

/// Terrain height interval under each wheel box, z-down, in wheel order.
/// Entries for wheels the model does not have are NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WheelIntervals {
    pub wheels: [Interval; 6],
    /// Perception margin already applied to every interval.
    pub epsilon: f64,
}

const ABSENT: Interval = Interval {
    lo: f64::NAN,
    hi: f64::NAN,
};

impl WheelIntervals {
    /// Exact heights as degenerate intervals.
    pub fn exact(h: [f64; 6]) -> Self {
        Self {
            wheels: h.map(|v| {
                if v.is_nan() {
                    ABSENT
                } else {
                    Interval::point(v)
                }
            }),
            epsilon: 0.0,
        }
    }

    pub fn from_intervals(wheels: [Interval; 6]) -> Self {
        Self {
            wheels,
            epsilon: 0.0,
        }
    }

    pub fn get(&self, w: Wheel) -> Interval {
        self.wheels[w as usize]
    }

    /// Largest interval width over the model's wheels.
    pub fn max_width(&self, model: &RoverModel) -> f64 {
        model
            .wheels()
            .iter()
            .map(|w| self.get(*w).width())
            .fold(0.0, f64::max)
    }
}

/// Height interval under each wheel box at `pose`, widened by `epsilon`.
pub fn wheel_height_intervals(
    dem: &Dem,
    pose: &Pose2D,
    model: &RoverModel,
    epsilon: f64,
) -> Result<WheelIntervals, TerrainError> {
    assert!(epsilon >= 0.0, "epsilon must be non-negative");
    let mut wheels = [ABSENT; 6];
    for &w in model.wheels() {
        let b = model.wheel_box(w);
        let poly = pose.rect_to_world(b.x, b.y);
        wheels[w as usize] = dem.minmax_in_polygon(&poly)?.widen(epsilon);
    }
    Ok(WheelIntervals { wheels, epsilon })
}

/// Body-frame half extents of the region that can lie under the belly pan
/// for any attitude within the bounds.
pub fn pan_region_half_dims(bounds: &StateBounds, model: &RoverModel) -> [f64; 2] {
    let p = model.params();
    let st = bounds.abs_theta.hi.min(std::f64::consts::FRAC_PI_2).sin();
    let sp = bounds.abs_phi.hi.min(std::f64::consts::FRAC_PI_2).sin();
    [
        0.5 * p.l_p + p.c_0 * st,
        0.5 * p.w_p + sp * (p.c_0 + 0.5 * p.l_p * st),
    ]
}

/// Clearance interval: the highest ground anywhere the pan could be, minus
/// the pan height bounds.
pub fn clearance_interval(
    bounds: &StateBounds,
    dem: &Dem,
    pose: &Pose2D,
    model: &RoverModel,
    epsilon: f64,
) -> Result<Interval, TerrainError> {
    let [hx, hy] = pan_region_half_dims(bounds, model);
    let poly = pose.rect_to_world(Interval::new(-hx, hx), Interval::new(-hy, hy));
    let z_g = dem.minmax_in_polygon(&poly)?.lo - epsilon;
    Ok(Interval::new(z_g - bounds.z_p.hi, z_g - bounds.z_p.lo))
}

use serde::{Deserialize, Serialize};

use super::{
    clearance_interval, propagate_bounds, wheel_height_intervals, StateBounds, WheelIntervals,
};
use crate::kinematics::{AngleLimits, KinematicsError, RoverModel, Variant};
use crate::terrain::{Dem, Pose2D, TerrainError};

/// Limits a pose must satisfy in the worst case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyThresholds {
    pub min_clearance: f64,
    pub max_tilt: f64,
    pub delta_range: AngleLimits,
    pub beta_range: AngleLimits,
    pub max_wheel_drop: f64,
}

impl SafetyThresholds {
    /// 0.15 m clearance, 30 degrees tilt, the model's joint limits and a
    /// wheel drop of one wheel radius.
    pub fn for_model(model: &RoverModel) -> Self {
        let p = model.params();
        Self {
            min_clearance: 0.15,
            max_tilt: 30f64.to_radians(),
            delta_range: p.delta_limits,
            beta_range: p.beta_limits,
            max_wheel_drop: p.wheel_radius,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub pass: bool,
    /// Worst-case value that was compared.
    pub value: f64,
    pub threshold: f64,
}

impl MetricResult {
    fn at_least(value: f64, threshold: f64) -> Self {
        Self {
            pass: value >= threshold,
            value,
            threshold,
        }
    }

    fn at_most(value: f64, threshold: f64) -> Self {
        Self {
            pass: value <= threshold,
            value,
            threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Overall {
    Safe,
    Unsafe,
    Unevaluatable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyVerdict {
    pub overall: Overall,
    pub clearance: Option<MetricResult>,
    pub tilt: Option<MetricResult>,
    /// `value` is the largest amount by which a joint bound leaves its
    /// range (zero or negative when inside).
    pub suspension: Option<MetricResult>,
    pub wheel_drop: Option<MetricResult>,
    pub reason: Option<String>,
}

impl SafetyVerdict {
    pub fn is_safe(&self) -> bool {
        self.overall == Overall::Safe
    }

    fn unevaluatable(reason: &TerrainError) -> Self {
        Self {
            overall: Overall::Unevaluatable,
            clearance: None,
            tilt: None,
            suspension: None,
            wheel_drop: None,
            reason: Some(reason.to_string()),
        }
    }
}

/// Everything computed for one pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub pose: Pose2D,
    pub epsilon: f64,
    pub wheels: Option<WheelIntervals>,
    pub bounds: Option<StateBounds>,
    pub verdict: SafetyVerdict,
}

/// Worst-case combined tilt from absolute roll and pitch upper bounds.
pub fn tilt_of(abs_phi_hi: f64, abs_theta_hi: f64) -> f64 {
    (abs_phi_hi.cos() * abs_theta_hi.cos())
        .clamp(-1.0, 1.0)
        .acos()
}

fn range_excess(x: crate::interval::Interval, r: AngleLimits) -> f64 {
    (r.min - x.lo).max(x.hi - r.max)
}

/// Runs the full pipeline for one pose. Unknown or off-map terrain gives
/// an unevaluatable verdict; wheel heights beyond suspension reach give an
/// unsafe one.
pub fn evaluate_pose(
    dem: &Dem,
    pose: &Pose2D,
    model: &RoverModel,
    thresholds: &SafetyThresholds,
    epsilon: f64,
) -> Evaluation {
    let mut eval = Evaluation {
        pose: *pose,
        epsilon,
        wheels: None,
        bounds: None,
        verdict: SafetyVerdict::unevaluatable(&TerrainError::Unknown),
    };
    let wheels = match wheel_height_intervals(dem, pose, model, epsilon) {
        Ok(w) => w,
        Err(e) => {
            eval.verdict = SafetyVerdict::unevaluatable(&e);
            return eval;
        }
    };
    eval.wheels = Some(wheels);
    let drop = MetricResult::at_most(wheels.max_width(model), thresholds.max_wheel_drop);
    let mut bounds = match propagate_bounds(&wheels, model) {
        Ok(b) => b,
        Err(e) => {
            eval.verdict = infeasible_verdict(drop, &e);
            return eval;
        }
    };
    match clearance_interval(&bounds, dem, pose, model, epsilon) {
        Ok(c) => bounds.clearance = Some(c),
        Err(e) => {
            eval.bounds = Some(bounds);
            eval.verdict = SafetyVerdict::unevaluatable(&e);
            return eval;
        }
    }
    eval.verdict = gate(&bounds, model, thresholds);
    eval.bounds = Some(bounds);
    eval
}

fn infeasible_verdict(drop: MetricResult, e: &KinematicsError) -> SafetyVerdict {
    SafetyVerdict {
        overall: Overall::Unsafe,
        clearance: None,
        tilt: None,
        suspension: None,
        wheel_drop: Some(MetricResult {
            pass: false,
            ..drop
        }),
        reason: Some(e.to_string()),
    }
}

/// Applies the thresholds to finished bounds.
pub(crate) fn gate(
    bounds: &StateBounds,
    model: &RoverModel,
    t: &SafetyThresholds,
) -> SafetyVerdict {
    let clearance = MetricResult::at_least(
        bounds.clearance.expect("clearance computed").lo,
        t.min_clearance,
    );
    let tilt = MetricResult::at_most(tilt_of(bounds.abs_phi.hi, bounds.abs_theta.hi), t.max_tilt);
    let mut excess =
        range_excess(bounds.delta, t.delta_range).max(range_excess(-bounds.delta, t.delta_range));
    if model.variant() == Variant::RockerBogie {
        excess = excess
            .max(range_excess(bounds.beta_l, t.beta_range))
            .max(range_excess(bounds.beta_r, t.beta_range));
    }
    let suspension = MetricResult::at_most(excess, 0.0);
    let wheel_drop = MetricResult::at_most(bounds.wheel_drop, t.max_wheel_drop);
    let all = clearance.pass && tilt.pass && suspension.pass && wheel_drop.pass;
    SafetyVerdict {
        overall: if all { Overall::Safe } else { Overall::Unsafe },
        clearance: Some(clearance),
        tilt: Some(tilt),
        suspension: Some(suspension),
        wheel_drop: Some(wheel_drop),
        reason: None,
    }
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::planefit::{rover_radius, GoodnessMap, PlanefitThresholds};
use crate::ace::{evaluate_pose, tilt_of, Overall, SafetyThresholds};
use crate::kinematics::RoverModel;
use crate::oracle::{settle, true_clearance, OracleError};
use crate::terrain::{Dem, Pose2D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckerKind {
    Ace,
    Planefit,
    Ideal,
}

impl CheckerKind {
    pub const ALL: [CheckerKind; 3] = [CheckerKind::Ace, CheckerKind::Planefit, CheckerKind::Ideal];

    pub fn as_str(&self) -> &'static str {
        match self {
            CheckerKind::Ace => "ace",
            CheckerKind::Planefit => "planefit",
            CheckerKind::Ideal => "ideal",
        }
    }
}

impl fmt::Display for CheckerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ace" => Ok(CheckerKind::Ace),
            "planefit" => Ok(CheckerKind::Planefit),
            "ideal" => Ok(CheckerKind::Ideal),
            _ => Err(format!(
                "unknown checker `{s}` (expected ace, planefit or ideal)"
            )),
        }
    }
}

/// A pose safety test bound to one map.
pub struct CollisionChecker<'a> {
    kind: CheckerKind,
    dem: &'a Dem,
    model: &'a RoverModel,
    thresholds: SafetyThresholds,
    epsilon: f64,
    goodness: Option<GoodnessMap>,
}

impl<'a> CollisionChecker<'a> {
    pub fn new(
        kind: CheckerKind,
        dem: &'a Dem,
        model: &'a RoverModel,
        thresholds: SafetyThresholds,
    ) -> Self {
        Self::with_options(
            kind,
            dem,
            model,
            thresholds,
            0.0,
            &PlanefitThresholds::default(),
        )
    }

    pub fn with_options(
        kind: CheckerKind,
        dem: &'a Dem,
        model: &'a RoverModel,
        thresholds: SafetyThresholds,
        epsilon: f64,
        planefit: &PlanefitThresholds,
    ) -> Self {
        let goodness = (kind == CheckerKind::Planefit)
            .then(|| GoodnessMap::build(dem, planefit, rover_radius(model)));
        Self {
            kind,
            dem,
            model,
            thresholds,
            epsilon,
            goodness,
        }
    }

    pub fn kind(&self) -> CheckerKind {
        self.kind
    }

    pub fn check(&self, pose: &Pose2D) -> Overall {
        match self.kind {
            CheckerKind::Ace => {
                evaluate_pose(self.dem, pose, self.model, &self.thresholds, self.epsilon)
                    .verdict
                    .overall
            }
            CheckerKind::Planefit => self
                .goodness
                .as_ref()
                .expect("built for planefit")
                .check(self.dem, pose),
            CheckerKind::Ideal => ideal_check(self.dem, pose, self.model, &self.thresholds),
        }
    }
}

/// Gate on the settled state itself. Poses that fail to settle count as
/// unsafe.
pub fn ideal_check(dem: &Dem, pose: &Pose2D, model: &RoverModel, t: &SafetyThresholds) -> Overall {
    let r = match settle(dem, pose, model) {
        Ok(r) => r,
        Err(OracleError::Terrain(_)) => return Overall::Unevaluatable,
        Err(_) => return Overall::Unsafe,
    };
    if !r.converged {
        return Overall::Unsafe;
    }
    let s = &r.suspension;
    let joints_ok = t.delta_range.as_interval().contains(s.delta_l)
        && t.delta_range.as_interval().contains(s.delta_r)
        && (model.variant() == crate::kinematics::Variant::Rocker
            || (t.beta_range.as_interval().contains(s.beta_l)
                && t.beta_range.as_interval().contains(s.beta_r)));
    let clearance = match true_clearance(dem, pose, model, &r.body) {
        Ok(c) => c,
        Err(_) => return Overall::Unevaluatable,
    };
    if joints_ok
        && clearance >= t.min_clearance
        && tilt_of(r.body.phi.abs(), r.body.theta.abs()) <= t.max_tilt
    {
        Overall::Safe
    } else {
        Overall::Unsafe
    }
}

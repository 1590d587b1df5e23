//! Forward kinematics of rocker and rocker-bogie suspensions.
//!
//! Heights are z-down: a larger value means the point is lower. Body frame
//! is forward-right-down with the origin at the middle-wheel contact height
//! on flat ground. Positive pitch is nose up, positive roll is right side
//! down.

mod model;
mod triangle;

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use model::{
    assert_monotone_regime, AngleLimits, BodyRect, Calibration, RoverModel, RoverParams, Variant,
};
pub(crate) use triangle::guarded_asin;
pub use triangle::{kappa, tri_height, TriangleParams, ASIN_SLOP};

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
pub enum KinematicsError {
    #[error("wheel heights {z_a} and {z_b} are farther apart than the link reach {reach}")]
    KinematicInfeasible { z_a: f64, z_b: f64, reach: f64 },
    #[error("joint height difference {dz} exceeds the differential span {span}")]
    AttitudeDomainError { dz: f64, span: f64 },
    #[error("operation needs a {expected} model, got {actual}")]
    VariantMismatch {
        expected: &'static str,
        actual: &'static str,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },
    #[error("{triangle} triangle is not monotone near {limit} (joint angle {angle:.4} rad)")]
    NonMonotoneConfiguration {
        triangle: &'static str,
        limit: &'static str,
        angle: f64,
    },
    #[error("rover file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot read rover file: {0}")]
    Io(String),
}

impl ModelError {
    pub(crate) fn invalid(name: &'static str, message: String) -> Self {
        ModelError::InvalidParameter { name, message }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    /// Lateral sign in the body frame (y points right).
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }
}

/// Wheel identifiers in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Wheel {
    FrontLeft = 0,
    FrontRight = 1,
    MiddleLeft = 2,
    MiddleRight = 3,
    RearLeft = 4,
    RearRight = 5,
}

impl Wheel {
    pub const ALL: [Wheel; 6] = [
        Wheel::FrontLeft,
        Wheel::FrontRight,
        Wheel::MiddleLeft,
        Wheel::MiddleRight,
        Wheel::RearLeft,
        Wheel::RearRight,
    ];
    pub const ROCKER: [Wheel; 4] = [
        Wheel::FrontLeft,
        Wheel::FrontRight,
        Wheel::RearLeft,
        Wheel::RearRight,
    ];

    /// `pos` is 0 front, 1 middle, 2 rear.
    pub fn from_parts(side: Side, pos: usize) -> Wheel {
        Wheel::ALL[2 * pos + (side == Side::Right) as usize]
    }

    pub fn side(self) -> Side {
        if (self as usize).is_multiple_of(2) {
            Side::Left
        } else {
            Side::Right
        }
    }

    pub fn short_name(self) -> &'static str {
        ["fl", "fr", "ml", "mr", "rl", "rr"][self as usize]
    }
}

/// Terrain height under each wheel, z-down, in order fl, fr, ml, mr, rl, rr.
/// Middle entries are ignored for the rocker variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WheelHeights(pub [f64; 6]);

impl WheelHeights {
    pub fn uniform(h: f64) -> Self {
        WheelHeights([h; 6])
    }

    /// Four-wheel heights; middle slots are set to NaN.
    pub fn rocker(fl: f64, fr: f64, rl: f64, rr: f64) -> Self {
        WheelHeights([fl, fr, f64::NAN, f64::NAN, rl, rr])
    }

    /// Per side (front, middle, rear).
    pub fn from_sides(left: [f64; 3], right: [f64; 3]) -> Self {
        WheelHeights([left[0], right[0], left[1], right[1], left[2], right[2]])
    }

    pub fn side(&self, side: Side) -> [f64; 3] {
        [0, 1, 2].map(|p| self[Wheel::from_parts(side, p)])
    }

    /// Swaps left and right.
    pub fn mirrored(&self) -> Self {
        let h = self.0;
        WheelHeights([h[1], h[0], h[3], h[2], h[5], h[4]])
    }
}

impl Index<Wheel> for WheelHeights {
    type Output = f64;
    fn index(&self, w: Wheel) -> &f64 {
        &self.0[w as usize]
    }
}

impl IndexMut<Wheel> for WheelHeights {
    fn index_mut(&mut self, w: Wheel) -> &mut f64 {
        &mut self.0[w as usize]
    }
}

/// Joint angles and heights. `delta_r == -delta_l` always.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuspensionState {
    pub delta_l: f64,
    pub delta_r: f64,
    pub beta_l: f64,
    pub beta_r: f64,
    pub z_d_l: f64,
    pub z_d_r: f64,
    pub z_b_l: f64,
    pub z_b_r: f64,
}

/// Body attitude and heights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyState {
    pub phi: f64,
    pub theta: f64,
    pub z_o: f64,
    /// Lowest point of the belly pan.
    pub z_p: f64,
}

/// Solves a four-wheel rocker.
pub fn solve_rocker(
    heights: &WheelHeights,
    model: &RoverModel,
) -> Result<(SuspensionState, BodyState), KinematicsError> {
    if model.variant() != Variant::Rocker {
        return Err(KinematicsError::VariantMismatch {
            expected: Variant::Rocker.as_str(),
            actual: model.variant().as_str(),
        });
    }
    solve(heights, model)
}

/// Solves a six-wheel rocker-bogie.
pub fn solve_rocker_bogie(
    heights: &WheelHeights,
    model: &RoverModel,
) -> Result<(SuspensionState, BodyState), KinematicsError> {
    if model.variant() != Variant::RockerBogie {
        return Err(KinematicsError::VariantMismatch {
            expected: Variant::RockerBogie.as_str(),
            actual: model.variant().as_str(),
        });
    }
    solve(heights, model)
}

/// Dispatches on the model variant.
pub fn solve(
    heights: &WheelHeights,
    model: &RoverModel,
) -> Result<(SuspensionState, BodyState), KinematicsError> {
    let l = solve_side(heights.side(Side::Left), model)?;
    let r = solve_side(heights.side(Side::Right), model)?;
    let delta_l = 0.5 * (r.kappa_d - l.kappa_d);
    let susp = SuspensionState {
        delta_l,
        delta_r: -delta_l,
        beta_l: l.beta,
        beta_r: r.beta,
        z_d_l: l.z_d,
        z_d_r: r.z_d,
        z_b_l: l.z_b,
        z_b_r: r.z_b,
    };
    let body = body_from_joints(model, l.kappa_d, r.kappa_d, l.z_d, r.z_d)?;
    Ok((susp, body))
}

struct SideSolution {
    kappa_d: f64,
    z_d: f64,
    z_b: f64,
    beta: f64,
}

fn solve_side(h: [f64; 3], model: &RoverModel) -> Result<SideSolution, KinematicsError> {
    let [z_f, z_m, z_r] = h;
    match model.variant() {
        Variant::Rocker => {
            let kappa_d = model.rocker().kappa(z_f, z_r)?;
            Ok(SideSolution {
                kappa_d,
                z_d: z_f - model.params().l_df * kappa_d.sin(),
                z_b: z_r,
                beta: 0.0,
            })
        }
        Variant::RockerBogie => {
            let kappa_b = model.bogie().kappa(z_m, z_r)?;
            let z_b = z_m - model.params().l_bm * kappa_b.sin();
            let kappa_d = model.rocker().kappa(z_f, z_b)?;
            Ok(SideSolution {
                kappa_d,
                z_d: z_f - model.params().l_df * kappa_d.sin(),
                z_b,
                beta: kappa_d - kappa_b - model.kappa_d0() + model.kappa_b0(),
            })
        }
    }
}

fn body_from_joints(
    model: &RoverModel,
    kappa_d_l: f64,
    kappa_d_r: f64,
    z_d_l: f64,
    z_d_r: f64,
) -> Result<BodyState, KinematicsError> {
    let span = 2.0 * model.y_od();
    let dz = z_d_r - z_d_l;
    let phi = guarded_asin(dz / span).ok_or(KinematicsError::AttitudeDomainError { dz, span })?;
    let theta = model.kappa_d0() - 0.5 * (kappa_d_l + kappa_d_r);
    let z_o = 0.5 * (z_d_l + z_d_r) + model.x_od() * theta.sin() * phi.cos()
        - model.z_od() * theta.cos() * phi.cos();
    let mut body = BodyState {
        phi,
        theta,
        z_o,
        z_p: 0.0,
    };
    body.z_p = pan_lowest_height(&body, model);
    Ok(body)
}

/// Height of the lowest belly-pan point for a body state.
pub fn pan_lowest_height(body: &BodyState, model: &RoverModel) -> f64 {
    let p = model.params();
    let (sp, cp) = body.theta.abs().sin_cos();
    let (sr, cr) = body.phi.abs().sin_cos();
    body.z_o - p.c_0 * cp * cr + 0.5 * p.l_p * sp * cr + 0.5 * p.w_p * sr
}

/// Heading-frame (x forward, y right) ground positions of the wheel contact
/// points for a solved state. Absent wheels are NaN.
pub fn wheel_positions(
    model: &RoverModel,
    susp: &SuspensionState,
    body: &BodyState,
) -> [(f64, f64); 6] {
    model.wheel_positions_for(susp.delta_l, susp.beta_l, susp.beta_r, body.phi, body.theta)
}

/// Maps a body-frame point to heading-frame horizontal coordinates and
/// height above the body origin for the given attitude.
pub fn body_to_level(phi: f64, theta: f64, p: [f64; 3]) -> [f64; 3] {
    let (sp, cp) = theta.sin_cos();
    let (sr, cr) = phi.sin_cos();
    [
        cp * p[0] + sp * p[2],
        cr * p[1] + sr * sp * p[0] - sr * cp * p[2],
        -cr * sp * p[0] + sr * p[1] + cr * cp * p[2],
    ]
}

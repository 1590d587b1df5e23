use serde::{Deserialize, Serialize};

use super::WheelIntervals;
use crate::interval::Interval;
use crate::kinematics::{
    guarded_asin, solve, KinematicsError, RoverModel, Side, Variant, Wheel, WheelHeights,
};

/// Interval bounds on every state the safety gate looks at. Angles in
/// radians, heights z-down in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateBounds {
    /// Left rocker angle; the right one is its negation.
    pub delta: Interval,
    pub beta_l: Interval,
    pub beta_r: Interval,
    pub z_d_l: Interval,
    pub z_d_r: Interval,
    pub z_b_l: Interval,
    pub z_b_r: Interval,
    pub phi: Interval,
    pub theta: Interval,
    pub abs_phi: Interval,
    pub abs_theta: Interval,
    pub z_o: Interval,
    pub z_p: Interval,
    /// Filled in once the ground under the pan has been queried.
    pub clearance: Option<Interval>,
    pub wheel_drop: f64,
}

struct SideBounds {
    z_b: Interval,
    z_d: Interval,
    kappa_d: Interval,
    beta: Interval,
}

fn side_bounds(
    w: &WheelIntervals,
    side: Side,
    model: &RoverModel,
) -> Result<SideBounds, KinematicsError> {
    let f = w.get(Wheel::from_parts(side, 0));
    let r = w.get(Wheel::from_parts(side, 2));
    let rk = model.rocker();
    let l_df = model.params().l_df;
    match model.variant() {
        Variant::Rocker => {
            let z_b = r;
            Ok(SideBounds {
                z_b,
                z_d: Interval::new(rk.height(f.lo, z_b.lo)?, rk.height(f.hi, z_b.hi)?),
                kappa_d: Interval::new(rk.kappa(f.lo, z_b.hi)?, rk.kappa(f.hi, z_b.lo)?),
                beta: Interval::point(0.0),
            })
        }
        Variant::RockerBogie => {
            let m = w.get(Wheel::from_parts(side, 1));
            let bg = model.bogie();
            let l_bm = model.params().l_bm;
            let z_b = Interval::new(
                m.lo - l_bm * bg.kappa(m.lo, r.lo)?.sin(),
                m.hi - l_bm * bg.kappa(m.hi, r.hi)?.sin(),
            );
            let z_d = Interval::new(
                f.lo - l_df * rk.kappa(f.lo, z_b.lo)?.sin(),
                f.hi - l_df * rk.kappa(f.hi, z_b.hi)?.sin(),
            );
            let kappa_d = Interval::new(rk.kappa(f.lo, z_b.hi)?, rk.kappa(f.hi, z_b.lo)?);
            let kappa_b = Interval::new(bg.kappa(m.lo, r.hi)?, bg.kappa(m.hi, r.lo)?);
            let off = model.kappa_b0() - model.kappa_d0();
            let beta = Interval::new(kappa_d.lo - kappa_b.hi + off, kappa_d.hi - kappa_b.lo + off);
            Ok(SideBounds {
                z_b,
                z_d,
                kappa_d,
                beta,
            })
        }
    }
}

fn corners(a: Interval, b: Interval, f: impl Fn(f64, f64) -> f64) -> Interval {
    let mut out = Interval::point(f(a.lo, b.lo));
    out.include(f(a.lo, b.hi));
    out.include(f(a.hi, b.lo));
    out.include(f(a.hi, b.hi));
    out
}

/// Propagates wheel height intervals to state intervals with the
/// endpoint-paired closed forms. Bogie angle bounds are loose: their
/// endpoints may combine mutually inconsistent wheel heights.
pub fn propagate_bounds(
    w: &WheelIntervals,
    model: &RoverModel,
) -> Result<StateBounds, KinematicsError> {
    let l = side_bounds(w, Side::Left, model)?;
    let r = side_bounds(w, Side::Right, model)?;
    let k0 = model.kappa_d0();

    let delta = Interval::new(
        0.5 * (r.kappa_d.lo - l.kappa_d.hi),
        0.5 * (r.kappa_d.hi - l.kappa_d.lo),
    );

    let span = 2.0 * model.y_od();
    let roll =
        |dz: f64| guarded_asin(dz / span).ok_or(KinematicsError::AttitudeDomainError { dz, span });
    let phi = Interval::new(roll(r.z_d.lo - l.z_d.hi)?, roll(r.z_d.hi - l.z_d.lo)?);
    let theta = Interval::new(
        k0 - 0.5 * (l.kappa_d.hi + r.kappa_d.hi),
        k0 - 0.5 * (l.kappa_d.lo + r.kappa_d.lo),
    );
    let abs_phi = phi.abs();
    let abs_theta = theta.abs();

    // Body height. Each trigonometric term is bounded over the corners of
    // its own arguments, which reduces to the usual endpoint pairing when
    // the differential joint sits above and ahead of the origin.
    let (x_od, z_od) = (model.x_od(), model.z_od());
    let cos_phi = abs_phi.map_monotone(f64::cos, false);
    let cos_theta = abs_theta.map_monotone(f64::cos, false);
    let sin_theta = theta.map_monotone(f64::sin, true);
    let pitch_term = corners(sin_theta, cos_phi, |s, c| x_od * s * c);
    let offset_term = corners(cos_theta, cos_phi, |ct, cp| -z_od * ct * cp);
    let z_d_avg = Interval::new(0.5 * (l.z_d.lo + r.z_d.lo), 0.5 * (l.z_d.hi + r.z_d.hi));
    let z_o = z_d_avg + pitch_term + offset_term;

    // Lowest belly-pan point.
    let p = model.params();
    let sin_abs_theta = abs_theta.map_monotone(f64::sin, true);
    let sin_abs_phi = abs_phi.map_monotone(f64::sin, true);
    let z_p = Interval::new(
        z_o.lo - p.c_0 * cos_theta.hi * cos_phi.hi
            + 0.5 * p.l_p * sin_abs_theta.lo * cos_phi.lo
            + 0.5 * p.w_p * sin_abs_phi.lo,
        z_o.hi - p.c_0 * cos_theta.lo * cos_phi.lo
            + 0.5 * p.l_p * sin_abs_theta.hi * cos_phi.hi
            + 0.5 * p.w_p * sin_abs_phi.hi,
    );

    Ok(StateBounds {
        delta,
        beta_l: l.beta,
        beta_r: r.beta,
        z_d_l: l.z_d,
        z_d_r: r.z_d,
        z_b_l: l.z_b,
        z_b_r: r.z_b,
        phi,
        theta,
        abs_phi,
        abs_theta,
        z_o,
        z_p,
        clearance: None,
        wheel_drop: w.max_width(model),
    })
}

/// Reference bounds from exact kinematics at every combination of extreme
/// wheel heights (8 per side for a rocker-bogie, 4 for a rocker).
pub fn bounds_via_extremes(
    w: &WheelIntervals,
    model: &RoverModel,
) -> Result<StateBounds, KinematicsError> {
    let side_corners = |side: Side| -> Vec<[f64; 3]> {
        let f = w.get(Wheel::from_parts(side, 0));
        let r = w.get(Wheel::from_parts(side, 2));
        let mut out = Vec::with_capacity(8);
        match model.variant() {
            Variant::Rocker => {
                for zf in [f.lo, f.hi] {
                    for zr in [r.lo, r.hi] {
                        out.push([zf, f64::NAN, zr]);
                    }
                }
            }
            Variant::RockerBogie => {
                let m = w.get(Wheel::from_parts(side, 1));
                for zf in [f.lo, f.hi] {
                    for zm in [m.lo, m.hi] {
                        for zr in [r.lo, r.hi] {
                            out.push([zf, zm, zr]);
                        }
                    }
                }
            }
        }
        out
    };
    let left = side_corners(Side::Left);
    let right = side_corners(Side::Right);
    let mut acc: Option<StateBounds> = None;
    for lc in &left {
        for rc in &right {
            let (s, b) = solve(&WheelHeights::from_sides(*lc, *rc), model)?;
            let pt = Interval::point;
            match acc.as_mut() {
                None => {
                    acc = Some(StateBounds {
                        delta: pt(s.delta_l),
                        beta_l: pt(s.beta_l),
                        beta_r: pt(s.beta_r),
                        z_d_l: pt(s.z_d_l),
                        z_d_r: pt(s.z_d_r),
                        z_b_l: pt(s.z_b_l),
                        z_b_r: pt(s.z_b_r),
                        phi: pt(b.phi),
                        theta: pt(b.theta),
                        abs_phi: pt(b.phi.abs()),
                        abs_theta: pt(b.theta.abs()),
                        z_o: pt(b.z_o),
                        z_p: pt(b.z_p),
                        clearance: None,
                        wheel_drop: w.max_width(model),
                    })
                }
                Some(a) => {
                    a.delta.include(s.delta_l);
                    a.beta_l.include(s.beta_l);
                    a.beta_r.include(s.beta_r);
                    a.z_d_l.include(s.z_d_l);
                    a.z_d_r.include(s.z_d_r);
                    a.z_b_l.include(s.z_b_l);
                    a.z_b_r.include(s.z_b_r);
                    a.phi.include(b.phi);
                    a.theta.include(b.theta);
                    a.abs_phi.include(b.phi.abs());
                    a.abs_theta.include(b.theta.abs());
                    a.z_o.include(b.z_o);
                    a.z_p.include(b.z_p);
                }
            }
        }
    }
    Ok(acc.expect("at least one corner"))
}

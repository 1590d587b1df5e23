//! Plane-fit traversability baseline: per-cell slope, roughness and step
//! hazards from a least-squares plane over a circular window, dilated by
//! the rover radius.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ace::Overall;
use crate::kinematics::{solve, BodyState, KinematicsError, RoverModel, WheelHeights};
use crate::terrain::{Dem, Pose2D, TerrainError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanefitThresholds {
    /// Radians.
    pub max_slope: f64,
    pub max_roughness: f64,
    pub max_step: f64,
    pub window_radius: f64,
}

impl Default for PlanefitThresholds {
    fn default() -> Self {
        Self {
            max_slope: 20f64.to_radians(),
            max_roughness: 0.10,
            max_step: 0.20,
            window_radius: 1.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneFit {
    /// Plane `z = gx * dx + gy * dy + z0` around the window center.
    pub gx: f64,
    pub gy: f64,
    pub z0: f64,
    /// Tilt of the plane from level, radians.
    pub slope: f64,
    /// Largest absolute residual.
    pub roughness: f64,
    /// Largest height difference between 4-adjacent window cells.
    pub step: f64,
    /// Highest (most negative z) terrain cell in the window.
    pub highest: f64,
    pub points: usize,
}

/// Cell offsets `(di, dj)` whose centers lie within `radius` of the
/// center cell.
fn window_offsets(res: f64, radius: f64) -> Vec<(isize, isize)> {
    let n = (radius / res).floor() as isize;
    let mut out = Vec::new();
    for di in -n..=n {
        for dj in -n..=n {
            if ((di * di + dj * dj) as f64) * res * res <= radius * radius + 1e-12 {
                out.push((di, dj));
            }
        }
    }
    out
}

/// Fits a plane to the cells whose centers lie within `radius` of
/// `center`. The window must be fully on the map.
pub fn plane_fit(dem: &Dem, center: [f64; 2], radius: f64) -> Result<PlaneFit, TerrainError> {
    let (ci, cj) = dem
        .cell_of(center[0], center[1])
        .ok_or(TerrainError::OutOfBounds)?;
    let res = dem.resolution();
    let mut pts = Vec::new();
    for (di, dj) in window_offsets(res, radius) {
        let (i, j) = (ci as isize + di, cj as isize + dj);
        if i < 0 || j < 0 || i as usize >= dem.n_rows() || j as usize >= dem.n_cols() {
            return Err(TerrainError::OutOfBounds);
        }
        let z = dem.raw(i as usize, j as usize);
        if z.is_nan() {
            return Err(TerrainError::Unknown);
        }
        pts.push((di, dj, z));
    }
    Ok(fit_points(&pts, res))
}

fn fit_points(pts: &[(isize, isize, f64)], res: f64) -> PlaneFit {
    let mut ata = Matrix3::zeros();
    let mut atz = Vector3::zeros();
    for &(di, dj, z) in pts {
        let a = Vector3::new(di as f64 * res, dj as f64 * res, 1.0);
        ata += a * a.transpose();
        atz += a * z;
    }
    let sol = ata
        .lu()
        .solve(&atz)
        .unwrap_or_else(|| Vector3::new(0.0, 0.0, atz[2] / pts.len() as f64));
    let (gx, gy, z0) = (sol[0], sol[1], sol[2]);
    let mut roughness: f64 = 0.0;
    let mut highest = f64::INFINITY;
    for &(di, dj, z) in pts {
        let r = z - (gx * di as f64 * res + gy * dj as f64 * res + z0);
        roughness = roughness.max(r.abs());
        highest = highest.min(z);
    }
    let mut step: f64 = 0.0;
    let lookup: std::collections::HashMap<(isize, isize), f64> =
        pts.iter().map(|&(i, j, z)| ((i, j), z)).collect();
    for &(di, dj, z) in pts {
        for n in [(di + 1, dj), (di, dj + 1)] {
            if let Some(&zn) = lookup.get(&n) {
                step = step.max((z - zn).abs());
            }
        }
    }
    PlaneFit {
        gx,
        gy,
        z0,
        slope: gx.hypot(gy).atan(),
        roughness,
        step,
        highest,
        points: pts.len(),
    }
}

/// Radius of the disc around the body origin covering every wheel
/// footprint in the nominal configuration.
pub fn rover_radius(model: &RoverModel) -> f64 {
    let p = model.params();
    let pos = model.wheel_positions_for(0.0, 0.0, 0.0, 0.0, 0.0);
    model
        .wheels()
        .iter()
        .map(|w| {
            let (x, y) = pos[*w as usize];
            (x.abs() + 0.5 * p.wheel_box_x).hypot(y.abs() + 0.5 * p.wheel_box_y)
        })
        .fold(0.0, f64::max)
}

const PASS: u8 = 0;
const FAIL: u8 = 1;
const UNKNOWN: u8 = 2;

/// Per-cell planefit verdicts, already dilated by the rover radius.
#[derive(Debug, Clone)]
pub struct GoodnessMap {
    n_rows: usize,
    n_cols: usize,
    cell: Vec<u8>,
    dilated: Vec<u8>,
}

impl GoodnessMap {
    pub fn build(dem: &Dem, t: &PlanefitThresholds, rover_radius: f64) -> Self {
        let (nr, nc) = (dem.n_rows(), dem.n_cols());
        let res = dem.resolution();
        let offs = window_offsets(res, t.window_radius);
        let n = (t.window_radius / res).floor() as usize;

        // The window geometry is the same for every interior cell.
        let mut ata = Matrix3::zeros();
        for &(di, dj) in &offs {
            let a = Vector3::new(di as f64 * res, dj as f64 * res, 1.0);
            ata += a * a.transpose();
        }
        let inv = ata.try_inverse().expect("window spans a plane");
        let pairs: Vec<((isize, isize), (isize, isize))> = offs
            .iter()
            .flat_map(|&(di, dj)| {
                [(di + 1, dj), (di, dj + 1)]
                    .into_iter()
                    .filter(|o| offs.contains(o))
                    .map(move |o| ((di, dj), o))
            })
            .collect();

        let cell: Vec<u8> = (0..nr)
            .into_par_iter()
            .flat_map_iter(|i| {
                let (offs, pairs) = (&offs, &pairs);
                (0..nc).map(move |j| {
                    if i < n || j < n || i + n >= nr || j + n >= nc {
                        return UNKNOWN;
                    }
                    let z = |o: (isize, isize)| {
                        dem.raw((i as isize + o.0) as usize, (j as isize + o.1) as usize)
                    };
                    let mut atz = Vector3::zeros();
                    for &o in offs {
                        let h = z(o);
                        if h.is_nan() {
                            return UNKNOWN;
                        }
                        atz += Vector3::new(o.0 as f64 * res, o.1 as f64 * res, 1.0) * h;
                    }
                    let s = inv * atz;
                    if s[0].hypot(s[1]).atan() > t.max_slope {
                        return FAIL;
                    }
                    for &o in offs {
                        let r = z(o) - (s[0] * o.0 as f64 * res + s[1] * o.1 as f64 * res + s[2]);
                        if r.abs() > t.max_roughness {
                            return FAIL;
                        }
                    }
                    for &(a, b) in pairs {
                        if (z(a) - z(b)).abs() > t.max_step {
                            return FAIL;
                        }
                    }
                    PASS
                })
            })
            .collect();

        // Row prefix counts of failing and unknown cells.
        let mut fail_pre = vec![0u32; nr * (nc + 1)];
        let mut unk_pre = vec![0u32; nr * (nc + 1)];
        for i in 0..nr {
            for j in 0..nc {
                let k = i * (nc + 1) + j;
                let c = cell[i * nc + j];
                fail_pre[k + 1] = fail_pre[k] + (c == FAIL) as u32;
                unk_pre[k + 1] = unk_pre[k] + (c == UNKNOWN) as u32;
            }
        }
        let rr = rover_radius / res;
        let rn = rr.floor() as isize;
        let dilated: Vec<u8> = (0..nr)
            .into_par_iter()
            .flat_map_iter(|i| {
                let (fail_pre, unk_pre) = (&fail_pre, &unk_pre);
                (0..nc).map(move |j| {
                    let mut fail = false;
                    for di in -rn..=rn {
                        let w = (rr * rr - (di * di) as f64).max(0.0).sqrt().floor() as isize;
                        let ii = i as isize + di;
                        let (j0, j1) = (j as isize - w, j as isize + w);
                        if ii < 0 || ii >= nr as isize || j0 < 0 || j1 >= nc as isize {
                            return UNKNOWN;
                        }
                        let base = ii as usize * (nc + 1);
                        let (a, b) = (base + j0 as usize, base + j1 as usize + 1);
                        if unk_pre[b] > unk_pre[a] {
                            return UNKNOWN;
                        }
                        fail |= fail_pre[b] > fail_pre[a];
                    }
                    if fail {
                        FAIL
                    } else {
                        PASS
                    }
                })
            })
            .collect();
        Self {
            n_rows: nr,
            n_cols: nc,
            cell,
            dilated,
        }
    }

    fn to_overall(c: u8) -> Overall {
        match c {
            PASS => Overall::Safe,
            FAIL => Overall::Unsafe,
            _ => Overall::Unevaluatable,
        }
    }

    /// Undilated verdict of one cell.
    pub fn cell(&self, i: usize, j: usize) -> Overall {
        Self::to_overall(self.cell[i * self.n_cols + j])
    }

    /// Verdict at the cell under `pose`.
    pub fn check(&self, dem: &Dem, pose: &Pose2D) -> Overall {
        match dem.cell_of(pose.x, pose.y) {
            Some((i, j)) if i < self.n_rows && j < self.n_cols => {
                Self::to_overall(self.dilated[i * self.n_cols + j])
            }
            _ => Overall::Unevaluatable,
        }
    }
}

/// Rover state and clearance as estimated from a single plane fitted
/// around the pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanefitEstimate {
    pub fit: PlaneFit,
    pub body: BodyState,
    /// Highest terrain point in the window minus the estimated pan height.
    pub clearance: f64,
}

/// Places the rover on the fitted plane. Every joint angle is zero on a
/// plane, so only the attitude and heights vary.
pub fn planefit_estimate(
    dem: &Dem,
    pose: &Pose2D,
    model: &RoverModel,
    window_radius: f64,
) -> Result<PlanefitEstimate, PlanefitError> {
    let fit = plane_fit(dem, [pose.x, pose.y], window_radius)?;
    let (ci, cj) = dem
        .cell_of(pose.x, pose.y)
        .ok_or(TerrainError::OutOfBounds)?;
    let c = dem.cell_center(ci, cj);
    let plane = |x: f64, y: f64| fit.gx * (x - c[0]) + fit.gy * (y - c[1]) + fit.z0;
    let pos = model.wheel_positions_for(0.0, 0.0, 0.0, 0.0, 0.0);
    let mut h = [f64::NAN; 6];
    for &w in model.wheels() {
        let (bx, by) = pos[w as usize];
        let p = pose.to_world(bx, by);
        h[w as usize] = plane(p[0], p[1]);
    }
    let (_, body) = solve(&WheelHeights(h), model)?;
    Ok(PlanefitEstimate {
        fit,
        body,
        clearance: fit.highest - body.z_p,
    })
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanefitError {
    #[error("terrain: {0}")]
    Terrain(#[from] TerrainError),
    #[error("kinematics: {0}")]
    Kinematics(#[from] KinematicsError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terrain::Bump;

    #[test]
    fn flat_is_clean() {
        let dem = Dem::flat(60, 60, 0.1, [0.0, 0.0], 0.3);
        let f = plane_fit(&dem, [3.0, 3.0], 1.25).unwrap();
        assert!(f.slope < 1e-12 && f.step == 0.0);
        assert!(f.roughness < 1e-12);
        assert!(f.points > 400);
        let g = GoodnessMap::build(&dem, &PlanefitThresholds::default(), 1.0);
        assert_eq!(g.check(&dem, &Pose2D::new(3.0, 3.0, 0.0)), Overall::Safe);
        // Window or dilation disc leaves the map.
        assert_eq!(
            g.check(&dem, &Pose2D::new(0.5, 3.0, 0.0)),
            Overall::Unevaluatable
        );
    }

    #[test]
    fn uniform_slope_is_recovered() {
        for s in [0.05f64, 0.2, 0.4] {
            let t = s.tan();
            let dem = Dem::from_fn(60, 60, 0.1, [0.0, 0.0], |x, y| -t * (0.6 * x + 0.8 * y));
            let f = plane_fit(&dem, [3.0, 3.0], 1.25).unwrap();
            assert!((f.slope - s).abs() < 1e-6, "{s}: {}", f.slope);
            assert!(f.roughness < 1e-9);
        }
    }

    #[test]
    fn tall_rock_within_rover_radius_is_unsafe() {
        let mut dem = Dem::flat(100, 130, 0.1, [0.0, 0.0], 0.0);
        dem.set(50, 50, -0.3);
        let t = PlanefitThresholds::default();
        let g = GoodnessMap::build(&dem, &t, 1.5);
        assert_eq!(g.cell(50, 50), Overall::Unsafe);
        // Outside the window but inside the dilation disc.
        assert_eq!(g.cell(50, 64), Overall::Safe);
        assert_eq!(
            g.check(&dem, &Pose2D::new(5.05, 6.45, 0.0)),
            Overall::Unsafe
        );
        // Beyond window plus radius.
        assert_eq!(g.check(&dem, &Pose2D::new(5.05, 7.95, 0.0)), Overall::Safe);
    }

    #[test]
    fn unknown_cells_are_unevaluatable() {
        let mut dem = Dem::flat(100, 100, 0.1, [0.0, 0.0], 0.0);
        dem.set(50, 50, f64::NAN);
        assert_eq!(plane_fit(&dem, [5.0, 5.0], 1.0), Err(TerrainError::Unknown));
        let g = GoodnessMap::build(&dem, &PlanefitThresholds::default(), 1.0);
        assert_eq!(
            g.check(&dem, &Pose2D::new(5.05, 5.55, 0.0)),
            Overall::Unevaluatable
        );
    }

    #[test]
    fn map_agrees_with_direct_fit() {
        let b = Bump {
            center: [4.0, 4.0],
            radius: [1.0, 0.7],
            height: 0.35,
        };
        let dem = crate::terrain::generate_bump([8.0, 8.0], 0.1, &b);
        let t = PlanefitThresholds::default();
        let g = GoodnessMap::build(&dem, &t, 0.0);
        for i in (15..65).step_by(3) {
            for j in (15..65).step_by(3) {
                let c = dem.cell_center(i, j);
                let f = plane_fit(&dem, c, t.window_radius).unwrap();
                let pass = f.slope <= t.max_slope
                    && f.roughness <= t.max_roughness
                    && f.step <= t.max_step;
                assert_eq!(g.cell(i, j) == Overall::Safe, pass, "{i},{j}");
            }
        }
    }

    #[test]
    fn flat_estimate_is_exact() {
        let m = RoverModel::canonical();
        let dem = Dem::flat(80, 80, 0.1, [-4.0, -4.0], 0.1);
        let e = planefit_estimate(&dem, &Pose2D::new(0.0, 0.0, 0.7), &m, 1.25).unwrap();
        assert!((e.clearance - m.params().c_0).abs() < 1e-12);
        assert!(e.body.theta.abs() < 1e-12);
    }
}

//! Gridded terrain, footprint queries and synthetic terrain generators.
//!
//! Internally the world frame is north-east-down: `x` points north and
//! indexes DEM rows, `y` points east and indexes columns, heights are
//! z-down. Cell `(i, j)` has its center at
//! `origin + ((i + 0.5) * res, (j + 0.5) * res)`.
//!
//! Between cell centers the surface is the bilinear interpolant of the
//! center heights (held constant past the outermost centers). Range queries
//! are conservative with respect to that surface.

pub mod esri;
pub mod generate;
mod index;
mod surface;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::Interval;
use index::SpanIndex;

pub use esri::{read_esri_ascii, write_esri_ascii};
pub use generate::{
    add_gaussian_noise, generate_bump, generate_quadratic, generate_rock_field, Bump, Rock,
    RockField, RockFieldSpec, TerrainMeta,
};

const GEOM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TerrainError {
    #[error("query region extends beyond the terrain extent")]
    OutOfBounds,
    #[error("query region touches unknown terrain")]
    Unknown,
    #[error("invalid terrain: {0}")]
    Invalid(String),
    #[error("rock placement failed after {attempts} attempts at coverage {achieved:.4}")]
    PlacementFailure { attempts: usize, achieved: f64 },
    #[error("terrain file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("terrain file: {0}")]
    Io(String),
}

/// Planar pose: position in meters, heading in radians from north toward
/// east, normalized to `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, psi: f64) -> Self {
        Self {
            x,
            y,
            psi: normalize_angle(psi),
        }
    }

    /// Body-frame point (forward, right) to world `[x, y]`.
    pub fn to_world(&self, bx: f64, by: f64) -> [f64; 2] {
        let (s, c) = self.psi.sin_cos();
        [self.x + c * bx - s * by, self.y + s * bx + c * by]
    }

    /// World point to body-frame (forward, right).
    pub fn to_body(&self, wx: f64, wy: f64) -> [f64; 2] {
        let (s, c) = self.psi.sin_cos();
        let (dx, dy) = (wx - self.x, wy - self.y);
        [c * dx + s * dy, -s * dx + c * dy]
    }

    /// World corners of a body-frame axis-aligned rectangle.
    pub fn rect_to_world(&self, x: Interval, y: Interval) -> [[f64; 2]; 4] {
        [
            self.to_world(x.lo, y.lo),
            self.to_world(x.hi, y.lo),
            self.to_world(x.hi, y.hi),
            self.to_world(x.lo, y.hi),
        ]
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn normalize_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

/// Axis-aligned rectangle in the body frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WheelBoxQuery {
    pub center: [f64; 2],
    pub dims: [f64; 2],
}

impl WheelBoxQuery {
    pub fn new(center: [f64; 2], dims: [f64; 2]) -> Self {
        assert!(dims[0] > 0.0 && dims[1] > 0.0, "box dims must be positive");
        Self { center, dims }
    }

    pub fn world_polygon(&self, pose: &Pose2D) -> [[f64; 2]; 4] {
        let hx = 0.5 * self.dims[0];
        let hy = 0.5 * self.dims[1];
        pose.rect_to_world(
            Interval::new(self.center[0] - hx, self.center[0] + hx),
            Interval::new(self.center[1] - hy, self.center[1] + hy),
        )
    }
}

/// Regular height grid. Unknown cells hold NaN.
pub struct Dem {
    n_rows: usize,
    n_cols: usize,
    resolution: f64,
    origin: [f64; 2],
    cells: Vec<f64>,
    index: OnceLock<SpanIndex>,
}

impl Clone for Dem {
    fn clone(&self) -> Self {
        Dem {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            resolution: self.resolution,
            origin: self.origin,
            cells: self.cells.clone(),
            index: OnceLock::new(),
        }
    }
}

impl PartialEq for Dem {
    /// Bitwise comparison of the grid, treating NaN cells as equal.
    fn eq(&self, other: &Self) -> bool {
        self.n_rows == other.n_rows
            && self.n_cols == other.n_cols
            && self.resolution == other.resolution
            && self.origin == other.origin
            && self
                .cells
                .iter()
                .zip(&other.cells)
                .all(|(a, b)| a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()))
    }
}

impl std::fmt::Debug for Dem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dem")
            .field("n_rows", &self.n_rows)
            .field("n_cols", &self.n_cols)
            .field("resolution", &self.resolution)
            .field("origin", &self.origin)
            .finish_non_exhaustive()
    }
}

impl Dem {
    /// Builds a grid from row-major z-down heights (NaN = unknown).
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        resolution: f64,
        origin: [f64; 2],
        cells: Vec<f64>,
    ) -> Result<Self, TerrainError> {
        if n_rows == 0 || n_cols == 0 {
            return Err(TerrainError::Invalid(
                "grid must have at least one cell".into(),
            ));
        }
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(TerrainError::Invalid(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        if cells.len() != n_rows * n_cols {
            return Err(TerrainError::Invalid(format!(
                "expected {} cells, got {}",
                n_rows * n_cols,
                cells.len()
            )));
        }
        if cells.iter().any(|v| v.is_infinite()) {
            return Err(TerrainError::Invalid("infinite height".into()));
        }
        Ok(Dem {
            n_rows,
            n_cols,
            resolution,
            origin,
            cells,
            index: OnceLock::new(),
        })
    }

    /// Samples `f(x, y)` at every cell center.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(
        n_rows: usize,
        n_cols: usize,
        resolution: f64,
        origin: [f64; 2],
        f: F,
    ) -> Self {
        let mut cells = Vec::with_capacity(n_rows * n_cols);
        for i in 0..n_rows {
            let x = origin[0] + (i as f64 + 0.5) * resolution;
            for j in 0..n_cols {
                cells.push(f(x, origin[1] + (j as f64 + 0.5) * resolution));
            }
        }
        Dem::new(n_rows, n_cols, resolution, origin, cells).expect("valid grid")
    }

    pub fn flat(n_rows: usize, n_cols: usize, resolution: f64, origin: [f64; 2], h: f64) -> Self {
        Dem::from_fn(n_rows, n_cols, resolution, origin, |_, _| h)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }
    pub fn resolution(&self) -> f64 {
        self.resolution
    }
    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }
    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    /// Height at `(i, j)`, `None` if unknown.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let v = self.cells[i * self.n_cols + j];
        (!v.is_nan()).then_some(v)
    }

    /// Raw height at `(i, j)`, NaN if unknown.
    pub fn raw(&self, i: usize, j: usize) -> f64 {
        self.cells[i * self.n_cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.cells[i * self.n_cols + j] = v;
        self.index = OnceLock::new();
    }

    pub fn is_known(&self, i: usize, j: usize) -> bool {
        !self.raw(i, j).is_nan()
    }

    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.resolution,
            self.origin[1] + (j as f64 + 0.5) * self.resolution,
        ]
    }

    /// Cell containing a world point, if any.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let u = ((x - self.origin[0]) / self.resolution).floor();
        let v = ((y - self.origin[1]) / self.resolution).floor();
        (u >= 0.0 && v >= 0.0 && (u as usize) < self.n_rows && (v as usize) < self.n_cols)
            .then_some((u as usize, v as usize))
    }

    /// World extent `(x range, y range)` covered by the cells.
    pub fn extent(&self) -> (Interval, Interval) {
        (
            Interval::new(
                self.origin[0],
                self.origin[0] + self.n_rows as f64 * self.resolution,
            ),
            Interval::new(
                self.origin[1],
                self.origin[1] + self.n_cols as f64 * self.resolution,
            ),
        )
    }

    pub fn contains_point(&self, p: [f64; 2]) -> bool {
        let (ex, ey) = self.extent();
        ex.contains_within(p[0], GEOM_TOL) && ey.contains_within(p[1], GEOM_TOL)
    }

    /// Fraction of known cells with height strictly above (less than) `z`.
    pub fn fraction_above(&self, z: f64) -> f64 {
        let n = self.cells.iter().filter(|v| **v < z).count();
        n as f64 / self.cells.len() as f64
    }

    fn span_index(&self) -> &SpanIndex {
        self.index.get_or_init(|| SpanIndex::build(self))
    }

    /// Height interval over every cell whose bilinear support intersects
    /// the convex polygon. This includes every cell whose area intersects
    /// it, and bounds the interpolated surface anywhere inside it.
    pub fn minmax_in_polygon(&self, poly: &[[f64; 2]]) -> Result<Interval, TerrainError> {
        if !poly.iter().all(|p| self.contains_point(*p)) {
            return Err(TerrainError::OutOfBounds);
        }
        self.span_index().query(self, poly)
    }

    /// Interpolated surface height; NaN if it depends on an unknown cell.
    pub fn surface_height(&self, x: f64, y: f64) -> f64 {
        surface::bilinear(self, x, y)
    }

    /// Highest (minimum z-down) surface point over a convex polygon, with
    /// its location.
    pub fn highest_point_in_polygon(
        &self,
        poly: &[[f64; 2]],
    ) -> Result<(f64, [f64; 2]), TerrainError> {
        if !poly.iter().all(|p| self.contains_point(*p)) {
            return Err(TerrainError::OutOfBounds);
        }
        surface::highest_point(self, poly)
    }
}

/// Height interval of the terrain under a body-frame box at `pose`.
pub fn minmax_in_box(
    dem: &Dem,
    pose: &Pose2D,
    bx: &WheelBoxQuery,
) -> Result<Interval, TerrainError> {
    dem.minmax_in_polygon(&bx.world_polygon(pose))
}

/// Whether `p` lies in the convex polygon (either winding), with slack.
pub(crate) fn point_in_convex(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    let n = poly.len();
    let mut sign = 0.0f64;
    for k in 0..n {
        let a = poly[k];
        let b = poly[(k + 1) % n];
        let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        if cross.abs() <= GEOM_TOL {
            continue;
        }
        if sign == 0.0 {
            sign = cross.signum();
        } else if cross.signum() != sign {
            return false;
        }
    }
    true
}

//! Bilinear surface through cell centers.

use super::{point_in_convex, Dem, TerrainError};

/// Fractional center coordinate clamped to the grid, split into a base
/// index and weight.
fn axis(t: f64, n: usize) -> (usize, f64) {
    if n == 1 {
        return (0, 0.0);
    }
    let t = t.clamp(0.0, (n - 1) as f64);
    let k = (t.floor() as usize).min(n - 2);
    (k, t - k as f64)
}

pub(super) fn bilinear(dem: &Dem, x: f64, y: f64) -> f64 {
    let res = dem.resolution();
    let [x0, y0] = dem.origin();
    let (i, fu) = axis((x - x0) / res - 0.5, dem.n_rows());
    let (j, fv) = axis((y - y0) / res - 0.5, dem.n_cols());
    let i1 = (i + 1).min(dem.n_rows() - 1);
    let j1 = (j + 1).min(dem.n_cols() - 1);
    let a = dem.raw(i, j);
    let b = dem.raw(i, j1);
    let c = dem.raw(i1, j);
    let d = dem.raw(i1, j1);
    let top = if fv == 0.0 { a } else { a + fv * (b - a) };
    let bot = if fv == 0.0 { c } else { c + fv * (d - c) };
    if fu == 0.0 {
        top
    } else {
        top + fu * (bot - top)
    }
}

/// Exact minimum of the bilinear surface over a convex polygon.
///
/// Inside each patch between four centers the surface is bilinear, so it
/// has no interior extremum: the minimum lies on a polygon edge (where the
/// surface is piecewise quadratic) or on a center line inside the polygon
/// (where it is piecewise linear, so at a node or an edge crossing).
pub(super) fn highest_point(dem: &Dem, poly: &[[f64; 2]]) -> Result<(f64, [f64; 2]), TerrainError> {
    let res = dem.resolution();
    let [x0, y0] = dem.origin();
    let centroid = {
        let n = poly.len() as f64;
        let s = poly
            .iter()
            .fold([0.0, 0.0], |a, p| [a[0] + p[0], a[1] + p[1]]);
        [s[0] / n, s[1] / n]
    };
    let mut best = (f64::INFINITY, centroid);
    let mut consider = |p: [f64; 2]| -> Result<(), TerrainError> {
        let z = bilinear(dem, p[0], p[1]);
        if z.is_nan() {
            return Err(TerrainError::Unknown);
        }
        let d = (p[0] - centroid[0]).hypot(p[1] - centroid[1]);
        let db = (best.1[0] - centroid[0]).hypot(best.1[1] - centroid[1]);
        if z < best.0 || (z == best.0 && d < db) {
            best = (z, p);
        }
        Ok(())
    };

    let n = poly.len();
    let mut ts: Vec<f64> = Vec::with_capacity(32);
    for k in 0..n {
        let p = poly[k];
        let q = poly[(k + 1) % n];
        ts.clear();
        ts.push(0.0);
        ts.push(1.0);
        for (axis, origin, count) in [(0, x0, dem.n_rows()), (1, y0, dem.n_cols())] {
            let (a, b) = (p[axis], q[axis]);
            if a == b {
                continue;
            }
            let (lo, hi) = (a.min(b), a.max(b));
            let c0 = ((lo - origin) / res - 0.5).ceil().max(0.0) as usize;
            let c1 = ((hi - origin) / res - 0.5).floor();
            if c1 < 0.0 {
                continue;
            }
            let c1 = (c1 as usize).min(count - 1);
            for c in c0..=c1 {
                let line = origin + (c as f64 + 0.5) * res;
                let t = (line - a) / (b - a);
                if t > 0.0 && t < 1.0 {
                    ts.push(t);
                }
            }
        }
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let at = |t: f64| [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
        for w in ts.windows(2) {
            let (ta, tb) = (w[0], w[1]);
            consider(at(ta))?;
            if tb - ta <= 0.0 {
                continue;
            }
            // quadratic through the endpoints and midpoint
            let tm = 0.5 * (ta + tb);
            let fa = bilinear(dem, at(ta)[0], at(ta)[1]);
            let fm = bilinear(dem, at(tm)[0], at(tm)[1]);
            let fb = bilinear(dem, at(tb)[0], at(tb)[1]);
            let curv = fa - 2.0 * fm + fb;
            if curv > 0.0 {
                // s in [0, 1] along the sub-segment
                let s = 0.5 - 0.5 * (fb - fa) / (2.0 * curv);
                if s > 0.0 && s < 1.0 {
                    consider(at(ta + s * (tb - ta)))?;
                }
            }
        }
        consider(q)?;
    }

    // centers inside the polygon
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for p in poly {
        xmin = xmin.min(p[0]);
        xmax = xmax.max(p[0]);
        ymin = ymin.min(p[1]);
        ymax = ymax.max(p[1]);
    }
    let i0 = ((xmin - x0) / res - 0.5).ceil().max(0.0) as usize;
    let i1 = ((xmax - x0) / res - 0.5).floor();
    let j0 = ((ymin - y0) / res - 0.5).ceil().max(0.0) as usize;
    let j1 = ((ymax - y0) / res - 0.5).floor();
    if i1 >= 0.0 && j1 >= 0.0 {
        let i1 = (i1 as usize).min(dem.n_rows() - 1);
        let j1 = (j1 as usize).min(dem.n_cols() - 1);
        for i in i0..=i1 {
            for j in j0..=j1 {
                let c = dem.cell_center(i, j);
                if point_in_convex(poly, c) {
                    consider(c)?;
                }
            }
        }
    }
    Ok(best)
}

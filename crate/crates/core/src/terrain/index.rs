//! Per-row range-min/max tables for constant-time span queries.

use super::{Dem, TerrainError, GEOM_TOL};
use crate::interval::Interval;

pub(super) struct SpanIndex {
    n_cols: usize,
    /// `min[k][i * n_cols + j]` = min over columns `j .. j + 2^k` of row `i`.
    min: Vec<Vec<f64>>,
    max: Vec<Vec<f64>>,
    /// Unknown-cell prefix counts, `n_cols + 1` per row.
    unknown: Vec<u32>,
}

impl SpanIndex {
    pub(super) fn build(dem: &Dem) -> Self {
        let (nr, nc) = (dem.n_rows(), dem.n_cols());
        let base_min: Vec<f64> = dem
            .cells()
            .iter()
            .map(|v| if v.is_nan() { f64::INFINITY } else { *v })
            .collect();
        let base_max: Vec<f64> = dem
            .cells()
            .iter()
            .map(|v| if v.is_nan() { f64::NEG_INFINITY } else { *v })
            .collect();
        let mut min = vec![base_min];
        let mut max = vec![base_max];
        let mut span = 1;
        while 2 * span <= nc {
            let (pmin, pmax) = (min.last().unwrap(), max.last().unwrap());
            let mut lmin = pmin.clone();
            let mut lmax = pmax.clone();
            for i in 0..nr {
                let row = i * nc;
                for j in 0..=(nc - 2 * span) {
                    lmin[row + j] = pmin[row + j].min(pmin[row + j + span]);
                    lmax[row + j] = pmax[row + j].max(pmax[row + j + span]);
                }
            }
            min.push(lmin);
            max.push(lmax);
            span *= 2;
        }
        let mut unknown = Vec::with_capacity(nr * (nc + 1));
        for i in 0..nr {
            let mut acc = 0u32;
            unknown.push(0);
            for j in 0..nc {
                acc += dem.raw(i, j).is_nan() as u32;
                unknown.push(acc);
            }
        }
        SpanIndex {
            n_cols: nc,
            min,
            max,
            unknown,
        }
    }

    fn row_span(&self, i: usize, j0: usize, j1: usize) -> (f64, f64, bool) {
        let nc = self.n_cols;
        let len = j1 - j0 + 1;
        let k = (usize::BITS - 1 - len.leading_zeros()) as usize;
        let a = i * nc + j0;
        let b = i * nc + j1 + 1 - (1 << k);
        let lo = self.min[k][a].min(self.min[k][b]);
        let hi = self.max[k][a].max(self.max[k][b]);
        let unk = self.unknown[i * (nc + 1) + j1 + 1] != self.unknown[i * (nc + 1) + j0];
        (lo, hi, unk)
    }

    /// Caller has already checked that the polygon lies inside the extent.
    pub(super) fn query(&self, dem: &Dem, poly: &[[f64; 2]]) -> Result<Interval, TerrainError> {
        let res = dem.resolution();
        let [x0, y0] = dem.origin();
        // influence half-width of a sample under bilinear interpolation
        let h = res + GEOM_TOL;
        let (mut pxmin, mut pxmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in poly {
            pxmin = pxmin.min(p[0]);
            pxmax = pxmax.max(p[0]);
        }
        let i0 = ((pxmin - h - x0) / res - 0.5).ceil().max(0.0) as usize;
        let i1 = (((pxmax + h - x0) / res - 0.5).floor() as isize).min(dem.n_rows() as isize - 1);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        if i1 < i0 as isize {
            return Err(TerrainError::OutOfBounds);
        }
        for i in i0..=(i1 as usize) {
            let xc = x0 + (i as f64 + 0.5) * res;
            let Some((ylo, yhi)) = y_range_in_strip(poly, xc - h, xc + h) else {
                continue;
            };
            let j0 = ((ylo - h - y0) / res - 0.5).ceil().max(0.0) as usize;
            let j1 = ((yhi + h - y0) / res - 0.5)
                .floor()
                .min(dem.n_cols() as f64 - 1.0);
            if j1 < j0 as f64 {
                continue;
            }
            let (a, b, unk) = self.row_span(i, j0, j1 as usize);
            if unk {
                return Err(TerrainError::Unknown);
            }
            lo = lo.min(a);
            hi = hi.max(b);
        }
        if lo > hi {
            return Err(TerrainError::OutOfBounds);
        }
        Ok(Interval::new(lo, hi))
    }
}

/// `y` extent of a convex polygon clipped to the strip `xa <= x <= xb`.
fn y_range_in_strip(poly: &[[f64; 2]], xa: f64, xb: f64) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let n = poly.len();
    for k in 0..n {
        let p = poly[k];
        let q = poly[(k + 1) % n];
        if p[0] >= xa && p[0] <= xb {
            lo = lo.min(p[1]);
            hi = hi.max(p[1]);
        }
        for xs in [xa, xb] {
            if (p[0] - xs) * (q[0] - xs) < 0.0 {
                let t = (xs - p[0]) / (q[0] - p[0]);
                let y = p[1] + t * (q[1] - p[1]);
                lo = lo.min(y);
                hi = hi.max(y);
            }
        }
    }
    (lo <= hi).then_some((lo, hi))
}

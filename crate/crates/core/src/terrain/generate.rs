//! Synthetic terrains: quadratic troughs and ridges, smooth bumps, rock
//! fields and sensor noise.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Dem, TerrainError};

/// Sidecar describing how a terrain was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerrainMeta {
    pub generator: String,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    pub achieved_cfa: Option<f64>,
}

/// Square grid centered on the origin with a cell center at `(0, 0)`.
fn centered_grid(extent: f64, resolution: f64) -> (usize, [f64; 2]) {
    let half = (0.5 * extent / resolution).round().max(0.0) as usize;
    let n = 2 * half + 1;
    let o = -(half as f64 + 0.5) * resolution;
    (n, [o, o])
}

/// `z = a * x^2` (z-down) on a square of side `extent` centered at the
/// origin. Negative `a` rises away from `x = 0`.
pub fn generate_quadratic(a: f64, extent: f64, resolution: f64) -> Dem {
    assert!(resolution > 0.0, "resolution must be positive");
    let (n, origin) = centered_grid(extent, resolution);
    Dem::from_fn(n, n, resolution, origin, |x, _| a * x * x)
}

/// Elliptical raised-cosine bump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: [f64; 2],
    pub radius: [f64; 2],
    /// Peak elevation above the base, meters (up-positive).
    pub height: f64,
}

impl Bump {
    /// z-down height contribution at a point.
    pub fn z_at(&self, x: f64, y: f64) -> f64 {
        let u = (x - self.center[0]) / self.radius[0];
        let v = (y - self.center[1]) / self.radius[1];
        let r = (u * u + v * v).sqrt();
        if r >= 1.0 {
            0.0
        } else {
            -self.height * 0.5 * (1.0 + (std::f64::consts::PI * r).cos())
        }
    }
}

/// Flat ground at zero with one bump, on `[0, size_x] x [0, size_y]`.
pub fn generate_bump(size: [f64; 2], resolution: f64, bump: &Bump) -> Dem {
    assert!(resolution > 0.0, "resolution must be positive");
    let nr = (size[0] / resolution).round() as usize;
    let nc = (size[1] / resolution).round() as usize;
    Dem::from_fn(nr, nc, resolution, [0.0, 0.0], |x, y| bump.z_at(x, y) + 0.0)
}

/// Hemispherical rock of diameter `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rock {
    pub x: f64,
    pub y: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RockFieldSpec {
    /// Target fraction of area covered by rocks.
    pub cfa: f64,
    /// Map size along x (north) and y (east), meters.
    pub size: [f64; 2],
    pub resolution: f64,
    pub seed: u64,
    pub d_min: f64,
    pub d_max: f64,
    /// Discs `(x, y, r)` kept free of rocks.
    pub keep_out: Vec<[f64; 3]>,
}

impl RockFieldSpec {
    pub fn new(cfa: f64, size: [f64; 2], resolution: f64, seed: u64) -> Self {
        Self {
            cfa,
            size,
            resolution,
            seed,
            d_min: 0.1,
            d_max: 2.0,
            keep_out: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RockField {
    pub dem: Dem,
    pub rocks: Vec<Rock>,
    /// Covered fraction measured by counting cells whose center lies on a
    /// rock.
    pub achieved_cfa: f64,
}

impl RockField {
    pub fn meta(&self, spec: &RockFieldSpec) -> TerrainMeta {
        TerrainMeta {
            generator: "rock-field".into(),
            parameters: serde_json::json!({
                "cfa": spec.cfa,
                "size_m": spec.size,
                "resolution_m": spec.resolution,
                "diameter_range_m": [spec.d_min, spec.d_max],
                "size_frequency": "k*exp(-q*D), q = 1.79 + 0.152/k",
                "rock_shape": "hemisphere",
                "keep_out": spec.keep_out,
                "rock_count": self.rocks.len(),
            }),
            seed: Some(spec.seed),
            achieved_cfa: Some(self.achieved_cfa),
        }
    }
}

/// Exponent of the cumulative-area size-frequency model for total rock
/// abundance `k`.
pub fn size_frequency_q(k: f64) -> f64 {
    1.79 + 0.152 / k
}

const MAX_PLACEMENT_ATTEMPTS: usize = 2_000_000;

/// Flat ground covered by non-overlapping hemispherical rocks.
///
/// Diameters follow the number density implied by the cumulative area
/// model `F(D) = k exp(-q D)`, which is proportional to `exp(-q D) / D^2`,
/// truncated to `[d_min, d_max]`. Rocks are added at uniform positions
/// until the measured covered fraction reaches `cfa`.
pub fn generate_rock_field(spec: &RockFieldSpec) -> Result<RockField, TerrainError> {
    if !(0.0..=0.25).contains(&spec.cfa) {
        return Err(TerrainError::Invalid(format!(
            "cfa must lie in [0, 0.25], got {}",
            spec.cfa
        )));
    }
    let res = spec.resolution;
    let nr = (spec.size[0] / res).round() as usize;
    let nc = (spec.size[1] / res).round() as usize;
    let mut cells = vec![0.0f64; nr * nc];
    let mut covered = vec![false; nr * nc];
    let total = (nr * nc) as f64;
    let mut n_covered = 0usize;
    let mut rocks: Vec<Rock> = Vec::new();
    if spec.cfa == 0.0 {
        let dem = Dem::new(nr, nc, res, [0.0, 0.0], cells)?;
        return Ok(RockField {
            dem,
            rocks,
            achieved_cfa: 0.0,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let q = size_frequency_q(spec.cfa);
    let (a, b) = (spec.d_min, spec.d_max);
    let bucket = b;
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let key = |x: f64, y: f64| ((x / bucket).floor() as i64, (y / bucket).floor() as i64);

    let mut attempts = 0usize;
    while (n_covered as f64) / total < spec.cfa {
        attempts += 1;
        if attempts > MAX_PLACEMENT_ATTEMPTS {
            return Err(TerrainError::PlacementFailure {
                attempts,
                achieved: n_covered as f64 / total,
            });
        }
        // 1/D^2 by inversion, thinned by exp(-q (D - a))
        let d = loop {
            let u: f64 = rng.gen();
            let d = 1.0 / (1.0 / a - u * (1.0 / a - 1.0 / b));
            if rng.gen::<f64>() < (-q * (d - a)).exp() {
                break d;
            }
        };
        let x = rng.gen::<f64>() * spec.size[0];
        let y = rng.gen::<f64>() * spec.size[1];
        let r = 0.5 * d;
        if spec
            .keep_out
            .iter()
            .any(|k| (x - k[0]).hypot(y - k[1]) < k[2] + r)
        {
            continue;
        }
        let (kx, ky) = key(x, y);
        let mut overlaps = false;
        'outer: for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = grid.get(&(kx + dx, ky + dy)) {
                    for &id in ids {
                        let o = &rocks[id];
                        if (x - o.x).hypot(y - o.y) < r + 0.5 * o.d {
                            overlaps = true;
                            break 'outer;
                        }
                    }
                }
            }
        }
        if overlaps {
            continue;
        }
        grid.entry((kx, ky)).or_default().push(rocks.len());
        rocks.push(Rock { x, y, d });
        // stamp the hemisphere
        let i0 = (((x - r) / res - 0.5).ceil().max(0.0)) as usize;
        let i1 = ((x + r) / res - 0.5).floor().min(nr as f64 - 1.0);
        let j0 = (((y - r) / res - 0.5).ceil().max(0.0)) as usize;
        let j1 = ((y + r) / res - 0.5).floor().min(nc as f64 - 1.0);
        if i1 < 0.0 || j1 < 0.0 {
            continue;
        }
        for i in i0..=(i1 as usize) {
            let cx = (i as f64 + 0.5) * res;
            for j in j0..=(j1 as usize) {
                let cy = (j as f64 + 0.5) * res;
                let rr = (cx - x).powi(2) + (cy - y).powi(2);
                if rr < r * r {
                    let z = -(r * r - rr).sqrt();
                    let k = i * nc + j;
                    cells[k] = cells[k].min(z);
                    if !covered[k] {
                        covered[k] = true;
                        n_covered += 1;
                    }
                }
            }
        }
    }
    let dem = Dem::new(nr, nc, res, [0.0, 0.0], cells)?;
    Ok(RockField {
        dem,
        rocks,
        achieved_cfa: n_covered as f64 / total,
    })
}

/// Adds zero-mean Gaussian noise of standard deviation `sigma`, truncated
/// to `|n| <= truncate` by resampling, to every known cell.
pub fn add_gaussian_noise(dem: &Dem, sigma: f64, truncate: f64, seed: u64) -> Dem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = dem
        .cells()
        .iter()
        .map(|&z| {
            if z.is_nan() || sigma == 0.0 {
                return z;
            }
            loop {
                let n: f64 = StandardNormal.sample(&mut rng);
                let n = n * sigma;
                if n.abs() <= truncate {
                    break z + n;
                }
            }
        })
        .collect();
    Dem::new(
        dem.n_rows(),
        dem.n_cols(),
        dem.resolution(),
        dem.origin(),
        cells,
    )
    .expect("same shape")
}

//! Rover geometry, flat-ground calibration and wheel-box sizing.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::triangle::TriangleParams;
use super::{ModelError, Side, Wheel};
use crate::interval::Interval;

/// Suspension topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Rocker,
    RockerBogie,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Rocker => "rocker",
            Variant::RockerBogie => "rocker-bogie",
        }
    }
}

/// Mechanical range of a joint angle, radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleLimits {
    pub min: f64,
    pub max: f64,
}

impl AngleLimits {
    pub const fn symmetric(m: f64) -> Self {
        Self { min: -m, max: m }
    }

    pub fn as_interval(&self) -> Interval {
        Interval::new(self.min, self.max)
    }

    /// Range covering both `d` and `-d` for every `d` in the limits.
    fn mirrored_hull(&self) -> (f64, f64) {
        (self.min.min(-self.max), self.max.max(-self.min))
    }
}

/// User-facing rover description.
///
/// Lengths in meters, angles in radians. For the pure rocker variant
/// `l_db` is the differential-to-rear-wheel link and the bogie fields are
/// ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoverParams {
    pub variant: Variant,
    /// Differential joint to front wheel.
    pub l_df: f64,
    /// Differential joint to bogie joint (rear wheel for the rocker).
    pub l_db: f64,
    /// Rocker apex angle at the differential joint.
    pub phi_f: f64,
    /// Bogie joint to middle wheel.
    pub l_bm: f64,
    /// Bogie joint to rear wheel.
    pub l_br: f64,
    /// Bogie apex angle.
    pub phi_b: f64,
    /// Lateral offset of each differential joint (and wheel plane).
    pub y_od: f64,
    /// Nominal belly-pan clearance on flat ground.
    pub c_0: f64,
    pub w_p: f64,
    pub l_p: f64,
    /// Wheel contact footprint along the heading.
    pub wheel_box_x: f64,
    /// Wheel contact footprint across the heading.
    pub wheel_box_y: f64,
    pub wheel_radius: f64,
    pub delta_limits: AngleLimits,
    pub beta_limits: AngleLimits,
    /// Largest stable body tilt, used to size wheel boxes.
    pub max_tilt: f64,
}

impl RoverParams {
    /// Invented six-wheel test rover used throughout tests and examples.
    pub fn canonical() -> Self {
        Self {
            variant: Variant::RockerBogie,
            l_df: 1.2,
            l_db: 1.0,
            phi_f: 2.1,
            l_bm: 0.6,
            l_br: 0.6,
            phi_b: 2.4,
            y_od: 0.8,
            c_0: 0.6,
            w_p: 1.0,
            l_p: 1.8,
            wheel_box_x: 0.4,
            wheel_box_y: 0.3,
            wheel_radius: 0.25,
            delta_limits: AngleLimits::symmetric(0.6),
            beta_limits: AngleLimits::symmetric(0.7),
            max_tilt: 30f64.to_radians(),
        }
    }

    /// Four-wheel rocker built from the same rocker links.
    pub fn canonical_rocker() -> Self {
        Self {
            variant: Variant::Rocker,
            ..Self::canonical()
        }
    }

    /// Canonical rover scaled to a 2.7 m wheelbase.
    pub fn curiosity_sized() -> Self {
        let base = RoverModel::new(Self::canonical()).expect("canonical rover is valid");
        Self::canonical().scaled(2.7 / base.wheelbase())
    }

    /// Uniformly scales every length.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            l_df: self.l_df * k,
            l_db: self.l_db * k,
            l_bm: self.l_bm * k,
            l_br: self.l_br * k,
            y_od: self.y_od * k,
            c_0: self.c_0 * k,
            w_p: self.w_p * k,
            l_p: self.l_p * k,
            wheel_box_x: self.wheel_box_x * k,
            wheel_box_y: self.wheel_box_y * k,
            wheel_radius: self.wheel_radius * k,
            ..self.clone()
        }
    }

    pub fn rocker_triangle(&self) -> TriangleParams {
        TriangleParams::from_apex(self.l_df, self.l_db, self.phi_f)
    }

    pub fn bogie_triangle(&self) -> TriangleParams {
        TriangleParams::from_apex(self.l_bm, self.l_br, self.phi_b)
    }

    fn validate(&self) -> Result<(), ModelError> {
        let mut lengths = vec![
            ("l_df", self.l_df),
            ("l_db", self.l_db),
            ("y_od", self.y_od),
            ("c_0", self.c_0),
            ("w_p", self.w_p),
            ("l_p", self.l_p),
            ("wheel_box_x", self.wheel_box_x),
            ("wheel_box_y", self.wheel_box_y),
            ("wheel_radius", self.wheel_radius),
        ];
        if self.variant == Variant::RockerBogie {
            lengths.push(("l_bm", self.l_bm));
            lengths.push(("l_br", self.l_br));
        }
        for (name, v) in lengths {
            if !(v.is_finite() && v > 0.0) {
                return Err(ModelError::invalid(
                    name,
                    format!("must be a positive length, got {v}"),
                ));
            }
        }
        let mut apexes = vec![("phi_f", self.phi_f)];
        if self.variant == Variant::RockerBogie {
            apexes.push(("phi_b", self.phi_b));
        }
        for (name, v) in apexes {
            if !(v > 0.0 && v < std::f64::consts::PI) {
                return Err(ModelError::invalid(
                    name,
                    format!("apex angle must lie in (0, pi), got {v}"),
                ));
            }
        }
        let mut limits = vec![("delta", self.delta_limits)];
        if self.variant == Variant::RockerBogie {
            limits.push(("beta", self.beta_limits));
        }
        for (name, l) in limits {
            if l.min.partial_cmp(&l.max) != Some(std::cmp::Ordering::Less) {
                return Err(ModelError::invalid(
                    name,
                    format!("limits need min < max, got [{}, {}]", l.min, l.max),
                ));
            }
        }
        if !(self.max_tilt > 0.0 && self.max_tilt < std::f64::consts::FRAC_PI_2) {
            return Err(ModelError::invalid(
                "max_tilt",
                "must lie in (0, pi/2)".to_string(),
            ));
        }
        Ok(())
    }

    /// Writes the flat `key = value` model file.
    pub fn to_model_file(&self) -> String {
        let mut s = String::new();
        s.push_str("# Rover model\n");
        s.push_str("# Units: lengths in meters, angles in radians.\n");
        s.push_str(
            "# l_db is the differential-to-bogie link (differential-to-rear for a rocker).\n",
        );
        let _ = writeln!(s, "variant = {}", self.variant.as_str());
        for (k, v) in self.numeric_fields() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    fn numeric_fields(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("l_df", self.l_df),
            ("l_db", self.l_db),
            ("phi_f", self.phi_f),
            ("l_bm", self.l_bm),
            ("l_br", self.l_br),
            ("phi_b", self.phi_b),
            ("y_od", self.y_od),
            ("c_0", self.c_0),
            ("w_p", self.w_p),
            ("l_p", self.l_p),
            ("wheel_box_x", self.wheel_box_x),
            ("wheel_box_y", self.wheel_box_y),
            ("wheel_radius", self.wheel_radius),
            ("delta_min", self.delta_limits.min),
            ("delta_max", self.delta_limits.max),
            ("beta_min", self.beta_limits.min),
            ("beta_max", self.beta_limits.max),
            ("max_tilt", self.max_tilt),
        ]
    }

    /// Parses the `key = value` model format. Missing keys are an error,
    /// except bogie keys for the rocker variant.
    pub fn parse_model_file(text: &str) -> Result<Self, ModelError> {
        let mut p = RoverParams::canonical();
        let mut seen = std::collections::BTreeSet::new();
        let mut calib_check: Vec<(&'static str, f64, usize)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ModelError::Parse {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if key == "variant" {
                p.variant = match value {
                    "rocker" => Variant::Rocker,
                    "rocker-bogie" | "rocker_bogie" => Variant::RockerBogie,
                    other => {
                        return Err(ModelError::Parse {
                            line: line_no,
                            message: format!("unknown variant `{other}`"),
                        })
                    }
                };
                seen.insert("variant");
                continue;
            }
            let v: f64 = value.parse().map_err(|_| ModelError::Parse {
                line: line_no,
                message: format!("`{key}`: not a number: `{value}`"),
            })?;
            let slot: &mut f64 = match key {
                "l_df" => &mut p.l_df,
                "l_db" | "l_dr" => &mut p.l_db,
                "phi_f" => &mut p.phi_f,
                "l_bm" => &mut p.l_bm,
                "l_br" => &mut p.l_br,
                "phi_b" => &mut p.phi_b,
                "y_od" => &mut p.y_od,
                "c_0" => &mut p.c_0,
                "w_p" => &mut p.w_p,
                "l_p" => &mut p.l_p,
                "wheel_box_x" => &mut p.wheel_box_x,
                "wheel_box_y" => &mut p.wheel_box_y,
                "wheel_radius" => &mut p.wheel_radius,
                "delta_min" => &mut p.delta_limits.min,
                "delta_max" => &mut p.delta_limits.max,
                "beta_min" => &mut p.beta_limits.min,
                "beta_max" => &mut p.beta_limits.max,
                "max_tilt" => &mut p.max_tilt,
                "x_od" => {
                    calib_check.push(("x_od", v, line_no));
                    continue;
                }
                "z_od" => {
                    calib_check.push(("z_od", v, line_no));
                    continue;
                }
                other => {
                    return Err(ModelError::Parse {
                        line: line_no,
                        message: format!("unknown key `{other}`"),
                    })
                }
            };
            *slot = v;
            let canonical_key = match key {
                "l_dr" => "l_db",
                k => k,
            };
            seen.insert(canonical_key);
        }
        let bogie_keys = ["l_bm", "l_br", "phi_b", "beta_min", "beta_max"];
        for (k, _) in p.numeric_fields() {
            let optional = p.variant == Variant::Rocker && bogie_keys.contains(&k);
            if !optional && !seen.contains(k) {
                return Err(ModelError::Parse {
                    line: 0,
                    message: format!("missing key `{k}`"),
                });
            }
        }
        if !seen.contains("variant") {
            return Err(ModelError::Parse {
                line: 0,
                message: "missing key `variant`".into(),
            });
        }
        // Offsets are derived from the links; explicit values must agree.
        if !calib_check.is_empty() {
            let model = RoverModel::new(p.clone())?;
            for (key, v, line) in calib_check {
                let derived = if key == "x_od" {
                    model.x_od()
                } else {
                    model.z_od()
                };
                if (derived - v).abs() > 1e-6 {
                    return Err(ModelError::Parse {
                        line,
                        message: format!(
                            "`{key}` = {v} disagrees with the link geometry, which gives {derived}"
                        ),
                    });
                }
            }
        }
        Ok(p)
    }
}

/// Body-frame axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyRect {
    pub x: Interval,
    pub y: Interval,
}

impl BodyRect {
    pub fn center(&self) -> (f64, f64) {
        (self.x.mid(), self.y.mid())
    }

    pub fn half_dims(&self) -> (f64, f64) {
        (0.5 * self.x.width(), 0.5 * self.y.width())
    }

    pub fn expand(&self, dx: f64, dy: f64) -> BodyRect {
        BodyRect {
            x: self.x.widen(dx),
            y: self.y.widen(dy),
        }
    }
}

/// Quantities fixed by settling the rover on flat ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub kappa_d0: f64,
    pub kappa_b0: f64,
    pub x_od: f64,
    pub z_od: f64,
    /// Flat-ground wheel x positions (front, middle, rear) in the body frame.
    pub wheel_x: [f64; 3],
}

/// Validated rover with calibration and wheel boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct RoverModel {
    params: RoverParams,
    rocker: TriangleParams,
    bogie: TriangleParams,
    calib: Calibration,
    wheel_center_regions: [BodyRect; 6],
    wheel_boxes: [BodyRect; 6],
}

const BOX_SWEEP_STEPS: usize = 13;
const BOX_SWEEP_PAD: f64 = 2e-3;

impl RoverModel {
    /// Validates the parameters, checks the monotone regime, calibrates on
    /// flat ground and sizes the wheel boxes.
    pub fn new(params: RoverParams) -> Result<Self, ModelError> {
        params.validate()?;
        assert_monotone_regime(&params)?;
        let rocker = params.rocker_triangle();
        let bogie = params.bogie_triangle();
        let calib = calibrate(&params, &rocker, &bogie);
        let mut model = RoverModel {
            params,
            rocker,
            bogie,
            calib,
            wheel_center_regions: [BodyRect {
                x: Interval::point(0.0),
                y: Interval::point(0.0),
            }; 6],
            wheel_boxes: [BodyRect {
                x: Interval::point(0.0),
                y: Interval::point(0.0),
            }; 6],
        };
        model.size_wheel_boxes();
        Ok(model)
    }

    pub fn canonical() -> Self {
        Self::new(RoverParams::canonical()).expect("canonical rover is valid")
    }

    pub fn from_file(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path).map_err(|e| ModelError::Io(e.to_string()))?;
        Self::new(RoverParams::parse_model_file(&text)?)
    }

    pub fn params(&self) -> &RoverParams {
        &self.params
    }
    pub fn variant(&self) -> Variant {
        self.params.variant
    }
    pub fn rocker(&self) -> &TriangleParams {
        &self.rocker
    }
    pub fn bogie(&self) -> &TriangleParams {
        &self.bogie
    }
    pub fn calibration(&self) -> &Calibration {
        &self.calib
    }
    pub fn kappa_d0(&self) -> f64 {
        self.calib.kappa_d0
    }
    pub fn kappa_b0(&self) -> f64 {
        self.calib.kappa_b0
    }
    pub fn x_od(&self) -> f64 {
        self.calib.x_od
    }
    pub fn z_od(&self) -> f64 {
        self.calib.z_od
    }
    pub fn y_od(&self) -> f64 {
        self.params.y_od
    }

    pub fn wheelbase(&self) -> f64 {
        self.calib.wheel_x[0] - self.calib.wheel_x[2]
    }

    /// Wheels present on this variant.
    pub fn wheels(&self) -> &'static [Wheel] {
        match self.params.variant {
            Variant::RockerBogie => &Wheel::ALL,
            Variant::Rocker => &Wheel::ROCKER,
        }
    }

    /// Conservative per-wheel box in the body frame (index by `Wheel as usize`).
    pub fn wheel_boxes(&self) -> &[BodyRect; 6] {
        &self.wheel_boxes
    }

    pub fn wheel_box(&self, w: Wheel) -> &BodyRect {
        &self.wheel_boxes[w as usize]
    }

    /// Envelope of footprint centers over the suspension/tilt range.
    pub fn wheel_center_regions(&self) -> &[BodyRect; 6] {
        &self.wheel_center_regions
    }

    /// Horizontal position of a differential joint in the heading frame.
    pub(crate) fn joint_xy(&self, side: Side, roll: f64, pitch: f64) -> (f64, f64) {
        let (sp, cp) = pitch.sin_cos();
        let (sr, cr) = roll.sin_cos();
        let (x_od, z_od) = (self.calib.x_od, self.calib.z_od);
        let y = side.sign() * self.params.y_od;
        (
            cp * x_od + sp * z_od,
            cr * y + sr * sp * x_od - sr * cp * z_od,
        )
    }

    /// Horizontal offsets of the (front, middle, rear) wheels from the
    /// differential joint for world link angles `kappa_d`, `kappa_b`.
    pub(crate) fn side_offsets(&self, kappa_d: f64, kappa_b: f64) -> [f64; 3] {
        let p = &self.params;
        let front = p.l_df * kappa_d.cos();
        let back = p.l_db * (kappa_d + p.phi_f).cos();
        match p.variant {
            Variant::Rocker => [front, f64::NAN, back],
            Variant::RockerBogie => [
                front,
                back + p.l_bm * kappa_b.cos(),
                back + p.l_br * (kappa_b + p.phi_b).cos(),
            ],
        }
    }

    /// Heading-frame ground positions of all wheels for a given state.
    /// Absent wheels are NaN.
    pub fn wheel_positions_for(
        &self,
        delta_l: f64,
        beta_l: f64,
        beta_r: f64,
        roll: f64,
        pitch: f64,
    ) -> [(f64, f64); 6] {
        let mut out = [(f64::NAN, f64::NAN); 6];
        for side in [Side::Left, Side::Right] {
            let (delta, beta) = match side {
                Side::Left => (delta_l, beta_l),
                Side::Right => (-delta_l, beta_r),
            };
            let kd = self.calib.kappa_d0 - pitch - delta;
            let kb = kd - beta - self.calib.kappa_d0 + self.calib.kappa_b0;
            let (jx, jy) = self.joint_xy(side, roll, pitch);
            let off = self.side_offsets(kd, kb);
            for (pos, dx) in off.iter().enumerate() {
                out[Wheel::from_parts(side, pos) as usize] = (jx + dx, jy);
            }
        }
        out
    }

    fn size_wheel_boxes(&mut self) {
        let p = &self.params;
        let n = BOX_SWEEP_STEPS;
        let grid = |lo: f64, hi: f64| -> Vec<f64> {
            (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect()
        };
        let (dlo, dhi) = p.delta_limits.mirrored_hull();
        let deltas = grid(dlo, dhi);
        let betas = match p.variant {
            Variant::RockerBogie => grid(p.beta_limits.min, p.beta_limits.max),
            Variant::Rocker => vec![0.0],
        };
        let tilts = grid(-p.max_tilt, p.max_tilt);
        let mut regions: [Option<BodyRect>; 6] = [None; 6];
        for &roll in &tilts {
            for &pitch in &tilts {
                for &delta in &deltas {
                    for &beta in &betas {
                        // delta sweeps both signs, so the left-side value
                        // covers every right-side configuration too
                        let pos = self.wheel_positions_for(delta, beta, beta, roll, pitch);
                        for &w in self.wheels() {
                            let (x, y) = pos[w as usize];
                            let r = regions[w as usize].get_or_insert(BodyRect {
                                x: Interval::point(x),
                                y: Interval::point(y),
                            });
                            r.x.include(x);
                            r.y.include(y);
                        }
                    }
                }
            }
        }
        let (fx, fy) = (0.5 * p.wheel_box_x, 0.5 * p.wheel_box_y);
        for &w in self.wheels() {
            let r = regions[w as usize]
                .expect("swept")
                .expand(BOX_SWEEP_PAD, BOX_SWEEP_PAD);
            self.wheel_center_regions[w as usize] = r;
            self.wheel_boxes[w as usize] = r.expand(fx, fy);
        }
    }
}

fn calibrate(p: &RoverParams, rocker: &TriangleParams, bogie: &TriangleParams) -> Calibration {
    match p.variant {
        Variant::RockerBogie => {
            let kappa_b0 = bogie.kappa(0.0, 0.0).expect("flat bogie");
            let z_b0 = bogie.height(0.0, 0.0).expect("flat bogie");
            let kappa_d0 = rocker.kappa(0.0, z_b0).expect("flat rocker");
            let z_d0 = rocker.height(0.0, z_b0).expect("flat rocker");
            // front wheel at x = 0 for now
            let alpha0 = kappa_d0 - rocker.phi_a;
            let x_d = -p.l_df * kappa_d0.cos();
            let x_b = -rocker.l_ab * alpha0.cos();
            let x_m = x_b + p.l_bm * kappa_b0.cos();
            let x_r = x_m - bogie.l_ab;
            Calibration {
                kappa_d0,
                kappa_b0,
                x_od: x_d - x_m,
                z_od: z_d0,
                wheel_x: [-x_m, 0.0, x_r - x_m],
            }
        }
        Variant::Rocker => {
            let kappa_d0 = rocker.kappa(0.0, 0.0).expect("flat rocker");
            let z_d0 = rocker.height(0.0, 0.0).expect("flat rocker");
            let x_d = -p.l_df * kappa_d0.cos();
            let x_r = -rocker.l_ab;
            let mid = 0.5 * x_r;
            Calibration {
                kappa_d0,
                kappa_b0: 0.0,
                x_od: x_d - mid,
                z_od: z_d0,
                wheel_x: [-mid, f64::NAN, x_r - mid],
            }
        }
    }
}

const MONOTONE_SCAN_STEPS: usize = 2001;

/// Checks that each suspension triangle's joint height is increasing in
/// both wheel heights over the mechanical limits, so that interval bounds
/// can be taken at the extreme wheel heights.
///
/// The rocker triangle is scanned over the rocker limits (both sides), the
/// bogie triangle over the bogie limits relative to the rocker.
pub fn assert_monotone_regime(params: &RoverParams) -> Result<(), ModelError> {
    let rocker = params.rocker_triangle();
    let (rocker_alpha0, bogie) = match params.variant {
        Variant::Rocker => (0.0, None),
        Variant::RockerBogie => {
            let b = params.bogie_triangle();
            let z_b0 = b
                .height(0.0, 0.0)
                .map_err(|_| ModelError::invalid("phi_b", "bogie does not close".into()))?;
            let s = z_b0 / rocker.l_ab;
            if s.abs() > 1.0 {
                return Err(ModelError::invalid(
                    "l_db",
                    "rocker cannot reach the bogie joint on flat ground".into(),
                ));
            }
            // alpha of link F->B: sin(alpha) = (z_f - z_b) / l_fb with z_f = 0
            (-s.asin(), Some(b))
        }
    };
    let (dlo, dhi) = params.delta_limits.mirrored_hull();
    scan_triangle(
        &rocker,
        rocker_alpha0,
        dlo,
        dhi,
        "rocker",
        ("delta_min", "delta_max"),
    )?;
    if let Some(b) = bogie {
        scan_triangle(
            &b,
            0.0,
            params.beta_limits.min,
            params.beta_limits.max,
            "bogie",
            ("beta_min", "beta_max"),
        )?;
    }
    Ok(())
}

/// A joint rotation by `q` (positive = rear link up) changes the wheel-link
/// world angle from `alpha0` to `alpha0 - q`.
fn scan_triangle(
    tri: &TriangleParams,
    alpha0: f64,
    qlo: f64,
    qhi: f64,
    name: &'static str,
    limit_names: (&'static str, &'static str),
) -> Result<(), ModelError> {
    let n = MONOTONE_SCAN_STEPS;
    for i in 0..n {
        let q = if qhi > qlo {
            qlo + (qhi - qlo) * i as f64 / (n - 1) as f64
        } else {
            qlo
        };
        let alpha = alpha0 - q;
        let (da, db) = tri.height_partials(alpha);
        let ok = alpha.abs() < std::f64::consts::FRAC_PI_2 && da > 0.0 && db > 0.0;
        if !ok {
            let limit = if q >= 0.5 * (qlo + qhi) {
                limit_names.1
            } else {
                limit_names.0
            };
            return Err(ModelError::NonMonotoneConfiguration {
                triangle: name,
                limit,
                angle: q,
            });
        }
        if qhi <= qlo {
            break;
        }
    }
    Ok(())
}

//! Conservative state bounds for rocker-bogie rovers on uneven terrain.

pub mod ace;
pub mod analysis;
pub mod interval;
pub mod kinematics;
pub mod oracle;
pub mod planner;
pub mod terrain;

/// Shortest decimal that round-trips `x` rounded to 9 significant digits.
/// Magnitudes below 1e-4 or from 1e15 up use exponent notation.
pub fn sig9(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let v: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    if v != 0.0 && (v.abs() < 1e-4 || v.abs() >= 1e15) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

use serde::{Deserialize, Serialize};

use super::KinematicsError;

/// Numerical slop tolerated on arcsin arguments before a pose is declared
/// infeasible.
pub const ASIN_SLOP: f64 = 1e-12;

/// `asin` that accepts arguments up to `1 + ASIN_SLOP` in magnitude.
pub(crate) fn guarded_asin(arg: f64) -> Option<f64> {
    if arg.abs() <= 1.0 {
        Some(arg.asin())
    } else if arg.abs() <= 1.0 + ASIN_SLOP {
        Some(arg.clamp(-1.0, 1.0).asin())
    } else {
        None
    }
}

/// Rigid triangle ABC where A and B touch the terrain and C is the joint.
///
/// Parameterized by the side lengths `|CA|`, `|AB|` and the interior angle
/// at A.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangleParams {
    pub l_ca: f64,
    pub l_ab: f64,
    pub phi_a: f64,
}

impl TriangleParams {
    pub fn new(l_ca: f64, l_ab: f64, phi_a: f64) -> Self {
        Self { l_ca, l_ab, phi_a }
    }

    /// Builds the triangle from the joint's point of view: links of length
    /// `l_ca` (to A) and `l_cb` (to B) meeting at `apex` radians.
    pub fn from_apex(l_ca: f64, l_cb: f64, apex: f64) -> Self {
        let l_ab = (l_ca * l_ca + l_cb * l_cb - 2.0 * l_ca * l_cb * apex.cos()).sqrt();
        let cos_a = (l_ca * l_ca + l_ab * l_ab - l_cb * l_cb) / (2.0 * l_ca * l_ab);
        Self {
            l_ca,
            l_ab,
            phi_a: cos_a.clamp(-1.0, 1.0).acos(),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.l_ca > 0.0 && self.l_ab > 0.0 && self.phi_a > 0.0 && self.phi_a < std::f64::consts::PI
    }

    /// World angle of link AC for terrain heights `z_a`, `z_b` (z-down).
    pub fn kappa(&self, z_a: f64, z_b: f64) -> Result<f64, KinematicsError> {
        guarded_asin((z_a - z_b) / self.l_ab)
            .map(|s| self.phi_a + s)
            .ok_or(KinematicsError::KinematicInfeasible {
                z_a,
                z_b,
                reach: self.l_ab,
            })
    }

    /// Height of joint C.
    pub fn height(&self, z_a: f64, z_b: f64) -> Result<f64, KinematicsError> {
        Ok(z_a - self.l_ca * self.kappa(z_a, z_b)?.sin())
    }

    /// Partial derivatives `(∂z_c/∂z_a, ∂z_c/∂z_b)` when link AB makes world
    /// angle `alpha` with the horizontal.
    ///
    /// Both are positive exactly when C projects horizontally strictly
    /// between A and B.
    pub fn height_partials(&self, alpha: f64) -> (f64, f64) {
        let ratio = self.l_ca * (self.phi_a + alpha).cos() / (self.l_ab * alpha.cos());
        (1.0 - ratio, ratio)
    }
}

/// Free-function form of [`TriangleParams::kappa`].
pub fn kappa(z_a: f64, z_b: f64, tri: &TriangleParams) -> Result<f64, KinematicsError> {
    tri.kappa(z_a, z_b)
}

/// Free-function form of [`TriangleParams::height`].
pub fn tri_height(z_a: f64, z_b: f64, tri: &TriangleParams) -> Result<f64, KinematicsError> {
    tri.height(z_a, z_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn kappa_examples() {
        let tri = TriangleParams::new(1.0, 2.0, 0.0);
        assert!((kappa(1.0, 0.0, &tri).unwrap() - PI / 6.0).abs() < 1e-15);

        let tri = TriangleParams::new(1.0, 0.7, 1.3);
        assert_eq!(kappa(0.4, 0.4, &tri).unwrap(), 1.3);

        let tri = TriangleParams::new(1.0, 2.0, 0.0);
        assert!(matches!(
            kappa(0.0, 3.0, &tri),
            Err(KinematicsError::KinematicInfeasible { .. })
        ));
    }

    #[test]
    fn tri_height_examples() {
        let tri = TriangleParams::new(1.0, 2.0, 0.0);
        assert!((tri_height(1.0, 0.0, &tri).unwrap() - 0.5).abs() < 1e-15);

        let k0 = 0.7;
        let tri = TriangleParams::new(1.4, 2.0, k0);
        assert!((tri_height(0.0, 0.0, &tri).unwrap() + 1.4 * k0.sin()).abs() < 1e-15);

        // Golden value from an independent scalar evaluation.
        let tri = TriangleParams::new(1.2, 1.0, 2.0);
        let z = tri_height(0.3, 0.1, &tri).unwrap();
        assert!((z - (-0.6692358249000352)).abs() < 1e-14, "{z}");
    }

    #[test]
    fn asin_slop_is_tolerated_but_not_more() {
        let tri = TriangleParams::new(1.0, 1.0, 0.5);
        assert!(tri.kappa(1.0 + 5e-13, 0.0).is_ok());
        assert!(tri.kappa(1.0 + 1e-9, 0.0).is_err());
    }

    #[test]
    fn from_apex_recovers_sides() {
        let tri = TriangleParams::from_apex(1.2, 1.0, 2.1);
        // law of cosines
        assert!((tri.l_ab - 1.9109240306824493).abs() < 1e-12);
        assert!((tri.phi_a - 0.468696273246009).abs() < 1e-12);
        // isosceles bogie: base angles are (pi - apex) / 2
        let b = TriangleParams::from_apex(0.6, 0.6, 2.4);
        assert!((b.phi_a - (PI - 2.4) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn partials_match_finite_differences() {
        let tri = TriangleParams::from_apex(1.2, 1.0, 2.1);
        for &alpha in &[-0.4, 0.0, 0.11, 0.6] {
            let z_a = tri.l_ab * f64::sin(alpha);
            let h = 1e-6;
            let fa =
                (tri.height(z_a + h, 0.0).unwrap() - tri.height(z_a - h, 0.0).unwrap()) / (2.0 * h);
            let fb = (tri.height(z_a, h).unwrap() - tri.height(z_a, -h).unwrap()) / (2.0 * h);
            let (pa, pb) = tri.height_partials(alpha);
            assert!((fa - pa).abs() < 1e-6, "{alpha}: {fa} vs {pa}");
            assert!((fb - pb).abs() < 1e-6, "{alpha}: {fb} vs {pb}");
        }
    }
}

//! Closed real intervals and the small set of operations the bound
//! propagation needs: sums, differences and images under monotone maps.
//!
//! There is deliberately no interval multiplication or division. Every
//! formula in the clearance evaluation is written as sums of terms whose
//! endpoints are chosen explicitly, so the kernel stays tiny.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A closed interval `[lo, hi]` with `lo <= hi`.
///
/// Infinite endpoints are allowed as "unknown" sentinels but never appear
/// in propagated results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// Builds an interval, panicking if the endpoints are reversed or NaN.
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "invalid interval [{lo}, {hi}]");
        Self { lo, hi }
    }

    /// Builds an interval from two endpoints in either order.
    pub fn spanning(a: f64, b: f64) -> Self {
        if a <= b {
            Self { lo: a, hi: b }
        } else {
            Self { lo: b, hi: a }
        }
    }

    pub const fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub const UNKNOWN: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    /// Containment with an absolute slack on both ends.
    pub fn contains_within(&self, v: f64, tol: f64) -> bool {
        self.lo - tol <= v && v <= self.hi + tol
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Extends the interval to include `v`.
    pub fn include(&mut self, v: f64) {
        self.lo = self.lo.min(v);
        self.hi = self.hi.max(v);
    }

    /// `self ⊆ other`.
    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    /// Widens both ends by `margin >= 0`.
    pub fn widen(&self, margin: f64) -> Interval {
        Interval {
            lo: self.lo - margin,
            hi: self.hi + margin,
        }
    }

    /// Image of `x ↦ |x|`.
    pub fn abs(&self) -> Interval {
        if self.lo >= 0.0 {
            *self
        } else if self.hi <= 0.0 {
            Interval {
                lo: -self.hi,
                hi: -self.lo,
            }
        } else {
            Interval {
                lo: 0.0,
                hi: (-self.lo).max(self.hi),
            }
        }
    }

    /// Image of the interval under a function that is monotone on it.
    ///
    /// Monotonicity is the caller's contract; it is not checked.
    pub fn map_monotone<F: Fn(f64) -> f64>(&self, f: F, increasing: bool) -> Interval {
        if increasing {
            Interval {
                lo: f(self.lo),
                hi: f(self.hi),
            }
        } else {
            Interval {
                lo: f(self.hi),
                hi: f(self.lo),
            }
        }
    }

    /// Interval scaled by a non-negative constant.
    pub fn scale(&self, k: f64) -> Interval {
        debug_assert!(k >= 0.0);
        Interval {
            lo: self.lo * k,
            hi: self.hi * k,
        }
    }
}

/// `[a.lo + b.lo, a.hi + b.hi]`.
pub fn add(a: Interval, b: Interval) -> Interval {
    Interval {
        lo: a.lo + b.lo,
        hi: a.hi + b.hi,
    }
}

/// `[a.lo - b.hi, a.hi - b.lo]`.
pub fn sub(a: Interval, b: Interval) -> Interval {
    Interval {
        lo: a.lo - b.hi,
        hi: a.hi - b.lo,
    }
}

pub fn map_monotone<F: Fn(f64) -> f64>(f: F, x: Interval, increasing: bool) -> Interval {
    x.map_monotone(f, increasing)
}

pub fn contains(x: Interval, v: f64) -> bool {
    x.contains(v)
}

pub fn width(x: Interval) -> f64 {
    x.width()
}

pub fn hull(a: Interval, b: Interval) -> Interval {
    a.hull(&b)
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        add(self, rhs)
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        sub(self, rhs)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Add<f64> for Interval {
    type Output = Interval;
    fn add(self, rhs: f64) -> Interval {
        Interval {
            lo: self.lo + rhs,
            hi: self.hi + rhs,
        }
    }
}

impl From<[f64; 2]> for Interval {
    fn from(v: [f64; 2]) -> Self {
        Interval::new(v[0], v[1])
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

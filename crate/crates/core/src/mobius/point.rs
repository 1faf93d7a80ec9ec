use std::fmt;

use serde::{Deserialize, Serialize};

use super::map::Mobius;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Tolerance used by [`Geodesic::point_at`] when checking the base point.
pub const ON_GEODESIC_TOL: f64 = 1e-6;

/// A point `x + iy` of the upper half-plane.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfPlanePoint<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> HalfPlanePoint<T> {
    pub fn new(x: T, y: T) -> Result<Self> {
        if !(y > T::zero()) || !x.is_finite() || !y.is_finite() {
            return Err(Error::OutsideDomain(format!("({x}, {y}) is not in the upper half-plane")));
        }
        Ok(HalfPlanePoint { x, y })
    }

    pub const fn new_unchecked(x: T, y: T) -> Self {
        HalfPlanePoint { x, y }
    }

    /// The point `i`.
    pub fn i() -> Self {
        HalfPlanePoint::new_unchecked(T::zero(), T::one())
    }
}

impl<T: Real> fmt::Display for HalfPlanePoint<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}i", self.x, self.y)
    }
}

/// Hyperbolic distance, `2·asinh(|z − w| / (2√(y_z y_w)))`.
pub fn hyp_distance<T: Real>(z: HalfPlanePoint<T>, w: HalfPlanePoint<T>) -> T {
    let dx = z.x - w.x;
    let dy = z.y - w.y;
    let chord = (dx * dx + dy * dy).sqrt();
    T::lit(2.0) * (chord / (T::lit(2.0) * (z.y * w.y).sqrt())).asinh()
}

/// A point of `ℝ ∪ {∞}`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum BoundaryPoint<T> {
    Finite(T),
    Infinity,
}

impl<T: Real> BoundaryPoint<T> {
    /// Angle `2·atan(x)` on the circle `ℝ ∪ {∞}`, with `∞ ↦ π`.
    pub fn angle(&self) -> T {
        match *self {
            BoundaryPoint::Finite(x) => T::lit(2.0) * x.atan(),
            BoundaryPoint::Infinity => T::PI(),
        }
    }

    pub fn from_angle(phi: T) -> Self {
        let half = super::schottky::wrap_angle(phi) / T::lit(2.0);
        if (half - T::FRAC_PI_2()).abs() < T::epsilon() {
            BoundaryPoint::Infinity
        } else {
            BoundaryPoint::Finite(half.tan())
        }
    }

    /// Chordal distance on the unit circle model, in `[0, 2]`.
    pub fn chordal_distance(&self, other: &Self) -> T {
        let d = (self.angle() - other.angle()) / T::lit(2.0);
        T::lit(2.0) * d.sin().abs()
    }

    pub fn approx_eq(&self, other: &Self, tol: T) -> bool {
        self.chordal_distance(other) <= tol
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, BoundaryPoint::Infinity)
    }

    pub fn to_f64(&self) -> f64 {
        match *self {
            BoundaryPoint::Finite(x) => x.to_f64_lossy(),
            BoundaryPoint::Infinity => f64::INFINITY,
        }
    }
}

impl<T: Real> fmt::Display for BoundaryPoint<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryPoint::Finite(x) => write!(f, "{x}"),
            BoundaryPoint::Infinity => write!(f, "inf"),
        }
    }
}

/// An oriented complete geodesic from `from` to `to`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geodesic<T> {
    pub from: BoundaryPoint<T>,
    pub to: BoundaryPoint<T>,
}

impl<T: Real> Geodesic<T> {
    pub fn new(from: BoundaryPoint<T>, to: BoundaryPoint<T>) -> Result<Self> {
        if from == to {
            return Err(Error::Degenerate("geodesic endpoints coincide".into()));
        }
        Ok(Geodesic { from, to })
    }

    pub(crate) const fn new_unchecked(from: BoundaryPoint<T>, to: BoundaryPoint<T>) -> Self {
        Geodesic { from, to }
    }

    /// The geodesic through `z` ending at `to`.
    pub fn through(z: HalfPlanePoint<T>, to: BoundaryPoint<T>) -> Self {
        let from = match to {
            BoundaryPoint::Infinity => BoundaryPoint::Finite(z.x),
            BoundaryPoint::Finite(q) => {
                // Send q to ∞ by w = −1/(z − q); the geodesic becomes vertical.
                let t = Mobius::from_entries(T::zero(), -T::one(), T::one(), -q);
                let w = t.apply(z);
                t.inverse().apply_boundary(BoundaryPoint::Finite(w.x))
            }
        };
        Geodesic::new_unchecked(from, to)
    }

    pub fn reversed(&self) -> Self {
        Geodesic::new_unchecked(self.to, self.from)
    }

    /// Unit-determinant map sending `from ↦ 0` and `to ↦ ∞`.
    pub fn normalizer(&self) -> Mobius<T> {
        use BoundaryPoint::*;
        let one = T::one();
        let zero = T::zero();
        match (self.from, self.to) {
            (Finite(p), Infinity) => Mobius::from_entries(one, -p, zero, one),
            (Infinity, Finite(q)) => Mobius::from_entries(zero, -one, one, -q),
            (Finite(p), Finite(q)) => {
                let m = if p > q {
                    Mobius::from_entries(one, -p, one, -q)
                } else {
                    Mobius::from_entries(-one, p, one, -q)
                };
                m.renormalized()
            }
            (Infinity, Infinity) => Mobius::identity(),
        }
    }

    pub fn apply(&self, g: &Mobius<T>) -> Self {
        Geodesic::new_unchecked(g.apply_boundary(self.from), g.apply_boundary(self.to))
    }

    /// Distance from `z` to the complete geodesic.
    pub fn distance_to(&self, z: HalfPlanePoint<T>) -> T {
        let w = self.normalizer().apply(z);
        (w.x.abs() / w.y).asinh()
    }

    /// Nearest point of the geodesic to `z`.
    pub fn project(&self, z: HalfPlanePoint<T>) -> HalfPlanePoint<T> {
        let n = self.normalizer();
        let w = n.apply(z);
        let r = (w.x * w.x + w.y * w.y).sqrt();
        n.inverse().apply(HalfPlanePoint::new_unchecked(T::zero(), r))
    }

    /// Unit-speed parametrization with `point_at(base, 0) = base`, moving
    /// toward `to` for positive `t`.
    pub fn point_at(&self, base: HalfPlanePoint<T>, t: T) -> Result<HalfPlanePoint<T>> {
        let off = self.distance_to(base);
        if off > T::lit(ON_GEODESIC_TOL) {
            return Err(Error::BaseNotOnGeodesic(off.to_f64_lossy()));
        }
        let n = self.normalizer();
        let w = n.apply(base);
        let r = (w.x * w.x + w.y * w.y).sqrt();
        Ok(n.inverse().apply(HalfPlanePoint::new_unchecked(T::zero(), r * t.exp())))
    }
}

/// Free-function form of [`Geodesic::distance_to`].
pub fn dist_to_geodesic<T: Real>(z: HalfPlanePoint<T>, g: &Geodesic<T>) -> T {
    g.distance_to(z)
}

/// Free-function form of [`Geodesic::point_at`].
pub fn geodesic_point<T: Real>(g: &Geodesic<T>, base: HalfPlanePoint<T>, t: T) -> Result<HalfPlanePoint<T>> {
    g.point_at(base, t)
}

use std::fmt;
use std::ops::Mul;

use serde::{Deserialize, Serialize};

use super::point::{BoundaryPoint, Geodesic, HalfPlanePoint};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default trace tolerance for [`Mobius::classify`].
pub const CLASSIFY_TOL: f64 = 1e-8;

/// Orientation-preserving isometry `z ↦ (az + b)/(cz + d)` of the upper
/// half-plane, with `ad − bc = 1`. A matrix and its negation act identically.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mobius<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IsometryClass {
    Identity,
    Elliptic,
    Parabolic,
    Loxodromic,
}

impl<T: Real> Mobius<T> {
    /// Builds a map from row-major entries, dividing by `√det`.
    pub fn new(a: T, b: T, c: T, d: T) -> Result<Self> {
        let m = Mobius { a, b, c, d };
        let det = m.det();
        if !(det > T::zero()) || !det.is_finite() {
            return Err(Error::Degenerate(format!(
                "matrix determinant {det} is not positive"
            )));
        }
        Ok(m.renormalized())
    }

    /// Entries taken as-is (caller guarantees unit determinant).
    pub const fn from_entries(a: T, b: T, c: T, d: T) -> Self {
        Mobius { a, b, c, d }
    }

    pub fn identity() -> Self {
        Mobius::from_entries(T::one(), T::zero(), T::zero(), T::one())
    }

    pub fn det(&self) -> T {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> T {
        self.a + self.d
    }

    /// Divides all entries by `√det`.
    pub fn renormalized(self) -> Self {
        let k = self.det().sqrt().recip();
        Mobius::from_entries(self.a * k, self.b * k, self.c * k, self.d * k)
    }

    pub fn inverse(&self) -> Self {
        Mobius::from_entries(self.d, -self.b, -self.c, self.a)
    }

    /// Matrix product. Rounding drift in the determinant is removed while the
    /// entries are small enough for `ad − bc` to be computed accurately.
    pub fn compose(&self, rhs: &Self) -> Self {
        self.compose_raw(rhs).renormalized_if_accurate()
    }

    fn renormalized_if_accurate(self) -> Self {
        if (self.a * self.d).abs() + (self.b * self.c).abs() <= T::lit(16.0) {
            self.renormalized()
        } else {
            self
        }
    }

    pub(crate) fn compose_raw(&self, rhs: &Self) -> Self {
        Mobius::from_entries(
            self.a * rhs.a + self.b * rhs.c,
            self.a * rhs.b + self.b * rhs.d,
            self.c * rhs.a + self.d * rhs.c,
            self.c * rhs.b + self.d * rhs.d,
        )
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::identity(), |acc, _| acc.compose(self))
    }

    pub fn apply(&self, z: HalfPlanePoint<T>) -> HalfPlanePoint<T> {
        let (x, y) = (z.x, z.y);
        let nr = self.a * x + self.b;
        let dr = self.c * x + self.d;
        let di = self.c * y;
        let den = dr * dr + di * di;
        let re = (nr * dr + self.a * di * y) / den;
        let im = y / den;
        HalfPlanePoint::new_unchecked(re, im)
    }

    pub fn apply_boundary(&self, p: BoundaryPoint<T>) -> BoundaryPoint<T> {
        match p {
            BoundaryPoint::Infinity => {
                if self.c == T::zero() {
                    BoundaryPoint::Infinity
                } else {
                    BoundaryPoint::Finite(self.a / self.c)
                }
            }
            BoundaryPoint::Finite(x) => {
                let den = self.c * x + self.d;
                if den == T::zero() {
                    BoundaryPoint::Infinity
                } else {
                    BoundaryPoint::Finite((self.a * x + self.b) / den)
                }
            }
        }
    }

    /// `arg g'(z)`: the rotation applied to tangent directions at `z`.
    pub fn rotation_at(&self, z: HalfPlanePoint<T>) -> T {
        let re = self.c * z.x + self.d;
        let im = self.c * z.y;
        -(im.atan2(re) + im.atan2(re))
    }

    /// Sign-normalized copy: first nonzero entry positive.
    pub fn sign_normalized(&self) -> Self {
        let first = [self.a, self.b, self.c, self.d]
            .into_iter()
            .find(|v| *v != T::zero())
            .unwrap_or(T::one());
        if first < T::zero() {
            Mobius::from_entries(-self.a, -self.b, -self.c, -self.d)
        } else {
            *self
        }
    }

    /// Equality in `PSL(2,R)` up to `tol` per entry.
    pub fn projective_eq(&self, other: &Self, tol: T) -> bool {
        let (p, q) = (self.sign_normalized(), other.sign_normalized());
        (p.a - q.a).abs() <= tol
            && (p.b - q.b).abs() <= tol
            && (p.c - q.c).abs() <= tol
            && (p.d - q.d).abs() <= tol
    }

    pub fn classify(&self, tol: T) -> IsometryClass {
        let two = T::lit(2.0);
        let t = self.trace().abs();
        if t > two + tol {
            IsometryClass::Loxodromic
        } else if t < two - tol {
            IsometryClass::Elliptic
        } else if self.projective_eq(&Self::identity(), tol) {
            IsometryClass::Identity
        } else {
            IsometryClass::Parabolic
        }
    }

    /// `2·acosh(|tr|/2)` for loxodromics, zero otherwise.
    pub fn translation_length(&self) -> T {
        let half = self.trace().abs() / T::lit(2.0);
        if half <= T::one() {
            T::zero()
        } else {
            T::lit(2.0) * half.acosh_stable()
        }
    }

    /// Axis of a loxodromic map, oriented from the repelling to the
    /// attracting fixed point.
    pub fn axis(&self) -> Result<Geodesic<T>> {
        if self.classify(T::lit(CLASSIFY_TOL)) != IsometryClass::Loxodromic {
            return Err(Error::NotLoxodromic);
        }
        Ok(loxodromic_axis(self.a, self.b, self.c, self.d))
    }
}

/// Fixed points of a (possibly unnormalized) loxodromic matrix, ordered by
/// the derivative test. Scale-invariant.
pub(crate) fn loxodromic_axis<T: Real>(a: T, b: T, c: T, d: T) -> Geodesic<T> {
    if c == T::zero() {
        let finite = BoundaryPoint::Finite(b / (d - a));
        return if a.abs() > d.abs() {
            Geodesic::new_unchecked(finite, BoundaryPoint::Infinity)
        } else {
            Geodesic::new_unchecked(BoundaryPoint::Infinity, finite)
        };
    }
    // c z² + (d − a) z − b = 0, roots without cancellation.
    let p = d - a;
    let disc = (p * p + T::lit(4.0) * b * c).sqrt();
    let q = -(p + p.signum() * disc) / T::lit(2.0);
    let (z1, z2) = if q == T::zero() {
        let r = disc / (T::lit(2.0) * c);
        (r, -r)
    } else {
        (q / c, -b / q)
    };
    // Attracting fixed point has |cz + d| > 1 (multiplier 1/(cz+d)²).
    if (c * z1 + d).abs() > (c * z2 + d).abs() {
        Geodesic::new_unchecked(BoundaryPoint::Finite(z2), BoundaryPoint::Finite(z1))
    } else {
        Geodesic::new_unchecked(BoundaryPoint::Finite(z1), BoundaryPoint::Finite(z2))
    }
}

impl<T: Real> Mul for Mobius<T> {
    type Output = Mobius<T>;
    fn mul(self, rhs: Self) -> Self {
        self.compose(&rhs)
    }
}

impl<T: Real> fmt::Display for Mobius<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

/// Unit-determinant map stored as `e^log_scale · m` with `max |m_ij| = 1`.
///
/// Long products of Schottky generators have entries far beyond the `f64`
/// range; scale-invariant quantities (fixed points, the action on the
/// boundary) are read off `m`, and norms or traces through `log_scale`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ScaledMobius<T> {
    pub m: Mobius<T>,
    pub log_scale: T,
}

impl<T: Real> ScaledMobius<T> {
    pub fn identity() -> Self {
        ScaledMobius {
            m: Mobius::identity(),
            log_scale: T::zero(),
        }
    }

    pub fn from_mobius(g: Mobius<T>) -> Self {
        let mut s = ScaledMobius {
            m: g,
            log_scale: T::zero(),
        };
        s.rescale();
        s
    }

    fn rescale(&mut self) {
        let m = &self.m;
        let k = m.a.abs().max(m.b.abs()).max(m.c.abs()).max(m.d.abs());
        self.m = Mobius::from_entries(m.a / k, m.b / k, m.c / k, m.d / k);
        self.log_scale += k.ln();
    }

    /// Right multiplication by a unit-determinant map.
    pub fn mul_right(&mut self, g: &Mobius<T>) {
        self.m = self.m.compose_raw(g);
        self.rescale();
    }

    pub fn mul_left(&mut self, g: &Mobius<T>) {
        self.m = g.compose_raw(&self.m);
        self.rescale();
    }

    /// Back to plain entries when they fit.
    pub fn to_mobius(&self) -> Option<Mobius<T>> {
        let k = self.log_scale.exp();
        if !k.is_finite() {
            return None;
        }
        let g = Mobius::from_entries(self.m.a * k, self.m.b * k, self.m.c * k, self.m.d * k);
        Some(g.renormalized_if_accurate())
    }

    /// `ln |tr|`.
    pub fn log_abs_trace(&self) -> T {
        self.m.trace().abs().ln() + self.log_scale
    }

    pub fn translation_length(&self) -> T {
        let lt = self.log_abs_trace();
        if lt > T::lit(20.0) {
            // 2·acosh(x/2) = 2 ln x − O(x⁻²)
            T::lit(2.0) * lt
        } else {
            let half = lt.exp() / T::lit(2.0);
            if half <= T::one() {
                T::zero()
            } else {
                T::lit(2.0) * half.acosh_stable()
            }
        }
    }

    /// `d(i, g·i)`, from `cosh d = (a² + b² + c² + d²)/2`.
    pub fn displacement_of_i(&self) -> T {
        let m = &self.m;
        let norm2 = m.a * m.a + m.b * m.b + m.c * m.c + m.d * m.d;
        let lc = norm2.ln() + T::lit(2.0) * self.log_scale - T::lit(2.0).ln();
        if lc > T::lit(20.0) {
            lc + T::lit(2.0).ln()
        } else {
            lc.exp().acosh_stable()
        }
    }

    /// `d(z, g·z)` via conjugation by the map sending `i` to `z`.
    pub fn displacement_of(&self, z: HalfPlanePoint<T>) -> T {
        let s = z.y.sqrt();
        let to_z = Mobius::from_entries(s, z.x / s, T::zero(), s.recip());
        let mut conj = *self;
        conj.mul_right(&to_z);
        conj.mul_left(&to_z.inverse());
        conj.displacement_of_i()
    }

    pub fn apply_boundary(&self, p: BoundaryPoint<T>) -> BoundaryPoint<T> {
        self.m.apply_boundary(p)
    }

    pub fn axis(&self) -> Result<Geodesic<T>> {
        if self.translation_length() <= T::lit(CLASSIFY_TOL) {
            return Err(Error::NotLoxodromic);
        }
        let m = &self.m;
        Ok(loxodromic_axis(m.a, m.b, m.c, m.d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(a: f64, b: f64, c: f64, d: f64) -> Mobius<f64> {
        Mobius::new(a, b, c, d).unwrap()
    }

    fn close(x: f64, y: f64, tol: f64) -> bool {
        (x - y).abs() <= tol
    }

    #[test]
    fn large_products_stay_finite() {
        let g = m(1.0, 0.3, 0.2, 1.06);
        let mut sq = g;
        for _ in 0..10 {
            sq = sq.compose(&sq);
        }
        assert!(sq.a.is_finite() && sq.d.is_finite());
        let l = g.translation_length();
        assert!(close(sq.translation_length(), 1024.0 * l, 1e-9 * 1024.0 * l));
    }

    #[test]
    fn apply_examples() {
        let i = HalfPlanePoint::new(0.0, 1.0).unwrap();
        let z = m(1.0, 1.0, 0.0, 1.0).apply(i);
        assert!(close(z.x, 1.0, 1e-15) && close(z.y, 1.0, 1e-15));
        let z = m(2.0, 0.0, 0.0, 0.5).apply(i);
        assert!(close(z.x, 0.0, 1e-15) && close(z.y, 4.0, 1e-15));
        let z = m(0.0, 1.0, -1.0, 0.0).apply(HalfPlanePoint::new(0.0, 2.0).unwrap());
        assert!(close(z.x, 0.0, 1e-15) && close(z.y, 0.5, 1e-15));
    }

    #[test]
    fn classify_examples() {
        let tol = CLASSIFY_TOL;
        assert_eq!(m(1.0, 1.0, 0.0, 1.0).classify(tol), IsometryClass::Parabolic);
        assert_eq!(m(2.0, 0.0, 0.0, 0.5).classify(tol), IsometryClass::Loxodromic);
        assert_eq!(m(0.0, 1.0, -1.0, 0.0).classify(tol), IsometryClass::Elliptic);
        assert_eq!(Mobius::<f64>::identity().classify(tol), IsometryClass::Identity);
        assert_eq!(m(-1.0, 0.0, 0.0, -1.0).classify(tol), IsometryClass::Identity);
    }

    #[test]
    fn translation_length_examples() {
        let ln2 = std::f64::consts::LN_2;
        assert!(close(m(2.0, 0.0, 0.0, 0.5).translation_length(), 2.0 * ln2, 1e-14));
        assert_eq!(m(1.0, 1.0, 0.0, 1.0).translation_length(), 0.0);
        assert!(close(m(4.0, 0.0, 0.0, 0.25).translation_length(), 4.0 * ln2, 1e-14));
    }

    #[test]
    fn axis_examples() {
        use BoundaryPoint::*;
        let ax = m(2.0, 0.0, 0.0, 0.5).axis().unwrap();
        assert_eq!((ax.from, ax.to), (Finite(0.0), Infinity));
        let ax = m(0.5, 0.0, 0.0, 2.0).axis().unwrap();
        assert_eq!((ax.from, ax.to), (Infinity, Finite(0.0)));
        let ax = m(5.0 / 3.0, -4.0 / 3.0, -4.0 / 3.0, 5.0 / 3.0).axis().unwrap();
        assert!(ax.from.approx_eq(&Finite(1.0), 1e-12));
        assert!(ax.to.approx_eq(&Finite(-1.0), 1e-12));
        assert_eq!(m(1.0, 1.0, 0.0, 1.0).axis(), Err(Error::NotLoxodromic));
    }

    #[test]
    fn projective_identification() {
        let g = m(2.0, 1.0, 1.0, 1.0);
        let neg = Mobius::from_entries(-g.a, -g.b, -g.c, -g.d);
        assert!(g.projective_eq(&neg, 1e-15));
        assert!(!g.projective_eq(&g.inverse(), 1e-3));
    }

    #[test]
    fn scaled_products_agree_with_plain_products() {
        let g1 = m(3.0, 0.0, 0.0, 1.0 / 3.0);
        let g2 = m(5.0 / 3.0, -4.0 / 3.0, -4.0 / 3.0, 5.0 / 3.0);
        let mut plain = Mobius::identity();
        let mut scaled = ScaledMobius::identity();
        for g in [g1, g2, g1, g1, g2.inverse(), g1] {
            plain = plain.compose(&g);
            scaled.mul_right(&g);
        }
        let back = scaled.to_mobius().unwrap();
        assert!(back.projective_eq(&plain, 1e-9 * plain.a.abs().max(1.0)));
        assert!(close(scaled.translation_length(), plain.translation_length(), 1e-10));
        let i = HalfPlanePoint::new(0.0, 1.0).unwrap();
        let direct = super::super::point::hyp_distance(i, plain.apply(i));
        assert!(close(scaled.displacement_of_i(), direct, 1e-9));
        let z = HalfPlanePoint::new(0.3, 0.7).unwrap();
        let direct = super::super::point::hyp_distance(z, plain.apply(z));
        assert!(close(scaled.displacement_of(z), direct, 1e-8));
    }

    #[test]
    fn scaled_products_survive_huge_powers() {
        let g = m(2.0, 0.0, 0.0, 0.5);
        let mut s = ScaledMobius::identity();
        for _ in 0..5000 {
            s.mul_right(&g);
        }
        // d(i, 4ⁿ i) = n ln 4
        let expect = 5000.0 * 4f64.ln();
        assert!(close(s.displacement_of_i(), expect, 1e-9 * expect));
        assert!(close(s.translation_length(), expect, 1e-9 * expect));
        assert_eq!(s.axis().unwrap().to, BoundaryPoint::Infinity);
    }

    #[test]
    fn single_precision_geometry() {
        let g = Mobius::<f32>::new(2.0, 0.0, 0.0, 0.5).unwrap();
        assert!((g.translation_length() - 2.0 * std::f32::consts::LN_2).abs() < 1e-5);
        assert_eq!(g.classify(1e-4), IsometryClass::Loxodromic);
    }
}

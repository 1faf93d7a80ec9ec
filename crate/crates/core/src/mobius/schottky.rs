use std::fmt;

use serde::{Deserialize, Serialize};

use super::map::{Mobius, ScaledMobius};
use super::point::{BoundaryPoint, HalfPlanePoint};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::word::{Letter, ReducedWord};

/// Boundary samples per disk used by [`SchottkyGroup::certify`].
pub const CERTIFY_SAMPLES: usize = 1000;

/// Reduction gives up after this many disk exits.
pub const REDUCE_ITERATION_LIMIT: usize = 100_000;

/// A hyperbolic half-plane bounded by a geodesic, described by its closure in
/// the upper half-plane.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum HalfSpace<T> {
    /// `|z − center| ≤ radius`.
    Disk { center: T, radius: T },
    /// `|z − center| ≥ radius`.
    Outside { center: T, radius: T },
    /// `Re z ≤ cut`.
    Left { cut: T },
    /// `Re z ≥ cut`.
    Right { cut: T },
}

impl<T: Real> HalfSpace<T> {
    /// Closed membership.
    pub fn contains(&self, z: HalfPlanePoint<T>) -> bool {
        self.signed_depth(z) >= T::zero()
    }

    /// Positive strictly inside, negative strictly outside. Scaled so that a
    /// relative tolerance can be applied.
    fn signed_depth(&self, z: HalfPlanePoint<T>) -> T {
        match *self {
            HalfSpace::Disk { center, radius } => {
                let dx = z.x - center;
                T::one() - (dx * dx + z.y * z.y) / (radius * radius)
            }
            HalfSpace::Outside { center, radius } => {
                let dx = z.x - center;
                (dx * dx + z.y * z.y) / (radius * radius) - T::one()
            }
            HalfSpace::Left { cut } => (cut - z.x) / z.y,
            HalfSpace::Right { cut } => (z.x - cut) / z.y,
        }
    }

    /// Membership of the open half-plane shrunk by a relative margin.
    pub fn contains_interior(&self, z: HalfPlanePoint<T>, margin: T) -> bool {
        self.signed_depth(z) > margin
    }

    /// The closed arc of `ℝ ∪ {∞}` at infinity, as `(start, length)` in the
    /// angle coordinate of [`BoundaryPoint::angle`], running counterclockwise.
    pub fn arc(&self) -> (T, T) {
        let phi = |x: T| BoundaryPoint::Finite(x).angle();
        let two_pi = T::PI() + T::PI();
        match *self {
            HalfSpace::Disk { center, radius } => {
                let s = phi(center - radius);
                (s, phi(center + radius) - s)
            }
            HalfSpace::Outside { center, radius } => {
                let s = phi(center + radius);
                (s, phi(center - radius) + two_pi - s)
            }
            HalfSpace::Left { cut } => (-T::PI(), phi(cut) + T::PI()),
            HalfSpace::Right { cut } => {
                let s = phi(cut);
                (s, T::PI() - s)
            }
        }
    }

    /// `|w − boundary|`, relative, for a point that should lie on the
    /// bounding geodesic.
    fn boundary_residual(&self, w: HalfPlanePoint<T>) -> T {
        match *self {
            HalfSpace::Disk { center, radius } | HalfSpace::Outside { center, radius } => {
                let dx = w.x - center;
                ((dx * dx + w.y * w.y).sqrt() - radius).abs() / radius
            }
            HalfSpace::Left { cut } | HalfSpace::Right { cut } => (w.x - cut).abs() / w.y,
        }
    }

    /// Points spread along the bounding geodesic.
    fn boundary_samples(&self, count: usize) -> Vec<HalfPlanePoint<T>> {
        (0..count)
            .map(|k| {
                let u = T::lit((k as f64 + 0.5) / count as f64);
                match *self {
                    HalfSpace::Disk { center, radius } | HalfSpace::Outside { center, radius } => {
                        let th = T::PI() * u;
                        HalfPlanePoint::new_unchecked(center + radius * th.cos(), radius * th.sin())
                    }
                    HalfSpace::Left { cut } | HalfSpace::Right { cut } => {
                        HalfPlanePoint::new_unchecked(cut, (T::lit(16.0) * u - T::lit(8.0)).exp())
                    }
                }
            })
            .collect()
    }

    /// A point strictly outside the region.
    fn exterior_witness(&self) -> HalfPlanePoint<T> {
        match *self {
            HalfSpace::Disk { center, radius } => HalfPlanePoint::new_unchecked(center, radius * T::lit(2.0)),
            HalfSpace::Outside { center, radius } => HalfPlanePoint::new_unchecked(center, radius / T::lit(2.0)),
            HalfSpace::Left { cut } => HalfPlanePoint::new_unchecked(cut + T::one(), T::one()),
            HalfSpace::Right { cut } => HalfPlanePoint::new_unchecked(cut - T::one(), T::one()),
        }
    }

    /// Height `y` at which the vertical geodesic `s ↦ n_inv(i·y)` crosses the
    /// bounding geodesic, if it does.
    pub fn crossing_height(&self, n_inv: &Mobius<T>) -> Option<T> {
        let Mobius { a, b, c: g, d } = *n_inv;
        let y2 = match *self {
            HalfSpace::Disk { center, radius } | HalfSpace::Outside { center, radius } => {
                let num = radius * radius * d * d - (b - center * d) * (b - center * d);
                let den = (a - center * g) * (a - center * g) - radius * radius * g * g;
                num / den
            }
            HalfSpace::Left { cut } | HalfSpace::Right { cut } => {
                (cut * d * d - b * d) / (a * g - cut * g * g)
            }
        };
        (y2 > T::zero() && y2.is_finite()).then(|| y2.sqrt())
    }
}

impl<T: Real> fmt::Display for HalfSpace<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HalfSpace::Disk { center, radius } => write!(f, "disk {center} {radius}"),
            HalfSpace::Outside { center, radius } => write!(f, "outside {center} {radius}"),
            HalfSpace::Left { cut } => write!(f, "halfplane {cut} left"),
            HalfSpace::Right { cut } => write!(f, "halfplane {cut} right"),
        }
    }
}

/// Generator `g` with its ping-pong pair: `g` maps the exterior of `minus`
/// onto the interior of `plus`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchottkyGenerator<T> {
    pub map: Mobius<T>,
    pub minus: HalfSpace<T>,
    pub plus: HalfSpace<T>,
}

/// A certified Schottky group. Letter `x` of the free group on the generators
/// acts by the corresponding matrix; its region `D(x)` is `plus` for a
/// generator and `minus` for an inverse, and `x` maps the closed fundamental
/// domain into `D(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SchottkyGroup<T> {
    generators: Vec<SchottkyGenerator<T>>,
    letter_maps: Vec<Mobius<T>>,
    gap_points: Vec<BoundaryPoint<T>>,
}

/// Result of [`SchottkyGroup::reduce`]: `point = word · z`.
#[derive(Clone, Debug, PartialEq)]
pub struct Reduction<T> {
    pub point: HalfPlanePoint<T>,
    pub word: ReducedWord,
    pub map: Mobius<T>,
}

/// Reduces an angle to `[0, 2π)`.
pub(crate) fn wrap_angle<T: Real>(x: T) -> T {
    let two_pi = T::PI() + T::PI();
    x - two_pi * (x / two_pi).floor()
}

fn arcs_disjoint<T: Real>((s1, l1): (T, T), (s2, l2): (T, T)) -> bool {
    let gap12 = wrap_angle(s2 - s1);
    let gap21 = wrap_angle(s1 - s2);
    gap12 > l1 && gap21 > l2
}

impl<T: Real> SchottkyGroup<T> {
    /// Checks the ping-pong configuration: all regions pairwise disjoint at
    /// infinity, each generator loxodromic, sending `∂D⁻` onto `∂D⁺` and the
    /// exterior of `D⁻` into `D⁺`. Numeric checks use the sample count
    /// [`CERTIFY_SAMPLES`].
    pub fn certify(generators: Vec<SchottkyGenerator<T>>) -> Result<Self> {
        if generators.is_empty() || generators.len() > crate::word::MAX_RANK {
            return Err(Error::InvalidRank(generators.len()));
        }
        let regions: Vec<HalfSpace<T>> = generators.iter().flat_map(|g| [g.plus, g.minus]).collect();
        let arcs: Vec<(T, T)> = regions.iter().map(|r| r.arc()).collect();
        for i in 0..arcs.len() {
            if !(arcs[i].1 > T::zero()) {
                return Err(Error::Degenerate(format!("empty region {}", regions[i])));
            }
            for j in i + 1..arcs.len() {
                if !arcs_disjoint(arcs[i], arcs[j]) {
                    return Err(Error::DisksOverlap(i, j));
                }
            }
        }
        let tol = T::lit(1e-9);
        for (k, g) in generators.iter().enumerate() {
            if g.map.translation_length() <= T::lit(super::map::CLASSIFY_TOL) {
                return Err(Error::NonLoxodromicGenerator(k));
            }
            for z in g.minus.boundary_samples(CERTIFY_SAMPLES) {
                let w = g.map.apply(z);
                if g.plus.boundary_residual(w) > tol {
                    return Err(Error::MappingViolation {
                        generator: k,
                        x: z.x.to_f64_lossy(),
                        y: z.y.to_f64_lossy(),
                    });
                }
            }
            let z = g.minus.exterior_witness();
            if !g.plus.contains_interior(g.map.apply(z), T::zero()) {
                return Err(Error::MappingViolation {
                    generator: k,
                    x: z.x.to_f64_lossy(),
                    y: z.y.to_f64_lossy(),
                });
            }
        }
        let letter_maps = generators.iter().flat_map(|g| [g.map, g.map.inverse()]).collect();
        let gap_points = gap_midpoints(&arcs);
        Ok(SchottkyGroup {
            generators,
            letter_maps,
            gap_points,
        })
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    /// Fewer than two generators: cyclic, hence elementary.
    pub fn is_elementary(&self) -> bool {
        self.generators.len() < 2
    }

    pub fn generators(&self) -> &[SchottkyGenerator<T>] {
        &self.generators
    }

    #[inline]
    pub fn letter_map(&self, x: Letter) -> &Mobius<T> {
        &self.letter_maps[x.code()]
    }

    /// `D(x)`.
    pub fn region(&self, x: Letter) -> &HalfSpace<T> {
        let g = &self.generators[x.generator_index()];
        if x.is_inverse() {
            &g.minus
        } else {
            &g.plus
        }
    }

    /// Letter whose generator or inverse matches `m` projectively.
    pub fn match_matrix(&self, m: &Mobius<T>, tol: T) -> Option<Letter> {
        Letter::alphabet(self.rank()).find(|&x| self.letter_map(x).projective_eq(m, tol))
    }

    /// Product of the letter matrices; overflows for long words, see
    /// [`SchottkyGroup::word_scaled`].
    pub fn word_map(&self, w: &ReducedWord) -> Mobius<T> {
        w.letters()
            .iter()
            .fold(Mobius::identity(), |acc, &x| acc.compose(self.letter_map(x)))
    }

    pub fn word_scaled(&self, w: &ReducedWord) -> ScaledMobius<T> {
        let mut s = ScaledMobius::identity();
        for &x in w.letters() {
            s.mul_right(self.letter_map(x));
        }
        s
    }

    /// The letter whose region strictly contains `z`, if any.
    pub fn locate(&self, z: HalfPlanePoint<T>) -> Option<Letter> {
        let margin = T::lit(1e-10);
        Letter::alphabet(self.rank()).find(|&x| self.region(x).contains_interior(z, margin))
    }

    pub fn in_fundamental_domain(&self, z: HalfPlanePoint<T>) -> bool {
        self.locate(z).is_none()
    }

    /// Moves `z` into the fundamental domain by repeatedly undoing the letter
    /// whose region contains it.
    pub fn reduce(&self, z: HalfPlanePoint<T>) -> Result<Reduction<T>> {
        let mut point = z;
        let mut word = ReducedWord::identity();
        let mut map = Mobius::identity();
        for _ in 0..REDUCE_ITERATION_LIMIT {
            let Some(x) = self.locate(point) else {
                return Ok(Reduction {
                    point,
                    word: word.inverse(),
                    map,
                });
            };
            let back = self.letter_map(x.inverse());
            point = back.apply(point);
            map = back.compose(&map);
            word.push(x);
        }
        Err(Error::IterationLimit(REDUCE_ITERATION_LIMIT))
    }

    /// Limit point of an infinite reduced word given by its letters. Stops once
    /// the image of two gap points agrees to chordal distance `tol`; returns
    /// the point and the number of letters consumed.
    pub fn boundary_point<I>(&self, letters: I, tol: T) -> Result<(BoundaryPoint<T>, usize)>
    where
        I: IntoIterator<Item = Letter>,
    {
        let (p, q) = (self.gap_points[0], self.gap_points[1]);
        let mut s = ScaledMobius::identity();
        let mut used = 0;
        for x in letters {
            s.mul_right(self.letter_map(x));
            used += 1;
            let (u, v) = (s.apply_boundary(p), s.apply_boundary(q));
            if u.chordal_distance(&v) <= tol {
                return Ok((u, used));
            }
        }
        Err(Error::Unstable(format!(
            "boundary point not resolved to {tol} after {used} letters"
        )))
    }

    /// Chordal diameter of the nested region `w_1⋯w_{m−1} · D(w_m)` at
    /// infinity; every limit point extending `w` lies in it.
    pub fn cylinder_width(&self, w: &ReducedWord) -> T {
        let Some(last) = w.last() else {
            return T::lit(2.0);
        };
        let (s, l) = self.region(last).arc();
        let ends = [BoundaryPoint::from_angle(s), BoundaryPoint::from_angle(s + l)];
        let head = self.word_scaled(&w.prefix(w.len() - 1));
        let (u, v) = (head.apply_boundary(ends[0]), head.apply_boundary(ends[1]));
        u.chordal_distance(&v)
    }
}

/// One boundary point inside each gap between consecutive arcs.
fn gap_midpoints<T: Real>(arcs: &[(T, T)]) -> Vec<BoundaryPoint<T>> {
    let two_pi = T::PI() + T::PI();
    let mut sorted: Vec<(T, T)> = arcs.iter().map(|&(s, l)| (wrap_angle(s), l)).collect();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite arcs"));
    let n = sorted.len();
    let mut out: Vec<BoundaryPoint<T>> = (0..n)
        .map(|i| {
            let end = sorted[i].0 + sorted[i].1;
            let next = sorted[(i + 1) % n].0;
            let gap = wrap_angle(next - end);
            BoundaryPoint::from_angle(end + gap / T::lit(2.0))
        })
        .collect();
    if out.len() < 2 {
        // A single arc leaves one gap; take two points inside it.
        let (s, l) = sorted[0];
        let gap = two_pi - l;
        out = vec![
            BoundaryPoint::from_angle(s + l + gap / T::lit(3.0)),
            BoundaryPoint::from_angle(s + l + gap * T::lit(2.0) / T::lit(3.0)),
        ];
    }
    out
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::mobius::point::hyp_distance;
    use crate::word::word;
    use proptest::prelude::*;

    pub(crate) fn example_generators() -> Vec<SchottkyGenerator<f64>> {
        vec![
            SchottkyGenerator {
                map: Mobius::new(3.0, 0.0, 0.0, 1.0 / 3.0).unwrap(),
                minus: HalfSpace::Disk { center: 0.0, radius: 1.0 / 3.0 },
                plus: HalfSpace::Outside { center: 0.0, radius: 3.0 },
            },
            SchottkyGenerator {
                map: Mobius::new(5.0 / 3.0, -4.0 / 3.0, -4.0 / 3.0, 5.0 / 3.0).unwrap(),
                minus: HalfSpace::Disk { center: 1.25, radius: 0.75 },
                plus: HalfSpace::Disk { center: -1.25, radius: 0.75 },
            },
        ]
    }

    pub(crate) fn example_group() -> SchottkyGroup<f64> {
        SchottkyGroup::certify(example_generators()).unwrap()
    }

    #[test]
    fn certifies_the_example_pair() {
        let g = example_group();
        assert!(!g.is_elementary());
        assert_eq!(g.rank(), 2);
    }

    #[test]
    fn swapped_disks_violate_the_mapping() {
        let mut gens = example_generators();
        let gen = &mut gens[1];
        std::mem::swap(&mut gen.minus, &mut gen.plus);
        assert!(matches!(
            SchottkyGroup::certify(gens),
            Err(Error::MappingViolation { generator: 1, .. })
        ));
    }

    #[test]
    fn duplicate_generators_overlap() {
        let gens = example_generators();
        let dup = vec![gens[0], gens[0]];
        assert!(matches!(SchottkyGroup::certify(dup), Err(Error::DisksOverlap(_, _))));
    }

    #[test]
    fn single_generator_is_elementary() {
        let gens = example_generators();
        let g = SchottkyGroup::certify(vec![gens[0]]).unwrap();
        assert!(g.is_elementary());
    }

    #[test]
    fn parabolic_pairs_touch_at_infinity() {
        // z ↦ z + 4 pairs Re z ≤ −2 with Re z ≥ 2; both regions contain ∞.
        let gen = SchottkyGenerator {
            map: Mobius::new(1.0, 4.0, 0.0, 1.0).unwrap(),
            minus: HalfSpace::Left { cut: -2.0 },
            plus: HalfSpace::Right { cut: 2.0 },
        };
        assert_eq!(SchottkyGroup::certify(vec![gen]), Err(Error::DisksOverlap(0, 1)));
    }

    #[test]
    fn conjugated_generator_certifies() {
        // Conjugating z ↦ 9z by h moves its fixed points 0, ∞ to 1, −1.
        let h = Mobius::new(1.0, 1.0, -1.0, 1.0).unwrap();
        let g = h.compose(&Mobius::new(3.0, 0.0, 0.0, 1.0 / 3.0).unwrap()).compose(&h.inverse());
        let img = |x: f64| h.apply_boundary(BoundaryPoint::Finite(x)).to_f64();
        let disk = |p: f64, q: f64| {
            let (lo, hi) = (p.min(q), p.max(q));
            HalfSpace::Disk { center: (lo + hi) / 2.0, radius: (hi - lo) / 2.0 }
        };
        let gen = SchottkyGenerator {
            map: g,
            minus: disk(img(-1.0 / 3.0), img(1.0 / 3.0)),
            plus: disk(img(-3.0), img(3.0)),
        };
        assert!(SchottkyGroup::certify(vec![gen]).is_ok());
    }

    #[test]
    fn overlapping_arcs_detected_through_infinity() {
        let left = HalfSpace::Left { cut: -1.0 };
        let outside = HalfSpace::Outside { center: 0.0, radius: 3.0 };
        assert!(!arcs_disjoint(left.arc(), outside.arc()));
        let disk = HalfSpace::Disk { center: 0.0, radius: 0.5 };
        assert!(arcs_disjoint(left.arc(), disk.arc()));
        assert!(arcs_disjoint(outside.arc(), disk.arc()));
    }

    #[test]
    fn reduce_examples() {
        let g = example_group();
        let w = HalfPlanePoint::new(0.1, 1.0).unwrap();
        assert!(g.in_fundamental_domain(w));
        let r = g.reduce(w).unwrap();
        assert!(r.word.is_identity());
        assert_eq!(r.point, w);

        let z = g.letter_map(word("a").first().unwrap()).apply(w);
        let r = g.reduce(z).unwrap();
        assert_eq!(r.word, word("A"));
        assert!(hyp_distance(r.point, w) < 1e-12);

        let z = g.word_map(&word("aba")).apply(w);
        let r = g.reduce(z).unwrap();
        assert_eq!(r.word, word("ABA"));
        assert!(hyp_distance(r.point, w) < 1e-10);
    }

    #[test]
    fn boundary_point_of_a_power_is_the_attracting_fixed_point() {
        let g = example_group();
        let a = word("a").first().unwrap();
        let (p, used) = g.boundary_point(std::iter::repeat(a), 1e-13).unwrap();
        assert!(p.approx_eq(&BoundaryPoint::Infinity, 1e-12));
        assert!(used < 60);
        let b = word("b").first().unwrap();
        let (p, _) = g.boundary_point(std::iter::repeat(b), 1e-13).unwrap();
        assert!(p.approx_eq(&BoundaryPoint::Finite(-1.0), 1e-12));
        assert!(g.boundary_point([a, b], 1e-13).is_err());
    }

    fn arb_generator_word(len: usize) -> impl Strategy<Value = ReducedWord> {
        prop::collection::vec(0usize..4, 1..len)
            .prop_map(|c| ReducedWord::from_letters(c.into_iter().map(Letter::from_code)))
    }

    proptest! {
        #[test]
        fn reduction_recovers_the_word(w in arb_generator_word(8), x in -0.2..0.2f64, ly in -0.5..0.5f64) {
            let g = example_group();
            let base = HalfPlanePoint::new(x, ly.exp()).unwrap();
            prop_assume!(g.in_fundamental_domain(base));
            let z = g.word_map(&w).apply(base);
            let r = g.reduce(z).unwrap();
            prop_assert_eq!(&r.word, &w.inverse());
            prop_assert!(hyp_distance(r.point, base) < 1e-8);
            let again = g.reduce(r.point).unwrap();
            prop_assert!(again.word.is_identity());
        }

        #[test]
        fn boundary_point_lies_in_its_cylinder(w in arb_generator_word(12)) {
            let g = example_group();
            let core = crate::word::cyclic_reduce(&w).core;
            prop_assume!(!core.is_empty());
            let letters = core.letters().to_vec();
            let (p, _) = g.boundary_point(letters.iter().cycle().copied(), 1e-13).unwrap();
            // The attracting fixed point of the core.
            let ax = g.word_scaled(&core.as_word()).axis().unwrap();
            prop_assert!(p.approx_eq(&ax.to, 1e-9));
        }
    }
}

//! Walking geodesics through the tiling of a Schottky group one tile at a
//! time, so that only points of the fundamental domain are ever formed.
//!
//! A geodesic coming from the region `D(x)` and heading into `D(y)`, with
//! `x ≠ y`, crosses the fundamental domain between leaving the first and
//! entering the second. Translating by `y⁻¹` exposes the next piece. Endpoints
//! are computed from boundary words, which stay accurate where long matrix
//! products would not.

use super::map::Mobius;
use super::point::{BoundaryPoint, Geodesic, HalfPlanePoint};
use super::schottky::{wrap_angle, SchottkyGroup};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::word::{CyclicWord, Letter};

/// Chordal tolerance for boundary points computed during sweeps.
pub const SWEEP_BOUNDARY_TOL: f64 = 1e-14;

/// A unit tangent vector: base point and direction angle measured
/// counterclockwise from the positive real direction, in `[0, 2π)`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct UnitTangent<T> {
    pub point: HalfPlanePoint<T>,
    pub angle: T,
}

/// One piece of a geodesic inside the fundamental domain, parametrized as
/// `n_inv(i·eˢ)` for `s ∈ [s0, s1]`.
#[derive(Copy, Clone, Debug)]
pub struct Segment<T> {
    pub n_inv: Mobius<T>,
    pub s0: T,
    pub s1: T,
}

impl<T: Real> Segment<T> {
    pub fn len(&self) -> T {
        self.s1 - self.s0
    }

    pub fn is_empty(&self) -> bool {
        !(self.s1 > self.s0)
    }

    /// The unit tangent at parameter `s`, pointing forward.
    pub fn tangent(&self, s: T) -> UnitTangent<T> {
        let w = HalfPlanePoint::new_unchecked(T::zero(), s.exp());
        UnitTangent {
            point: self.n_inv.apply(w),
            angle: wrap_angle(T::FRAC_PI_2() + self.n_inv.rotation_at(w)),
        }
    }
}

/// Piece of the geodesic `from → to` between leaving `exit_of` and entering
/// `enter`.
fn segment_between<T: Real>(
    group: &SchottkyGroup<T>,
    from: BoundaryPoint<T>,
    to: BoundaryPoint<T>,
    exit_of: Letter,
    enter: Letter,
) -> Result<Segment<T>> {
    let geo = Geodesic::new(from, to)?;
    let n_inv = geo.normalizer().inverse();
    let s0 = group
        .region(exit_of)
        .crossing_height(&n_inv)
        .ok_or_else(|| Error::Degenerate(format!("geodesic misses region {exit_of}")))?
        .ln();
    let s1 = group
        .region(enter)
        .crossing_height(&n_inv)
        .ok_or_else(|| Error::Degenerate(format!("geodesic misses region {enter}")))?
        .ln();
    Ok(Segment { n_inv, s0, s1 })
}

/// Smallest period of a cyclic word.
pub fn primitive_period(core: &CyclicWord) -> usize {
    let l = core.len();
    (1..=l)
        .find(|&p| l.is_multiple_of(p) && (0..l).all(|i| core.at(i) == core.at(i + p)))
        .unwrap_or(l)
}

/// The pieces of the closed geodesic of a cyclically reduced word inside the
/// fundamental domain, one per letter of its primitive root, in order.
pub fn closed_geodesic_segments<T: Real>(group: &SchottkyGroup<T>, core: &CyclicWord) -> Result<Vec<Segment<T>>> {
    if core.is_empty() {
        return Err(Error::NotLoxodromic);
    }
    let l = primitive_period(core);
    let tol = T::lit(SWEEP_BOUNDARY_TOL);
    let letters: Vec<Letter> = core.letters()[..l].to_vec();
    (0..l)
        .map(|j| {
            let forward = (0..).map(|i| letters[(j + i) % l]);
            let backward = (1..).map(|i| letters[(j + l * 64 - i) % l].inverse());
            let (to, _) = group.boundary_point(forward.take(100_000), tol)?;
            let (from, _) = group.boundary_point(backward.take(100_000), tol)?;
            let exit_of = letters[(j + l - 1) % l].inverse();
            segment_between(group, from, to, exit_of, letters[j])
        })
        .collect()
}

/// Samples the closed geodesic of `core` at `⌈ℓ/δ⌉` equally spaced points of
/// its primitive period (`ℓ` its length), offset by half a step. Returns the
/// period length.
pub fn sweep_closed_geodesic<T, F>(group: &SchottkyGroup<T>, core: &CyclicWord, delta: T, mut visit: F) -> Result<T>
where
    T: Real,
    F: FnMut(UnitTangent<T>),
{
    let segments = closed_geodesic_segments(group, core)?;
    let total = segments.iter().fold(T::zero(), |acc, s| acc + s.len());
    let count = (total / delta).ceil().max(T::one());
    let step = total / count;
    let mut next = step / T::lit(2.0);
    let mut offset = T::zero();
    for seg in &segments {
        let end = offset + seg.len();
        while next < end {
            visit(seg.tangent(seg.s0 + (next - offset)));
            next += step;
        }
        offset = end;
    }
    Ok(total)
}

/// Sample emitted by [`sweep_ray`]: the tangent in fundamental-domain
/// coordinates and the number of letters of the ray word that translate it
/// back to its true position.
#[derive(Copy, Clone, Debug)]
pub struct RaySample<T> {
    pub t: T,
    pub tangent: UnitTangent<T>,
    pub tile: usize,
}

/// Samples the ray from `origin` (in the fundamental domain) to the limit
/// point of `letters` at `t = 0, δ, 2δ, …, ≤ length`. The true position of a
/// sample is `letters[..tile] · tangent`.
pub fn sweep_ray<T, F>(
    group: &SchottkyGroup<T>,
    origin: HalfPlanePoint<T>,
    letters: &[Letter],
    length: T,
    delta: T,
    mut visit: F,
) -> Result<()>
where
    T: Real,
    F: FnMut(RaySample<T>),
{
    if !group.in_fundamental_domain(origin) {
        return Err(Error::OutsideDomain(format!("ray origin {origin} is not in the fundamental domain")));
    }
    let tol = T::lit(SWEEP_BOUNDARY_TOL);
    let mut next_t = T::zero();
    let mut covered = T::zero();
    let mut from = BoundaryPoint::Infinity;
    for j in 0..letters.len() {
        let to = match group.boundary_point(letters[j..].iter().copied(), tol) {
            Ok((p, _)) => p,
            Err(_) => break,
        };
        let seg = if j == 0 {
            let geo = Geodesic::through(origin, to);
            from = geo.from;
            let n = geo.normalizer();
            let n_inv = n.inverse();
            let s1 = group
                .region(letters[0])
                .crossing_height(&n_inv)
                .ok_or_else(|| Error::Degenerate("ray misses its first region".into()))?
                .ln();
            let w = n.apply(origin);
            Segment { n_inv, s0: (w.x * w.x + w.y * w.y).sqrt().ln(), s1 }
        } else {
            from = group.letter_map(letters[j - 1].inverse()).apply_boundary(from);
            segment_between(group, from, to, letters[j - 1].inverse(), letters[j])?
        };
        let end = covered + seg.len();
        while next_t < end && next_t <= length {
            visit(RaySample {
                t: next_t,
                tangent: seg.tangent(seg.s0 + (next_t - covered)),
                tile: j,
            });
            next_t += delta;
        }
        covered = end;
        if next_t > length {
            return Ok(());
        }
    }
    Err(Error::RayTooLong {
        requested: length.to_f64_lossy(),
        available: covered.to_f64_lossy(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobius::point::hyp_distance;
    use crate::mobius::schottky::tests::example_group;
    use crate::word::{cyclic_reduce, word, ReducedWord};
    use proptest::prelude::*;

    /// Samples the axis of `g` directly with matrices, reducing each point.
    fn naive_tangents(group: &SchottkyGroup<f64>, g: &ReducedWord, delta: f64) -> Vec<UnitTangent<f64>> {
        let m = group.word_map(g);
        let axis = m.axis().unwrap();
        let n = axis.normalizer();
        let base = axis.project(HalfPlanePoint::i());
        let l = m.translation_length();
        let count = (l / delta).ceil();
        let step = l / count;
        (0..count as usize)
            .map(|k| {
                let z = axis.point_at(base, (k as f64 + 0.5) * step).unwrap();
                let w = n.apply(z);
                let angle = std::f64::consts::FRAC_PI_2 + n.inverse().rotation_at(w);
                let r = group.reduce(z).unwrap();
                UnitTangent {
                    point: r.point,
                    angle: wrap_angle(angle + r.map.rotation_at(z)),
                }
            })
            .collect()
    }

    #[test]
    fn segment_lengths_sum_to_translation_length() {
        let group = example_group();
        for w in ["a", "b", "ab", "aB", "aabAb", "abABBa"] {
            let core = cyclic_reduce(&word(w)).core;
            let segs = closed_geodesic_segments(&group, &core).unwrap();
            let total: f64 = segs.iter().map(|s| s.len()).sum();
            let l = group.word_map(&core.as_word()).translation_length();
            assert!((total - l).abs() < 1e-9, "{w}: {total} vs {l}");
            assert!(segs.iter().all(|s| !s.is_empty()));
        }
    }

    #[test]
    fn generator_axis_runs_up_the_imaginary_axis() {
        let group = example_group();
        let core = cyclic_reduce(&word("a")).core;
        let mut pts = Vec::new();
        let l = sweep_closed_geodesic(&group, &core, 0.02, |u| pts.push(u)).unwrap();
        assert!((l - 2.0 * 3f64.ln()).abs() < 1e-12);
        for u in &pts {
            assert!(u.point.x.abs() < 1e-12);
            assert!((u.angle - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
            assert!(u.point.y > 1.0 / 3.0 && u.point.y < 3.0);
        }
    }

    proptest! {
        #[test]
        fn sweep_matches_naive_reduction(codes in prop::collection::vec(0usize..4, 1..6)) {
            let group = example_group();
            let g = ReducedWord::from_letters(codes.into_iter().map(Letter::from_code));
            let core = cyclic_reduce(&g).core;
            prop_assume!(!core.is_empty());
            let mut fast = Vec::new();
            sweep_closed_geodesic(&group, &core, 0.05, |u| fast.push(u)).unwrap();
            let slow = naive_tangents(&group, &core.as_word(), 0.05);
            prop_assume!(primitive_period(&core) == core.len());
            prop_assert_eq!(fast.len(), slow.len());
            // The naive grid starts elsewhere on the axis, so each sample has
            // a naive neighbour within one step on its own side of any tile
            // boundary. Angles are compared too because strands cross.
            let angle_gap = |x: f64, y: f64| {
                let d = (x - y).abs();
                d.min(2.0 * std::f64::consts::PI - d)
            };
            let gap = |u: &UnitTangent<f64>, v: &UnitTangent<f64>| {
                hyp_distance(u.point, v.point) + angle_gap(u.angle, v.angle)
            };
            for u in &fast {
                let v = slow.iter().min_by(|v, w| gap(u, v).total_cmp(&gap(u, w))).unwrap();
                prop_assert!(hyp_distance(u.point, v.point) < 0.06, "no naive sample near {:?}", u.point);
                prop_assert!(angle_gap(u.angle, v.angle) < 0.1);
            }
        }

        #[test]
        fn ray_along_a_power_follows_the_axis(k in 1usize..3) {
            let group = example_group();
            let letters = vec![Letter::generator(0); 60 * k];
            let mut ts = Vec::new();
            sweep_ray(&group, HalfPlanePoint::i(), &letters, 20.0, 0.5, |s| {
                ts.push(s.t);
                assert!(s.tangent.point.x.abs() < 1e-9);
            }).unwrap();
            prop_assert_eq!(ts.len(), 41);
        }
    }

    #[test]
    fn ray_positions_match_direct_geodesic() {
        let group = example_group();
        let xi = word("abaBAbbaBabAAbaBBabAbaab").letters().to_vec();
        let o = HalfPlanePoint::new(0.1, 1.1).unwrap();
        let mut long = xi.clone();
        for _ in 0..4 {
            long.extend_from_slice(&xi);
        }
        let long = ReducedWord::from_letters(long);
        let (end, _) = group.boundary_point(long.letters().iter().copied(), 1e-14).unwrap();
        let geo = Geodesic::through(o, end);
        let mut checked = 0;
        sweep_ray(&group, o, long.letters(), 6.0, 0.25, |s| {
            let head = ReducedWord::from_letters(long.letters()[..s.tile].iter().copied());
            let true_point = group.word_map(&head).apply(s.tangent.point);
            let expect = geo.point_at(o, s.t).unwrap();
            assert!(hyp_distance(true_point, expect) < 1e-7, "t = {}", s.t);
            checked += 1;
        })
        .unwrap();
        assert_eq!(checked, 25);
        let err = sweep_ray(&group, o, &long.letters()[..30], 1e4, 0.25, |_| {});
        assert!(matches!(err, Err(Error::RayTooLong { .. })));
    }
}

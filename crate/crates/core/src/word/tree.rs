//! Metric geometry of the Cayley tree: distances, translation lengths, axes
//! and distances to geodesic rays from the identity.

use serde::Serialize;

use super::cyclic::strip_bounds;
use super::{common_prefix_len, CyclicWord, Letter, ReducedWord};
use crate::error::{Error, Result};

/// `d(u, v) = |u⁻¹v|`.
pub fn tree_distance(u: &ReducedWord, v: &ReducedWord) -> usize {
    let p = u.common_prefix_len(v.letters());
    (u.len() - p) + (v.len() - p)
}

/// Length of the cyclically reduced core, i.e. `inf_x d(x, g x)`.
pub fn translation_length_tree(g: &ReducedWord) -> usize {
    let (lo, hi) = strip_bounds(g.letters());
    hi - lo
}

/// Finite prefix of an infinite reduced word, standing for the cylinder of
/// boundary points extending it.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TreeBoundaryPrefix {
    pub letters: ReducedWord,
}

impl TreeBoundaryPrefix {
    pub fn new(letters: ReducedWord) -> Self {
        TreeBoundaryPrefix { letters }
    }

    pub fn depth(&self) -> usize {
        self.letters.len()
    }

    pub fn truncate(&self, depth: usize) -> TreeBoundaryPrefix {
        TreeBoundaryPrefix::new(self.letters.prefix(depth))
    }

    /// Vertex at distance `t` from the identity along the ray.
    pub fn ray_point(&self, t: usize) -> ReducedWord {
        self.letters.prefix(t)
    }
}

/// Distance from vertex `u` to the geodesic ray from the identity toward `ξ`.
pub fn distance_to_ray(u: &ReducedWord, xi: &TreeBoundaryPrefix) -> Result<usize> {
    if xi.depth() < u.len() {
        return Err(Error::PrefixTooShallow {
            depth: xi.depth(),
            needed: u.len(),
        });
    }
    Ok(u.len() - u.common_prefix_len(xi.letters.letters()))
}

/// Axis of a loxodromic element `g = c · p · c⁻¹` with `p` cyclically
/// reduced: the bi-infinite line through the vertices `c · pⁱ · q` (`q` a
/// prefix of `p`), translated by `g` a distance `|p|`. The vertex `c` is the
/// projection of the identity onto the axis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TreeAxis {
    pub conjugator: ReducedWord,
    pub period: ReducedWord,
}

pub fn axis_tree(g: &ReducedWord) -> Result<TreeAxis> {
    let letters = g.letters();
    let (lo, hi) = strip_bounds(letters);
    if lo == hi {
        return Err(Error::NotLoxodromic);
    }
    Ok(TreeAxis {
        conjugator: ReducedWord::from_reduced_unchecked(letters[..lo].to_vec()),
        period: ReducedWord::from_reduced_unchecked(letters[lo..hi].to_vec()),
    })
}

impl TreeAxis {
    pub fn translation_length(&self) -> usize {
        self.period.len()
    }

    /// Conjugacy class of the translation, i.e. the closed geodesic.
    pub fn cyclic(&self) -> CyclicWord {
        CyclicWord::from_cyclically_reduced(self.period.letters())
    }

    #[inline]
    fn forward_at(&self, i: usize) -> Letter {
        let p = self.period.letters();
        p[i % p.len()]
    }

    /// Letter `i` of the backward periodic word `(p⁻¹)^∞`.
    #[inline]
    fn backward_at(&self, i: usize) -> Letter {
        let p = self.period.letters();
        p[p.len() - 1 - i % p.len()].inverse()
    }

    /// Vertex at signed offset `i` from the projection `c` of the identity.
    pub fn vertex(&self, i: i64) -> ReducedWord {
        let mut w = self.conjugator.clone();
        if i >= 0 {
            for j in 0..i as usize {
                w.push(self.forward_at(j));
            }
        } else {
            for j in 0..i.unsigned_abs() as usize {
                w.push(self.backward_at(j));
            }
        }
        w
    }

    fn forward_lcp(&self, s: &[Letter]) -> usize {
        s.iter()
            .enumerate()
            .take_while(|&(i, &x)| x == self.forward_at(i))
            .count()
    }

    fn backward_lcp(&self, s: &[Letter]) -> usize {
        s.iter()
            .enumerate()
            .take_while(|&(i, &x)| x == self.backward_at(i))
            .count()
    }

    /// Distance from an arbitrary vertex to the axis.
    pub fn distance_to_vertex(&self, v: &ReducedWord) -> usize {
        let local = &self.conjugator.inverse() * v;
        let s = local.letters();
        s.len() - self.forward_lcp(s).max(self.backward_lcp(s))
    }

    /// Distances from the points `ξ[..t]` of the ray toward `ξ` to the axis,
    /// for every `t ≤ |ξ|`, in linear total time.
    pub fn ray_offsets(&self, xi: &TreeBoundaryPrefix) -> RayAxisOffsets {
        let c = self.conjugator.letters();
        let x = xi.letters.letters();
        let branch = common_prefix_len(c, x);
        let along = if branch == c.len() {
            let rest = &x[c.len()..];
            self.forward_lcp(rest).max(self.backward_lcp(rest))
        } else {
            0
        };
        RayAxisOffsets {
            conj_len: c.len(),
            branch,
            along,
            depth: x.len(),
        }
    }
}

/// Closed form for `d(ξ[..t], axis)` produced by [`TreeAxis::ray_offsets`].
#[derive(Clone, Copy, Debug)]
pub struct RayAxisOffsets {
    conj_len: usize,
    branch: usize,
    along: usize,
    depth: usize,
}

impl RayAxisOffsets {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn at(&self, t: usize) -> usize {
        assert!(t <= self.depth, "ray point beyond the known prefix");
        if t <= self.branch {
            return self.conj_len - t;
        }
        if self.branch < self.conj_len {
            (t - self.branch) + (self.conj_len - self.branch)
        } else {
            let s = t - self.conj_len;
            s - s.min(self.along)
        }
    }
}

//! The two spaces a free group acts on: its Cayley tree, and the hyperbolic
//! plane through a certified Schottky group. Both present group elements as
//! reduced words; only the geometry differs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mobius::{BoundaryPoint, Geodesic, HalfPlanePoint, SchottkyGroup};
use crate::word::{axis_tree, cyclic_reduce, ReducedWord, MAX_RANK};
use crate::{BoundaryPointH, GeodesicH, HPoint};

/// Chordal tolerance for boundary points built from words.
pub const BOUNDARY_TOL: f64 = 1e-13;

#[derive(Clone, Debug)]
pub enum Model {
    Tree { rank: usize, basepoint: ReducedWord },
    HalfPlane { group: SchottkyGroup<f64>, basepoint: HPoint },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Tree,
    HalfPlane,
}

impl Model {
    pub fn tree(rank: usize) -> Result<Self> {
        if !(1..=MAX_RANK).contains(&rank) {
            return Err(Error::InvalidRank(rank));
        }
        Ok(Model::Tree {
            rank,
            basepoint: ReducedWord::identity(),
        })
    }

    pub fn half_plane(group: SchottkyGroup<f64>) -> Self {
        Model::HalfPlane {
            group,
            basepoint: HalfPlanePoint::i(),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Tree { .. } => ModelKind::Tree,
            Model::HalfPlane { .. } => ModelKind::HalfPlane,
        }
    }

    pub fn rank(&self) -> usize {
        match self {
            Model::Tree { rank, .. } => *rank,
            Model::HalfPlane { group, .. } => group.rank(),
        }
    }

    pub fn with_tree_basepoint(self, x: ReducedWord) -> Result<Self> {
        match self {
            Model::Tree { rank, .. } => {
                x.check_rank(rank)?;
                Ok(Model::Tree { rank, basepoint: x })
            }
            Model::HalfPlane { .. } => Err(Error::Unsupported("word basepoint on the half-plane".into())),
        }
    }

    pub fn with_plane_basepoint(self, o: HPoint) -> Result<Self> {
        match self {
            Model::HalfPlane { group, .. } => {
                if !group.in_fundamental_domain(o) {
                    return Err(Error::OutsideDomain(format!("basepoint {o}")));
                }
                Ok(Model::HalfPlane { group, basepoint: o })
            }
            Model::Tree { .. } => Err(Error::Unsupported("point basepoint on the tree".into())),
        }
    }

    /// `d(x₀, g·x₀)`.
    pub fn displacement(&self, g: &ReducedWord) -> f64 {
        match self {
            Model::Tree { basepoint, .. } => {
                let conj = &(&basepoint.inverse() * g) * basepoint;
                conj.len() as f64
            }
            Model::HalfPlane { group, basepoint } => group.word_scaled(g).displacement_of(*basepoint),
        }
    }

    /// `l(g)`, which depends only on the cyclic core.
    pub fn translation_length(&self, g: &ReducedWord) -> f64 {
        let core = cyclic_reduce(g).core;
        match self {
            Model::Tree { .. } => core.len() as f64,
            Model::HalfPlane { group, .. } => {
                if core.is_empty() {
                    0.0
                } else {
                    group.word_scaled(&core.as_word()).translation_length()
                }
            }
        }
    }

    /// Both groups are free, so every nontrivial element is loxodromic.
    pub fn is_loxodromic(&self, g: &ReducedWord) -> bool {
        !g.is_identity()
    }
}

/// Applies `u` to a boundary point one letter at a time, last letter first.
/// Each step is a Möbius map of the boundary, so no long product is formed.
pub fn translate_boundary(group: &SchottkyGroup<f64>, u: &ReducedWord, p: BoundaryPointH) -> BoundaryPointH {
    u.letters()
        .iter()
        .rev()
        .fold(p, |acc, &x| group.letter_map(x).apply_boundary(acc))
}

/// Limit point of the infinite word beginning with `w`; fails when `w` is too
/// short to pin it down to [`BOUNDARY_TOL`].
pub fn word_boundary_point(group: &SchottkyGroup<f64>, w: &ReducedWord) -> Result<BoundaryPointH> {
    group
        .boundary_point(w.letters().iter().copied(), BOUNDARY_TOL)
        .map(|(p, _)| p)
}

/// Endpoints of the axis of `u · g · u⁻¹`, from words, for loxodromic `g`.
pub fn translated_axis(group: &SchottkyGroup<f64>, u: &ReducedWord, g: &ReducedWord) -> Result<GeodesicH> {
    let axis = axis_tree(g)?;
    let head = u * &axis.conjugator;
    let p = &axis.period;
    let copies = (head.len() + 256) / p.len() + 2;
    let fwd = &head * &p.pow(copies as i64);
    let bwd = &head * &p.pow(-(copies as i64));
    let to = word_boundary_point(group, &fwd)?;
    let from = word_boundary_point(group, &bwd)?;
    Geodesic::new(from, to)
}

/// Geodesic through `o` toward the limit point of `xi`.
pub fn ray_geodesic(group: &SchottkyGroup<f64>, o: HPoint, xi: &ReducedWord) -> Result<GeodesicH> {
    let to = word_boundary_point(group, xi)?;
    Ok(Geodesic::through(o, to))
}

/// `BoundaryPoint` for reports: `None` stands for `∞`.
pub fn boundary_value(p: &BoundaryPointH) -> Option<f64> {
    match p {
        BoundaryPoint::Finite(x) => Some(*x),
        BoundaryPoint::Infinity => None,
    }
}

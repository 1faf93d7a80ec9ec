//! Isometries of the upper half-plane and Schottky groups acting on it.

mod map;
mod point;
mod schottky;
mod sweep;

pub use map::{IsometryClass, Mobius, ScaledMobius, CLASSIFY_TOL};
pub use point::{dist_to_geodesic, geodesic_point, hyp_distance, BoundaryPoint, Geodesic, HalfPlanePoint, ON_GEODESIC_TOL};
pub use schottky::{HalfSpace, Reduction, SchottkyGenerator, SchottkyGroup, CERTIFY_SAMPLES, REDUCE_ITERATION_LIMIT};
pub use sweep::{
    closed_geodesic_segments, primitive_period, sweep_closed_geodesic, sweep_ray, RaySample, Segment, UnitTangent,
    SWEEP_BOUNDARY_TOL,
};

#[cfg(test)]
pub(crate) use schottky::tests::example_group;

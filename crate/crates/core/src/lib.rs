//! Random walks on free groups and on Schottky groups of the hyperbolic
//! plane: drift, boundary convergence, harmonic measure, and equidistribution
//! of the closed geodesics `ωₙ` toward the harmonic invariant measure.
//!
//! The tree model (`F_k` acting on its Cayley graph) is exact; the half-plane
//! model works with certified ping-pong generators. Geometry is generic over
//! the scalar, the statistical layer is `f64`.

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod equidist;
pub mod error;
pub mod estimators;
pub mod mobius;
pub mod model;
pub mod report;
pub mod runner;
pub mod scalar;
pub mod walk;
pub mod word;

pub use error::{Error, Result};
pub use scalar::Real;

pub type MobiusMap = mobius::Mobius<f64>;
pub type HPoint = mobius::HalfPlanePoint<f64>;
pub type BoundaryPointH = mobius::BoundaryPoint<f64>;
pub type GeodesicH = mobius::Geodesic<f64>;
pub type Schottky = mobius::SchottkyGroup<f64>;

//! Monte Carlo estimators for the limit laws of a random walk, and the exact
//! harmonic measure of nearest-neighbour walks on the tree.

pub mod harmonic;
pub mod laws;
mod stats;

pub use harmonic::*;
pub use laws::*;
pub use stats::*;

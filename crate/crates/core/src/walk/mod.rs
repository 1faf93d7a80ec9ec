//! Sampling μ-random walks: step distributions, seeded trajectories and
//! their prefix products.

mod path;
pub mod rng;
mod step;

pub use path::{sample_path, sample_path_on, SamplePath};
pub use step::{generation_check, GenerationDiagnostic, StepDistribution, MASS_TOL};

//! Random QUBO laboratory.
//!
//! Generators for random (optionally diluted) coupling matrices, evaluation of
//! the quadratic form `H(J, η) = W Σ J_ij η_i η_j` over `η ∈ {0,1}^N`, a
//! probabilistic cellular automaton (PCA) sampler together with a Metropolis
//! baseline and exhaustive search, and the statistics used to study minimizers
//! and maximizers of random instances.
//!
//! With the default `parallel` feature, replica-level work is spread over a
//! rayon pool. Without it every batch runs sequentially; results are
//! bit-identical either way because each replica owns its random stream.

pub mod analysis;
pub mod bench_io;
pub mod energy;
mod error;
pub mod instance;
pub mod par;
pub mod rng;
pub mod solvers;

pub use analysis::{BlockStats, OptimumStats, OrderingCurve};
pub use energy::{Configuration, FieldVector};
pub use error::{QuboError, Result};
pub use instance::{CouplingDistribution, CouplingMatrix};
pub use solvers::{Objective, PcaParams, SolveResult};

//! Statistics over instances and solver outputs.

mod blocks;
mod bounds;
pub mod experiments;
mod optimum;
mod ordering;
mod stats;

pub use blocks::{block_partition, block_stats, BlockAccumulator, BlockPartition, BlockStats};
pub use bounds::{entropy, gaussian_bound_constants, BoundConstants, REPORTED_ALPHA_STAR, REPORTED_M_STAR};
pub use optimum::{optimum_stats, OptimumStats};
pub use ordering::{OrderingAccumulator, OrderingCurve, DEFAULT_BINS};
pub use stats::{spearman, RunningStats};

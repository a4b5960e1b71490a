//! Replica experiments: draw an instance per replica, find its minimum and
//! maximum with the PCA grid, and reduce the per-replica outcomes.
//!
//! Replica `r` of experiment `name` at size `n` always uses the instance seed
//! `replica_seed(seed_base, name, n, r)`, independent of worker count and of
//! which other sizes or replicas are requested.

use std::time::Instant;

use crate::analysis::{
    block_partition, optimum_stats, BlockAccumulator, BlockStats, OptimumStats, OrderingAccumulator,
    OrderingCurve, RunningStats,
};
use crate::energy::Configuration;
use crate::error::{QuboError, Result};
use crate::instance::{generate, CouplingDistribution, CouplingMatrix};
use crate::par;
use crate::rng::{mix64, replica_seed};
use crate::solvers::{best_over_grid, Objective, PcaGrid, SolveResult};

/// How each replica is optimized.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub grid: PcaGrid,
    /// Zero `J_ii` before solving (comparison studies only).
    pub zero_diagonal: bool,
}

impl SolverConfig {
    pub fn new(grid: PcaGrid) -> Self {
        SolverConfig {
            grid,
            zero_diagonal: false,
        }
    }
}

/// Everything recorded about one replica.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicaOutcome {
    pub replica: u64,
    pub seed: u64,
    pub stats: OptimumStats,
    pub min_config: Configuration,
    pub max_config: Configuration,
    pub sweeps_to_best_min: usize,
    pub sweeps_to_best_max: usize,
    pub wall_ms: f64,
}

/// Grid seed for one objective, so minimum and maximum searches use unrelated streams.
pub fn objective_seed(seed: u64, objective: Objective) -> u64 {
    match objective {
        Objective::Minimize => mix64(seed ^ 0x6d69_6e),
        Objective::Maximize => mix64(seed ^ 0x6d61_78),
    }
}

/// Best-over-grid minimum and maximum of a symmetrized instance.
pub fn solve_min_max(j_sym: &CouplingMatrix, cfg: &SolverConfig, seed: u64) -> Result<(SolveResult, SolveResult)> {
    let run = |o| best_over_grid(j_sym, &cfg.grid.params(objective_seed(seed, o)), o);
    Ok((run(Objective::Minimize)?, run(Objective::Maximize)?))
}

/// Instance of replica `replica`: the raw matrix (diagonal zeroed if configured).
pub fn replica_instance(
    name: &str,
    dist: &CouplingDistribution,
    n: usize,
    replica: u64,
    cfg: &SolverConfig,
    seed_base: u64,
) -> Result<(u64, CouplingMatrix)> {
    let seed = replica_seed(seed_base, name, n, replica);
    let j = generate(n, dist, seed)?;
    let j = if cfg.zero_diagonal { j.zero_diagonal() } else { j };
    Ok((seed, j))
}

/// Solves one replica; returns the raw instance alongside the outcome.
pub fn run_replica(
    name: &str,
    dist: &CouplingDistribution,
    n: usize,
    replica: u64,
    cfg: &SolverConfig,
    seed_base: u64,
) -> Result<(CouplingMatrix, ReplicaOutcome)> {
    let start = Instant::now();
    let (seed, j) = replica_instance(name, dist, n, replica, cfg, seed_base)?;
    let sym = j.symmetrize();
    let (min, max) = solve_min_max(&sym, cfg, seed)?;
    let stats = optimum_stats(&sym, &min, &max)?;
    Ok((
        j,
        ReplicaOutcome {
            replica,
            seed,
            stats,
            min_config: min.best_config,
            max_config: max.best_config,
            sweeps_to_best_min: min.sweeps_to_best,
            sweeps_to_best_max: max.sweeps_to_best,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        },
    ))
}

/// Runs `replicas` replicas in parallel, results in replica order.
pub fn optimum_experiment(
    name: &str,
    dist: &CouplingDistribution,
    n: usize,
    replicas: usize,
    cfg: &SolverConfig,
    seed_base: u64,
) -> Result<Vec<ReplicaOutcome>> {
    par::map_indices(replicas, |r| {
        run_replica(name, dist, n, r as u64, cfg, seed_base).map(|(_, o)| o)
    })
    .into_iter()
    .collect()
}

/// Replica averages of the per-particle optima.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OptimumSummary {
    pub m_min: RunningStats,
    pub m_max: RunningStats,
    pub alpha_min: RunningStats,
    pub alpha_max: RunningStats,
    /// Per-replica average of `m_min` and `m_max`.
    pub m: RunningStats,
    pub alpha: RunningStats,
}

pub fn summarize(outcomes: &[ReplicaOutcome]) -> OptimumSummary {
    let mut s = OptimumSummary::default();
    for o in outcomes {
        s.m_min.push(o.stats.m_min);
        s.m_max.push(o.stats.m_max);
        s.alpha_min.push(o.stats.alpha_min);
        s.alpha_max.push(o.stats.alpha_max);
        s.m.push(o.stats.m());
        s.alpha.push(o.stats.alpha());
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConcentrationRow {
    pub n: usize,
    pub replicas: usize,
    pub m_min: RunningStats,
    pub m_max: RunningStats,
}

impl ConcentrationRow {
    /// Sample variance of `N · m_max,N = max H`.
    pub fn var_n_m_max(&self) -> f64 {
        self.m_max.variance() * (self.n as f64).powi(2)
    }

    pub fn var_n_m_min(&self) -> f64 {
        self.m_min.variance() * (self.n as f64).powi(2)
    }
}

/// Mean and variance of `m_min,N` and `m_max,N` for each size.
pub fn concentration_experiment(
    dist: &CouplingDistribution,
    n_list: &[usize],
    replicas: usize,
    cfg: &SolverConfig,
    seed_base: u64,
) -> Result<Vec<ConcentrationRow>> {
    if replicas < 30 {
        return Err(QuboError::Parameter(format!("need at least 30 replicas per size, got {replicas}")));
    }
    n_list
        .iter()
        .map(|&n| {
            let outcomes = optimum_experiment("concentration", dist, n, replicas, cfg, seed_base)?;
            let s = summarize(&outcomes);
            Ok(ConcentrationRow {
                n,
                replicas,
                m_min: s.m_min,
                m_max: s.m_max,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct UniversalityRow {
    pub dist: CouplingDistribution,
    pub n: usize,
    pub summary: OptimumSummary,
}

impl UniversalityRow {
    /// Normal-approximation 95% interval for the mean of `m`.
    pub fn ci95(&self) -> (f64, f64) {
        let (m, se) = (self.summary.m.mean(), self.summary.m.std_error());
        (m - 1.96 * se, m + 1.96 * se)
    }
}

/// One row per distribution; distribution `k` uses its own seed namespace,
/// so listing the same distribution twice gives independent replicas.
pub fn universality_experiment(
    dists: &[CouplingDistribution],
    n: usize,
    replicas: usize,
    cfg: &SolverConfig,
    seed_base: u64,
) -> Result<Vec<UniversalityRow>> {
    if dists.len() < 2 {
        return Err(QuboError::Parameter("universality needs at least two distributions".into()));
    }
    dists
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let name = format!("universality/{k}/{d}");
            let outcomes = optimum_experiment(&name, d, n, replicas, cfg, seed_base)?;
            Ok(UniversalityRow {
                dist: d.clone(),
                n,
                summary: summarize(&outcomes),
            })
        })
        .collect()
}

/// Block statistics and ordering curve over the replicas of one size.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureSummary {
    pub blocks: BlockStats,
    pub ordering: OrderingCurve,
    pub outcomes: Vec<ReplicaOutcome>,
}

pub fn structure_experiment(
    name: &str,
    dist: &CouplingDistribution,
    n: usize,
    replicas: usize,
    bins: usize,
    cfg: &SolverConfig,
    seed_base: u64,
) -> Result<StructureSummary> {
    OrderingAccumulator::new(bins)?;
    let parts: Vec<Result<(BlockAccumulator, OrderingAccumulator, ReplicaOutcome)>> =
        par::map_indices(replicas, |r| {
            let (j, o) = run_replica(name, dist, n, r as u64, cfg, seed_base)?;
            let (b, ord) = structure_of(&j, &o.min_config, &o.max_config, bins)?;
            Ok((b, ord, o))
        });
    let mut blocks = BlockAccumulator::new();
    let mut ordering = OrderingAccumulator::new(bins)?;
    let mut outcomes = Vec::with_capacity(replicas);
    for p in parts {
        let (b, ord, o) = p?;
        blocks.merge(&b);
        ordering.merge(&ord)?;
        outcomes.push(o);
    }
    Ok(StructureSummary {
        blocks: blocks.finalize(),
        ordering: ordering.finalize(),
        outcomes,
    })
}

/// Single-replica accumulators from a raw instance and its optimizers.
pub fn structure_of(
    j: &CouplingMatrix,
    min_config: &Configuration,
    max_config: &Configuration,
    bins: usize,
) -> Result<(BlockAccumulator, OrderingAccumulator)> {
    let mut b = BlockAccumulator::new();
    b.add(j, &block_partition(min_config, max_config)?)?;
    let mut ord = OrderingAccumulator::new(bins)?;
    ord.add(j, min_config, max_config)?;
    Ok((b, ord))
}

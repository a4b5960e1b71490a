//! Optimizers over `{0,1}^n`: the PCA sampler, a single-flip Metropolis
//! baseline and exhaustive enumeration for small instances.
//!
//! Every solver minimizes; maximization runs the same code on `-J̃`, which is
//! implemented as a sign applied to the fields (negation is exact in IEEE
//! arithmetic, so both routes give identical trajectories).

mod exact;
mod metropolis;
mod pca;

pub use exact::brute_force;
pub use metropolis::{metropolis_solve, metropolis_solve_from};
pub use pca::{
    best_over_grid, pca_solve, pca_solve_batch, pca_solve_batch_seq, pca_solve_symmetric,
    pca_step, transition_probability_one, PcaGrid,
};

use crate::energy::Configuration;
use crate::error::{QuboError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Objective {
    Minimize,
    Maximize,
}

impl Objective {
    /// `+1` for minimization, `-1` for maximization.
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Objective::Minimize => 1.0,
            Objective::Maximize => -1.0,
        }
    }

    /// True when `a` is strictly better than `b`.
    #[inline]
    pub fn improves(self, a: f64, b: f64) -> bool {
        match self {
            Objective::Minimize => a < b,
            Objective::Maximize => a > b,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Objective::Minimize => "min",
            Objective::Maximize => "max",
        }
    }
}

impl std::str::FromStr for Objective {
    type Err = QuboError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" | "minimize" => Ok(Objective::Minimize),
            "max" | "maximize" => Ok(Objective::Maximize),
            _ => Err(QuboError::Parameter(format!("unknown objective '{s}'"))),
        }
    }
}

/// Parameters of one PCA run.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaParams {
    /// Inverse temperature (used when `beta_ramp` is `None`).
    pub beta: f64,
    /// Penalty for disagreement between consecutive configurations.
    pub q: f64,
    pub sweeps: usize,
    /// Linear schedule `(start, end)` over the sweeps.
    pub beta_ramp: Option<(f64, f64)>,
    pub q_ramp: Option<(f64, f64)>,
    pub seed: u64,
}

impl PcaParams {
    pub fn new(beta: f64, q: f64, sweeps: usize, seed: u64) -> Self {
        PcaParams {
            beta,
            q,
            sweeps,
            beta_ramp: None,
            q_ramp: None,
            seed,
        }
    }

    pub fn with_beta_ramp(mut self, start: f64, end: f64) -> Self {
        self.beta_ramp = Some((start, end));
        self
    }

    pub fn with_q_ramp(mut self, start: f64, end: f64) -> Self {
        self.q_ramp = Some((start, end));
        self
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if !pos(self.beta) || !pos(self.q) {
            return Err(QuboError::Parameter(format!(
                "beta and q must be positive (beta = {}, q = {})",
                self.beta, self.q
            )));
        }
        if self.sweeps == 0 {
            return Err(QuboError::Parameter("sweeps must be at least 1".into()));
        }
        for (a, b) in self.beta_ramp.iter().chain(self.q_ramp.iter()) {
            if !pos(*a) || !pos(*b) {
                return Err(QuboError::Parameter("ramp endpoints must be positive".into()));
            }
        }
        Ok(())
    }

    #[inline]
    fn ramp(value: f64, ramp: Option<(f64, f64)>, sweep: usize, sweeps: usize) -> f64 {
        match ramp {
            None => value,
            Some((a, b)) if sweeps > 1 => a + (b - a) * sweep as f64 / (sweeps - 1) as f64,
            Some((a, _)) => a,
        }
    }

    /// `(beta, q)` in effect during `sweep` (zero-based).
    pub fn at_sweep(&self, sweep: usize) -> (f64, f64) {
        (
            Self::ramp(self.beta, self.beta_ramp, sweep, self.sweeps),
            Self::ramp(self.q, self.q_ramp, sweep, self.sweeps),
        )
    }
}

/// Per-sweep record: energy of the current configuration and the number of
/// sites that changed in the sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub energy: f64,
    pub changed: usize,
    pub best_energy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub best_energy: f64,
    pub best_config: Configuration,
    pub objective: Objective,
    pub trajectory: Option<Vec<TrajectoryPoint>>,
    /// Sweep at which the best configuration was first reached (0 = start).
    pub sweeps_to_best: usize,
}

use crate::energy::energy;
use crate::error::{QuboError, Result};
use crate::instance::CouplingMatrix;
use crate::solvers::{Objective, SolveResult};

/// Per-particle optima and ones-fractions of one instance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimumStats {
    pub n: usize,
    /// `-min H / N`
    pub m_min: f64,
    /// `max H / N`
    pub m_max: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
}

impl OptimumStats {
    /// Average of `m_min` and `m_max`.
    pub fn m(&self) -> f64 {
        0.5 * (self.m_min + self.m_max)
    }

    pub fn alpha(&self) -> f64 {
        0.5 * (self.alpha_min + self.alpha_max)
    }
}

/// Fails with a usage error when the results do not belong to `j`: wrong
/// length, wrong objective, or a reported energy that `j` does not reproduce.
pub fn optimum_stats(j: &CouplingMatrix, min: &SolveResult, max: &SolveResult) -> Result<OptimumStats> {
    let n = j.n();
    if min.objective != Objective::Minimize || max.objective != Objective::Maximize {
        return Err(QuboError::Usage("expected a minimization and a maximization result".into()));
    }
    for r in [min, max] {
        if r.best_config.len() != n {
            return Err(QuboError::Usage(format!(
                "result has {} sites but the instance has {n}",
                r.best_config.len()
            )));
        }
        let e = energy(j, &r.best_config)?;
        if (e - r.best_energy).abs() > 1e-9 * (1.0 + e.abs()) {
            return Err(QuboError::Usage("result energy does not match this instance".into()));
        }
    }
    let nf = n as f64;
    Ok(OptimumStats {
        n,
        m_min: -min.best_energy / nf,
        m_max: max.best_energy / nf,
        alpha_min: min.best_config.ones_fraction(),
        alpha_max: max.best_config.ones_fraction(),
    })
}

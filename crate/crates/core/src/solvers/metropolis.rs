//! Single-site Metropolis baseline.

use crate::energy::{energy, flip_delta_raw, Configuration};
use crate::error::{QuboError, Result};
use crate::instance::CouplingMatrix;
use crate::rng::SiteStream;

use super::{Objective, SolveResult};

/// Metropolis search from a Bernoulli(1/2) start drawn from `seed`.
pub fn metropolis_solve(
    j: &CouplingMatrix,
    beta: f64,
    sweeps: usize,
    seed: u64,
    objective: Objective,
) -> Result<SolveResult> {
    let stream = SiteStream::new(seed);
    let start: Vec<bool> = (0..j.n()).map(|i| stream.initial_bit(i as u64)).collect();
    metropolis_solve_from(j, &Configuration::from_bools(&start), beta, sweeps, seed, objective)
}

/// Metropolis search from a given start.
///
/// Each sweep proposes flips of sites `0..n` in order; site `i` of sweep `t`
/// uses the counter draw `(seed, t, i)`. A flip with oriented energy change
/// `Δ` is accepted with probability `min(1, e^{-βΔ})`.
pub fn metropolis_solve_from(
    j: &CouplingMatrix,
    start: &Configuration,
    beta: f64,
    sweeps: usize,
    seed: u64,
    objective: Objective,
) -> Result<SolveResult> {
    if !(beta > 0.0) || beta.is_nan() {
        return Err(QuboError::Parameter(format!("beta must be positive, got {beta}")));
    }
    if start.len() != j.n() {
        return Err(QuboError::Shape {
            expected: j.n(),
            got: start.len(),
        });
    }
    let sym = j.symmetrize();
    let n = sym.n();
    let w = sym.w();
    let sign = objective.sign();
    let diag: Vec<f64> = (0..n).map(|i| sym.diag(i)).collect();
    let stream = SiteStream::new(seed);

    let mut eta = start.to_bools();
    let mut raw = vec![0.0; n];
    for i in start.ones_indices() {
        sym.add_row(i, &mut raw);
    }
    let mut e_raw: f64 = eta.iter().zip(&raw).filter(|(b, _)| **b).map(|(_, f)| *f).sum();

    let mut best = sign * w * e_raw;
    let mut best_eta = eta.clone();
    let mut at_best = true;
    let mut sweeps_to_best = 0;

    for t in 0..sweeps {
        for i in 0..n {
            let d_raw = flip_delta_raw(raw[i], diag[i], eta[i]);
            let d = sign * w * d_raw;
            let accept = d <= 0.0 || stream.uniform(t as u64, i as u64) < (-beta * d).exp();
            if !accept {
                continue;
            }
            // leaving the best configuration uphill: snapshot it first
            if at_best && d > 0.0 {
                best_eta.copy_from_slice(&eta);
                at_best = false;
            }
            e_raw += d_raw;
            if eta[i] {
                sym.sub_row(i, &mut raw);
            } else {
                sym.add_row(i, &mut raw);
            }
            eta[i] = !eta[i];
            let e = sign * w * e_raw;
            if e < best {
                best = e;
                at_best = true;
                sweeps_to_best = t + 1;
            } else if at_best && d != 0.0 {
                best_eta.copy_from_slice(&eta);
                at_best = false;
            }
        }
    }
    if at_best {
        best_eta.copy_from_slice(&eta);
    }
    let best_config = Configuration::from_bools(&best_eta);
    Ok(SolveResult {
        best_energy: energy(j, &best_config)?,
        best_config,
        objective,
        trajectory: None,
        sweeps_to_best,
    })
}

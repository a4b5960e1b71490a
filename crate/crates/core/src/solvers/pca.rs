//! Probabilistic cellular automaton sampler.
//!
//! The chain lives on pairs `(η, τ)` with pair Hamiltonian
//!
//! ```text
//! H(η, τ) = β Σ_i h_i(η) τ_i + q Σ_i [η_i (1 - τ_i) + τ_i (1 - η_i)]
//! ```
//!
//! where `h_i(η) = W (J̃ η)_i`. For standard couplings `W = 1/√N`, so this is
//! the usual `N^{-1/2}` field; using `W` keeps `H(η, η) = β H(η)` for diluted
//! and benchmark normalizations too. Given `η` every `τ_i` is independent:
//!
//! ```text
//! P(τ_i = 1) ∝ exp(-β h_i - q (1 - η_i)),   P(τ_i = 0) ∝ exp(-q η_i)
//! ```
//!
//! Site `i` in sweep `t` consumes the counter draw `(seed, t, i)`, so a sweep
//! can be evaluated in any order (or in parallel) with the same outcome.

use crate::energy::{energy, flip_delta_raw, Configuration};
use crate::error::{QuboError, Result};
use crate::instance::CouplingMatrix;
use crate::par;
use crate::rng::{mix64, SiteStream};

use super::{Objective, PcaParams, SolveResult, TrajectoryPoint};

/// Sweeps between exact recomputations of fields and energy.
const REFRESH_EVERY: usize = 512;

/// `P(τ_i = 1 | η)` for effective field `beta_h = β h_i(η)`.
#[inline]
pub fn transition_probability_one(beta_h: f64, eta_i: bool, q: f64) -> f64 {
    // log-odds of τ_i = 1 against τ_i = 0
    let a = if eta_i { q - beta_h } else { -q - beta_h };
    1.0 / (1.0 + (-a).exp())
}

/// One synchronous PCA update from `eta` at `(beta, q)`, using the draws of `sweep`.
pub fn pca_step(
    j_sym: &CouplingMatrix,
    eta: &Configuration,
    beta: f64,
    q: f64,
    seed: u64,
    sweep: u64,
) -> Result<Configuration> {
    if !j_sym.is_symmetric() {
        return Err(QuboError::Usage("the PCA step needs a symmetrized coupling matrix".into()));
    }
    if eta.len() != j_sym.n() {
        return Err(QuboError::Shape {
            expected: j_sym.n(),
            got: eta.len(),
        });
    }
    let n = j_sym.n();
    let mut raw = vec![0.0; n];
    for i in eta.ones_indices() {
        j_sym.add_row(i, &mut raw);
    }
    let stream = SiteStream::new(seed);
    let w = j_sym.w();
    let mut tau = Configuration::zeros(n);
    for (i, f) in raw.iter().enumerate() {
        let p = transition_probability_one(beta * w * f, eta.get(i), q);
        if stream.uniform(sweep, i as u64) < p {
            tau.set(i, true);
        }
    }
    Ok(tau)
}

/// Working state of one replica. Energies and fields are kept unnormalized
/// (`raw = J̃ η`, `e_raw = ηᵀ J̃ η`); the objective sign enters only through
/// the effective field.
struct Chain<'a> {
    j: &'a CouplingMatrix,
    diag: Vec<f64>,
    eta: Vec<bool>,
    raw: Vec<f64>,
    e_raw: f64,
    ones: usize,
}

impl<'a> Chain<'a> {
    fn new(j: &'a CouplingMatrix, eta: Vec<bool>) -> Self {
        let n = j.n();
        let diag = (0..n).map(|i| j.diag(i)).collect();
        let mut c = Chain {
            j,
            diag,
            eta,
            raw: vec![0.0; n],
            e_raw: 0.0,
            ones: 0,
        };
        c.refresh();
        c
    }

    fn refresh(&mut self) {
        self.raw.iter_mut().for_each(|v| *v = 0.0);
        self.ones = 0;
        for (i, &b) in self.eta.iter().enumerate() {
            if b {
                self.j.add_row(i, &mut self.raw);
                self.ones += 1;
            }
        }
        self.e_raw = self
            .eta
            .iter()
            .zip(&self.raw)
            .filter(|(b, _)| **b)
            .map(|(_, f)| *f)
            .sum();
    }

    #[inline]
    fn flip(&mut self, i: usize) {
        let one = self.eta[i];
        self.e_raw += flip_delta_raw(self.raw[i], self.diag[i], one);
        if one {
            self.j.sub_row(i, &mut self.raw);
            self.ones -= 1;
        } else {
            self.j.add_row(i, &mut self.raw);
            self.ones += 1;
        }
        self.eta[i] = !one;
    }

    fn to_config(&self) -> Configuration {
        Configuration::from_bools(&self.eta)
    }
}

/// Runs one replica on a symmetrized matrix; returns the best diagonal configuration.
fn run_chain(
    j_sym: &CouplingMatrix,
    params: &PcaParams,
    objective: Objective,
    record: bool,
) -> (Configuration, usize, Option<Vec<TrajectoryPoint>>) {
    let n = j_sym.n();
    let stream = SiteStream::new(params.seed);
    let sign = objective.sign();
    let w = j_sym.w();
    let init: Vec<bool> = (0..n).map(|i| stream.initial_bit(i as u64)).collect();
    let mut chain = Chain::new(j_sym, init);

    // oriented energy: lower is better for both objectives
    let oriented = |e_raw: f64| sign * w * e_raw;
    let mut best = oriented(chain.e_raw);
    let mut best_config = chain.to_config();
    let mut sweeps_to_best = 0;
    let mut trajectory = record.then(|| Vec::with_capacity(params.sweeps));
    let mut changed = Vec::with_capacity(n);

    for t in 0..params.sweeps {
        let (beta, q) = params.at_sweep(t);
        let scale = beta * w * sign;
        changed.clear();
        for i in 0..n {
            let p = transition_probability_one(scale * chain.raw[i], chain.eta[i], q);
            let tau = stream.uniform(t as u64, i as u64) < p;
            if tau != chain.eta[i] {
                changed.push(i);
            }
        }
        // apply τ: flip the changed sites, or rebuild when most of the ones moved
        if changed.len() > chain.ones.max(n / 8) || (t + 1) % REFRESH_EVERY == 0 {
            for &i in &changed {
                chain.eta[i] = !chain.eta[i];
            }
            chain.refresh();
        } else {
            for &i in &changed {
                chain.flip(i);
            }
        }
        let e = oriented(chain.e_raw);
        if e < best {
            best = e;
            best_config = chain.to_config();
            sweeps_to_best = t + 1;
        }
        if let Some(tr) = trajectory.as_mut() {
            tr.push(TrajectoryPoint {
                energy: w * chain.e_raw,
                changed: changed.len(),
                best_energy: sign * best,
            });
        }
    }
    (best_config, sweeps_to_best, trajectory)
}

fn finish(
    j_eval: &CouplingMatrix,
    objective: Objective,
    (best_config, sweeps_to_best, trajectory): (Configuration, usize, Option<Vec<TrajectoryPoint>>),
) -> SolveResult {
    let best_energy = energy(j_eval, &best_config).expect("dimensions checked");
    SolveResult {
        best_energy,
        best_config,
        objective,
        trajectory,
        sweeps_to_best,
    }
}

/// PCA search on `j` (symmetrized internally). Deterministic in `params.seed`.
pub fn pca_solve(j: &CouplingMatrix, params: &PcaParams, objective: Objective) -> Result<SolveResult> {
    params.validate()?;
    let sym = j.symmetrize();
    Ok(finish(j, objective, run_chain(&sym, params, objective, false)))
}

/// PCA search on an already symmetrized matrix, optionally recording the trajectory.
/// Energies are evaluated on `j_sym`.
pub fn pca_solve_symmetric(
    j_sym: &CouplingMatrix,
    params: &PcaParams,
    objective: Objective,
    record_trajectory: bool,
) -> Result<SolveResult> {
    if !j_sym.is_symmetric() {
        return Err(QuboError::Usage("expected a symmetrized coupling matrix".into()));
    }
    params.validate()?;
    Ok(finish(
        j_sym,
        objective,
        run_chain(j_sym, params, objective, record_trajectory),
    ))
}

/// Independent replicas sharing one symmetrized matrix; element `k` equals
/// `pca_solve(j, &params_list[k], objective)`.
pub fn pca_solve_batch(
    j: &CouplingMatrix,
    params_list: &[PcaParams],
    objective: Objective,
) -> Result<Vec<SolveResult>> {
    check_batch(params_list)?;
    let sym = j.symmetrize();
    Ok(par::map_slice(params_list, |p| {
        finish(j, objective, run_chain(&sym, p, objective, false))
    }))
}

/// Sequential reference for [`pca_solve_batch`].
pub fn pca_solve_batch_seq(
    j: &CouplingMatrix,
    params_list: &[PcaParams],
    objective: Objective,
) -> Result<Vec<SolveResult>> {
    check_batch(params_list)?;
    let sym = j.symmetrize();
    Ok(params_list
        .iter()
        .map(|p| finish(j, objective, run_chain(&sym, p, objective, false)))
        .collect())
}

fn check_batch(params_list: &[PcaParams]) -> Result<()> {
    if params_list.is_empty() {
        return Err(QuboError::Parameter("empty parameter list".into()));
    }
    params_list.iter().try_for_each(PcaParams::validate)
}

/// Best result over a list of runs on a symmetrized matrix (first wins ties).
/// Runs sequentially: callers parallelize over instances.
pub fn best_over_grid(
    j_sym: &CouplingMatrix,
    params_list: &[PcaParams],
    objective: Objective,
) -> Result<SolveResult> {
    check_batch(params_list)?;
    if !j_sym.is_symmetric() {
        return Err(QuboError::Usage("expected a symmetrized coupling matrix".into()));
    }
    let mut best: Option<SolveResult> = None;
    for p in params_list {
        let r = finish(j_sym, objective, run_chain(j_sym, p, objective, false));
        if best
            .as_ref()
            .is_none_or(|b| objective.improves(r.best_energy, b.best_energy))
        {
            best = Some(r);
        }
    }
    Ok(best.expect("non-empty grid"))
}

/// A set of `(β, q)` pairs run for the same number of sweeps; the best result
/// over the set is reported.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaGrid {
    pub pairs: Vec<(f64, f64)>,
    pub sweeps: usize,
    /// When set, β ramps linearly from `β` to `factor · β` over each run.
    pub beta_ramp_factor: Option<f64>,
}

impl PcaGrid {
    /// `(β, q) ∈ {1, 2, 4} × {0.5, 1, 2}`.
    pub fn default_with(sweeps: usize) -> Self {
        let mut pairs = Vec::with_capacity(9);
        for beta in [1.0, 2.0, 4.0] {
            for q in [0.5, 1.0, 2.0] {
                pairs.push((beta, q));
            }
        }
        PcaGrid {
            pairs,
            sweeps,
            beta_ramp_factor: None,
        }
    }

    pub fn with_ramp(mut self, factor: f64) -> Self {
        self.beta_ramp_factor = Some(factor);
        self
    }

    /// One parameter set per grid point; point `k` gets a seed derived from `(seed, k)`.
    pub fn params(&self, seed: u64) -> Vec<PcaParams> {
        self.pairs
            .iter()
            .enumerate()
            .map(|(k, &(beta, q))| {
                let p = PcaParams::new(beta, q, self.sweeps, mix64(seed ^ mix64(k as u64 + 1)));
                match self.beta_ramp_factor {
                    Some(f) => p.with_beta_ramp(beta, beta * f),
                    None => p,
                }
            })
            .collect()
    }
}

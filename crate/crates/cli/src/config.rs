//! Flat `key = value` experiment configuration.
//!
//! One assignment per line, `#` starts a comment, lists are comma separated.
//! Unknown keys are rejected so typos do not silently fall back to defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use randqubo::analysis::experiments::SolverConfig;
use randqubo::solvers::PcaGrid;
use randqubo::CouplingDistribution;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    /// Mean per-particle optimum and ones-fraction per size.
    Optimum,
    Blocks,
    Ordering,
    Concentration,
    Universality,
}

impl FromStr for Kind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "optimum" => Kind::Optimum,
            "blocks" => Kind::Blocks,
            "ordering" => Kind::Ordering,
            "concentration" => Kind::Concentration,
            "universality" => Kind::Universality,
            _ => bail!("unknown experiment kind '{s}'"),
        })
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Optimum => "optimum",
            Kind::Blocks => "blocks",
            Kind::Ordering => "ordering",
            Kind::Concentration => "concentration",
            Kind::Universality => "universality",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub name: String,
    pub sizes: Vec<usize>,
    pub replicas: usize,
    /// Every distribution is run at every size and δ.
    pub dists: Vec<CouplingDistribution>,
    /// Empty means undiluted.
    pub deltas: Vec<f64>,
    pub pairs: Vec<(f64, f64)>,
    pub sweeps: usize,
    pub ramp: Option<f64>,
    pub zero_diagonal: bool,
    pub bins: usize,
    pub seed_base: u64,
}

const KEYS: [&str; 13] = [
    "kind", "name", "sizes", "replicas", "dist", "dists", "delta", "grid", "sweeps", "ramp", "zero_diagonal", "bins",
    "seed_base",
];

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", no + 1))?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                bail!("line {}: unknown key '{k}'", no + 1);
            }
            if map.insert(k.to_string(), v.trim().to_string()).is_some() {
                bail!("line {}: duplicate key '{k}'", no + 1);
            }
        }
        let get = |k: &str| map.get(k).map(String::as_str);

        let kind: Kind = get("kind").ok_or_else(|| anyhow!("missing key 'kind'"))?.parse()?;
        let sizes = list(get("sizes").ok_or_else(|| anyhow!("missing key 'sizes'"))?, "sizes")?;
        if sizes.is_empty() || sizes.contains(&0) {
            bail!("sizes must be positive");
        }
        let replicas = scalar(get("replicas").unwrap_or("100"), "replicas")?;
        if replicas == 0 {
            bail!("replicas must be positive");
        }
        let dist_text = match (get("dist"), get("dists")) {
            (Some(_), Some(_)) => bail!("give either 'dist' or 'dists', not both"),
            (Some(d), None) | (None, Some(d)) => d,
            (None, None) => "gaussian",
        };
        let dists: Vec<CouplingDistribution> = dist_text
            .split(',')
            .map(|d| d.trim().parse().map_err(anyhow::Error::from))
            .collect::<Result<_>>()?;
        let deltas = match get("delta") {
            Some(d) => list(d, "delta")?,
            None => Vec::new(),
        };
        for &d in &deltas {
            if dists.iter().any(|x| matches!(x, CouplingDistribution::Diluted { .. })) {
                bail!("'delta' cannot be combined with an already diluted distribution");
            }
            CouplingDistribution::diluted(CouplingDistribution::StandardGaussian, d).validate()?;
        }
        let pairs = match get("grid") {
            None | Some("default") => PcaGrid::default_with(1).pairs,
            Some(g) => parse_grid(g)?,
        };
        let sweeps = scalar(get("sweeps").unwrap_or("1000"), "sweeps")?;
        let ramp = match get("ramp") {
            None | Some("none") => None,
            Some(r) => Some(scalar::<f64>(r, "ramp")?),
        };
        let zero_diagonal = match get("zero_diagonal") {
            None => false,
            Some(v) => scalar(v, "zero_diagonal")?,
        };
        let bins = scalar(get("bins").unwrap_or("64"), "bins")?;
        let seed_base = scalar(get("seed_base").unwrap_or("0"), "seed_base")?;
        let name = get("name").map(str::to_string).unwrap_or_else(|| kind.to_string());
        if name.is_empty() || name.contains(['/', '\\', ' ']) {
            bail!("name '{name}' must be a plain file stem");
        }
        if kind == Kind::Universality && dists.len() < 2 {
            bail!("universality needs at least two distributions in 'dists'");
        }
        if kind == Kind::Concentration && replicas < 30 {
            bail!("concentration needs at least 30 replicas");
        }

        let cfg = ExperimentConfig {
            kind,
            name,
            sizes,
            replicas,
            dists,
            deltas,
            pairs,
            sweeps,
            ramp,
            zero_diagonal,
            bins,
            seed_base,
        };
        for p in cfg.solver().grid.params(0) {
            p.validate()?;
        }
        Ok(cfg)
    }

    pub fn solver(&self) -> SolverConfig {
        let mut grid = PcaGrid {
            pairs: self.pairs.clone(),
            sweeps: self.sweeps,
            beta_ramp_factor: None,
        };
        if let Some(f) = self.ramp {
            grid = grid.with_ramp(f);
        }
        SolverConfig {
            grid,
            zero_diagonal: self.zero_diagonal,
        }
    }

    /// Every `(distribution, δ)` combination, in config order.
    pub fn units(&self) -> Vec<(CouplingDistribution, Option<f64>)> {
        let mut out = Vec::new();
        for d in &self.dists {
            if self.deltas.is_empty() {
                out.push((d.clone(), None));
            }
            for &delta in &self.deltas {
                out.push((CouplingDistribution::diluted(d.clone(), delta), Some(delta)));
            }
        }
        out
    }
}

/// `β:q` pairs separated by commas, e.g. `1:0.5,2:1`.
pub fn parse_grid(text: &str) -> Result<Vec<(f64, f64)>> {
    text.split(',')
        .map(|pair| {
            let (b, q) = pair
                .trim()
                .split_once(':')
                .ok_or_else(|| anyhow!("grid entry '{pair}' is not beta:q"))?;
            Ok((scalar(b, "beta")?, scalar(q, "q")?))
        })
        .collect()
}

fn scalar<T: FromStr>(v: &str, key: &str) -> Result<T> {
    v.trim().parse().map_err(|_| anyhow!("bad value '{v}' for '{key}'"))
}

fn list<T: FromStr>(v: &str, key: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(|x| scalar(x, key))
        .collect::<Result<_>>()
        .with_context(|| format!("parsing list '{key}'"))
}

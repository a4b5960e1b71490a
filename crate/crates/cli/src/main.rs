//! `randqubo`: generate random QUBO instances, solve them, and run replica
//! experiments.

mod config;
mod experiment;

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use randqubo::analysis::experiments::objective_seed;
use randqubo::bench_io::{
    benchmark_records, emit_results, fmt_sig6, m_from_best_known, parse_instance, write_instance, ResultRecord,
    BENCHMARK_VARIANCE, P_SERIES,
};
use randqubo::energy::MAX_ENUMERATION_N;
use randqubo::instance::{generate, normalization_constant};
use randqubo::solvers::{best_over_grid, brute_force, metropolis_solve, PcaGrid};
use randqubo::{CouplingDistribution, CouplingMatrix, Objective, SolveResult};

use crate::config::{parse_grid, ExperimentConfig};

#[derive(Parser, Debug)]
#[command(name = "randqubo", version, about = "Random QUBO instances, solvers and replica experiments")]
struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "RANDQUBO_THREADS", default_value_t = 0)]
    threads: usize,
    /// Seed for generate/solve; overrides `seed_base` in experiment configs.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Write 0 in the wall_ms column so reruns produce identical files.
    #[arg(long, global = true)]
    no_timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a random instance and write it with a `.meta` sidecar.
    Generate(GenerateArgs),
    /// Solve an instance file.
    Solve(SolveArgs),
    /// Run a replica experiment described by a key = value config file.
    Experiment {
        config: PathBuf,
    },
    /// Print the p-series benchmark table, optionally solving one benchmark file.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// gaussian, exponential, uniform:LO:HI, diluted:DELTA[:INNER] or zero.
    #[arg(long, default_value = "gaussian")]
    dist: String,
    /// Dilute the distribution with keep probability N^(delta-2).
    #[arg(long)]
    delta: Option<f64>,
    /// File name inside the output directory.
    #[arg(long)]
    file: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SolverKind {
    Pca,
    Metropolis,
    Brute,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ObjectiveArg {
    Min,
    Max,
    Both,
}

#[derive(Args, Debug)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, value_enum, default_value_t = SolverKind::Pca)]
    solver: SolverKind,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Both)]
    objective: ObjectiveArg,
    #[arg(long, default_value_t = 2000)]
    sweeps: usize,
    /// PCA grid: `default` or `beta:q` pairs, e.g. `1:1,2:1,4:2`.
    #[arg(long, default_value = "default")]
    grid: String,
    /// Ramp β linearly to this multiple of its start value.
    #[arg(long)]
    ramp: Option<f64>,
    /// Metropolis inverse temperature.
    #[arg(long, default_value_t = 4.0)]
    beta: f64,
    /// Normalization W; otherwise taken from the sidecar, then 1/sqrt(N).
    #[arg(long)]
    w: Option<f64>,
    /// Use the benchmark normalization for entries uniform on [-100, 100] at density RHO.
    #[arg(long, conflicts_with = "w")]
    benchmark_rho: Option<f64>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Benchmark instance to solve for its maximum.
    #[arg(long, requires = "rho")]
    instance: Option<PathBuf>,
    /// Density used for the normalization.
    #[arg(long)]
    rho: Option<f64>,
    /// Best known maximum, for the gap column.
    #[arg(long)]
    best_known: Option<i64>,
    #[arg(long, default_value_t = 1000)]
    sweeps: usize,
}

fn main() {
    let cli = Cli::parse();
    let threads = cli.threads;
    if let Err(e) = randqubo::par::with_threads(threads, || run(&cli)) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(a) => cmd_generate(cli, a),
        Command::Solve(a) => cmd_solve(cli, a),
        Command::Experiment { config } => {
            let text = fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
            let mut cfg = ExperimentConfig::parse(&text).with_context(|| format!("in {}", config.display()))?;
            if let Some(s) = cli.seed {
                cfg.seed_base = s;
            }
            experiment::run(&cfg, &cli.out, !cli.no_timing)
        }
        Command::Bench(a) => cmd_bench(cli, a),
    }
}

/// Key = value pairs written next to a generated instance.
#[derive(Debug, Default, PartialEq)]
struct Sidecar {
    n: usize,
    dist: String,
    delta: Option<f64>,
    seed: u64,
    w: f64,
    density: f64,
}

impl Sidecar {
    fn path(instance: &Path) -> PathBuf {
        let mut s = instance.as_os_str().to_owned();
        s.push(".meta");
        PathBuf::from(s)
    }

    fn line(&self) -> String {
        format!(
            "n={} dist={} delta={} seed={} w={} density={}",
            self.n,
            self.dist,
            self.delta.map(|d| d.to_string()).unwrap_or_default(),
            self.seed,
            self.w,
            self.density
        )
    }

    fn parse(line: &str) -> Result<Self> {
        let mut s = Sidecar::default();
        for field in line.split_whitespace() {
            let (k, v) = field.split_once('=').context("sidecar field without '='")?;
            match k {
                "n" => s.n = v.parse()?,
                "dist" => s.dist = v.to_string(),
                "delta" if !v.is_empty() => s.delta = Some(v.parse()?),
                "delta" => {}
                "seed" => s.seed = v.parse()?,
                "w" => s.w = v.parse()?,
                "density" => s.density = v.parse()?,
                _ => bail!("unknown sidecar key '{k}'"),
            }
        }
        if s.w <= 0.0 || !s.w.is_finite() {
            bail!("sidecar has no positive w");
        }
        Ok(s)
    }
}

fn cmd_generate(cli: &Cli, a: &GenerateArgs) -> Result<()> {
    let n = a.n as usize;
    let mut dist: CouplingDistribution = a.dist.parse()?;
    if let Some(delta) = a.delta {
        if matches!(dist, CouplingDistribution::Diluted { .. }) {
            bail!("--delta given for an already diluted distribution");
        }
        dist = CouplingDistribution::diluted(dist, delta);
        dist.validate()?;
    }
    let delta = match &dist {
        CouplingDistribution::Diluted { delta, .. } => Some(*delta),
        _ => None,
    };
    let seed = cli.seed.unwrap_or(0);
    let j = generate(n, &dist, seed)?;
    let meta = Sidecar {
        n,
        dist: dist.to_string(),
        delta,
        seed,
        w: j.w(),
        density: j.realized_density(),
    };

    fs::create_dir_all(&cli.out)?;
    let file = a
        .file
        .clone()
        .unwrap_or_else(|| format!("instance_n{n}_{}_s{seed}.txt", dist.to_string().replace(':', "_")));
    let path = cli.out.join(file);
    let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
    write_instance(&j.symmetrize(), &mut w)?;
    w.flush()?;
    fs::write(Sidecar::path(&path), meta.line() + "\n")?;
    println!("{}", path.display());
    Ok(())
}

/// Instance with its normalization and sidecar (if any).
fn load_instance(path: &Path, w: Option<f64>, benchmark_rho: Option<f64>) -> Result<(CouplingMatrix, Option<Sidecar>)> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let j = parse_instance(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
    let meta_path = Sidecar::path(path);
    let meta = if meta_path.exists() {
        let line = fs::read_to_string(&meta_path)?;
        Some(Sidecar::parse(line.trim()).with_context(|| format!("reading {}", meta_path.display()))?)
    } else {
        None
    };
    let w = match (w, benchmark_rho, &meta) {
        (Some(w), _, _) => w,
        (None, Some(rho), _) => normalization_constant(j.n(), rho, BENCHMARK_VARIANCE)?,
        (None, None, Some(m)) => m.w,
        (None, None, None) => 1.0 / (j.n() as f64).sqrt(),
    };
    Ok((j.with_w(w)?, meta))
}

fn objectives(o: ObjectiveArg) -> Vec<Objective> {
    match o {
        ObjectiveArg::Min => vec![Objective::Minimize],
        ObjectiveArg::Max => vec![Objective::Maximize],
        ObjectiveArg::Both => vec![Objective::Minimize, Objective::Maximize],
    }
}

fn pca_grid(spec: &str, sweeps: usize, ramp: Option<f64>) -> Result<PcaGrid> {
    let mut grid = PcaGrid::default_with(sweeps);
    if spec != "default" {
        grid.pairs = parse_grid(spec)?;
    }
    if let Some(f) = ramp {
        grid = grid.with_ramp(f);
    }
    Ok(grid)
}

fn solve_one(j_sym: &CouplingMatrix, a: &SolveArgs, objective: Objective, seed: u64) -> Result<SolveResult> {
    Ok(match a.solver {
        SolverKind::Brute => {
            if j_sym.n() > MAX_ENUMERATION_N {
                bail!("brute force is limited to n <= {MAX_ENUMERATION_N}, instance has n = {}", j_sym.n());
            }
            brute_force(j_sym, objective)?
        }
        SolverKind::Metropolis => metropolis_solve(j_sym, a.beta, a.sweeps, objective_seed(seed, objective), objective)?,
        SolverKind::Pca => {
            let grid = pca_grid(&a.grid, a.sweeps, a.ramp)?;
            best_over_grid(j_sym, &grid.params(objective_seed(seed, objective)), objective)?
        }
    })
}

fn cmd_solve(cli: &Cli, a: &SolveArgs) -> Result<()> {
    let (j, meta) = load_instance(&a.instance, a.w, a.benchmark_rho)?;
    let j = j.symmetrize();
    let n = j.n();
    let seed = cli.seed.unwrap_or(0);
    let solver = format!("{:?}", a.solver).to_lowercase();
    fs::create_dir_all(&cli.out)?;

    let mut records = Vec::new();
    for objective in objectives(a.objective) {
        let start = Instant::now();
        let r = solve_one(&j, a, objective, seed)?;
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        let m = objective.sign() * -r.best_energy / n as f64;
        records.push(ResultRecord {
            experiment: format!("solve-{solver}"),
            n,
            delta: meta.as_ref().and_then(|m| m.delta),
            dist: meta.as_ref().map(|m| m.dist.clone()).unwrap_or_else(|| "file".into()),
            seed,
            objective: objective.as_str().into(),
            m,
            alpha: r.best_config.ones_fraction(),
            sweeps_to_best: r.sweeps_to_best,
            wall_ms: if cli.no_timing { 0.0 } else { wall_ms },
        });
        let bits: String = r.best_config.iter().map(|b| if b { '1' } else { '0' }).collect();
        let best_path = cli.out.join(format!("best_{}.txt", objective.as_str()));
        fs::write(&best_path, format!("energy={} m={}\n{bits}\n", r.best_energy, fmt_sig6(m)))?;
        println!("{} energy={} m={} alpha={}", objective.as_str(), r.best_energy, fmt_sig6(m), fmt_sig6(r.best_config.ones_fraction()));
    }
    emit_results(&records, BufWriter::new(File::create(cli.out.join("solve.csv"))?))?;
    Ok(())
}

fn cmd_bench(cli: &Cli, a: &BenchArgs) -> Result<()> {
    fs::create_dir_all(&cli.out)?;
    let path = cli.out.join("benchmarks.csv");
    let mut table = String::from("instance,n,rho,best_known,m,m_reported\n");
    for (rec, row) in benchmark_records().iter().zip(P_SERIES.iter()) {
        table += &format!(
            "{},{},{},{},{:.3},{}\n",
            rec.instance_id, rec.n, rec.rho, rec.best_known, rec.m_n, row.4
        );
    }
    fs::write(&path, &table)?;
    io::stdout().write_all(table.as_bytes())?;

    if let (Some(instance), Some(rho)) = (&a.instance, a.rho) {
        let (j, _) = load_instance(instance, None, Some(rho))?;
        let j = j.symmetrize();
        let grid = PcaGrid::default_with(a.sweeps).with_ramp(2.0);
        let seed = cli.seed.unwrap_or(0);
        let r = best_over_grid(&j, &grid.params(objective_seed(seed, Objective::Maximize)), Objective::Maximize)?;
        let found = r.best_energy / j.w();
        let m = r.best_energy / j.n() as f64;
        print!("{}: found max {} (m = {})", instance.display(), found.round(), fmt_sig6(m));
        if let Some(best) = a.best_known {
            let target = m_from_best_known(j.n(), rho, best)?;
            print!(", best known m = {}, gap = {}", fmt_sig6(target), fmt_sig6(target - m));
        }
        println!();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_round_trip() {
        let s = Sidecar {
            n: 4000,
            dist: "diluted:1.3:gaussian".into(),
            delta: Some(1.3),
            seed: 7,
            w: 0.1,
            density: 0.003,
        };
        assert_eq!(Sidecar::parse(&s.line()).unwrap(), s);
        let dense = Sidecar {
            delta: None,
            ..s
        };
        assert_eq!(Sidecar::parse(&dense.line()).unwrap(), dense);
        assert!(Sidecar::parse("n=3 w=0").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}

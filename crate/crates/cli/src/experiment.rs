//! `experiment` subcommand: replica sweeps with a resumable completion journal.
//!
//! Every finished replica is appended to `<out>/<name>.journal` as soon as it
//! completes, so an interrupted run keeps its work and a rerun only computes
//! the missing replicas. Reports are rebuilt from the journal at the end.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use randqubo::analysis::experiments::{replica_instance, run_replica, structure_of, ReplicaOutcome};
use randqubo::analysis::{BlockAccumulator, OptimumStats, OrderingAccumulator, RunningStats};
use randqubo::bench_io::{emit_results, fmt_sig6, ResultRecord};
use randqubo::rng::fnv1a;
use randqubo::{par, Configuration, CouplingDistribution};

use crate::config::{ExperimentConfig, Kind};

/// Journal key: (unit index, n, replica).
type Key = (usize, usize, u64);

struct Unit {
    index: usize,
    dist: CouplingDistribution,
    /// Undiluted distribution name, as reported in the CSVs.
    base: String,
    delta: Option<f64>,
}

impl Unit {
    fn seed_name(&self, cfg: &ExperimentConfig) -> String {
        format!("{}/{}/{}", cfg.name, self.index, self.dist)
    }
}

fn units(cfg: &ExperimentConfig) -> Vec<Unit> {
    cfg.units()
        .into_iter()
        .enumerate()
        .map(|(index, (dist, delta))| {
            let base = match (&dist, delta) {
                (CouplingDistribution::Diluted { inner, .. }, Some(_)) => inner.to_string(),
                _ => dist.to_string(),
            };
            Unit {
                index,
                dist,
                base,
                delta,
            }
        })
        .collect()
}

/// Ties a journal to the settings that determine per-replica results. Sizes
/// and replica counts may change between runs; these may not.
fn fingerprint(cfg: &ExperimentConfig) -> String {
    let text = format!("{:?}|{:?}|{}", cfg.units(), cfg.solver(), cfg.seed_base);
    format!("{:016x}", fnv1a(text.as_bytes()))
}

fn journal_line(unit: usize, o: &ReplicaOutcome) -> String {
    let s = &o.stats;
    format!(
        "{unit}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        s.n,
        o.replica,
        o.seed,
        s.m_min,
        s.m_max,
        s.alpha_min,
        s.alpha_max,
        o.sweeps_to_best_min,
        o.sweeps_to_best_max,
        o.wall_ms,
        o.min_config.to_hex(),
        o.max_config.to_hex()
    )
}

fn parse_journal_line(line: &str) -> Result<(usize, ReplicaOutcome)> {
    let f: Vec<&str> = line.split('\t').collect();
    if f.len() != 13 {
        bail!("expected 13 fields, found {}", f.len());
    }
    let n: usize = f[1].parse()?;
    let stats = OptimumStats {
        n,
        m_min: f[4].parse()?,
        m_max: f[5].parse()?,
        alpha_min: f[6].parse()?,
        alpha_max: f[7].parse()?,
    };
    Ok((
        f[0].parse()?,
        ReplicaOutcome {
            replica: f[2].parse()?,
            seed: f[3].parse()?,
            stats,
            min_config: Configuration::from_hex(n, f[11])?,
            max_config: Configuration::from_hex(n, f[12])?,
            sweeps_to_best_min: f[8].parse()?,
            sweeps_to_best_max: f[9].parse()?,
            wall_ms: f[10].parse()?,
        },
    ))
}

/// Completed replicas from an existing journal, checked against `fp`.
fn load_journal(path: &Path, fp: &str) -> Result<BTreeMap<Key, ReplicaOutcome>> {
    let mut done = BTreeMap::new();
    if !path.exists() {
        return Ok(done);
    }
    let reader = BufReader::new(File::open(path)?);
    for (no, line) in reader.lines().enumerate() {
        let line = line?;
        if let Some(found) = line.strip_prefix("# fingerprint ") {
            if found.trim() != fp {
                bail!(
                    "{} was written with different settings; use another name or --out",
                    path.display()
                );
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        // a torn final line from an interrupted write is recomputed
        match parse_journal_line(&line) {
            Ok((unit, o)) => {
                done.insert((unit, o.stats.n, o.replica), o);
            }
            Err(e) => eprintln!("{}:{}: skipping unreadable entry ({e})", path.display(), no + 1),
        }
    }
    Ok(done)
}

pub fn run(cfg: &ExperimentConfig, out: &Path, timing: bool) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let journal_path = out.join(format!("{}.journal", cfg.name));
    let fp = fingerprint(cfg);
    let mut done = load_journal(&journal_path, &fp)?;
    let fresh = !journal_path.exists();
    let mut file = OpenOptions::new().create(true).append(true).open(&journal_path)?;
    if fresh {
        writeln!(file, "# fingerprint {fp}")?;
    } else if let Ok(text) = fs::read(&journal_path) {
        // finish a torn last line so appends start on a fresh one
        if text.last().is_some_and(|&b| b != b'\n') {
            writeln!(file)?;
        }
    }
    let journal = Mutex::new(file);

    let solver = cfg.solver();
    let units = units(cfg);
    let mut failures = Vec::new();
    for unit in &units {
        for &n in &cfg.sizes {
            let pending: Vec<u64> = (0..cfg.replicas as u64)
                .filter(|r| !done.contains_key(&(unit.index, n, *r)))
                .collect();
            if pending.is_empty() {
                continue;
            }
            eprintln!("{} n={n}: {} of {} replicas to run", unit.dist, pending.len(), cfg.replicas);
            let name = unit.seed_name(cfg);
            let results = par::map_slice(&pending, |&r| -> Result<ReplicaOutcome> {
                let (_, o) = run_replica(&name, &unit.dist, n, r, &solver, cfg.seed_base)?;
                let mut j = journal.lock().expect("journal lock");
                writeln!(j, "{}", journal_line(unit.index, &o))?;
                j.flush()?;
                Ok(o)
            });
            for (r, res) in pending.iter().zip(results) {
                match res {
                    Ok(o) => {
                        done.insert((unit.index, n, *r), o);
                    }
                    Err(e) => failures.push(format!("{} n={n} replica {r}: {e:#}", unit.dist)),
                }
            }
        }
    }
    if !failures.is_empty() {
        for f in &failures {
            eprintln!("failed: {f}");
        }
        bail!("{} replicas failed; completed ones are kept in {}", failures.len(), journal_path.display());
    }

    let written = report(cfg, &units, &done, out, timing)?;
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn outcomes<'a>(done: &'a BTreeMap<Key, ReplicaOutcome>, unit: &Unit, n: usize, replicas: usize) -> Vec<&'a ReplicaOutcome> {
    (0..replicas as u64).filter_map(|r| done.get(&(unit.index, n, r))).collect()
}

fn delta_col(d: Option<f64>) -> String {
    d.map(fmt_sig6).unwrap_or_default()
}

fn mean_se(s: &RunningStats) -> String {
    format!("{},{}", fmt_sig6(s.mean()), fmt_sig6(s.std_error()))
}

fn report(
    cfg: &ExperimentConfig,
    units: &[Unit],
    done: &BTreeMap<Key, ReplicaOutcome>,
    out: &Path,
    timing: bool,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();

    let mut records = Vec::new();
    for unit in units {
        for &n in &cfg.sizes {
            for o in outcomes(done, unit, n, cfg.replicas) {
                for (objective, m, alpha, stb) in [
                    ("min", o.stats.m_min, o.stats.alpha_min, o.sweeps_to_best_min),
                    ("max", o.stats.m_max, o.stats.alpha_max, o.sweeps_to_best_max),
                ] {
                    records.push(ResultRecord {
                        experiment: cfg.name.clone(),
                        n,
                        delta: unit.delta,
                        dist: unit.base.clone(),
                        seed: o.seed,
                        objective: objective.into(),
                        m,
                        alpha,
                        sweeps_to_best: stb,
                        wall_ms: if timing { o.wall_ms } else { 0.0 },
                    });
                }
            }
        }
    }
    let path = out.join(format!("{}_replicas.csv", cfg.name));
    emit_results(&records, BufWriter::new(File::create(&path)?))?;
    written.push(path);

    let path = out.join(format!("{}_summary.csv", cfg.name));
    let mut w = BufWriter::new(File::create(&path)?);
    writeln!(
        w,
        "dist,delta,n,replicas,m,m_se,alpha,alpha_se,m_min,m_min_se,m_max,m_max_se,\
         alpha_min,alpha_min_se,alpha_max,alpha_max_se,var_m_min,var_m_max,var_n_m_max"
    )?;
    for unit in units {
        for &n in &cfg.sizes {
            let os = outcomes(done, unit, n, cfg.replicas);
            let col = |f: &dyn Fn(&ReplicaOutcome) -> f64| -> RunningStats { os.iter().map(|o| f(o)).collect() };
            let (m, a) = (col(&|o| o.stats.m()), col(&|o| o.stats.alpha()));
            let (mmin, mmax) = (col(&|o| o.stats.m_min), col(&|o| o.stats.m_max));
            let (amin, amax) = (col(&|o| o.stats.alpha_min), col(&|o| o.stats.alpha_max));
            writeln!(
                w,
                "{},{},{n},{},{},{},{},{},{},{},{},{},{}",
                unit.base,
                delta_col(unit.delta),
                os.len(),
                mean_se(&m),
                mean_se(&a),
                mean_se(&mmin),
                mean_se(&mmax),
                mean_se(&amin),
                mean_se(&amax),
                fmt_sig6(mmin.variance()),
                fmt_sig6(mmax.variance()),
                fmt_sig6(mmax.variance() * (n as f64).powi(2)),
            )?;
        }
    }
    w.flush()?;
    written.push(path);

    match cfg.kind {
        Kind::Blocks | Kind::Ordering => written.push(structure_report(cfg, units, done, out)?),
        Kind::Universality => {
            let path = out.join(format!("{}_universality.csv", cfg.name));
            let mut w = BufWriter::new(File::create(&path)?);
            writeln!(w, "dist,delta,n,replicas,m,m_se,ci95_lo,ci95_hi")?;
            for unit in units {
                for &n in &cfg.sizes {
                    let m: RunningStats = outcomes(done, unit, n, cfg.replicas).iter().map(|o| o.stats.m()).collect();
                    let half = 1.96 * m.std_error();
                    writeln!(
                        w,
                        "{},{},{n},{},{},{},{}",
                        unit.base,
                        delta_col(unit.delta),
                        m.count(),
                        mean_se(&m),
                        fmt_sig6(m.mean() - half),
                        fmt_sig6(m.mean() + half)
                    )?;
                }
            }
            w.flush()?;
            written.push(path);
        }
        Kind::Optimum | Kind::Concentration => {}
    }
    Ok(written)
}

/// Block statistics or ordering curves, recomputed from regenerated instances
/// and the journaled optimizers.
fn structure_report(
    cfg: &ExperimentConfig,
    units: &[Unit],
    done: &BTreeMap<Key, ReplicaOutcome>,
    out: &Path,
) -> Result<PathBuf> {
    let solver = cfg.solver();
    let path = out.join(format!("{}_{}.csv", cfg.name, cfg.kind));
    let mut w = BufWriter::new(File::create(&path)?);
    if cfg.kind == Kind::Blocks {
        writeln!(w, "dist,delta,n,k,l,alpha_k,mu,sigma_tilde")?;
    } else {
        writeln!(w, "dist,delta,n,x,p_min,p_max,p_joint,ratio,ratio_se,samples")?;
    }
    let opt = |x: Option<f64>| x.map(fmt_sig6).unwrap_or_default();
    for unit in units {
        for &n in &cfg.sizes {
            let os = outcomes(done, unit, n, cfg.replicas);
            let name = unit.seed_name(cfg);
            let parts = par::map_slice(&os, |o| -> Result<(BlockAccumulator, OrderingAccumulator)> {
                let (_, j) = replica_instance(&name, &unit.dist, n, o.replica, &solver, cfg.seed_base)?;
                Ok(structure_of(&j, &o.min_config, &o.max_config, cfg.bins)?)
            });
            let mut blocks = BlockAccumulator::new();
            let mut ordering = OrderingAccumulator::new(cfg.bins)?;
            for p in parts {
                let (b, o) = p?;
                blocks.merge(&b);
                ordering.merge(&o)?;
            }
            let (dist, delta) = (&unit.base, delta_col(unit.delta));
            if cfg.kind == Kind::Blocks {
                let s = blocks.finalize();
                for k in 0..4 {
                    for l in 0..4 {
                        writeln!(
                            w,
                            "{dist},{delta},{n},{},{},{},{},{}",
                            k + 1,
                            l + 1,
                            fmt_sig6(s.alphas[k]),
                            opt(s.mu[k][l]),
                            opt(s.sigma_tilde[k][l])
                        )?;
                    }
                }
            } else {
                let c = ordering.finalize();
                for b in 0..c.ranks.len() {
                    writeln!(
                        w,
                        "{dist},{delta},{n},{},{},{},{},{},{},{}",
                        fmt_sig6(c.ranks[b]),
                        fmt_sig6(c.p_min[b]),
                        fmt_sig6(c.p_max[b]),
                        fmt_sig6(c.p_joint[b]),
                        fmt_sig6(c.ratio[b]),
                        fmt_sig6(c.ratio_se[b]),
                        c.samples[b]
                    )?;
                }
            }
        }
    }
    w.flush()?;
    Ok(path)
}

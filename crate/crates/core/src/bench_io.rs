//! Instance files, benchmark arithmetic and result tables.
//!
//! Instance format (UTF-8, `\n`-terminated):
//!
//! ```text
//! # comment lines and blank lines are ignored
//! N M
//! i j v      (M lines, 1-based, i <= j)
//! ```
//!
//! Each line defines `J_ij = J_ji = v`. Values are usually integers; any
//! decimal float is accepted and float matrices are written with
//! round-trip precision.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use crate::error::{QuboError, Result};
use crate::instance::{normalization_constant, CouplingMatrix, SPARSE_THRESHOLD};

/// Variance entering `W` for symmetric `[-100, 100]` integer benchmarks.
pub const BENCHMARK_VARIANCE: f64 = (201.0 * 201.0 - 1.0) / 6.0;

pub fn parse_instance<R: BufRead>(reader: R) -> Result<CouplingMatrix> {
    let mut header: Option<(usize, usize)> = None;
    let mut seen = HashSet::new();
    let mut triplets = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line_no = k + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = text.split_whitespace().collect();
        let perr = |msg: String| QuboError::Parse { line: line_no, msg };
        match header {
            None => {
                if fields.len() != 2 {
                    return Err(perr(format!("expected header 'N M', found '{text}'")));
                }
                let n: usize = fields[0].parse().map_err(|_| perr(format!("bad site count '{}'", fields[0])))?;
                let m: usize = fields[1].parse().map_err(|_| perr(format!("bad entry count '{}'", fields[1])))?;
                if n == 0 {
                    return Err(perr("site count must be positive".into()));
                }
                header = Some((n, m));
            }
            Some((n, _)) => {
                if fields.len() != 3 {
                    return Err(perr(format!("expected 'i j v', found '{text}'")));
                }
                let i: usize = fields[0].parse().map_err(|_| perr(format!("bad row '{}'", fields[0])))?;
                let j: usize = fields[1].parse().map_err(|_| perr(format!("bad column '{}'", fields[1])))?;
                let v: f64 = fields[2].parse().map_err(|_| perr(format!("bad value '{}'", fields[2])))?;
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(perr(format!("index ({i}, {j}) outside 1..={n}")));
                }
                if i > j {
                    return Err(QuboError::Format {
                        line: line_no,
                        msg: format!("entry ({i}, {j}) must have i <= j"),
                    });
                }
                if !seen.insert((i, j)) {
                    return Err(QuboError::Format {
                        line: line_no,
                        msg: format!("duplicate entry ({i}, {j})"),
                    });
                }
                triplets.push((i - 1, j - 1, v));
            }
        }
    }
    let (n, m) = header.ok_or(QuboError::Parse {
        line: 0,
        msg: "missing header".into(),
    })?;
    if triplets.len() != m {
        return Err(QuboError::Format {
            line: 0,
            msg: format!("header announces {m} entries, found {}", triplets.len()),
        });
    }
    let mut full = Vec::with_capacity(2 * triplets.len());
    for (i, j, v) in triplets {
        full.push((i, j, v));
        if i != j {
            full.push((j, i, v));
        }
    }
    let density = full.len() as f64 / (n as f64 * n as f64);
    if density >= SPARSE_THRESHOLD {
        let mut a = vec![0.0; n * n];
        for (i, j, v) in full {
            a[i * n + j] = v;
        }
        CouplingMatrix::from_dense(n, a, 1.0)
    } else {
        CouplingMatrix::from_triplets(n, full, 1.0, density.max(f64::MIN_POSITIVE))
    }
}

/// Writes the upper triangle of a symmetric matrix, sorted by `(i, j)`, zeros omitted.
pub fn write_instance<W: Write>(j: &CouplingMatrix, mut out: W) -> Result<()> {
    if !j.is_symmetric() {
        return Err(QuboError::Usage("only symmetric matrices can be written".into()));
    }
    let n = j.n();
    let mut lines = Vec::new();
    for i in 0..n {
        j.for_each_in_row(i, |c, v| {
            if c >= i && v != 0.0 {
                lines.push((i, c, v));
            }
        });
    }
    writeln!(out, "{} {}", n, lines.len())?;
    for (i, c, v) in lines {
        writeln!(out, "{} {} {}", i + 1, c + 1, v)?;
    }
    Ok(())
}

/// `m_N = √(6 / (ρ N (201² - 1))) · best_known / N`.
pub fn m_from_best_known(n: usize, rho: f64, best_known: i64) -> Result<f64> {
    if best_known < 0 {
        return Err(QuboError::Parameter(format!("best known value must be nonnegative, got {best_known}")));
    }
    let w = normalization_constant(n, rho, BENCHMARK_VARIANCE)?;
    Ok(w * best_known as f64 / n as f64)
}

/// A benchmark instance with its best-known maximum.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkRecord {
    pub instance_id: String,
    pub n: usize,
    pub rho: f64,
    pub best_known: i64,
    pub m_n: f64,
}

impl BenchmarkRecord {
    pub fn new(instance_id: &str, n: usize, rho: f64, best_known: i64) -> Result<Self> {
        Ok(BenchmarkRecord {
            instance_id: instance_id.to_string(),
            n,
            rho,
            best_known,
            m_n: m_from_best_known(n, rho, best_known)?,
        })
    }
}

/// `(id, best known, N, ρ, reported m_N)` of the p3000–p7000 uniform benchmarks.
pub const P_SERIES: [(&str, i64, usize, f64, f64); 21] = [
    ("p3000.1", 3931583, 3000, 0.5, 0.412),
    ("p3000.2", 5193073, 3000, 0.8, 0.431),
    ("p3000.3", 5111533, 3000, 0.8, 0.424),
    ("p3000.4", 5761822, 3000, 1.0, 0.427),
    ("p3000.5", 5675625, 3000, 1.0, 0.421),
    ("p4000.1", 6181830, 4000, 0.5, 0.421),
    ("p4000.2", 7801355, 4000, 0.8, 0.42),
    ("p4000.3", 7741685, 4000, 0.8, 0.417),
    ("p4000.4", 8711822, 4000, 1.0, 0.42),
    ("p4000.5", 8908979, 4000, 1.0, 0.429),
    ("p5000.1", 8559680, 5000, 0.5, 0.417),
    ("p5000.2", 10836019, 5000, 0.8, 0.418),
    ("p5000.3", 10489137, 5000, 0.8, 0.404),
    ("p5000.4", 12252318, 5000, 1.0, 0.422),
    ("p5000.5", 12731803, 5000, 1.0, 0.439),
    ("p6000.1", 11384976, 6000, 0.5, 0.422),
    ("p6000.2", 14333855, 6000, 0.8, 0.42),
    ("p6000.3", 16132915, 6000, 1.0, 0.423),
    ("p7000.1", 14478676, 7000, 0.5, 0.426),
    ("p7000.2", 18249948, 7000, 0.8, 0.425),
    ("p7000.3", 20446407, 7000, 1.0, 0.425),
];

pub fn benchmark_records() -> Vec<BenchmarkRecord> {
    P_SERIES
        .iter()
        .map(|(id, best, n, rho, _)| BenchmarkRecord::new(id, *n, *rho, *best).expect("valid table row"))
        .collect()
}

/// One row of the results table.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRecord {
    pub experiment: String,
    pub n: usize,
    /// Dilution exponent; `None` for dense instances.
    pub delta: Option<f64>,
    pub dist: String,
    pub seed: u64,
    pub objective: String,
    pub m: f64,
    pub alpha: f64,
    pub sweeps_to_best: usize,
    pub wall_ms: f64,
}

pub const RESULTS_HEADER: [&str; 10] = [
    "experiment",
    "n",
    "delta",
    "dist",
    "seed",
    "objective",
    "m",
    "alpha",
    "sweeps_to_best",
    "wall_ms",
];

/// Formats like C's `%.6g`: six significant digits, trailing zeros trimmed.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        trim_zeros(&s)
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Writes the results CSV: one row per record, then for every
/// `(experiment, n, delta, dist, objective)` group an `AGG` row (means) and an
/// `AGG_SE` row (standard errors of the means) in the `seed` column.
pub fn emit_results<W: Write>(records: &[ResultRecord], out: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    wtr.write_record(RESULTS_HEADER)?;
    let delta_str = |d: Option<f64>| d.map(fmt_sig6).unwrap_or_default();
    for r in records {
        wtr.write_record([
            r.experiment.clone(),
            r.n.to_string(),
            delta_str(r.delta),
            r.dist.clone(),
            r.seed.to_string(),
            r.objective.clone(),
            fmt_sig6(r.m),
            fmt_sig6(r.alpha),
            r.sweeps_to_best.to_string(),
            fmt_sig6(r.wall_ms),
        ])?;
    }
    // groups in first-appearance order
    let mut groups: Vec<(String, usize, String, String, String, Vec<&ResultRecord>)> = Vec::new();
    for r in records {
        let key = (r.experiment.clone(), r.n, delta_str(r.delta), r.dist.clone(), r.objective.clone());
        match groups
            .iter_mut()
            .find(|g| (g.0.as_str(), g.1, g.2.as_str(), g.3.as_str(), g.4.as_str()) == (key.0.as_str(), key.1, key.2.as_str(), key.3.as_str(), key.4.as_str()))
        {
            Some(g) => g.5.push(r),
            None => groups.push((key.0, key.1, key.2, key.3, key.4, vec![r])),
        }
    }
    for (experiment, n, delta, dist, objective, rows) in groups {
        let col = |f: &dyn Fn(&ResultRecord) -> f64| -> crate::analysis::RunningStats { rows.iter().map(|r| f(r)).collect() };
        let m = col(&|r| r.m);
        let a = col(&|r| r.alpha);
        let s = col(&|r| r.sweeps_to_best as f64);
        let t = col(&|r| r.wall_ms);
        for (tag, pick) in [
            ("AGG", &(|x: &crate::analysis::RunningStats| x.mean()) as &dyn Fn(&crate::analysis::RunningStats) -> f64),
            ("AGG_SE", &|x: &crate::analysis::RunningStats| x.std_error()),
        ] {
            wtr.write_record([
                experiment.clone(),
                n.to_string(),
                delta.clone(),
                dist.clone(),
                tag.to_string(),
                objective.clone(),
                fmt_sig6(pick(&m)),
                fmt_sig6(pick(&a)),
                fmt_sig6(pick(&s)),
                fmt_sig6(pick(&t)),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_simple() {
        let j = parse_instance("2 1\n1 2 -3\n".as_bytes()).unwrap();
        assert_eq!(j.to_dense(), vec![0.0, -3.0, -3.0, 0.0]);
        assert!(j.is_symmetric());
        assert_eq!(j.w(), 1.0);
    }

    #[test]
    fn parse_comments_and_diagonal() {
        let text = "# p-style\n\n3 2\n# row\n1 1 5\n2 3 -7\n";
        let j = parse_instance(text.as_bytes()).unwrap();
        assert_eq!(j.get(0, 0), 5.0);
        assert_eq!(j.get(2, 1), -7.0);
        assert_eq!(j.get(1, 2), -7.0);
    }

    #[test]
    fn parse_errors() {
        let cases: [(&str, fn(&QuboError) -> bool); 6] = [
            ("2 1\n1 x 3\n", |e| matches!(e, QuboError::Parse { line: 2, .. })),
            ("2 1\n2 1 3\n", |e| matches!(e, QuboError::Format { line: 2, .. })),
            ("3 2\n1 2 3\n1 2 4\n", |e| matches!(e, QuboError::Format { line: 3, .. })),
            ("2\n", |e| matches!(e, QuboError::Parse { line: 1, .. })),
            ("2 1\n1 3 1\n", |e| matches!(e, QuboError::Parse { line: 2, .. })),
            ("2 2\n1 2 1\n", |e| matches!(e, QuboError::Format { .. })),
        ];
        for (text, check) in cases {
            let e = parse_instance(text.as_bytes()).unwrap_err();
            assert!(check(&e), "{text:?}: {e}");
        }
    }

    #[test]
    fn write_examples() {
        let j = CouplingMatrix::from_dense(2, vec![0.0, -3.0, -3.0, 0.0], 1.0).unwrap();
        let mut buf = Vec::new();
        write_instance(&j, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "2 1\n1 2 -3\n");
        let z = CouplingMatrix::from_dense(3, vec![0.0; 9], 1.0).unwrap();
        let mut buf = Vec::new();
        write_instance(&z, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "3 0\n");
        let u = CouplingMatrix::from_dense(2, vec![0.0, 1.0, 2.0, 0.0], 1.0).unwrap();
        assert!(matches!(write_instance(&u, Vec::new()), Err(QuboError::Usage(_))));
    }

    #[test]
    fn canonicalization() {
        let messy = "# x\n3 3\n2 3 4\n1 1 -2\n1 3 0.5\n";
        let j = parse_instance(messy.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_instance(&j, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "3 3\n1 1 -2\n1 3 0.5\n2 3 4\n");
    }

    #[test]
    fn best_known_arithmetic() {
        assert!((m_from_best_known(3000, 0.5, 3931583).unwrap() - 0.412).abs() <= 5e-4);
        assert!((m_from_best_known(7000, 1.0, 20446407).unwrap() - 0.425).abs() <= 5e-4);
        assert_eq!(m_from_best_known(100, 0.3, 0).unwrap(), 0.0);
        assert!(m_from_best_known(0, 0.5, 1).is_err());
        assert!(m_from_best_known(10, 0.0, 1).is_err());
        assert!(m_from_best_known(10, 0.5, -1).is_err());
        let r = BenchmarkRecord::new("x", 3000, 0.5, 3931583).unwrap();
        let w = normalization_constant(3000, 0.5, BENCHMARK_VARIANCE).unwrap();
        assert_eq!(r.m_n, w * 3931583.0 / 3000.0);
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(fmt_sig6(0.419123456), "0.419123");
        assert_eq!(fmt_sig6(1234567.0), "1.23457e+06");
        assert_eq!(fmt_sig6(0.5), "0.5");
        assert_eq!(fmt_sig6(-2.0), "-2");
        assert_eq!(fmt_sig6(1.5e-7), "1.5e-07");
        assert_eq!(fmt_sig6(123456.4), "123456");
        assert_eq!(fmt_sig6(0.0), "0");
    }

    #[test]
    fn empty_results_are_header_only() {
        let mut buf = Vec::new();
        emit_results(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), RESULTS_HEADER.join(",") + "\n");
    }
}

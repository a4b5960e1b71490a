//! Cross-module properties checked against independent oracles.

use proptest::prelude::*;
use randqubo::bench_io::{emit_results, parse_instance, write_instance, ResultRecord, RESULTS_HEADER};
use randqubo::energy::{delta_ones_flip, energy, local_fields};
use randqubo::instance::{dilution_probability, generate};
use randqubo::solvers::{brute_force, metropolis_solve, pca_solve, pca_step, transition_probability_one, PcaParams};
use randqubo::{Configuration, CouplingDistribution, CouplingMatrix, Objective};

/// `W Σ_ij J_ij η_i η_j` straight from the entries.
fn naive_energy(j: &CouplingMatrix, bits: &[bool]) -> f64 {
    let n = j.n();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            if bits[i] && bits[k] {
                acc += j.get(i, k);
            }
        }
    }
    j.w() * acc
}

fn bits_of(mask: usize, n: usize) -> Vec<bool> {
    (0..n).map(|i| mask >> i & 1 == 1).collect()
}

/// Exhaustive `(min, max)` by the naive double loop.
fn naive_extremes(j: &CouplingMatrix) -> (f64, f64) {
    let n = j.n();
    (0..1usize << n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), mask| {
        let e = naive_energy(j, &bits_of(mask, n));
        (lo.min(e), hi.max(e))
    })
}

/// Full PCA transition matrix `P[η][τ]` from the product formula, with the
/// field computed directly from the entries.
fn transition_matrix(j: &CouplingMatrix, beta: f64, q: f64) -> Vec<Vec<f64>> {
    let n = j.n();
    let sym = j.symmetrize();
    (0..1usize << n)
        .map(|from| {
            let eta = bits_of(from, n);
            let h: Vec<f64> = (0..n)
                .map(|i| sym.w() * (0..n).filter(|&k| eta[k]).map(|k| sym.get(i, k)).sum::<f64>())
                .collect();
            (0..1usize << n)
                .map(|to| {
                    let tau = bits_of(to, n);
                    (0..n)
                        .map(|i| {
                            // Gibbs weights of the pair Hamiltonian for τ_i = 1 and τ_i = 0
                            let w1 = (-beta * h[i] - q * (!eta[i]) as u8 as f64).exp();
                            let w0 = (-q * eta[i] as u8 as f64).exp();
                            if tau[i] {
                                w1 / (w0 + w1)
                            } else {
                                w0 / (w0 + w1)
                            }
                        })
                        .product()
                })
                .collect()
        })
        .collect()
}

/// `π(η) ∝ Σ_τ exp(-H(η, τ))` for the pair Hamiltonian.
fn pair_marginal(j: &CouplingMatrix, beta: f64, q: f64) -> Vec<f64> {
    let n = j.n();
    let sym = j.symmetrize();
    let mut pi: Vec<f64> = (0..1usize << n)
        .map(|a| {
            let eta = bits_of(a, n);
            (0..1usize << n)
                .map(|b| {
                    let tau = bits_of(b, n);
                    let mut h = 0.0;
                    let mut flips = 0.0;
                    for i in 0..n {
                        if tau[i] {
                            h += (0..n).filter(|&k| eta[k]).map(|k| sym.get(i, k)).sum::<f64>();
                        }
                        if eta[i] != tau[i] {
                            flips += 1.0;
                        }
                    }
                    (-beta * sym.w() * h - q * flips).exp()
                })
                .sum()
        })
        .collect();
    let z: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= z);
    pi
}

#[test]
fn pca_pair_marginal_is_stationary() {
    for (n, seed) in [(2, 1), (3, 2), (4, 3), (4, 4)] {
        let j = generate(n, &CouplingDistribution::StandardGaussian, seed).unwrap();
        for (beta, q) in [(0.5, 0.5), (1.0, 2.0), (4.0, 1.0)] {
            let p = transition_matrix(&j, beta, q);
            let pi = pair_marginal(&j, beta, q);
            let states = pi.len();
            for to in 0..states {
                let flow: f64 = (0..states).map(|from| pi[from] * p[from][to]).sum();
                assert!((flow - pi[to]).abs() < 1e-12, "n={n} β={beta} q={q} state {to}");
            }
            // reversibility
            for a in 0..states {
                for b in 0..states {
                    assert!((pi[a] * p[a][b] - pi[b] * p[b][a]).abs() < 1e-13);
                }
            }
        }
    }
}

#[test]
fn library_transition_probability_matches_product_formula() {
    let j = generate(4, &CouplingDistribution::StandardGaussian, 8).unwrap();
    let sym = j.symmetrize();
    let (beta, q) = (2.0, 0.7);
    let p = transition_matrix(&j, beta, q);
    for from in 0..16 {
        let eta = Configuration::from_bools(&bits_of(from, 4));
        let h = local_fields(&sym, &eta).unwrap();
        for to in 0..16 {
            let tau = bits_of(to, 4);
            let lib: f64 = (0..4)
                .map(|i| {
                    let p1 = transition_probability_one(beta * h.values()[i], eta.get(i), q);
                    if tau[i] {
                        p1
                    } else {
                        1.0 - p1
                    }
                })
                .product();
            assert!((lib - p[from][to]).abs() < 1e-12);
        }
    }
}

#[test]
fn pca_step_is_deterministic_per_sweep() {
    let j = generate(30, &CouplingDistribution::StandardGaussian, 5).unwrap().symmetrize();
    let eta = Configuration::from_mask(30, 0x2a5f_00ff);
    let a = pca_step(&j, &eta, 1.5, 0.8, 77, 3).unwrap();
    assert_eq!(a, pca_step(&j, &eta, 1.5, 0.8, 77, 3).unwrap());
    assert_ne!(a, pca_step(&j, &eta, 1.5, 0.8, 77, 4).unwrap());
}

#[test]
fn brute_force_matches_naive_enumeration() {
    for seed in 0..30 {
        let n = 4 + (seed as usize % 9);
        let j = generate(n, &CouplingDistribution::StandardGaussian, seed).unwrap();
        let (lo, hi) = naive_extremes(&j);
        let min = brute_force(&j, Objective::Minimize).unwrap();
        let max = brute_force(&j, Objective::Maximize).unwrap();
        assert!((min.best_energy - lo).abs() <= 1e-12 * (1.0 + lo.abs()));
        assert!((max.best_energy - hi).abs() <= 1e-12 * (1.0 + hi.abs()));
        assert_eq!(energy(&j, &min.best_config).unwrap(), min.best_energy);
    }
}

#[test]
fn pca_small_grid_finds_the_minimum() {
    let grid = [(1.0, 1.0), (2.0, 1.0), (4.0, 2.0)];
    let mut hits = 0;
    for seed in 0..100u64 {
        let j = generate(20, &CouplingDistribution::StandardGaussian, 1000 + seed).unwrap();
        let exact = brute_force(&j, Objective::Minimize).unwrap().best_energy;
        let best = grid
            .iter()
            .enumerate()
            .map(|(k, &(beta, q))| {
                let p = PcaParams::new(beta, q, 2000, seed * 16 + k as u64);
                pca_solve(&j, &p, Objective::Minimize).unwrap().best_energy
            })
            .fold(f64::INFINITY, f64::min);
        assert!(best >= exact - 1e-9);
        if best <= exact + 1e-9 * (1.0 + exact.abs()) {
            hits += 1;
        }
    }
    assert!(hits >= 95, "PCA matched brute force on {hits}/100");
}

#[test]
fn metropolis_finds_the_minimum() {
    let mut hits = 0;
    for seed in 0..100u64 {
        let j = generate(20, &CouplingDistribution::StandardGaussian, 2000 + seed).unwrap();
        let exact = brute_force(&j, Objective::Minimize).unwrap().best_energy;
        let r = metropolis_solve(&j, 4.0, 5000, seed, Objective::Minimize).unwrap();
        if r.best_energy <= exact + 1e-9 * (1.0 + exact.abs()) {
            hits += 1;
        }
    }
    assert!(hits >= 90, "Metropolis matched brute force on {hits}/100");
}

#[test]
fn diluted_density_at_n_4000() {
    let n = 4000;
    let j = generate(n, &CouplingDistribution::diluted(CouplingDistribution::StandardGaussian, 1.3), 12).unwrap();
    let p = dilution_probability(n, 1.3);
    let se = (p * (1.0 - p) / (n * n) as f64).sqrt();
    let got = j.realized_density();
    assert!((got - p).abs() < 3.0 * se, "density {got}, expected {p} ± {se}");
    assert!((got - 0.003).abs() < 2e-4);
    assert!(j.is_sparse());
}

#[test]
fn results_csv_round_trips() {
    let records: Vec<ResultRecord> = (0..4)
        .map(|k| ResultRecord {
            experiment: "rt".into(),
            n: 100,
            delta: if k < 2 { None } else { Some(1.3) },
            dist: "gaussian".into(),
            seed: 1 << 40 | k,
            objective: "min".into(),
            m: 0.125 * (k as f64 + 1.0),
            alpha: 0.6 + 0.0625 * k as f64,
            sweeps_to_best: 10 * k as usize,
            wall_ms: 1.5,
        })
        .collect();
    let mut buf = Vec::new();
    emit_results(&records, &mut buf).unwrap();
    let mut rdr = csv::Reader::from_reader(buf.as_slice());
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), RESULTS_HEADER);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    // four rows, then AGG / AGG_SE for the dense and the diluted group
    assert_eq!(rows.len(), 8);
    for (r, row) in records.iter().zip(&rows) {
        assert_eq!(row[0], *r.experiment);
        assert_eq!(row[1].parse::<usize>().unwrap(), r.n);
        assert_eq!(row[2].parse::<f64>().ok(), r.delta);
        assert_eq!(row[4].parse::<u64>().unwrap(), r.seed);
        let m: f64 = row[6].parse().unwrap();
        assert!((m - r.m).abs() <= 5e-7 * r.m.abs());
        assert!((row[7].parse::<f64>().unwrap() - r.alpha).abs() < 1e-12);
    }
    assert_eq!(&rows[4][4], "AGG");
    let agg: f64 = rows[4][6].parse().unwrap();
    assert!((agg - (0.125 + 0.25) / 2.0).abs() < 1e-9);
    assert_eq!(&rows[5][4], "AGG_SE");
    assert!((rows[5][6].parse::<f64>().unwrap() - 0.0625).abs() < 1e-9);
    assert_eq!(&rows[6][2], "1.3");
}

/// Symmetric integer matrix with a random sparsity pattern.
fn symmetric_instance() -> impl Strategy<Value = CouplingMatrix> {
    (1usize..12).prop_flat_map(|n| {
        prop::collection::vec(prop_oneof![3 => Just(0i32), 2 => -100i32..=100], n * (n + 1) / 2).prop_map(move |upper| {
            let mut dense = vec![0.0; n * n];
            let mut it = upper.into_iter();
            for i in 0..n {
                for k in i..n {
                    let v = it.next().unwrap() as f64;
                    dense[i * n + k] = v;
                    dense[k * n + i] = v;
                }
            }
            CouplingMatrix::from_dense(n, dense, 1.0).unwrap()
        })
    })
}

fn write_string(j: &CouplingMatrix) -> String {
    let mut buf = Vec::new();
    write_instance(j, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn parse_inverts_write(j in symmetric_instance()) {
        let text = write_string(&j);
        let back = parse_instance(text.as_bytes()).unwrap();
        prop_assert_eq!(back.to_dense(), j.to_dense());
        prop_assert_eq!(write_string(&back), text);
    }

    #[test]
    fn energy_matches_naive_sum(seed in any::<u64>(), n in 1usize..14, mask in any::<u64>()) {
        let j = generate(n, &CouplingDistribution::StandardGaussian, seed).unwrap();
        let bits = bits_of(mask as usize, n);
        let e = energy(&j, &Configuration::from_bools(&bits)).unwrap();
        let naive = naive_energy(&j, &bits);
        prop_assert!((e - naive).abs() <= 1e-12 * (1.0 + naive.abs()));
        let sym = energy(&j.symmetrize(), &Configuration::from_bools(&bits)).unwrap();
        prop_assert!((sym - naive).abs() <= 1e-12 * (1.0 + naive.abs()));
    }

    #[test]
    fn flip_delta_matches_recompute(seed in any::<u64>(), n in 1usize..30, mask in any::<u64>(), site in any::<usize>()) {
        let j = generate(n, &CouplingDistribution::diluted(CouplingDistribution::ShiftedExponential, 1.8), seed)
            .unwrap()
            .symmetrize();
        let eta = Configuration::from_bools(&bits_of(mask as usize, n));
        let i = site % n;
        let h = local_fields(&j, &eta).unwrap();
        let d = delta_ones_flip(&j, &h, &eta, i).unwrap();
        let mut flipped = eta.clone();
        flipped.flip(i);
        let exact = energy(&j, &flipped).unwrap() - energy(&j, &eta).unwrap();
        prop_assert!((d - exact).abs() <= 1e-10 * (1.0 + exact.abs()));
    }

    #[test]
    fn configuration_hex_round_trips(bits in prop::collection::vec(any::<bool>(), 0..200)) {
        let c = Configuration::from_bools(&bits);
        let back = Configuration::from_hex(bits.len(), &c.to_hex()).unwrap();
        prop_assert_eq!(back.to_bools(), bits);
    }
}

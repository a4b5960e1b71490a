//! Minimizer/maximizer block structure.
//!
//! Indices split into `I₁ = {η^min=1, η^max=0}`, `I₂ = {1,1}`, `I₃ = {0,1}`
//! and `I₄ = {0,0}`; the raw coupling matrix splits into the 16 blocks
//! `J[k,ℓ]`. Across replicas we estimate the block entry mean `μ[k,ℓ]` and the
//! correlation proxy `σ̃[k,ℓ] = Var(S_kℓ) / c_kℓ`, where `S_kℓ` is the block sum,
//! `Var` the sample variance across replicas and `c_kℓ` the mean entry count.
//! The block size is not factored out of `S`, so a nonzero `μ` together with
//! fluctuating block sizes pushes `σ̃` up.

use crate::energy::Configuration;
use crate::error::{QuboError, Result};
use crate::instance::CouplingMatrix;

/// Block label (0..4 for `I₁..I₄`) of every index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    labels: Vec<u8>,
    sizes: [usize; 4],
}

impl BlockPartition {
    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn sizes(&self) -> [usize; 4] {
        self.sizes
    }

    /// Index sets `I₁..I₄`, ascending.
    pub fn sets(&self) -> [Vec<usize>; 4] {
        let mut out: [Vec<usize>; 4] = Default::default();
        for (i, l) in self.labels.iter().enumerate() {
            out[*l as usize].push(i);
        }
        out
    }

    pub fn alphas(&self) -> [f64; 4] {
        let n = self.labels.len() as f64;
        self.sizes.map(|s| s as f64 / n)
    }
}

pub fn block_partition(min_config: &Configuration, max_config: &Configuration) -> Result<BlockPartition> {
    if min_config.len() != max_config.len() {
        return Err(QuboError::Shape {
            expected: min_config.len(),
            got: max_config.len(),
        });
    }
    let mut sizes = [0usize; 4];
    let labels = min_config
        .iter()
        .zip(max_config.iter())
        .map(|(a, b)| {
            let l = match (a, b) {
                (true, false) => 0,
                (true, true) => 1,
                (false, true) => 2,
                (false, false) => 3,
            };
            sizes[l] += 1;
            l as u8
        })
        .collect();
    Ok(BlockPartition { labels, sizes })
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct BlockCell {
    replicas: u64,
    count: f64,
    sum: f64,
    sum_sq: f64,
}

/// Mergeable replica accumulator for [`BlockStats`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BlockAccumulator {
    n: usize,
    replicas: u64,
    alpha_sums: [f64; 4],
    cells: [[BlockCell; 4]; 4],
}

impl BlockAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one replica: raw `j` with the partition of its optimizers.
    pub fn add(&mut self, j: &CouplingMatrix, partition: &BlockPartition) -> Result<()> {
        let n = j.n();
        if partition.labels.len() != n {
            return Err(QuboError::Shape {
                expected: n,
                got: partition.labels.len(),
            });
        }
        if self.replicas > 0 && self.n != n {
            return Err(QuboError::Usage(format!("accumulator holds n = {}, got {n}", self.n)));
        }
        self.n = n;
        let mut sums = [[0.0f64; 4]; 4];
        for i in 0..n {
            let row = &mut sums[partition.labels[i] as usize];
            j.for_each_in_row(i, |c, v| row[partition.labels[c] as usize] += v);
        }
        for k in 0..4 {
            for l in 0..4 {
                let c = (partition.sizes[k] * partition.sizes[l]) as f64;
                if c > 0.0 {
                    let cell = &mut self.cells[k][l];
                    cell.replicas += 1;
                    cell.count += c;
                    cell.sum += sums[k][l];
                    cell.sum_sq += sums[k][l] * sums[k][l];
                }
            }
        }
        for (a, s) in self.alpha_sums.iter_mut().zip(partition.alphas()) {
            *a += s;
        }
        self.replicas += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &BlockAccumulator) {
        if other.replicas == 0 {
            return;
        }
        self.n = other.n;
        self.replicas += other.replicas;
        for k in 0..4 {
            self.alpha_sums[k] += other.alpha_sums[k];
            for l in 0..4 {
                let (a, b) = (&mut self.cells[k][l], &other.cells[k][l]);
                a.replicas += b.replicas;
                a.count += b.count;
                a.sum += b.sum;
                a.sum_sq += b.sum_sq;
            }
        }
    }

    pub fn replicas(&self) -> u64 {
        self.replicas
    }

    pub fn finalize(&self) -> BlockStats {
        let r = self.replicas.max(1) as f64;
        let mut mu = [[None; 4]; 4];
        let mut sigma_tilde = [[None; 4]; 4];
        for k in 0..4 {
            for l in 0..4 {
                let c = &self.cells[k][l];
                if c.replicas == 0 {
                    continue;
                }
                let m = c.sum / c.count;
                mu[k][l] = Some(m);
                if c.replicas > 1 {
                    let rc = c.replicas as f64;
                    let var = (c.sum_sq - c.sum * c.sum / rc).max(0.0) / (rc - 1.0);
                    sigma_tilde[k][l] = Some(var / (c.count / rc));
                }
            }
        }
        BlockStats {
            alphas: self.alpha_sums.map(|a| a / r),
            mu,
            sigma_tilde,
            n: self.n,
            replica_count: self.replicas,
        }
    }
}

/// Replica-averaged block statistics. Cells of blocks that were empty in
/// every replica (or, for `σ̃`, nonempty in fewer than two) are `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockStats {
    pub alphas: [f64; 4],
    pub mu: [[Option<f64>; 4]; 4],
    pub sigma_tilde: [[Option<f64>; 4]; 4],
    pub n: usize,
    pub replica_count: u64,
}

/// Adds one replica to `acc` and returns the current estimates.
pub fn block_stats(j: &CouplingMatrix, partition: &BlockPartition, acc: &mut BlockAccumulator) -> Result<BlockStats> {
    acc.add(j, partition)?;
    Ok(acc.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate, CouplingDistribution};
    use crate::rng::draw_u64;

    #[test]
    fn partition_by_definition() {
        let min = Configuration::from_bools(&[true, true, false, false]);
        let max = Configuration::from_bools(&[false, true, true, false]);
        let p = block_partition(&min, &max).unwrap();
        assert_eq!(p.sets(), [vec![0], vec![1], vec![2], vec![3]]);
        let all = Configuration::all_ones(5);
        let p = block_partition(&all, &all).unwrap();
        assert_eq!(p.alphas(), [0.0, 1.0, 0.0, 0.0]);
        assert!(block_partition(&all, &Configuration::zeros(4)).is_err());
    }

    #[test]
    fn remark_identities() {
        for seed in 0..20u64 {
            let n = 37;
            let a = Configuration::from_bools(&(0..n).map(|i| draw_u64(seed, 0, i) & 1 == 1).collect::<Vec<_>>());
            let b = Configuration::from_bools(&(0..n).map(|i| draw_u64(seed, 1, i) & 1 == 1).collect::<Vec<_>>());
            let p = block_partition(&a, &b).unwrap();
            assert_eq!(p.sizes().iter().sum::<usize>(), n as usize);
            assert_eq!(p.sizes()[0] + p.sizes()[1], a.count_ones());
            assert_eq!(p.sizes()[1] + p.sizes()[2], b.count_ones());
        }
    }

    #[test]
    fn independence_baseline() {
        // partitions drawn independently of J: μ → 0 and σ̃ → 1
        let n = 60;
        let mut acc = BlockAccumulator::new();
        for r in 0..400u64 {
            let j = generate(n, &CouplingDistribution::StandardGaussian, 1000 + r).unwrap();
            let a = Configuration::from_bools(&(0..n as u64).map(|i| draw_u64(r, 7, i) % 3 != 0).collect::<Vec<_>>());
            let b = Configuration::from_bools(&(0..n as u64).map(|i| draw_u64(r, 8, i) % 3 != 0).collect::<Vec<_>>());
            acc.add(&j, &block_partition(&a, &b).unwrap()).unwrap();
        }
        let s = acc.finalize();
        assert_eq!(s.replica_count, 400);
        assert!((s.alphas.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for k in 0..4 {
            for l in 0..4 {
                let mu = s.mu[k][l].unwrap();
                let st = s.sigma_tilde[k][l].unwrap();
                assert!(mu.abs() < 0.02, "mu[{k}][{l}] = {mu}");
                // chi-square with 399 dof: sd of σ̃ ≈ sqrt(2/399)
                assert!((st - 1.0).abs() < 5.0 * (2.0f64 / 399.0).sqrt(), "sigma[{k}][{l}] = {st}");
            }
        }
    }

    #[test]
    fn sigma_tilde_matches_direct_sums() {
        let n = 40;
        let mut acc = BlockAccumulator::new();
        let mut sums = Vec::new();
        let mut counts = Vec::new();
        for r in 0..25u64 {
            let j = generate(n, &CouplingDistribution::ShiftedExponential, 50 + r).unwrap();
            let a = Configuration::from_bools(&(0..n as u64).map(|i| draw_u64(r, 3, i) & 1 == 1).collect::<Vec<_>>());
            let b = Configuration::from_bools(&(0..n as u64).map(|i| draw_u64(r, 4, i) & 1 == 1).collect::<Vec<_>>());
            let p = block_partition(&a, &b).unwrap();
            let sets = p.sets();
            let s: f64 = sets[0].iter().flat_map(|&i| sets[3].iter().map(move |&c| (i, c))).map(|(i, c)| j.get(i, c)).sum();
            sums.push(s);
            counts.push((sets[0].len() * sets[3].len()) as f64);
            acc.add(&j, &p).unwrap();
        }
        // every replica has both sets nonempty for these seeds
        assert!(counts.iter().all(|&c| c > 0.0));
        let r = sums.len() as f64;
        let mean = sums.iter().sum::<f64>() / r;
        let var = sums.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (r - 1.0);
        let expect = var / (counts.iter().sum::<f64>() / r);
        let got = acc.finalize().sigma_tilde[0][3].unwrap();
        assert!((got - expect).abs() < 1e-9 * expect.abs().max(1.0), "{got} vs {expect}");
    }

    #[test]
    fn empty_blocks_are_missing() {
        let j = generate(6, &CouplingDistribution::StandardGaussian, 1).unwrap();
        let all = Configuration::all_ones(6);
        let s = block_stats(&j, &block_partition(&all, &all).unwrap(), &mut BlockAccumulator::new()).unwrap();
        assert!(s.mu[1][1].is_some());
        assert!(s.mu[0][0].is_none() && s.mu[3][1].is_none());
        assert!(s.sigma_tilde[1][1].is_none());
    }

    #[test]
    fn merge_equals_sequential() {
        let n = 20;
        let mut whole = BlockAccumulator::new();
        let mut parts = vec![BlockAccumulator::new(), BlockAccumulator::new()];
        for r in 0..30u64 {
            let j = generate(n, &CouplingDistribution::StandardGaussian, r).unwrap();
            let a = Configuration::from_mask(n, draw_u64(r, 1, 0));
            let b = Configuration::from_mask(n, draw_u64(r, 2, 0));
            let p = block_partition(&a, &b).unwrap();
            whole.add(&j, &p).unwrap();
            parts[(r % 2) as usize].add(&j, &p).unwrap();
        }
        let mut merged = parts[1].clone();
        merged.merge(&parts[0]);
        let (x, y) = (whole.finalize(), merged.finalize());
        for k in 0..4 {
            assert!((x.alphas[k] - y.alphas[k]).abs() < 1e-9);
            for l in 0..4 {
                assert!((x.mu[k][l].unwrap() - y.mu[k][l].unwrap()).abs() < 1e-9);
                assert!((x.sigma_tilde[k][l].unwrap() - y.sigma_tilde[k][l].unwrap()).abs() < 1e-9);
            }
        }
    }
}

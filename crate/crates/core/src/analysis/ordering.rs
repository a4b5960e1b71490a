//! Membership of row-sum-ranked indices in the minimizer and maximizer.
//!
//! Rows of `J̃` are ranked by ascending row sum (ties by index) and the rank
//! fractions are binned. Per bin we count how often the indices belong to the
//! minimizer, the maximizer, and both.

use crate::energy::Configuration;
use crate::error::{QuboError, Result};
use crate::instance::CouplingMatrix;

/// Default number of rank bins.
pub const DEFAULT_BINS: usize = 64;

/// Per-replica, per-bin counts `[in min, in max, in both, total]`.
type BinCounts = [u32; 4];

#[derive(Clone, Debug, PartialEq)]
pub struct OrderingAccumulator {
    bins: usize,
    replicas: Vec<Vec<BinCounts>>,
}

impl OrderingAccumulator {
    pub fn new(bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(QuboError::Parameter(format!("need at least 2 bins, got {bins}")));
        }
        Ok(OrderingAccumulator {
            bins,
            replicas: Vec::new(),
        })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn replicas(&self) -> usize {
        self.replicas.len()
    }

    /// Adds one replica. `j` may be raw or symmetrized; row sums are taken on `J̃`.
    pub fn add(&mut self, j: &CouplingMatrix, min_config: &Configuration, max_config: &Configuration) -> Result<()> {
        let n = j.n();
        for c in [min_config, max_config] {
            if c.len() != n {
                return Err(QuboError::Shape {
                    expected: n,
                    got: c.len(),
                });
            }
        }
        let r = if j.is_symmetric() {
            j.row_sums()
        } else {
            j.symmetrize().row_sums()
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|a, b| r[*a].total_cmp(&r[*b]).then(a.cmp(b)));
        let mut counts = vec![[0u32; 4]; self.bins];
        for (rank, &i) in order.iter().enumerate() {
            let b = rank * self.bins / n;
            let (a, m) = (min_config.get(i), max_config.get(i));
            let cell = &mut counts[b];
            cell[0] += a as u32;
            cell[1] += m as u32;
            cell[2] += (a && m) as u32;
            cell[3] += 1;
        }
        self.replicas.push(counts);
        Ok(())
    }

    pub fn merge(&mut self, other: &OrderingAccumulator) -> Result<()> {
        if other.bins != self.bins {
            return Err(QuboError::Usage("cannot merge curves with different bin counts".into()));
        }
        self.replicas.extend(other.replicas.iter().cloned());
        Ok(())
    }

    pub fn finalize(&self) -> OrderingCurve {
        let bins = self.bins;
        let mut curve = OrderingCurve {
            ranks: (0..bins).map(|b| (b as f64 + 0.5) / bins as f64).collect(),
            p_min: vec![0.0; bins],
            p_max: vec![0.0; bins],
            p_joint: vec![0.0; bins],
            ratio: vec![f64::NAN; bins],
            ratio_se: vec![f64::NAN; bins],
            samples: vec![0; bins],
        };
        let rcount = self.replicas.len() as f64;
        for b in 0..bins {
            let mut tot = [0.0f64; 4];
            for rep in &self.replicas {
                for k in 0..4 {
                    tot[k] += rep[b][k] as f64;
                }
            }
            curve.samples[b] = tot[3] as u64;
            if tot[3] == 0.0 {
                continue;
            }
            curve.p_min[b] = tot[0] / tot[3];
            curve.p_max[b] = tot[1] / tot[3];
            curve.p_joint[b] = tot[2] / tot[3];
            if tot[0] > 0.0 && tot[1] > 0.0 && tot[2] > 0.0 {
                let ratio = tot[2] * tot[3] / (tot[0] * tot[1]);
                curve.ratio[b] = ratio;
                if rcount > 1.0 {
                    // delta method over replicas for log(Z T / (X Y)) with replica totals
                    let ss: f64 = self
                        .replicas
                        .iter()
                        .map(|rep| {
                            let c = rep[b];
                            let u = c[2] as f64 / tot[2] + c[3] as f64 / tot[3]
                                - c[0] as f64 / tot[0]
                                - c[1] as f64 / tot[1];
                            u * u
                        })
                        .sum();
                    curve.ratio_se[b] = ratio * (ss * rcount / (rcount - 1.0)).sqrt();
                }
            }
        }
        curve
    }
}

/// Binned membership probabilities against row-sum rank fraction.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderingCurve {
    /// Bin centers in rank-fraction units.
    pub ranks: Vec<f64>,
    pub p_min: Vec<f64>,
    pub p_max: Vec<f64>,
    pub p_joint: Vec<f64>,
    /// `p_joint / (p_min p_max)`; NaN where undefined.
    pub ratio: Vec<f64>,
    /// Replica delta-method standard error of `ratio`.
    pub ratio_se: Vec<f64>,
    pub samples: Vec<u64>,
}

impl OrderingCurve {
    /// `max_b |p_max(b) - p_min(bins-1-b)|`.
    pub fn symmetry_deviation(&self) -> f64 {
        let k = self.p_min.len();
        (0..k)
            .map(|b| (self.p_max[b] - self.p_min[k - 1 - b]).abs())
            .fold(0.0, f64::max)
    }
}

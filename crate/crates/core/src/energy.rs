//! Energies, local fields and exact Gibbs quantities.

use std::fmt;

use crate::error::{QuboError, Result};
use crate::instance::CouplingMatrix;

/// Largest `n` for which `2^n` enumeration is allowed.
pub const MAX_ENUMERATION_N: usize = 24;

/// A binary configuration `η ∈ {0,1}^n`, packed 64 sites per word, with its ones-count cached.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    n: usize,
    words: Vec<u64>,
    ones: usize,
}

impl Configuration {
    pub fn zeros(n: usize) -> Self {
        Configuration {
            n,
            words: vec![0; n.div_ceil(64)],
            ones: 0,
        }
    }

    pub fn all_ones(n: usize) -> Self {
        let mut c = Self::zeros(n);
        for i in 0..n {
            c.set(i, true);
        }
        c
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut c = Self::zeros(bits.len());
        for (i, b) in bits.iter().enumerate() {
            if *b {
                c.set(i, true);
            }
        }
        c
    }

    /// Site `i` takes bit `i` of `mask`.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        assert!(n <= 64);
        let mut c = Self::zeros(n);
        if n > 0 {
            let m = if n == 64 { mask } else { mask & ((1u64 << n) - 1) };
            c.words[0] = m;
            c.ones = m.count_ones() as usize;
        }
        c
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `|η| = Σ η_i`.
    #[inline]
    pub fn count_ones(&self) -> usize {
        self.ones
    }

    pub fn ones_fraction(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.ones as f64 / self.n as f64
        }
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.n, "site {i} out of range for n = {}", self.n);
        if self.get(i) != value {
            self.words[i / 64] ^= 1u64 << (i % 64);
            if value {
                self.ones += 1;
            } else {
                self.ones -= 1;
            }
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        let v = self.get(i);
        self.set(i, !v);
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.n).map(move |i| self.get(i))
    }

    /// Indices with `η_i = 1`, ascending.
    pub fn ones_indices(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.ones);
        for (w, word) in self.words.iter().enumerate() {
            let mut bits = *word;
            while bits != 0 {
                let t = bits.trailing_zeros() as usize;
                out.push(w * 64 + t);
                bits &= bits - 1;
            }
        }
        out
    }

    pub fn to_bools(&self) -> Vec<bool> {
        self.iter().collect()
    }

    pub fn hamming(&self, other: &Configuration) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Lexicographic order on `(η_0, η_1, …)`.
    pub fn lex_cmp(&self, other: &Configuration) -> std::cmp::Ordering {
        for (a, b) in self.words.iter().zip(&other.words) {
            if a != b {
                let first = (a ^ b).trailing_zeros();
                return if (a >> first) & 1 == 0 {
                    std::cmp::Ordering::Less
                } else {
                    std::cmp::Ordering::Greater
                };
            }
        }
        std::cmp::Ordering::Equal
    }

    /// Packed words as lowercase hex, least significant word first.
    pub fn to_hex(&self) -> String {
        self.words.iter().map(|w| format!("{w:016x}")).collect()
    }

    pub fn from_hex(n: usize, hex: &str) -> Result<Self> {
        let words = n.div_ceil(64);
        if hex.len() != 16 * words {
            return Err(QuboError::Parameter(format!("hex configuration has wrong length for n = {n}")));
        }
        let mut c = Self::zeros(n);
        for w in 0..words {
            let word = u64::from_str_radix(&hex[16 * w..16 * (w + 1)], 16)
                .map_err(|e| QuboError::Parameter(format!("bad hex configuration: {e}")))?;
            c.words[w] = word;
        }
        if n % 64 != 0 && c.words[words - 1] >> (n % 64) != 0 {
            return Err(QuboError::Parameter("hex configuration has bits beyond n".into()));
        }
        c.ones = c.words.iter().map(|w| w.count_ones() as usize).sum();
        Ok(c)
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.iter().map(|b| if b { '1' } else { '0' }).collect();
        write!(f, "Configuration({s})")
    }
}

/// Local fields `h_i = (1/√n) Σ_j J̃_ij η_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldVector {
    h: Vec<f64>,
}

impl FieldVector {
    pub fn values(&self) -> &[f64] {
        &self.h
    }

    /// Updates the fields after site `i` of the configuration was flipped.
    /// `now_one` is the new value of `η_i`.
    pub fn apply_flip(&mut self, j_sym: &CouplingMatrix, i: usize, now_one: bool) {
        let scale = 1.0 / (j_sym.n() as f64).sqrt();
        let sign = if now_one { scale } else { -scale };
        j_sym.for_each_in_row(i, |k, v| self.h[k] += sign * v);
    }
}

fn check_len(j: &CouplingMatrix, eta: &Configuration) -> Result<()> {
    if j.n() != eta.len() {
        return Err(QuboError::Shape {
            expected: j.n(),
            got: eta.len(),
        });
    }
    Ok(())
}

/// `H(J, η) = W Σ_{i,j} J_ij η_i η_j`, summing rows in ascending order.
pub fn energy(j: &CouplingMatrix, eta: &Configuration) -> Result<f64> {
    check_len(j, eta)?;
    let ones = eta.ones_indices();
    let mut acc = 0.0;
    match j.storage() {
        crate::instance::Storage::Dense(a) => {
            let n = j.n();
            for &r in &ones {
                let row = &a[r * n..(r + 1) * n];
                for &c in &ones {
                    acc += row[c];
                }
            }
        }
        crate::instance::Storage::Sparse(_) => {
            for &r in &ones {
                j.for_each_in_row(r, |c, v| {
                    if eta.get(c) {
                        acc += v;
                    }
                });
            }
        }
    }
    Ok(j.w() * acc)
}

/// Local fields of a symmetrized matrix.
pub fn local_fields(j_sym: &CouplingMatrix, eta: &Configuration) -> Result<FieldVector> {
    if !j_sym.is_symmetric() {
        return Err(QuboError::Usage("local fields need a symmetrized coupling matrix".into()));
    }
    check_len(j_sym, eta)?;
    let mut raw = vec![0.0; j_sym.n()];
    for i in eta.ones_indices() {
        j_sym.add_row(i, &mut raw);
    }
    let scale = 1.0 / (j_sym.n() as f64).sqrt();
    raw.iter_mut().for_each(|v| *v *= scale);
    Ok(FieldVector { h: raw })
}

/// Energy change from flipping `η_i`, given fields computed for `eta`.
#[inline]
pub(crate) fn flip_delta_raw(raw_field: f64, diag: f64, currently_one: bool) -> f64 {
    if currently_one {
        -(2.0 * raw_field - diag)
    } else {
        2.0 * raw_field + diag
    }
}

/// Exact change of `H` when `η_i` is flipped.
///
/// Uses `h_i`, the diagonal `J̃_ii` and `W`; after applying the flip the caller
/// updates the fields with [`FieldVector::apply_flip`].
pub fn delta_ones_flip(
    j_sym: &CouplingMatrix,
    h: &FieldVector,
    eta: &Configuration,
    i: usize,
) -> Result<f64> {
    check_len(j_sym, eta)?;
    if i >= eta.len() {
        return Err(QuboError::Index { index: i, n: eta.len() });
    }
    if h.h.len() != eta.len() {
        return Err(QuboError::Shape {
            expected: eta.len(),
            got: h.h.len(),
        });
    }
    let raw = h.h[i] * (j_sym.n() as f64).sqrt();
    Ok(j_sym.w() * flip_delta_raw(raw, j_sym.diag(i), eta.get(i)))
}

/// Visits all `2^n` configurations in Gray-code order, calling `f(mask, energy)`.
///
/// Site `i` is bit `i` of `mask`. Energies are updated incrementally in
/// `O(n)` per step on the symmetrized matrix.
pub(crate) fn gray_scan(j: &CouplingMatrix, mut f: impl FnMut(u32, f64)) -> Result<()> {
    let n = j.n();
    if n > MAX_ENUMERATION_N {
        return Err(QuboError::Capacity {
            n,
            max: MAX_ENUMERATION_N,
        });
    }
    let sym = j.symmetrize();
    let w = sym.w();
    let diag: Vec<f64> = (0..n).map(|i| sym.diag(i)).collect();
    let mut raw = vec![0.0; n];
    let mut mask: u32 = 0;
    let mut e_raw = 0.0;
    f(0, 0.0);
    for k in 1u32..(1u32 << n) {
        let b = k.trailing_zeros() as usize;
        let one = mask >> b & 1 == 1;
        e_raw += flip_delta_raw(raw[b], diag[b], one);
        if one {
            sym.sub_row(b, &mut raw);
        } else {
            sym.add_row(b, &mut raw);
        }
        mask ^= 1 << b;
        f(mask, w * e_raw);
    }
    Ok(())
}

/// `F_β = β⁻¹ log Σ_η exp(β H(J, η))` by exhaustive enumeration (n ≤ 24).
pub fn exact_free_energy(j: &CouplingMatrix, beta: f64) -> Result<f64> {
    if beta == 0.0 || !beta.is_finite() {
        return Err(QuboError::Parameter(format!("beta must be finite and nonzero, got {beta}")));
    }
    // streaming log-sum-exp with a running max shift
    let mut shift = f64::NEG_INFINITY;
    let mut sum = 0.0;
    gray_scan(j, |_, e| {
        let x = beta * e;
        if x > shift {
            sum = sum * (shift - x).exp() + 1.0;
            shift = x;
        } else {
            sum += (x - shift).exp();
        }
    })?;
    Ok((shift + sum.ln()) / beta)
}

//! Pattern families and controlled cue corruption.
//!
//! Every generator is a pure function of its dimensions and the supplied
//! [`RngStream`]. Patterns are the columns of [`PatternSet::data`].

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{RealMatrix, RealVector, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PatternKind {
    /// Entries in {-1, +1}.
    DenseBinary,
    /// Entries in {0, 1} with expected density `p`.
    SparseBinary { p: f64 },
    /// Exactly `k` ones per column.
    KHot { k: usize },
    /// I.i.d. standard normal entries.
    ContinuousNormal,
}

impl PatternKind {
    pub fn name(&self) -> &'static str {
        match self {
            PatternKind::DenseBinary => "dense_binary",
            PatternKind::SparseBinary { .. } => "sparse_binary",
            PatternKind::KHot { .. } => "k_hot",
            PatternKind::ContinuousNormal => "continuous_normal",
        }
    }

    fn is_zero_one(&self) -> bool {
        matches!(self, PatternKind::SparseBinary { .. } | PatternKind::KHot { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternSet {
    pub data: RealMatrix,
    pub kind: PatternKind,
}

impl PatternSet {
    pub fn new(data: RealMatrix, kind: PatternKind) -> Self {
        Self { data, kind }
    }

    pub fn n_bits(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_patts(&self) -> usize {
        self.data.ncols()
    }

    pub fn pattern(&self, mu: usize) -> RealVector {
        self.data.column(mu).into_owned()
    }

    /// The first `count` patterns.
    pub fn truncated(&self, count: usize) -> PatternSet {
        let count = count.min(self.n_patts());
        PatternSet::new(self.data.columns(0, count).into_owned(), self.kind)
    }
}

/// Binomial coefficient with overflow detection.
pub fn binomial(n: usize, k: usize) -> Result<u64> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return Err(Error::CombinatorialOverflow { n, k });
        }
    }
    Ok(acc as u64)
}

/// Lexicographic iterator over the k-subsets of `0..n`.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        let current = if k <= n { Some((0..k).collect()) } else { None };
        Self { n, current }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        // rightmost position that can still advance
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}

/// 0/1 vector of length `n` with ones at `active`.
pub fn khot_vector(n: usize, active: &[usize]) -> RealVector {
    let mut v = RealVector::zeros(n);
    for &i in active {
        v[i] = 1.0;
    }
    v
}

fn khot_matrix(n_label: usize, k: usize, sets: &[Vec<usize>]) -> PatternSet {
    let mut data = RealMatrix::zeros(n_label, sets.len());
    for (mu, set) in sets.iter().enumerate() {
        for &i in set {
            data[(i, mu)] = 1.0;
        }
    }
    PatternSet::new(data, PatternKind::KHot { k })
}

/// The k-hot vectors of length `n_label` in lexicographic order of their
/// active-index sets, optionally truncated to the first `limit`.
pub fn gen_khot_labels(n_label: usize, k: usize, limit: Option<usize>) -> Result<PatternSet> {
    if k == 0 || k > n_label {
        return Err(Error::InvalidK { k, len: n_label });
    }
    let total = binomial(n_label, k)?;
    let count = match limit {
        Some(l) if (l as u64) > total => {
            return Err(Error::InvalidParameter(format!(
                "limit {l} exceeds C({n_label}, {k}) = {total}"
            )))
        }
        Some(l) => l,
        None => usize::try_from(total).map_err(|_| Error::CombinatorialOverflow { n: n_label, k })?,
    };
    let sets: Vec<Vec<usize>> = Combinations::new(n_label, k).take(count).collect();
    Ok(khot_matrix(n_label, k, &sets))
}

/// `count` distinct random k-hot vectors, returned in lexicographic order.
pub fn sample_khot_labels(n_label: usize, k: usize, count: usize, rng: &mut RngStream) -> Result<PatternSet> {
    if k == 0 || k > n_label {
        return Err(Error::InvalidK { k, len: n_label });
    }
    let total = binomial(n_label, k).unwrap_or(u64::MAX);
    if count as u64 > total {
        return Err(Error::InvalidParameter(format!(
            "cannot draw {count} distinct labels from C({n_label}, {k}) = {total}"
        )));
    }
    let mut sets: Vec<Vec<usize>> = if total <= 4 * count as u64 {
        let all: Vec<Vec<usize>> = Combinations::new(n_label, k).collect();
        rng.sample_indices(all.len(), count)
            .into_iter()
            .map(|i| all[i].clone())
            .collect()
    } else {
        let mut seen = HashSet::with_capacity(count);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let mut set = rng.sample_indices(n_label, k);
            set.sort_unstable();
            if seen.insert(set.clone()) {
                out.push(set);
            }
        }
        out
    };
    sets.sort();
    Ok(khot_matrix(n_label, k, &sets))
}

pub fn gen_dense_binary(n_bits: usize, n_patts: usize, rng: &mut RngStream) -> Result<PatternSet> {
    check_dims(n_bits, n_patts)?;
    let data = RealMatrix::from_fn(n_bits, n_patts, |_, _| rng.sign());
    Ok(PatternSet::new(data, PatternKind::DenseBinary))
}

pub fn gen_sparse_binary(n_bits: usize, n_patts: usize, p: f64, rng: &mut RngStream) -> Result<PatternSet> {
    check_dims(n_bits, n_patts)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("density p = {p} must lie in (0, 1)")));
    }
    let data = RealMatrix::from_fn(n_bits, n_patts, |_, _| if rng.bernoulli(p) { 1.0 } else { 0.0 });
    Ok(PatternSet::new(data, PatternKind::SparseBinary { p }))
}

pub fn gen_continuous(n_bits: usize, n_patts: usize, rng: &mut RngStream) -> Result<PatternSet> {
    check_dims(n_bits, n_patts)?;
    Ok(PatternSet::new(rng.normal_matrix(n_bits, n_patts), PatternKind::ContinuousNormal))
}

fn check_dims(n_bits: usize, n_patts: usize) -> Result<()> {
    if n_bits == 0 || n_patts == 0 {
        return Err(Error::InvalidParameter("pattern dimensions must be positive".into()));
    }
    Ok(())
}

/// `round(noise_frac * n)` distinct positions, uniformly without replacement.
pub fn flip_positions(n: usize, noise_frac: f64, rng: &mut RngStream) -> Vec<usize> {
    let count = ((noise_frac * n as f64).round() as usize).min(n);
    rng.sample_indices(n, count)
}

/// Flips the given positions of a binary pattern; an involution for a fixed
/// position set.
pub fn flip_at(pattern: &RealVector, positions: &[usize], kind: PatternKind) -> RealVector {
    let mut out = pattern.clone();
    for &i in positions {
        out[i] = if kind.is_zero_one() { 1.0 - out[i] } else { -out[i] };
    }
    out
}

/// Noisy cue for a stored pattern.
///
/// Binary kinds get exactly `round(noise_frac * n)` flipped bits. Continuous
/// patterns get additive Gaussian noise with standard deviation
/// `noise_frac * rms(pattern)`.
pub fn corrupt(pattern: &RealVector, noise_frac: f64, kind: PatternKind, rng: &mut RngStream) -> Result<RealVector> {
    if !(0.0..=1.0).contains(&noise_frac) {
        return Err(Error::InvalidParameter(format!("noise fraction {noise_frac} outside [0, 1]")));
    }
    match kind {
        PatternKind::ContinuousNormal => {
            if noise_frac == 0.0 {
                return Ok(pattern.clone());
            }
            let rms = (pattern.norm_squared() / pattern.len().max(1) as f64).sqrt();
            let sd = noise_frac * rms;
            Ok(pattern.map(|x| x + sd * rng.normal()))
        }
        _ => {
            let positions = flip_positions(pattern.len(), noise_frac, rng);
            Ok(flip_at(pattern, &positions, kind))
        }
    }
}

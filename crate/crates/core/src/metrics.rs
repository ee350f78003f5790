//! Recall metrics: overlaps, mutual information for the three pattern
//! families, Hamming recovery errors, information bounds and synapse counts.
//!
//! Binary MI is in bits, so perfect dense recall reads exactly 1. Continuous
//! MI is in nats.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numerics::{erf, RealVector};

/// `|r|` at or above this is treated as perfect continuous recall.
pub const PERFECT_CORRELATION: f64 = 1.0 - 1e-12;

fn check_len(a: &RealVector, b: &RealVector) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Dimension { expected: a.len(), got: b.len(), context: "pattern length" });
    }
    Ok(())
}

/// `m = (1/N) sum_i stored_i * recovered_i`.
pub fn overlap_binary(stored: &RealVector, recovered: &RealVector) -> Result<f64> {
    check_len(stored, recovered)?;
    if stored.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    Ok(stored.dot(recovered) / stored.len() as f64)
}

/// Cosine of the angle between two vectors; the correlation coefficient of
/// zero-mean patterns.
pub fn cosine(a: &RealVector, b: &RealVector) -> Result<f64> {
    check_len(a, b)?;
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((a.dot(b) / denom).clamp(-1.0, 1.0))
}

/// Number of positions where the two vectors differ.
pub fn hamming_distance(a: &RealVector, b: &RealVector) -> f64 {
    a.iter().zip(b.iter()).filter(|(x, y)| x != y).count() as f64
}

fn l1_distance(a: &RealVector, b: &RealVector) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum()
}

/// `x log2 x` with the `0 log 0 = 0` limit.
fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    -(xlog2x(p) + xlog2x(1.0 - p))
}

/// MI per bit between a ±1 pattern and a recall with overlap `m`.
pub fn mi_dense_binary(m: f64) -> Result<f64> {
    if !m.is_finite() || !(-1.0..=1.0).contains(&m) {
        return Err(Error::InvalidParameter(format!("overlap {m} outside [-1, 1]")));
    }
    let a = (1.0 + m) / 2.0;
    let b = (1.0 - m) / 2.0;
    Ok((1.0 + xlog2x(a) + xlog2x(b)).clamp(0.0, 1.0))
}

/// MI per bit for 0/1 patterns.
///
/// `p` is the stored activity, `q` the recovered activity and `m` the mean
/// of `sigma_i * xi_i`. The per-class error rates are `P1e = 1 - m/p` and
/// `P0e = (q - m)/(1 - p)`.
pub fn mi_sparse_binary(p: f64, q: f64, m: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InconsistentInputs(format!("stored density p = {p} must be in (0, 1)")));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InconsistentInputs(format!("recovered density q = {q} must be in [0, 1]")));
    }
    let tol = 1e-12;
    let p1e = 1.0 - m / p;
    let p0e = (q - m) / (1.0 - p);
    if !(-tol..=1.0 + tol).contains(&p1e) || !(-tol..=1.0 + tol).contains(&p0e) {
        return Err(Error::InconsistentInputs(format!(
            "error probabilities P1e = {p1e}, P0e = {p0e} outside [0, 1]"
        )));
    }
    let (p1e, p0e) = (p1e.clamp(0.0, 1.0), p0e.clamp(0.0, 1.0));
    let conditional = p * binary_entropy(p1e) + (1.0 - p) * binary_entropy(p0e);
    Ok((binary_entropy(q) - conditional).max(0.0))
}

/// A mutual-information value that may be infinite (perfect continuous recall).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MiValue {
    Finite(f64),
    Infinite,
}

impl MiValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            MiValue::Finite(v) => Some(v),
            MiValue::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, MiValue::Infinite)
    }
}

impl fmt::Display for MiValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MiValue::Finite(v) => write!(f, "{v}"),
            MiValue::Infinite => f.write_str("infinite"),
        }
    }
}

impl Serialize for MiValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MiValue::Finite(v) => s.serialize_f64(*v),
            MiValue::Infinite => s.serialize_str("infinite"),
        }
    }
}

/// Gaussian-channel MI `-ln(1 - r^2) / 2` in nats.
pub fn mi_continuous(r: f64) -> Result<MiValue> {
    if !r.is_finite() || r.abs() > 1.0 + 1e-12 {
        return Err(Error::InvalidParameter(format!("correlation {r} outside [-1, 1]")));
    }
    if r.abs() >= PERFECT_CORRELATION {
        return Ok(MiValue::Infinite);
    }
    Ok(MiValue::Finite(-(1.0 - r * r).ln() / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Feature,
    Label { k: usize },
    Hidden,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecoveryErrors {
    /// Hamming distance after recall over the distance of the cue; `None`
    /// when the cue was uncorrupted.
    pub relative: Option<f64>,
    /// Sum of absolute differences normalised to [0, 1]: by `2 N` for ±1
    /// layers and by `2 k` for the label layer.
    pub normalized: f64,
}

pub fn recovery_errors(stored: &RealVector, noisy_cue: &RealVector, recovered: &RealVector, layer: Layer) -> Result<RecoveryErrors> {
    check_len(stored, recovered)?;
    check_len(stored, noisy_cue)?;
    let before = hamming_distance(noisy_cue, stored);
    let after = hamming_distance(recovered, stored);
    let relative = (before > 0.0).then(|| after / before);
    let denom = match layer {
        Layer::Feature | Layer::Hidden => 2.0 * stored.len() as f64,
        Layer::Label { k } => 2.0 * k as f64,
    };
    Ok(RecoveryErrors { relative, normalized: l1_distance(recovered, stored) / denom })
}

/// Upper bound on MI per input bit, `N_H (2 N_F + N_L) / (N_patts N_F)`,
/// capped at 1.
pub fn mi_bound_perinbit(n_hidden: usize, n_feature: usize, n_label: usize, n_patts: usize) -> f64 {
    let total = (n_hidden * (2 * n_feature + n_label)) as f64;
    (total / (n_patts.max(1) * n_feature.max(1)) as f64).min(1.0)
}

/// Predicted MI per bit of one-step Hebbian heteroassociation from perfectly
/// recovered random ±1 hidden states.
pub fn mi_hebbian_theory(n_hidden: usize, n_patts: usize) -> Result<f64> {
    if n_patts == 0 {
        return Err(Error::InvalidParameter("n_patts must be at least 1".into()));
    }
    let p = 0.5 * (1.0 - erf((n_hidden as f64 / (2.0 * n_patts as f64)).sqrt()));
    Ok((1.0 - binary_entropy(p)).max(0.0))
}

/// Describes a network for synapse counting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelDescriptor {
    Mesh { n_label: usize, n_hidden: usize, n_feature: usize },
    Hopfield { n: usize },
    DilutedHopfield { n: usize, gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SynapseCount {
    pub learnable: u64,
    /// Weights that are never trained (the scaffold's random projection).
    pub fixed: u64,
}

pub fn count_synapses(model: ModelDescriptor) -> SynapseCount {
    match model {
        ModelDescriptor::Mesh { n_label, n_hidden, n_feature } => SynapseCount {
            learnable: (n_hidden * (2 * n_feature + n_label)) as u64,
            fixed: (n_hidden * n_label) as u64,
        },
        ModelDescriptor::Hopfield { n } => SynapseCount { learnable: (n * n) as u64, fixed: 0 },
        ModelDescriptor::DilutedHopfield { n, gamma } => SynapseCount {
            learnable: (gamma * (n * n) as f64).round() as u64,
            fixed: 0,
        },
    }
}

/// Summary of recall information for a stored pattern set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MIReport {
    /// Bits for binary families, nats for continuous patterns.
    pub mi_per_input_bit: MiValue,
    pub mi_total: MiValue,
    pub mi_per_synapse: MiValue,
    pub bound_per_input_bit: f64,
    pub n_synapses: u64,
}

impl MIReport {
    /// Scales a per-bit figure to totals for `n_patts` patterns of `n_bits`.
    pub fn new(mi_per_input_bit: MiValue, n_bits: usize, n_patts: usize, synapses: u64, bound_per_input_bit: f64) -> Self {
        let scale = (n_bits * n_patts) as f64;
        let (mi_total, mi_per_synapse) = match mi_per_input_bit {
            MiValue::Finite(v) => (MiValue::Finite(v * scale), MiValue::Finite(v * scale / synapses.max(1) as f64)),
            MiValue::Infinite => (MiValue::Infinite, MiValue::Infinite),
        };
        Self { mi_per_input_bit, mi_total, mi_per_synapse, bound_per_input_bit, n_synapses: synapses }
    }
}

/// Mean over patterns of per-pattern continuous MI; infinite if any pattern
/// is recalled perfectly.
pub fn mean_mi_continuous(correlations: &[f64]) -> Result<MiValue> {
    let mut total = 0.0;
    for &r in correlations {
        match mi_continuous(r)? {
            MiValue::Finite(v) => total += v,
            MiValue::Infinite => return Ok(MiValue::Infinite),
        }
    }
    Ok(MiValue::Finite(total / correlations.len().max(1) as f64))
}

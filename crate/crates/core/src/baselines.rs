//! Hopfield-family baseline memories sharing one recall interface.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{count_synapses, mi_sparse_binary, ModelDescriptor};
use crate::numerics::{pseudoinverse, sign_of, RealMatrix, RealVector, RngStream, DEFAULT_RCOND};
use crate::patterns::{corrupt, PatternKind, PatternSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum Variant {
    Hebbian,
    Pseudoinverse,
    /// Sequential Hebbian updates clipped to `[-bound, bound]`.
    Bounded { bound: f64, lr: f64 },
    /// Covariance rule on 0/1 patterns with a global firing threshold.
    SparseInput { p: f64, theta: f64 },
    /// Hebbian weights on a symmetric random mask with connection fraction `gamma`.
    SparseConn { gamma: f64, mask_seed: u64 },
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Hebbian => "hebbian",
            Variant::Pseudoinverse => "pseudoinverse",
            Variant::Bounded { .. } => "bounded",
            Variant::SparseInput { .. } => "sparse_input",
            Variant::SparseConn { .. } => "sparse_conn",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    /// One neuron at a time in a fixed random order.
    #[default]
    Asynchronous,
    /// All neurons at once.
    Synchronous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HopfieldNet {
    n: usize,
    weights: RealMatrix,
    variant: Variant,
    pub update: UpdateMode,
    /// Seed of the fixed asynchronous update order.
    pub order_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HopfieldRecall {
    pub state: RealVector,
    pub converged: bool,
    pub sweeps: usize,
}

fn require_kind(patterns: &PatternSet, dense: bool) -> Result<()> {
    let ok = match patterns.kind {
        PatternKind::DenseBinary => dense,
        PatternKind::SparseBinary { .. } => !dense,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::KindMismatch {
            expected: if dense { "dense_binary" } else { "sparse_binary" },
            got: patterns.kind.name(),
        })
    }
}

fn zero_diagonal(w: &mut RealMatrix) {
    w.fill_diagonal(0.0);
}

fn outer_sum(xi: &RealMatrix) -> RealMatrix {
    xi * xi.transpose()
}

/// Classic Hebbian rule, `W = (1/N) sum xi xi^T` with zero diagonal.
pub fn train_hebbian(patterns: &PatternSet) -> Result<HopfieldNet> {
    require_kind(patterns, true)?;
    let n = patterns.n_bits();
    let mut w = outer_sum(&patterns.data) / n as f64;
    zero_diagonal(&mut w);
    Ok(HopfieldNet::new(w, Variant::Hebbian))
}

/// Projection rule `W = Xi Xi+`; the diagonal is kept.
pub fn train_pinv(patterns: &PatternSet) -> Result<HopfieldNet> {
    require_kind(patterns, true)?;
    let w = &patterns.data * pseudoinverse(&patterns.data, DEFAULT_RCOND)?;
    Ok(HopfieldNet::new(w, Variant::Pseudoinverse))
}

/// Patterns presented in column order; after each one
/// `W <- clip(W + (lr / sqrt N) xi xi^T, -bound, bound)` with zero diagonal.
pub fn train_bounded(patterns: &PatternSet, bound: f64, lr: f64) -> Result<HopfieldNet> {
    require_kind(patterns, true)?;
    if !(bound > 0.0) || !(lr > 0.0) {
        return Err(Error::InvalidParameter(format!("bound {bound} and lr {lr} must be positive")));
    }
    let n = patterns.n_bits();
    let step = lr / (n as f64).sqrt();
    let mut w = RealMatrix::zeros(n, n);
    for mu in 0..patterns.n_patts() {
        let xi = patterns.data.column(mu);
        w += step * (xi * xi.transpose());
        w.apply(|x| *x = x.clamp(-bound, bound));
        zero_diagonal(&mut w);
    }
    Ok(HopfieldNet::new(w, Variant::Bounded { bound, lr }))
}

/// Covariance rule `W_ij = (1/N) sum (xi_i - p)(xi_j - p)`, zero diagonal,
/// with threshold dynamics `s_i <- step(sum_j W_ij s_j - theta)`.
pub fn train_sparse_input(patterns: &PatternSet, p: f64, theta: f64) -> Result<HopfieldNet> {
    require_kind(patterns, false)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("density p = {p} must be in (0, 1)")));
    }
    let n = patterns.n_bits();
    let centred = patterns.data.map(|x| x - p);
    let mut w = outer_sum(&centred) / n as f64;
    zero_diagonal(&mut w);
    Ok(HopfieldNet::new(w, Variant::SparseInput { p, theta }))
}

/// Symmetric connection mask: each off-diagonal pair is kept with
/// probability `gamma`.
pub fn connection_mask(n: usize, gamma: f64, mask_seed: u64) -> RealMatrix {
    let mut rng = RngStream::new(mask_seed);
    let mut mask = RealMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.uniform() < gamma {
                mask[(i, j)] = 1.0;
                mask[(j, i)] = 1.0;
            }
        }
    }
    mask
}

/// Hebbian weights on a diluted symmetric mask, scaled by `1/(gamma N)`.
pub fn train_sparse_conn(patterns: &PatternSet, gamma: f64, mask_seed: u64) -> Result<HopfieldNet> {
    require_kind(patterns, true)?;
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidParameter(format!("connection fraction {gamma} must be in (0, 1]")));
    }
    let n = patterns.n_bits();
    let mask = connection_mask(n, gamma, mask_seed);
    let w = outer_sum(&patterns.data).component_mul(&mask) / (gamma * n as f64);
    Ok(HopfieldNet::new(w, Variant::SparseConn { gamma, mask_seed }))
}

impl HopfieldNet {
    fn new(weights: RealMatrix, variant: Variant) -> Self {
        Self { n: weights.nrows(), weights, variant, update: UpdateMode::Asynchronous, order_seed: 0 }
    }

    pub fn with_update(mut self, update: UpdateMode) -> Self {
        self.update = update;
        self
    }

    pub fn with_order_seed(mut self, seed: u64) -> Self {
        self.order_seed = seed;
        self
    }

    /// Replaces the firing threshold of a sparse-input network.
    pub fn with_threshold(mut self, theta: f64) -> Self {
        if let Variant::SparseInput { p, .. } = self.variant {
            self.variant = Variant::SparseInput { p, theta };
        }
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &RealMatrix {
        &self.weights
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn synapses(&self) -> u64 {
        match self.variant {
            Variant::SparseConn { gamma, .. } => count_synapses(ModelDescriptor::DilutedHopfield { n: self.n, gamma }).learnable,
            _ => count_synapses(ModelDescriptor::Hopfield { n: self.n }).learnable,
        }
    }

    fn threshold(&self) -> Option<f64> {
        match self.variant {
            Variant::SparseInput { theta, .. } => Some(theta),
            _ => None,
        }
    }

    fn activate(&self, field: f64) -> f64 {
        match self.threshold() {
            Some(theta) => {
                if field - theta >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            None => sign_of(field),
        }
    }

    /// `-1/2 s^T W s`, plus `theta * sum s` for threshold units.
    pub fn energy(&self, state: &RealVector) -> f64 {
        let quad = -0.5 * state.dot(&(&self.weights * state));
        quad + self.threshold().map_or(0.0, |theta| theta * state.sum())
    }

    pub fn recall(&self, cue: &RealVector, max_sweeps: usize) -> Result<HopfieldRecall> {
        if cue.len() != self.n {
            return Err(Error::Dimension { expected: self.n, got: cue.len(), context: "cue length" });
        }
        match self.update {
            UpdateMode::Asynchronous => Ok(self.recall_async(cue, max_sweeps, |_| {})),
            UpdateMode::Synchronous => Ok(self.recall_sync(cue, max_sweeps)),
        }
    }

    /// Asynchronous recall calling `observe` after every single-unit update.
    pub fn recall_async(&self, cue: &RealVector, max_sweeps: usize, mut observe: impl FnMut(&RealVector)) -> HopfieldRecall {
        let order = RngStream::new(self.order_seed).permutation(self.n);
        let mut state = cue.clone();
        for sweep in 1..=max_sweeps {
            let mut changed = false;
            for &i in &order {
                let field = self.weights.row(i).transpose().dot(&state);
                let next = self.activate(field);
                if next != state[i] {
                    state[i] = next;
                    changed = true;
                }
                observe(&state);
            }
            if !changed {
                return HopfieldRecall { state, converged: true, sweeps: sweep };
            }
        }
        HopfieldRecall { state, converged: false, sweeps: max_sweeps }
    }

    fn recall_sync(&self, cue: &RealVector, max_sweeps: usize) -> HopfieldRecall {
        let mut state = cue.clone();
        for sweep in 1..=max_sweeps {
            let field = &self.weights * &state;
            let next = field.map(|x| self.activate(x));
            if next == state {
                return HopfieldRecall { state, converged: true, sweeps: sweep };
            }
            state = next;
        }
        HopfieldRecall { state, converged: false, sweeps: max_sweeps }
    }
}

/// Picks the firing threshold from `candidates` that maximises mean recall
/// MI of a sparse-input network over its stored patterns.
pub fn select_threshold(
    net: &HopfieldNet,
    patterns: &PatternSet,
    candidates: &[f64],
    noise_frac: f64,
    max_sweeps: usize,
    rng_seed: u64,
) -> Result<(f64, f64)> {
    let Variant::SparseInput { .. } = net.variant() else {
        return Err(Error::KindMismatch { expected: "sparse_input", got: net.variant().name() });
    };
    let mut best: Option<(f64, f64)> = None;
    for &theta in candidates {
        let trial = net.clone().with_threshold(theta);
        let mut rng = RngStream::new(rng_seed);
        let mut total = 0.0;
        for mu in 0..patterns.n_patts() {
            let stored = patterns.pattern(mu);
            let cue = corrupt(&stored, noise_frac, patterns.kind, &mut rng)?;
            let out = trial.recall(&cue, max_sweeps)?.state;
            total += sparse_recall_mi(&stored, &out);
        }
        let mi = total / patterns.n_patts().max(1) as f64;
        if best.map_or(true, |(_, b)| mi > b) {
            best = Some((theta, mi));
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("no threshold candidates".into()))
}

/// Per-pattern MI of a 0/1 recall, using the stored pattern's own density.
/// Inconsistent error rates count as zero.
pub fn sparse_recall_mi(stored: &RealVector, recovered: &RealVector) -> f64 {
    let n = stored.len() as f64;
    let p = stored.sum() / n;
    if p == 0.0 || p == 1.0 {
        return 0.0;
    }
    let q = recovered.sum() / n;
    let m = stored.dot(recovered) / n;
    mi_sparse_binary(p, q, m).unwrap_or(0.0)
}

//! The memory scaffold: a fixed bipartite attractor between a k-hot label
//! layer and a dense ±1 hidden layer.
//!
//! The label→hidden projection is a fixed Gaussian matrix. The hidden→label
//! return weights are the Hebbian outer-product sum over all predefined label
//! states and their hidden images, normalised by the number of states. Label
//! dynamics are k-winners-take-all.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::hamming_distance;
use crate::numerics::{derive_seed, sgn, sign_of, topk, RealMatrix, RealVector, RngStream};
use crate::patterns::{binomial, flip_at, flip_positions, gen_khot_labels, sample_khot_labels, PatternKind, PatternSet};

/// Default ceiling on the estimated scaffold footprint.
pub const DEFAULT_MAX_BYTES: u128 = 4 << 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaffoldConfig {
    pub n_label: usize,
    pub k: usize,
    pub n_hidden: usize,
    pub seed: u64,
    /// Cap on the number of predefined states. Smaller than `C(n_label, k)`
    /// selects a seed-determined random subset.
    #[serde(default)]
    pub label_limit: Option<usize>,
    #[serde(default = "default_max_bytes")]
    pub max_bytes: u128,
}

fn default_max_bytes() -> u128 {
    DEFAULT_MAX_BYTES
}

impl ScaffoldConfig {
    pub fn new(n_label: usize, k: usize, n_hidden: usize, seed: u64) -> Self {
        Self {
            n_label,
            k,
            n_hidden,
            seed,
            label_limit: None,
            max_bytes: DEFAULT_MAX_BYTES,
        }
    }

    pub fn with_label_limit(mut self, limit: usize) -> Self {
        self.label_limit = Some(limit);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.n_label {
            return Err(Error::InvalidK { k: self.k, len: self.n_label });
        }
        if self.n_hidden == 0 {
            return Err(Error::InvalidParameter("n_hidden must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of predefined states this config produces.
    pub fn n_states(&self) -> Result<usize> {
        self.validate()?;
        let total = binomial(self.n_label, self.k);
        match (self.label_limit, total) {
            (Some(limit), Ok(c)) => Ok(limit.min(usize::try_from(c).unwrap_or(usize::MAX))),
            (Some(limit), Err(_)) => Ok(limit),
            (None, Ok(c)) => usize::try_from(c).map_err(|_| Error::CombinatorialOverflow { n: self.n_label, k: self.k }),
            (None, Err(e)) => Err(e),
        }
    }

    fn estimated_bytes(&self, n_states: usize) -> u128 {
        let states = n_states as u128;
        let (nl, nh) = (self.n_label as u128, self.n_hidden as u128);
        8 * ((nl + nh) * states + 2 * nl * nh)
    }
}

#[derive(Debug, Clone)]
pub struct Scaffold {
    config: ScaffoldConfig,
    w_hl: RealMatrix,
    w_lh: RealMatrix,
    labels: PatternSet,
    hidden: RealMatrix,
}

/// Hidden images `sgn(w_hl l)` of every label column.
fn hidden_states(w_hl: &RealMatrix, labels: &RealMatrix) -> RealMatrix {
    (w_hl * labels).map(sign_of)
}

/// `(1 / m) * sum_{mu < m} l^mu (h^mu)^T`.
pub fn hebbian_return_weights(labels: &RealMatrix, hidden: &RealMatrix, m: usize) -> RealMatrix {
    let l = labels.columns(0, m);
    let h = hidden.columns(0, m);
    (l * h.transpose()) / m.max(1) as f64
}

impl Scaffold {
    pub fn build(config: ScaffoldConfig) -> Result<Scaffold> {
        let n_states = config.n_states()?;
        let needed = config.estimated_bytes(n_states);
        if needed > config.max_bytes {
            return Err(Error::MemoryCap { needed, cap: config.max_bytes });
        }
        let mut rng = RngStream::with_stream(config.seed, 0);
        let w_hl = rng.normal_matrix(config.n_hidden, config.n_label);

        let full = binomial(config.n_label, config.k).ok().and_then(|c| usize::try_from(c).ok());
        let labels = match full {
            Some(c) if n_states >= c => gen_khot_labels(config.n_label, config.k, None)?,
            _ => {
                let mut label_rng = RngStream::with_stream(config.seed, 1);
                sample_khot_labels(config.n_label, config.k, n_states, &mut label_rng)?
            }
        };
        let hidden = hidden_states(&w_hl, &labels.data);
        let w_lh = hebbian_return_weights(&labels.data, &hidden, n_states);
        Ok(Scaffold { config, w_hl, w_lh, labels, hidden })
    }

    /// Reassembles a scaffold from explicit weights; `w_lh` is taken as given.
    pub fn from_parts(config: ScaffoldConfig, w_hl: RealMatrix, w_lh: RealMatrix, labels: PatternSet) -> Result<Scaffold> {
        config.validate()?;
        let (nh, nl) = (config.n_hidden, config.n_label);
        if w_hl.shape() != (nh, nl) {
            return Err(Error::Dimension { expected: nh * nl, got: w_hl.len(), context: "w_hl shape" });
        }
        if w_lh.shape() != (nl, nh) {
            return Err(Error::Dimension { expected: nh * nl, got: w_lh.len(), context: "w_lh shape" });
        }
        if labels.n_bits() != nl {
            return Err(Error::Dimension { expected: nl, got: labels.n_bits(), context: "label length" });
        }
        let hidden = hidden_states(&w_hl, &labels.data);
        Ok(Scaffold { config, w_hl, w_lh, labels, hidden })
    }

    pub fn config(&self) -> &ScaffoldConfig {
        &self.config
    }

    pub fn n_states(&self) -> usize {
        self.labels.n_patts()
    }

    pub fn n_label(&self) -> usize {
        self.config.n_label
    }

    pub fn n_hidden(&self) -> usize {
        self.config.n_hidden
    }

    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn w_hl(&self) -> &RealMatrix {
        &self.w_hl
    }

    pub fn w_lh(&self) -> &RealMatrix {
        &self.w_lh
    }

    /// All predefined labels, one per column.
    pub fn labels(&self) -> &PatternSet {
        &self.labels
    }

    /// All predefined hidden states `h^mu`, one per column.
    pub fn hidden(&self) -> &RealMatrix {
        &self.hidden
    }

    pub fn label(&self, mu: usize) -> Result<RealVector> {
        self.check_index(mu)?;
        Ok(self.labels.pattern(mu))
    }

    pub fn hidden_state(&self, mu: usize) -> Result<RealVector> {
        self.check_index(mu)?;
        Ok(self.hidden.column(mu).into_owned())
    }

    fn check_index(&self, mu: usize) -> Result<()> {
        if mu >= self.n_states() {
            return Err(Error::IndexOutOfRange { index: mu, len: self.n_states(), what: "scaffold states" });
        }
        Ok(())
    }

    /// One scaffold update: `l = topk(w_lh h)`, `h' = sgn(w_hl l)`.
    pub fn step(&self, h: &RealVector) -> Result<(RealVector, RealVector)> {
        step_with(&self.w_lh, &self.w_hl, self.config.k, h)
    }

    /// Index of the predefined state whose hidden image equals `h`, if any.
    pub fn state_index(&self, h: &RealVector) -> Option<usize> {
        (0..self.n_states()).find(|&mu| self.hidden.column(mu) == *h)
    }

    /// Number of predefined states that are exact fixed points of [`Self::step`].
    pub fn fixed_point_count(&self) -> Result<usize> {
        let hits: Result<Vec<bool>> = (0..self.n_states())
            .into_par_iter()
            .map(|mu| {
                let h = self.hidden.column(mu).into_owned();
                let (l, h_next) = self.step(&h)?;
                Ok(l == self.labels.data.column(mu) && h_next == h)
            })
            .collect();
        Ok(hits?.into_iter().filter(|&b| b).count())
    }
}

fn step_with(w_lh: &RealMatrix, w_hl: &RealMatrix, k: usize, h: &RealVector) -> Result<(RealVector, RealVector)> {
    if h.len() != w_lh.ncols() {
        return Err(Error::Dimension { expected: w_lh.ncols(), got: h.len(), context: "hidden state length" });
    }
    let l = topk(&(w_lh * h), k)?;
    let h_next = sgn(&(w_hl * &l))?;
    Ok((l, h_next))
}

/// Point on a capacity curve: mean relative hidden recovery error after one
/// scaffold step when the first `m` labels are stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityPoint {
    pub m: usize,
    pub mean_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityRow {
    pub n_label: usize,
    pub k: usize,
    pub n_hidden: usize,
    pub n_states: usize,
    /// Largest stored count whose mean recovery error stays within threshold.
    pub capacity: usize,
    pub curve: Vec<CapacityPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacitySettings {
    pub noise_frac: f64,
    pub error_threshold: f64,
    pub trials: usize,
    pub seed: u64,
    /// Number of stored counts to probe. Zero probes every count up to the
    /// number of states.
    #[serde(default)]
    pub grid_points: usize,
}

impl Default for CapacitySettings {
    fn default() -> Self {
        Self {
            noise_frac: 0.2,
            error_threshold: 0.03,
            trials: 3,
            seed: 0,
            grid_points: 0,
        }
    }
}

/// Stored counts to probe: every count for small scaffolds, otherwise a
/// geometric grid that always includes the full state count.
pub fn capacity_grid(n_states: usize, grid_points: usize) -> Vec<usize> {
    if grid_points == 0 || n_states <= grid_points {
        return (1..=n_states).collect();
    }
    let mut grid: Vec<usize> = (0..grid_points)
        .map(|i| {
            let t = i as f64 / (grid_points - 1) as f64;
            (n_states as f64).powf(t).round() as usize
        })
        .collect();
    grid.push(n_states);
    grid.sort_unstable();
    grid.dedup();
    grid.retain(|&m| m >= 1);
    grid
}

/// Mean relative recovery error for each `m` in `grid`, for one scaffold
/// realisation.
fn capacity_curve(config: &ScaffoldConfig, grid: &[usize], noise_frac: f64, noise_seed: u64) -> Result<Vec<f64>> {
    let full = Scaffold::build(config.clone())?;
    let k = config.k;
    let (labels, hidden) = (&full.labels.data, &full.hidden);
    let mut sum = RealMatrix::zeros(config.n_label, config.n_hidden);
    let mut stored = 0;
    let mut out = Vec::with_capacity(grid.len());
    for &m in grid {
        for mu in stored..m {
            sum += labels.column(mu) * hidden.column(mu).transpose();
        }
        stored = m;
        let w_lh = &sum / m as f64;
        let mut rng = RngStream::with_stream(noise_seed, m as u64);
        let mut total = 0.0;
        for mu in 0..m {
            let h = hidden.column(mu).into_owned();
            let positions = flip_positions(h.len(), noise_frac, &mut rng);
            let noisy = flip_at(&h, &positions, PatternKind::DenseBinary);
            let (_, recovered) = step_with(&w_lh, &full.w_hl, k, &noisy)?;
            let before = hamming_distance(&noisy, &h);
            let after = hamming_distance(&recovered, &h);
            total += if before > 0.0 {
                after / before
            } else if after == 0.0 {
                0.0
            } else {
                1.0
            };
        }
        out.push(total / m as f64);
    }
    Ok(out)
}

/// Capacity of the scaffold for each `(n_label, k, n_hidden)` in `dims`.
///
/// For each stored count `m` the first `m` labels are written into the
/// return weights, every stored hidden state is corrupted by
/// `noise_frac` bit flips and run through one scaffold step, and the relative
/// Hamming recovery error is averaged over states and trials.
pub fn scaffold_capacity(dims: &[(usize, usize, usize)], settings: &CapacitySettings) -> Result<Vec<CapacityRow>> {
    if !(0.0..=1.0).contains(&settings.noise_frac) || !(0.0..=1.0).contains(&settings.error_threshold) {
        return Err(Error::InvalidParameter("noise fraction and error threshold must lie in [0, 1]".into()));
    }
    let trials = settings.trials.max(1);
    dims.par_iter()
        .map(|&(n_label, k, n_hidden)| {
            let probe = ScaffoldConfig::new(n_label, k, n_hidden, 0);
            let n_states = probe.n_states()?;
            let grid = capacity_grid(n_states, settings.grid_points);
            let per_trial: Result<Vec<Vec<f64>>> = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let seed = derive_seed(&[settings.seed, n_label as u64, k as u64, n_hidden as u64, t as u64]);
                    let config = ScaffoldConfig { seed, ..probe.clone() };
                    capacity_curve(&config, &grid, settings.noise_frac, derive_seed(&[seed, 0x6e6f_6973_65]))
                })
                .collect();
            let per_trial = per_trial?;
            let curve: Vec<CapacityPoint> = grid
                .iter()
                .enumerate()
                .map(|(i, &m)| CapacityPoint {
                    m,
                    mean_error: per_trial.iter().map(|c| c[i]).sum::<f64>() / trials as f64,
                })
                .collect();
            let capacity = curve
                .iter()
                .filter(|p| p.mean_error <= settings.error_threshold)
                .map(|p| p.m)
                .max()
                .unwrap_or(0);
            Ok(CapacityRow { n_label, k, n_hidden, n_states, capacity, curve })
        })
        .collect()
}

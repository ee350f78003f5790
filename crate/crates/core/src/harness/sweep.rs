//! Grid sweeps: one row per (spec, stored count, trial).

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{select_threshold, sparse_recall_mi, train_bounded, train_hebbian, train_pinv, train_sparse_conn, train_sparse_input, HopfieldNet};
use crate::error::Result;
use crate::harness::spec::{Dims, ModelKind, SweepSpec};
use crate::mesh::{presign_overlap, voronoi_correct, Assignment, LearningRule, MeshNetwork, RecallMode};
use crate::metrics::{cosine, mean_mi_continuous, mi_bound_perinbit, mi_dense_binary, overlap_binary, recovery_errors, Layer, MiValue};
use crate::numerics::{derive_seed, RealVector, RngStream, DEFAULT_RCOND};
use crate::patterns::{corrupt, gen_continuous, gen_dense_binary, gen_sparse_binary, PatternKind, PatternSet};
use crate::scaffold::{Scaffold, ScaffoldConfig};

const SCAFFOLD_SALT: u64 = 0x5caf_f01d;
const CUE_SALT: u64 = 0xc0e;
const THETA_SALT: u64 = 0x7e7a;

/// One CSV row. Fields that do not apply to a model are left empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub model: ModelKind,
    pub dims: String,
    pub n_patts: usize,
    pub noise_frac: f64,
    pub trial: usize,
    /// Mean `f . presign / |f|^2` (MESH only).
    pub presign_overlap: Option<f64>,
    /// Mean overlap of the recovered pattern: `f . r / N` for ±1 patterns,
    /// cosine for continuous and sparse patterns.
    pub postsign_overlap: Option<f64>,
    /// Bits per input bit; nats per component for continuous patterns.
    pub mi_per_input_bit: Option<MiValue>,
    pub mi_per_synapse: Option<MiValue>,
    pub bound_per_input_bit: Option<f64>,
    pub feature_error: Option<f64>,
    pub label_error: Option<f64>,
    pub hidden_error: Option<f64>,
    pub voronoi_correct_fraction: Option<f64>,
    /// Recalls that hit the step or sweep budget without settling.
    pub nonconverged: Option<usize>,
    /// Firing threshold chosen for the sparse-input network.
    pub theta: Option<f64>,
    pub error: Option<String>,
}

/// Rows in (spec, grid position, trial) order, with the wall time of each
/// row kept apart so the rows stay byte-reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub wall_times: Vec<f64>,
}

impl SweepResult {
    pub fn extend(&mut self, other: SweepResult) {
        self.rows.extend(other.rows);
        self.wall_times.extend(other.wall_times);
    }
}

/// FNV-1a of the model tag, mixed into every seed of that model.
fn tag_seed(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Seed of one (stored count, trial) cell. Keyed by the count itself, so
/// reordering the grid leaves every cell unchanged.
pub fn cell_seed(spec: &SweepSpec, n_patts: usize, trial: usize) -> u64 {
    derive_seed(&[spec.master_seed, tag_seed(spec.model.tag()), n_patts as u64, trial as u64])
}

/// Seed of the scaffold shared by every cell of one trial.
pub fn scaffold_seed(spec: &SweepSpec, trial: usize) -> u64 {
    derive_seed(&[spec.master_seed, tag_seed(spec.model.tag()), SCAFFOLD_SALT, trial as u64])
}

/// Runs every cell of `spec`. Cells run in parallel; a failing cell yields a
/// row carrying the error message.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    let dims = spec.validate()?;
    let jobs: Vec<(usize, usize)> = spec
        .n_patts_grid
        .iter()
        .flat_map(|&n| (0..spec.trials).map(move |t| (n, t)))
        .collect();
    let scaffolds: Vec<std::result::Result<Arc<Scaffold>, String>> = match dims {
        Dims::Mesh { .. } => (0..spec.trials)
            .into_par_iter()
            .map(|t| build_scaffold(spec, &dims, t).map(Arc::new).map_err(|e| e.to_string()))
            .collect(),
        _ => Vec::new(),
    };
    let out: Vec<(SweepRow, f64)> = jobs
        .par_iter()
        .map(|&(n_patts, trial)| {
            let start = Instant::now();
            let mut row = blank_row(spec, &dims, n_patts, trial);
            let outcome = match &dims {
                Dims::Mesh { .. } => match &scaffolds[trial] {
                    Ok(s) => mesh_cell(spec, s.clone(), n_patts, trial, &mut row).map_err(|e| e.to_string()),
                    Err(e) => Err(e.clone()),
                },
                _ => hopfield_cell(spec, &dims, n_patts, trial, &mut row).map_err(|e| e.to_string()),
            };
            if let Err(e) = outcome {
                row.error = Some(e);
            }
            (row, start.elapsed().as_secs_f64())
        })
        .collect();
    let (rows, wall_times) = out.into_iter().unzip();
    Ok(SweepResult { rows, wall_times })
}

/// Runs several specs and concatenates their rows in order.
pub fn run_sweeps(specs: &[SweepSpec]) -> Result<SweepResult> {
    let mut all = SweepResult { rows: Vec::new(), wall_times: Vec::new() };
    for spec in specs {
        all.extend(run_sweep(spec)?);
    }
    Ok(all)
}

fn build_scaffold(spec: &SweepSpec, dims: &Dims, trial: usize) -> Result<Scaffold> {
    let Dims::Mesh { n_label, k, n_hidden, label_limit, .. } = *dims else {
        unreachable!("scaffolds belong to MESH sweeps")
    };
    let mut config = ScaffoldConfig::new(n_label, k, n_hidden, scaffold_seed(spec, trial));
    if let Some(limit) = label_limit {
        config = config.with_label_limit(limit);
    }
    Scaffold::build(config)
}

fn blank_row(spec: &SweepSpec, dims: &Dims, n_patts: usize, trial: usize) -> SweepRow {
    SweepRow {
        model: spec.model,
        dims: dims.to_string(),
        n_patts,
        noise_frac: spec.noise_frac,
        trial,
        presign_overlap: None,
        postsign_overlap: None,
        mi_per_input_bit: None,
        mi_per_synapse: None,
        bound_per_input_bit: None,
        feature_error: None,
        label_error: None,
        hidden_error: None,
        voronoi_correct_fraction: None,
        nonconverged: None,
        theta: None,
        error: None,
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len().max(1) as f64
}

/// `(1 - cos) / 2`: zero for a perfect match, one for an antiparallel one.
fn continuous_feature_error(r: f64) -> f64 {
    (1.0 - r) / 2.0
}

fn per_synapse(mi: MiValue, n_bits: usize, n_patts: usize, synapses: u64) -> MiValue {
    match mi {
        MiValue::Finite(v) => MiValue::Finite(v * (n_bits * n_patts) as f64 / synapses.max(1) as f64),
        MiValue::Infinite => MiValue::Infinite,
    }
}

fn mesh_cell(spec: &SweepSpec, scaffold: Arc<Scaffold>, n_patts: usize, trial: usize, row: &mut SweepRow) -> Result<()> {
    let Dims::Mesh { n_label, k, n_hidden, n_feature, .. } = spec.dims()? else { unreachable!() };
    let seed = cell_seed(spec, n_patts, trial);
    let mut rng = RngStream::with_stream(seed, 0);
    let (rule, mode) = match spec.model {
        ModelKind::MeshPinv => (LearningRule::Pseudoinverse, RecallMode::Binary),
        ModelKind::MeshHebbian => (LearningRule::Hebbian, RecallMode::Binary),
        _ => (LearningRule::Pseudoinverse, RecallMode::Continuous),
    };
    let patterns = match mode {
        RecallMode::Binary => gen_dense_binary(n_feature, n_patts, &mut rng)?,
        RecallMode::Continuous => gen_continuous(n_feature, n_patts, &mut rng)?,
    };
    let assignment = Assignment::for_scaffold(&scaffold);
    let net = MeshNetwork::store_with(scaffold.clone(), &patterns, rule, mode, assignment, DEFAULT_RCOND)?;

    let mut cue_rng = RngStream::with_stream(derive_seed(&[seed, CUE_SALT]), 0);
    let cues: Vec<RealVector> = (0..n_patts)
        .map(|mu| corrupt(&patterns.pattern(mu), spec.noise_frac, patterns.kind, &mut cue_rng))
        .collect::<Result<_>>()?;
    let recalls = cues
        .par_iter()
        .map(|cue| net.recall(cue, spec.max_steps))
        .collect::<Result<Vec<_>>>()?;

    let (mut pre, mut post, mut feat, mut lab, mut hid) = (vec![], vec![], vec![], vec![], vec![]);
    let mut voronoi = 0usize;
    let mut nonconverged = 0usize;
    for (mu, r) in recalls.iter().enumerate() {
        let f = patterns.pattern(mu);
        let state = net.assignment()[mu];
        let label = scaffold.label(state)?;
        let hidden = scaffold.hidden_state(state)?;
        pre.push(presign_overlap(&f, &r.presign));
        match mode {
            RecallMode::Binary => {
                post.push(overlap_binary(&f, &r.recovered)?);
                feat.push(recovery_errors(&f, &cues[mu], &r.recovered, Layer::Feature)?.normalized);
            }
            RecallMode::Continuous => {
                let c = cosine(&f, &r.recovered)?;
                post.push(c);
                feat.push(continuous_feature_error(c));
            }
        }
        lab.push(recovery_errors(&label, &label, &r.label, Layer::Label { k })?.normalized);
        hid.push(recovery_errors(&hidden, &hidden, &r.hidden, Layer::Hidden)?.normalized);
        if voronoi_correct(&r.recovered, &patterns, mu)? {
            voronoi += 1;
        }
        if !r.converged {
            nonconverged += 1;
        }
    }
    let mi = match mode {
        RecallMode::Binary => MiValue::Finite(mean(&post.iter().map(|&m| mi_dense_binary(m)).collect::<Result<Vec<_>>>()?)),
        RecallMode::Continuous => mean_mi_continuous(&post)?,
    };
    let synapses = crate::metrics::count_synapses(crate::metrics::ModelDescriptor::Mesh { n_label, n_hidden, n_feature }).learnable;
    row.presign_overlap = Some(mean(&pre));
    row.postsign_overlap = Some(mean(&post));
    row.mi_per_input_bit = Some(mi);
    row.mi_per_synapse = Some(per_synapse(mi, n_feature, n_patts, synapses));
    row.bound_per_input_bit = Some(mi_bound_perinbit(n_hidden, n_feature, n_label, n_patts));
    row.feature_error = Some(mean(&feat));
    row.label_error = Some(mean(&lab));
    row.hidden_error = Some(mean(&hid));
    row.voronoi_correct_fraction = Some(voronoi as f64 / n_patts as f64);
    row.nonconverged = Some(nonconverged);
    Ok(())
}

fn hopfield_cell(spec: &SweepSpec, dims: &Dims, n_patts: usize, trial: usize, row: &mut SweepRow) -> Result<()> {
    let seed = cell_seed(spec, n_patts, trial);
    let mut rng = RngStream::with_stream(seed, 0);
    let (n, patterns, net, theta) = match dims {
        Dims::Hopfield { n } => {
            let xi = gen_dense_binary(*n, n_patts, &mut rng)?;
            let net = match spec.model {
                ModelKind::HopfieldPinv => train_pinv(&xi)?,
                _ => train_hebbian(&xi)?,
            };
            (*n, xi, net, None)
        }
        Dims::Bounded { n, bound, lr } => {
            let xi = gen_dense_binary(*n, n_patts, &mut rng)?;
            let net = train_bounded(&xi, *bound, *lr)?;
            (*n, xi, net, None)
        }
        Dims::SparseConn { n, gamma } => {
            let xi = gen_dense_binary(*n, n_patts, &mut rng)?;
            let net = train_sparse_conn(&xi, *gamma, derive_seed(&[seed, 0x3a5c]))?;
            (*n, xi, net, None)
        }
        Dims::SparseInput { n, p, theta_grid } => {
            let xi = gen_sparse_binary(*n, n_patts, *p, &mut rng)?;
            let net = train_sparse_input(&xi, *p, 0.0)?;
            let (theta, _) = select_threshold(&net, &xi, theta_grid, spec.noise_frac, spec.max_sweeps, derive_seed(&[seed, THETA_SALT]))?;
            (*n, xi, net.with_threshold(theta), Some(theta))
        }
        Dims::Mesh { .. } => unreachable!("MESH cells run in mesh_cell"),
    };
    let net: HopfieldNet = net.with_order_seed(derive_seed(&[seed, 0x0d3e]));
    let mut cue_rng = RngStream::with_stream(derive_seed(&[seed, CUE_SALT]), 0);
    let cues: Vec<RealVector> = (0..n_patts)
        .map(|mu| corrupt(&patterns.pattern(mu), spec.noise_frac, patterns.kind, &mut cue_rng))
        .collect::<Result<_>>()?;
    let recalls = cues
        .par_iter()
        .map(|cue| net.recall(cue, spec.max_sweeps))
        .collect::<Result<Vec<_>>>()?;

    let sparse = matches!(patterns.kind, PatternKind::SparseBinary { .. });
    let (mut post, mut mis, mut feat) = (vec![], vec![], vec![]);
    let mut voronoi = 0usize;
    let mut nonconverged = 0usize;
    for (mu, r) in recalls.iter().enumerate() {
        let f = patterns.pattern(mu);
        if sparse {
            post.push(if r.state.norm() > 0.0 { cosine(&f, &r.state)? } else { 0.0 });
            mis.push(sparse_recall_mi(&f, &r.state));
            feat.push(crate::metrics::hamming_distance(&f, &r.state) / n as f64);
        } else {
            let m = overlap_binary(&f, &r.state)?;
            post.push(m);
            mis.push(mi_dense_binary(m)?);
            feat.push(recovery_errors(&f, &cues[mu], &r.state, Layer::Feature)?.normalized);
        }
        if voronoi_correct(&r.state, &patterns, mu)? {
            voronoi += 1;
        }
        if !r.converged {
            nonconverged += 1;
        }
    }
    let mi = MiValue::Finite(mean(&mis));
    let synapses = net.synapses();
    row.postsign_overlap = Some(mean(&post));
    row.mi_per_input_bit = Some(mi);
    row.mi_per_synapse = Some(per_synapse(mi, n, n_patts, synapses));
    row.bound_per_input_bit = Some((synapses as f64 / (n_patts * n) as f64).min(1.0));
    row.feature_error = Some(mean(&feat));
    row.voronoi_correct_fraction = Some(voronoi as f64 / n_patts as f64);
    row.nonconverged = Some(nonconverged);
    row.theta = theta;
    Ok(())
}

/// Patterns a cell stores, regenerated from its seed.
pub fn cell_patterns(spec: &SweepSpec, n_patts: usize, trial: usize) -> Result<PatternSet> {
    let mut rng = RngStream::with_stream(cell_seed(spec, n_patts, trial), 0);
    match spec.dims()? {
        Dims::Mesh { n_feature, .. } if spec.model == ModelKind::MeshContinuous => gen_continuous(n_feature, n_patts, &mut rng),
        Dims::Mesh { n_feature, .. } => gen_dense_binary(n_feature, n_patts, &mut rng),
        Dims::SparseInput { n, p, .. } => gen_sparse_binary(n, n_patts, p, &mut rng),
        Dims::Hopfield { n } | Dims::Bounded { n, .. } | Dims::SparseConn { n, .. } => gen_dense_binary(n, n_patts, &mut rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::spec::Sizes;

    fn spec(model: ModelKind, sizes: Sizes, grid: Vec<usize>) -> SweepSpec {
        SweepSpec { model, sizes, n_patts_grid: grid, noise_frac: 0.0, trials: 2, master_seed: 5, max_steps: 5, max_sweeps: 50 }
    }

    fn mesh_sizes() -> Sizes {
        Sizes { n_label: Some(10), k: Some(3), n_hidden: Some(100), n_feature: Some(120), ..Sizes::default() }
    }

    #[test]
    fn one_row_per_cell_and_trial_in_order() {
        let s = spec(ModelKind::MeshPinv, mesh_sizes(), vec![50, 20, 120]);
        let res = run_sweep(&s).unwrap();
        let keys: Vec<_> = res.rows.iter().map(|r| (r.n_patts, r.trial)).collect();
        assert_eq!(keys, vec![(50, 0), (50, 1), (20, 0), (20, 1), (120, 0), (120, 1)]);
        assert_eq!(res.wall_times.len(), 6);
        for r in &res.rows[..4] {
            assert!(r.error.is_none());
            assert_eq!(r.mi_per_input_bit, Some(MiValue::Finite(1.0)));
            assert_eq!(r.voronoi_correct_fraction, Some(1.0));
        }
    }

    #[test]
    fn cells_are_stable_under_grid_reordering() {
        let a = run_sweep(&spec(ModelKind::HopfieldHebbian, Sizes { n: Some(60), ..Sizes::default() }, vec![4, 8])).unwrap();
        let b = run_sweep(&spec(ModelKind::HopfieldHebbian, Sizes { n: Some(60), ..Sizes::default() }, vec![8, 4])).unwrap();
        assert_eq!(a.rows[0], b.rows[2]);
        assert_eq!(a.rows[3], b.rows[1]);
    }

    #[test]
    fn every_model_runs() {
        for model in ModelKind::ALL {
            let sizes = match model {
                m if m.is_mesh() => mesh_sizes(),
                ModelKind::HopfieldSparseInput => Sizes { n: Some(80), p: Some(0.1), ..Sizes::default() },
                ModelKind::HopfieldSparseConn => Sizes { n: Some(80), gamma: Some(0.5), ..Sizes::default() },
                _ => Sizes { n: Some(80), ..Sizes::default() },
            };
            let mut s = spec(model, sizes, vec![5]);
            s.noise_frac = 0.05;
            let res = run_sweep(&s).unwrap();
            for r in &res.rows {
                assert!(r.error.is_none(), "{model}: {:?}", r.error);
                assert!(r.mi_per_input_bit.is_some());
                assert_eq!(r.theta.is_some(), model == ModelKind::HopfieldSparseInput);
                assert_eq!(r.presign_overlap.is_some(), model.is_mesh());
            }
        }
    }

    #[test]
    fn continuous_perfect_recall_is_infinite() {
        let res = run_sweep(&spec(ModelKind::MeshContinuous, mesh_sizes(), vec![30])).unwrap();
        assert_eq!(res.rows[0].mi_per_input_bit, Some(MiValue::Infinite));
    }

    #[test]
    fn cell_patterns_match_sweep_generation() {
        let s = spec(ModelKind::HopfieldPinv, Sizes { n: Some(30), ..Sizes::default() }, vec![3]);
        let a = cell_patterns(&s, 3, 1).unwrap();
        let b = cell_patterns(&s, 3, 1).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, cell_patterns(&s, 3, 0).unwrap());
    }
}

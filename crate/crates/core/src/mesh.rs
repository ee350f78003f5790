//! Heteroassociative storage of feature patterns on the memory scaffold and
//! recall from clean or corrupted cues.
//!
//! Pattern `mu` is hooked onto scaffold state `assignment[mu]`. The default
//! assignment is a seeded random permutation of the scaffold states:
//! lexicographic prefixes of the k-hot labels share active bits, and their
//! hidden images are often linearly dependent. Recall maps the cue into the
//! hidden layer, lets the scaffold clean it up and then reads the feature
//! pattern back out.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{cosine, mi_dense_binary, overlap_binary};
use crate::numerics::{derive_seed, pseudoinverse, sgn, sign_of, RealMatrix, RealVector, RngStream, DEFAULT_RCOND};
use crate::patterns::{gen_continuous, gen_dense_binary, PatternKind, PatternSet};
use crate::scaffold::{Scaffold, ScaffoldConfig};

pub const DEFAULT_MAX_STEPS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearningRule {
    /// `w_hf = H F+`, `w_fh = F H+`.
    Pseudoinverse,
    /// `w_hf = H F^T`, `w_fh = F H^T`.
    Hebbian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecallMode {
    /// Feature readout through `sgn`.
    Binary,
    /// Linear feature readout normalised to unit length.
    Continuous,
}

/// How stored patterns are mapped onto scaffold states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assignment {
    /// Pattern `mu` onto state `mu`.
    Canonical,
    /// Pattern `mu` onto state `perm[mu]` for a permutation drawn from the seed.
    Shuffled(u64),
}

impl Assignment {
    /// Shuffled with a seed tied to the scaffold's own seed.
    pub fn for_scaffold(scaffold: &Scaffold) -> Assignment {
        Assignment::Shuffled(derive_seed(&[scaffold.config().seed, 0xa551_6e]))
    }

    pub fn states(&self, n_states: usize, n_patts: usize) -> Vec<usize> {
        match *self {
            Assignment::Canonical => (0..n_patts).collect(),
            Assignment::Shuffled(seed) => {
                let mut perm = RngStream::new(seed).permutation(n_states);
                perm.truncate(n_patts);
                perm
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct MeshNetwork {
    scaffold: Arc<Scaffold>,
    assignment: Vec<usize>,
    w_hf: RealMatrix,
    w_fh: RealMatrix,
    stored: PatternSet,
    rule: LearningRule,
    mode: RecallMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecallResult {
    pub recovered: RealVector,
    /// Feature drive `w_fh h` before the output nonlinearity.
    pub presign: RealVector,
    pub label: RealVector,
    pub hidden: RealVector,
    pub steps_run: usize,
    /// Whether the hidden state repeated within the step budget.
    pub converged: bool,
}

impl MeshNetwork {
    /// Stores `patterns` with the given rule and the scaffold's default
    /// assignment; recall mode follows the pattern kind.
    pub fn store(scaffold: Arc<Scaffold>, patterns: &PatternSet, rule: LearningRule) -> Result<MeshNetwork> {
        let mode = match patterns.kind {
            PatternKind::ContinuousNormal => RecallMode::Continuous,
            _ => RecallMode::Binary,
        };
        let assignment = Assignment::for_scaffold(&scaffold);
        Self::store_with(scaffold, patterns, rule, mode, assignment, DEFAULT_RCOND)
    }

    pub fn store_with(
        scaffold: Arc<Scaffold>,
        patterns: &PatternSet,
        rule: LearningRule,
        mode: RecallMode,
        assignment: Assignment,
        rcond: f64,
    ) -> Result<MeshNetwork> {
        let n_patts = patterns.n_patts();
        if n_patts == 0 {
            return Err(Error::EmptyMatrix);
        }
        if n_patts > scaffold.n_states() {
            return Err(Error::TooManyPatterns { count: n_patts, states: scaffold.n_states() });
        }
        let f = &patterns.data;
        let assignment = assignment.states(scaffold.n_states(), n_patts);
        let h = hooked(&scaffold, &assignment);
        let (w_hf, w_fh) = match rule {
            LearningRule::Pseudoinverse => (&h * pseudoinverse(f, rcond)?, f * pseudoinverse(&h, rcond)?),
            LearningRule::Hebbian => (&h * f.transpose(), f * h.transpose()),
        };
        Ok(MeshNetwork { scaffold, assignment, w_hf, w_fh, stored: patterns.clone(), rule, mode })
    }

    pub fn scaffold(&self) -> &Scaffold {
        &self.scaffold
    }

    pub fn n_feature(&self) -> usize {
        self.stored.n_bits()
    }

    pub fn n_patts(&self) -> usize {
        self.stored.n_patts()
    }

    pub fn stored(&self) -> &PatternSet {
        &self.stored
    }

    pub fn rule(&self) -> LearningRule {
        self.rule
    }

    pub fn mode(&self) -> RecallMode {
        self.mode
    }

    pub fn w_hf(&self) -> &RealMatrix {
        &self.w_hf
    }

    pub fn w_fh(&self) -> &RealMatrix {
        &self.w_fh
    }

    /// Scaffold state index of each stored pattern.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Hidden states `H` the patterns were hooked onto.
    pub fn hooked_hidden(&self) -> RealMatrix {
        hooked(&self.scaffold, &self.assignment)
    }

    /// Runs recall from `cue` for at most `max_steps` scaffold iterations,
    /// stopping early once the hidden state repeats.
    pub fn recall(&self, cue: &RealVector, max_steps: usize) -> Result<RecallResult> {
        if cue.len() != self.n_feature() {
            return Err(Error::Dimension { expected: self.n_feature(), got: cue.len(), context: "cue length" });
        }
        let mut hidden = sgn(&(&self.w_hf * cue))?;
        let mut label = RealVector::zeros(self.scaffold.n_label());
        let mut steps_run = 0;
        let mut converged = false;
        for _ in 0..max_steps.max(1) {
            let (l, next) = self.scaffold.step(&hidden)?;
            steps_run += 1;
            label = l;
            converged = next == hidden;
            hidden = next;
            if converged {
                break;
            }
        }
        let presign = &self.w_fh * &hidden;
        let recovered = match self.mode {
            RecallMode::Binary => presign.map(sign_of),
            RecallMode::Continuous => {
                let norm = presign.norm();
                if norm > 0.0 {
                    &presign / norm
                } else {
                    presign.clone()
                }
            }
        };
        Ok(RecallResult { recovered, presign, label, hidden, steps_run, converged })
    }

    /// Recall of every stored pattern from its clean cue.
    pub fn recall_clean(&self, max_steps: usize) -> Result<Vec<RecallResult>> {
        (0..self.n_patts())
            .into_par_iter()
            .map(|mu| self.recall(&self.stored.pattern(mu), max_steps))
            .collect()
    }

    /// Whether the clean-cue recall of pattern `mu` is strictly closer (by
    /// dot product) to `f^mu` than to any other stored pattern.
    pub fn voronoi_check(&self, mu: usize) -> Result<bool> {
        if mu >= self.n_patts() {
            return Err(Error::IndexOutOfRange { index: mu, len: self.n_patts(), what: "stored patterns" });
        }
        let r = self.recall(&self.stored.pattern(mu), DEFAULT_MAX_STEPS)?;
        voronoi_correct(&r.recovered, &self.stored, mu)
    }
}

fn hooked(scaffold: &Scaffold, states: &[usize]) -> RealMatrix {
    let hidden = scaffold.hidden();
    RealMatrix::from_fn(hidden.nrows(), states.len(), |i, j| hidden[(i, states[j])])
}

/// `dot(recovered, f^mu) > dot(recovered, f^nu)` for every `nu != mu`.
pub fn voronoi_correct(recovered: &RealVector, stored: &PatternSet, mu: usize) -> Result<bool> {
    if recovered.len() != stored.n_bits() {
        return Err(Error::Dimension { expected: stored.n_bits(), got: recovered.len(), context: "recovered length" });
    }
    let scores = stored.data.transpose() * recovered;
    let own = scores[mu];
    Ok(scores.iter().enumerate().all(|(nu, &s)| nu == mu || own > s))
}

/// `f . presign / |f|^2`.
pub fn presign_overlap(stored: &RealVector, presign: &RealVector) -> f64 {
    stored.dot(presign) / stored.norm_squared()
}

/// Blueprint for a family of MESH networks differing only in stored count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshFamily {
    pub n_label: usize,
    pub k: usize,
    pub n_hidden: usize,
    pub n_feature: usize,
    pub rule: LearningRule,
    pub mode: RecallMode,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapPoint {
    pub n_patts: usize,
    pub presign_overlap: f64,
    /// Binary: mean overlap of the signed readout. Continuous: mean cosine
    /// between stored and recovered patterns.
    pub postsign_overlap: f64,
}

impl MeshFamily {
    pub fn scaffold_config(&self, trial: usize) -> ScaffoldConfig {
        ScaffoldConfig::new(self.n_label, self.k, self.n_hidden, derive_seed(&[self.seed, trial as u64, 0x5c]))
    }

    fn patterns(&self, n_patts: usize, trial: usize) -> Result<PatternSet> {
        let mut rng = RngStream::with_stream(derive_seed(&[self.seed, trial as u64, 0xfe]), 0);
        match self.mode {
            RecallMode::Binary => gen_dense_binary(self.n_feature, n_patts, &mut rng),
            RecallMode::Continuous => gen_continuous(self.n_feature, n_patts, &mut rng),
        }
    }

    /// Presign and post-sign overlaps of clean-cue recall, averaged over
    /// patterns and trials, at each stored count.
    pub fn overlap_curve(&self, n_patts_grid: &[usize], trials: usize) -> Result<Vec<OverlapPoint>> {
        let max_patts = n_patts_grid.iter().copied().max().unwrap_or(0);
        let per_trial: Result<Vec<Vec<(f64, f64)>>> = (0..trials.max(1))
            .into_par_iter()
            .map(|t| {
                let scaffold = Arc::new(Scaffold::build(self.scaffold_config(t))?);
                let all = self.patterns(max_patts, t)?;
                n_patts_grid
                    .iter()
                    .map(|&n| {
                        let assignment = Assignment::for_scaffold(&scaffold);
                        let net = MeshNetwork::store_with(scaffold.clone(), &all.truncated(n), self.rule, self.mode, assignment, DEFAULT_RCOND)?;
                        clean_overlaps(&net)
                    })
                    .collect()
            })
            .collect();
        let per_trial = per_trial?;
        let t = per_trial.len() as f64;
        Ok(n_patts_grid
            .iter()
            .enumerate()
            .map(|(i, &n_patts)| OverlapPoint {
                n_patts,
                presign_overlap: per_trial.iter().map(|c| c[i].0).sum::<f64>() / t,
                postsign_overlap: per_trial.iter().map(|c| c[i].1).sum::<f64>() / t,
            })
            .collect())
    }
}

/// Mean (presign, post-sign) overlap over clean-cue recall of every pattern.
pub fn clean_overlaps(net: &MeshNetwork) -> Result<(f64, f64)> {
    let results = net.recall_clean(DEFAULT_MAX_STEPS)?;
    let n = results.len() as f64;
    let mut pre = 0.0;
    let mut post = 0.0;
    for (mu, r) in results.iter().enumerate() {
        let f = net.stored.pattern(mu);
        pre += presign_overlap(&f, &r.presign);
        post += match net.mode {
            RecallMode::Binary => overlap_binary(&f, &r.recovered)?,
            RecallMode::Continuous => cosine(&f, &r.recovered)?,
        };
    }
    Ok((pre / n, post / n))
}

/// Simulated MI per bit of one-step Hebbian heteroassociation from perfectly
/// recovered random ±1 hidden states: `w_fh = F H^T`, readout
/// `sgn(w_fh h^mu)`, MI averaged over patterns.
pub fn hebbian_one_step_mi(n_hidden: usize, n_feature: usize, n_patts: usize, rng: &mut RngStream) -> Result<f64> {
    let h = gen_dense_binary(n_hidden, n_patts, rng)?.data;
    let f = gen_dense_binary(n_feature, n_patts, rng)?.data;
    let w_fh = &f * h.transpose();
    let readout = (&w_fh * &h).map(sign_of);
    let mut total = 0.0;
    for mu in 0..n_patts {
        let m = f.column(mu).dot(&readout.column(mu)) / n_feature as f64;
        total += mi_dense_binary(m)?;
    }
    Ok(total / n_patts as f64)
}

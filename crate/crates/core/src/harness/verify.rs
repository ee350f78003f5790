//! Invariant suite with measured values, and fault injection to show the
//! checks can fail.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{connection_mask, train_bounded, train_hebbian, train_pinv};
use crate::error::Result;
use crate::mesh::{clean_overlaps, hebbian_one_step_mi, Assignment, LearningRule, MeshNetwork, RecallMode};
use crate::metrics::{cosine, mi_continuous, mi_dense_binary, mi_hebbian_theory, MiValue};
use crate::numerics::{derive_seed, numerical_rank, pseudoinverse, RealMatrix, RealVector, RngStream, DEFAULT_RCOND};
use crate::patterns::{flip_at, flip_positions, gen_continuous, gen_dense_binary, PatternKind};
use crate::scaffold::{Scaffold, ScaffoldConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Replace the scaffold's return weights with Gaussian noise.
    CorruptReturnWeights,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Pseudoinverse cutoff used when storing MESH patterns.
    pub rcond: f64,
    /// Scaffold seeds per structural check.
    pub seeds: usize,
    pub fault: Option<Fault>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { seed: 0, rcond: DEFAULT_RCOND, seeds: 5, fault: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub measured: String,
    pub requirement: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{status}  {:width$}  measured {}  (need {})", c.name, c.measured, c.requirement)?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        write!(f, "{} checks, {failed} failed", self.checks.len())
    }
}

fn check(name: &'static str, measured: impl Into<String>, requirement: impl Into<String>, passed: bool) -> Check {
    Check { name, measured: measured.into(), requirement: requirement.into(), passed }
}

const N_LABEL: usize = 12;
const K: usize = 3;
const N_HIDDEN: usize = 150;
const N_FEATURE: usize = 220;
const BASIN_HIDDEN: usize = 200;

impl VerifyConfig {
    fn scaffold(&self, n_label: usize, n_hidden: usize, index: usize) -> Result<Arc<Scaffold>> {
        let seed = self.seed.wrapping_add(index as u64);
        let built = Scaffold::build(ScaffoldConfig::new(n_label, K, n_hidden, seed))?;
        let scaffold = match self.fault {
            None => built,
            Some(Fault::CorruptReturnWeights) => {
                let noise = RngStream::with_stream(seed, 99).normal_matrix(built.n_label(), built.n_hidden());
                Scaffold::from_parts(built.config().clone(), built.w_hl().clone(), noise, built.labels().clone())?
            }
        };
        Ok(Arc::new(scaffold))
    }

    fn store(&self, scaffold: Arc<Scaffold>, n_feature: usize, n_patts: usize, mode: RecallMode, index: usize) -> Result<MeshNetwork> {
        let mut rng = RngStream::with_stream(derive_seed(&[self.seed, 0xfea7, n_patts as u64, index as u64]), 0);
        let patterns = match mode {
            RecallMode::Binary => gen_dense_binary(n_feature, n_patts, &mut rng)?,
            RecallMode::Continuous => gen_continuous(n_feature, n_patts, &mut rng)?,
        };
        let assignment = Assignment::for_scaffold(&scaffold);
        MeshNetwork::store_with(scaffold, &patterns, LearningRule::Pseudoinverse, mode, assignment, self.rcond)
    }
}

/// Runs every check; structural checks use `config.seeds` scaffolds.
pub fn run_verify(config: &VerifyConfig) -> Result<VerifyReport> {
    let seeds: Vec<usize> = (0..config.seeds.max(1)).collect();
    let mut checks = Vec::new();

    // Scaffold structure at N_L = 12, k = 3, N_H = 150.
    let scaffolds: Vec<Arc<Scaffold>> = seeds.par_iter().map(|&i| config.scaffold(N_LABEL, N_HIDDEN, i)).collect::<Result<_>>()?;
    let states = scaffolds[0].n_states();
    let fixed: Vec<usize> = scaffolds.iter().map(|s| s.fixed_point_count()).collect::<Result<_>>()?;
    checks.push(check(
        "scaffold_fixed_points",
        format!("{fixed:?} of {states}"),
        format!("all {states} on every seed"),
        fixed.iter().all(|&f| f == states),
    ));

    let mut settled = 0;
    let mut probes = 0;
    for (i, s) in scaffolds.iter().enumerate() {
        let mut rng = RngStream::with_stream(derive_seed(&[config.seed, 0x0e57, i as u64]), 0);
        for _ in 0..100 {
            let h = RealVector::from_fn(s.n_hidden(), |_, _| rng.sign());
            let (_, h1) = s.step(&h)?;
            let (_, h2) = s.step(&h1)?;
            probes += 1;
            if h2 == h1 && s.state_index(&h1).is_some() {
                settled += 1;
            }
        }
    }
    checks.push(check("one_step_convergence", format!("{settled}/{probes}"), "every random start lands on a scaffold state in one step", settled == probes));

    let mut exact = 0;
    let mut total = 0;
    let wide: Vec<Arc<Scaffold>> = seeds.par_iter().map(|&i| config.scaffold(N_LABEL, BASIN_HIDDEN, i)).collect::<Result<_>>()?;
    for (i, s) in wide.iter().enumerate() {
        let mut rng = RngStream::with_stream(derive_seed(&[config.seed, 0xba51, i as u64]), 0);
        for mu in 0..s.n_states() {
            let h = s.hidden_state(mu)?;
            let noisy = flip_at(&h, &flip_positions(h.len(), 0.2, &mut rng), PatternKind::DenseBinary);
            total += 1;
            if s.step(&noisy)?.1 == h {
                exact += 1;
            }
        }
    }
    let frac = exact as f64 / total as f64;
    checks.push(check("basin_robustness", format!("{frac:.4}"), format!(">= 0.97 exact from 20% hidden flips at N_H = {BASIN_HIDDEN}"), frac >= 0.97));

    // Heteroassociation at N_patts <= N_H.
    let mut rank_ok = true;
    let mut ranks = Vec::new();
    let mut recon_err: f64 = 0.0;
    let mut sign_ok = true;
    let mut recall_exact = 0;
    let mut recall_total = 0;
    let mut voronoi_ok = 0;
    for (i, s) in scaffolds.iter().enumerate() {
        let rank = numerical_rank(s.hidden(), DEFAULT_RCOND)?;
        ranks.push(rank);
        rank_ok &= rank == N_HIDDEN;

        let net = config.store(s.clone(), N_FEATURE, 120, RecallMode::Binary, i)?;
        let h = net.hooked_hidden();
        let drive = net.w_hf() * &net.stored().data;
        recon_err = recon_err.max((&drive - &h).amax());
        sign_ok &= drive.map(|x| if x >= 0.0 { 1.0 } else { -1.0 }) == h;
        for (mu, r) in net.recall_clean(5)?.iter().enumerate() {
            recall_total += 1;
            if r.recovered == net.stored().pattern(mu) {
                recall_exact += 1;
            }
            if crate::mesh::voronoi_correct(&r.recovered, net.stored(), mu)? {
                voronoi_ok += 1;
            }
        }
    }
    checks.push(check("hidden_rank", format!("{ranks:?}"), format!("rank {N_HIDDEN} for the scaffold hidden matrix"), rank_ok));
    checks.push(check("hidden_reconstruction", format!("max |w_hf F - H| = {recon_err:.3e}"), "< 1e-8 and sgn exact", recon_err < 1e-8 && sign_ok));
    checks.push(check("clean_recall_exact", format!("{recall_exact}/{recall_total}"), "all patterns for N_patts <= N_H", recall_exact == recall_total));
    checks.push(check("voronoi_below_capacity", format!("{voronoi_ok}/{recall_total}"), "all patterns for N_patts <= N_H", voronoi_ok == recall_total));

    // Projection identity above N_H.
    let net = config.store(scaffolds[0].clone(), N_FEATURE, 220, RecallMode::Binary, 0)?;
    let h = net.hooked_hidden();
    let projector = pseudoinverse(&h, config.rcond)? * &h;
    let oracle = &net.stored().data * projector;
    let results = net.recall_clean(5)?;
    let presign = RealMatrix::from_columns(&results.iter().map(|r| r.presign.clone()).collect::<Vec<_>>());
    let proj_err = (&presign - &oracle).amax();
    checks.push(check("projection_identity", format!("max |presign - F H+ H| = {proj_err:.3e}"), "< 1e-8", proj_err < 1e-8));

    // Continuum law at N_H = 60.
    let grid = [120usize, 180, 220];
    let mut worst: f64 = 0.0;
    let mut measured = Vec::new();
    for &n in &grid {
        let overlaps: Vec<f64> = seeds
            .par_iter()
            .map(|&i| clean_overlaps(&config.store(config.scaffold(N_LABEL, 60, i)?, N_FEATURE, n, RecallMode::Binary, i)?).map(|o| o.0))
            .collect::<Result<_>>()?;
        let mean = overlaps.iter().sum::<f64>() / overlaps.len() as f64;
        let rel = mean / (60.0 / n as f64) - 1.0;
        worst = worst.max(rel.abs());
        measured.push(format!("{n}:{mean:.3}"));
    }
    checks.push(check("continuum_overlap", format!("{} (worst {:.1}%)", measured.join(" "), 100.0 * worst), "within 10% of N_H/N_patts", worst <= 0.10));

    // Continuous readout.
    let mut norm_err: f64 = 0.0;
    let mut rel_worst: f64 = 0.0;
    let mut cont = Vec::new();
    for &n in &[120usize, 220] {
        let mut total = 0.0;
        let mut count = 0;
        for &i in &seeds {
            let net = config.store(config.scaffold(N_LABEL, 60, i)?, 300, n, RecallMode::Continuous, i)?;
            for (mu, r) in net.recall_clean(5)?.iter().enumerate() {
                norm_err = norm_err.max((r.recovered.norm() - 1.0).abs());
                total += cosine(&net.stored().pattern(mu), &r.recovered)?;
                count += 1;
            }
        }
        let mean = total / count as f64;
        rel_worst = rel_worst.max((mean / (60.0 / n as f64).sqrt() - 1.0).abs());
        cont.push(format!("{n}:{mean:.3}"));
    }
    checks.push(check("continuous_unit_norm", format!("max |norm - 1| = {norm_err:.1e}"), "< 1e-12", norm_err < 1e-12));
    checks.push(check(
        "continuous_overlap",
        format!("{} (worst {:.1}%)", cont.join(" "), 100.0 * rel_worst),
        "within 10% of sqrt(N_H/N_patts)",
        rel_worst <= 0.10,
    ));

    // Presign overlap does not depend on N_L.
    let by_label: Vec<f64> = [12usize, 15, 18]
        .par_iter()
        .map(|&nl| {
            let mut sum = 0.0;
            for i in 0..3 {
                sum += clean_overlaps(&config.store(config.scaffold(nl, N_HIDDEN, i)?, N_FEATURE, 200, RecallMode::Binary, i)?)?.0;
            }
            Ok(sum / 3.0)
        })
        .collect::<Result<_>>()?;
    let spread = by_label.iter().cloned().fold(f64::MIN, f64::max) / by_label.iter().cloned().fold(f64::MAX, f64::min) - 1.0;
    checks.push(check("label_size_independence", format!("{by_label:.3?} (spread {:.1}%)", 100.0 * spread), "< 5% across N_L in {12, 15, 18}", spread < 0.05));

    // Information measures.
    let limits = [mi_dense_binary(1.0)?, mi_dense_binary(-1.0)?, mi_dense_binary(0.0)?];
    let cont_zero = mi_continuous(0.0)?;
    checks.push(check(
        "mi_limits",
        format!("dense(1, -1, 0) = {limits:?}, continuous(0) = {cont_zero}"),
        "1, 1, 0 and 0",
        limits == [1.0, 1.0, 0.0] && cont_zero == MiValue::Finite(0.0),
    ));
    let ratios = [1usize, 2, 4, 8];
    let rel: Vec<f64> = ratios
        .par_iter()
        .map(|&r| {
            let mut rng = RngStream::with_stream(derive_seed(&[config.seed, 0x4eb, r as u64]), 0);
            let sim = hebbian_one_step_mi(200, 1000, 200 * r, &mut rng)?;
            Ok(sim / mi_hebbian_theory(200, 200 * r)? - 1.0)
        })
        .collect::<Result<_>>()?;
    let worst = rel.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    checks.push(check("hebbian_theory", format!("relative errors {rel:.3?}"), "within 10% at N_patts/N_H in {1, 2, 4, 8}", worst <= 0.10));

    // Baselines.
    let mut rng = RngStream::with_stream(derive_seed(&[config.seed, 0xb45e]), 0);
    let xi = gen_dense_binary(100, 50, &mut rng)?;
    let w = train_pinv(&xi)?.weights().clone();
    let idem = (&w * &w - &w).amax();
    checks.push(check("pinv_projector", format!("max |W^2 - W| = {idem:.1e}"), "< 1e-8", idem < 1e-8));

    let heb = train_hebbian(&gen_dense_binary(100, 30, &mut rng)?)?;
    let cue = RealVector::from_fn(100, |_, _| rng.sign());
    let mut last = heb.energy(&cue);
    let mut rises = 0;
    heb.recall_async(&cue, 50, |s| {
        let e = heb.energy(s);
        if e > last + 1e-9 {
            rises += 1;
        }
        last = e;
    });
    checks.push(check("energy_monotone", format!("{rises} increases"), "none under asynchronous updates", rises == 0));

    let bound = 0.05;
    let bounded = train_bounded(&gen_dense_binary(100, 80, &mut rng)?, bound, 1.0)?;
    let wmax = bounded.weights().amax();
    checks.push(check("bounded_weights", format!("max |W| = {wmax}"), format!("<= {bound}"), wmax <= bound));

    let (m1, m2) = (connection_mask(80, 0.3, 7), connection_mask(80, 0.3, 7));
    let symmetric = m1 == m1.transpose();
    checks.push(check("mask_reproducible", format!("identical {}, symmetric {symmetric}", m1 == m2), "identical and symmetric", m1 == m2 && symmetric));

    Ok(VerifyReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(fault: Option<Fault>, rcond: f64) -> VerifyReport {
        run_verify(&VerifyConfig { seeds: 2, fault, rcond, ..VerifyConfig::default() }).unwrap()
    }

    #[test]
    fn fresh_run_passes() {
        let report = quick(None, DEFAULT_RCOND);
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn corrupted_return_weights_break_fixed_points() {
        let report = quick(Some(Fault::CorruptReturnWeights), DEFAULT_RCOND);
        assert!(!report.check("scaffold_fixed_points").unwrap().passed);
        assert!(!report.passed());
    }

    #[test]
    fn coarse_cutoff_breaks_hidden_reconstruction() {
        let report = quick(None, 0.5);
        assert!(!report.check("hidden_reconstruction").unwrap().passed);
    }
}

//! Sweep specifications and their structured-text (TOML) form.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::DEFAULT_MAX_STEPS;
use crate::patterns::binomial;

pub const DEFAULT_MAX_SWEEPS: usize = 100;
pub const DEFAULT_THETA_CANDIDATES: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    MeshPinv,
    MeshHebbian,
    MeshContinuous,
    HopfieldHebbian,
    HopfieldPinv,
    HopfieldBounded,
    HopfieldSparseInput,
    HopfieldSparseConn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 8] = [
        ModelKind::MeshPinv,
        ModelKind::MeshHebbian,
        ModelKind::MeshContinuous,
        ModelKind::HopfieldHebbian,
        ModelKind::HopfieldPinv,
        ModelKind::HopfieldBounded,
        ModelKind::HopfieldSparseInput,
        ModelKind::HopfieldSparseConn,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ModelKind::MeshPinv => "mesh_pinv",
            ModelKind::MeshHebbian => "mesh_hebbian",
            ModelKind::MeshContinuous => "mesh_continuous",
            ModelKind::HopfieldHebbian => "hopfield_hebbian",
            ModelKind::HopfieldPinv => "hopfield_pinv",
            ModelKind::HopfieldBounded => "hopfield_bounded",
            ModelKind::HopfieldSparseInput => "hopfield_sparse_input",
            ModelKind::HopfieldSparseConn => "hopfield_sparse_conn",
        }
    }

    pub fn is_mesh(self) -> bool {
        matches!(self, ModelKind::MeshPinv | ModelKind::MeshHebbian | ModelKind::MeshContinuous)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Model dimensions. MESH models read `n_label`, `k`, `n_hidden`,
/// `n_feature`; Hopfield models read `n` plus their variant parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sizes {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_label: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_hidden: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_feature: Option<usize>,
    /// Sample this many scaffold labels instead of all `C(n_label, k)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_limit: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Connection fraction of the diluted network.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Pattern density of the sparse-input network.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Weight bound of the bounded network; defaults to `3 lr / sqrt(n)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lr: Option<f64>,
    /// Threshold candidates for the sparse-input network; defaults to an even
    /// grid over `[0, p (1 - p)^2]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_grid: Option<Vec<f64>>,
}

/// One model swept over a grid of stored-pattern counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub model: ModelKind,
    pub sizes: Sizes,
    pub n_patts_grid: Vec<usize>,
    pub noise_frac: f64,
    pub trials: usize,
    pub master_seed: u64,
    /// Scaffold iterations per MESH recall.
    pub max_steps: usize,
    /// Update sweeps per Hopfield recall.
    pub max_sweeps: usize,
}

/// Fully resolved dimensions of one sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum Dims {
    Mesh { n_label: usize, k: usize, n_hidden: usize, n_feature: usize, label_limit: Option<usize> },
    Hopfield { n: usize },
    Bounded { n: usize, bound: f64, lr: f64 },
    SparseInput { n: usize, p: f64, theta_grid: Vec<f64> },
    SparseConn { n: usize, gamma: f64 },
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dims::Mesh { n_label, k, n_hidden, n_feature, label_limit } => {
                write!(f, "N_L={n_label};k={k};N_H={n_hidden};N_F={n_feature}")?;
                if let Some(limit) = label_limit {
                    write!(f, ";labels={limit}")?;
                }
                Ok(())
            }
            Dims::Hopfield { n } => write!(f, "N={n}"),
            Dims::Bounded { n, bound, lr } => write!(f, "N={n};A={bound};lr={lr}"),
            Dims::SparseInput { n, p, .. } => write!(f, "N={n};p={p}"),
            Dims::SparseConn { n, gamma } => write!(f, "N={n};gamma={gamma}"),
        }
    }
}

fn need<T: Copy>(value: Option<T>, field: &str, model: ModelKind) -> Result<T> {
    value.ok_or_else(|| Error::Spec(format!("{model}: sizes.{field} is required")))
}

fn positive(value: usize, field: &str, model: ModelKind) -> Result<usize> {
    if value == 0 {
        return Err(Error::Spec(format!("{model}: sizes.{field} must be positive")));
    }
    Ok(value)
}

impl SweepSpec {
    /// Checks the invariants and resolves model dimensions.
    pub fn dims(&self) -> Result<Dims> {
        let m = self.model;
        let s = &self.sizes;
        if m.is_mesh() {
            let n_label = positive(need(s.n_label, "n_label", m)?, "n_label", m)?;
            let k = positive(need(s.k, "k", m)?, "k", m)?;
            let n_hidden = positive(need(s.n_hidden, "n_hidden", m)?, "n_hidden", m)?;
            let n_feature = positive(need(s.n_feature, "n_feature", m)?, "n_feature", m)?;
            if k > n_label {
                return Err(Error::Spec(format!("{m}: k = {k} exceeds n_label = {n_label}")));
            }
            return Ok(Dims::Mesh { n_label, k, n_hidden, n_feature, label_limit: s.label_limit });
        }
        let n = positive(need(s.n, "n", m)?, "n", m)?;
        match m {
            ModelKind::HopfieldHebbian | ModelKind::HopfieldPinv => Ok(Dims::Hopfield { n }),
            ModelKind::HopfieldBounded => {
                let lr = s.lr.unwrap_or(1.0);
                let bound = s.bound.unwrap_or(3.0 * lr / (n as f64).sqrt());
                if !(lr > 0.0 && bound > 0.0) {
                    return Err(Error::Spec(format!("{m}: bound and lr must be positive")));
                }
                Ok(Dims::Bounded { n, bound, lr })
            }
            ModelKind::HopfieldSparseInput => {
                let p = need(s.p, "p", m)?;
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::Spec(format!("{m}: p = {p} must lie in (0, 1)")));
                }
                let theta_grid = match &s.theta_grid {
                    Some(grid) if grid.is_empty() => return Err(Error::Spec(format!("{m}: theta_grid is empty"))),
                    Some(grid) => grid.clone(),
                    None => default_theta_grid(p),
                };
                Ok(Dims::SparseInput { n, p, theta_grid })
            }
            ModelKind::HopfieldSparseConn => {
                let gamma = need(s.gamma, "gamma", m)?;
                if !(gamma > 0.0 && gamma <= 1.0) {
                    return Err(Error::Spec(format!("{m}: gamma = {gamma} must lie in (0, 1]")));
                }
                Ok(Dims::SparseConn { n, gamma })
            }
            _ => unreachable!("mesh models handled above"),
        }
    }

    pub fn validate(&self) -> Result<Dims> {
        let m = self.model;
        if self.n_patts_grid.is_empty() {
            return Err(Error::Spec(format!("{m}: n_patts_grid is empty")));
        }
        if self.n_patts_grid.contains(&0) {
            return Err(Error::Spec(format!("{m}: n_patts_grid entries must be positive")));
        }
        if self.trials == 0 {
            return Err(Error::Spec(format!("{m}: trials must be at least 1")));
        }
        if !(0.0..=1.0).contains(&self.noise_frac) {
            return Err(Error::Spec(format!("{m}: noise_frac = {} must lie in [0, 1]", self.noise_frac)));
        }
        let dims = self.dims()?;
        if let Dims::Mesh { n_label, k, label_limit, .. } = &dims {
            let states = match label_limit {
                Some(limit) => *limit as u64,
                None => binomial(*n_label, *k).map_err(|e| Error::Spec(format!("{m}: {e}")))?,
            };
            let largest = *self.n_patts_grid.iter().max().unwrap_or(&0) as u64;
            if largest > states {
                return Err(Error::Spec(format!("{m}: n_patts = {largest} exceeds the {states} scaffold states")));
            }
        }
        Ok(dims)
    }
}

/// Even grid over `[0, p (1 - p)^2]`, the mean field on an active unit of a
/// stored sparse pattern.
pub fn default_theta_grid(p: f64) -> Vec<f64> {
    let top = p * (1.0 - p) * (1.0 - p);
    (0..DEFAULT_THETA_CANDIDATES).map(|i| top * i as f64 / (DEFAULT_THETA_CANDIDATES - 1) as f64).collect()
}

/// A sweep file: shared defaults plus one `[[sweep]]` table per model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub noise_frac: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_max_sweeps")]
    pub max_sweeps: usize,
    #[serde(rename = "sweep")]
    pub sweeps: Vec<SweepEntry>,
}

/// Entry of a sweep file; unset fields fall back to the file defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEntry {
    pub model: ModelKind,
    pub sizes: Sizes,
    pub n_patts_grid: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_frac: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_sweeps: Option<usize>,
}

fn one() -> usize {
    1
}

fn default_max_steps() -> usize {
    DEFAULT_MAX_STEPS
}

fn default_max_sweeps() -> usize {
    DEFAULT_MAX_SWEEPS
}

/// Command-line overrides applied on top of a plan.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub master_seed: Option<u64>,
    pub trials: Option<usize>,
    pub noise_frac: Option<f64>,
    pub max_steps: Option<usize>,
}

impl SweepPlan {
    pub fn from_toml(text: &str) -> Result<SweepPlan> {
        let plan: SweepPlan = toml::from_str(text).map_err(|e| Error::Spec(e.to_string()))?;
        if plan.sweeps.is_empty() {
            return Err(Error::Spec("no [[sweep]] tables".into()));
        }
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<SweepPlan> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Spec(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Resolves every entry into a validated spec. Overrides replace both
    /// the file defaults and per-entry values.
    pub fn resolve(&self, overrides: &Overrides) -> Result<Vec<SweepSpec>> {
        self.sweeps
            .iter()
            .map(|e| {
                let spec = SweepSpec {
                    model: e.model,
                    sizes: e.sizes.clone(),
                    n_patts_grid: e.n_patts_grid.clone(),
                    noise_frac: overrides.noise_frac.or(e.noise_frac).unwrap_or(self.noise_frac),
                    trials: overrides.trials.or(e.trials).unwrap_or(self.trials),
                    master_seed: overrides.master_seed.or(e.master_seed).unwrap_or(self.master_seed),
                    max_steps: overrides.max_steps.or(e.max_steps).unwrap_or(self.max_steps),
                    max_sweeps: e.max_sweeps.unwrap_or(self.max_sweeps),
                };
                spec.validate()?;
                Ok(spec)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = r#"
master_seed = 7
trials = 2
noise_frac = 0.05

[[sweep]]
model = "mesh_pinv"
n_patts_grid = [10, 20]
sizes = { n_label = 8, k = 2, n_hidden = 40, n_feature = 50 }

[[sweep]]
model = "hopfield_sparse_input"
n_patts_grid = [5]
trials = 1
sizes = { n = 100, p = 0.1 }
"#;

    #[test]
    fn parses_and_resolves_defaults() {
        let plan = SweepPlan::from_toml(TEXT).unwrap();
        let specs = plan.resolve(&Overrides::default()).unwrap();
        assert_eq!(specs.len(), 2);
        assert_eq!(specs[0].trials, 2);
        assert_eq!(specs[1].trials, 1);
        assert_eq!(specs[0].master_seed, 7);
        assert_eq!(specs[0].max_steps, DEFAULT_MAX_STEPS);
        assert_eq!(specs[0].dims().unwrap().to_string(), "N_L=8;k=2;N_H=40;N_F=50");
        let Dims::SparseInput { theta_grid, .. } = specs[1].dims().unwrap() else { panic!() };
        assert_eq!(theta_grid.len(), DEFAULT_THETA_CANDIDATES);
    }

    #[test]
    fn overrides_win() {
        let plan = SweepPlan::from_toml(TEXT).unwrap();
        let o = Overrides { master_seed: Some(1), trials: Some(4), noise_frac: Some(0.0), max_steps: Some(2) };
        for s in plan.resolve(&o).unwrap() {
            assert_eq!((s.master_seed, s.trials, s.noise_frac, s.max_steps), (1, 4, 0.0, 2));
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let bad = [
            TEXT.replace("[10, 20]", "[]"),
            TEXT.replace("trials = 2", "trials = 0"),
            TEXT.replace("n_hidden = 40, ", ""),
            TEXT.replace("[10, 20]", "[10, 29]"),
            TEXT.replace("p = 0.1", "p = 1.5"),
            TEXT.replace("mesh_pinv", "mesh_magic"),
            TEXT.replace("n = 100", "n = 100, colour = 3"),
            "master_seed = 1".to_string(),
        ];
        for text in bad {
            let res = SweepPlan::from_toml(&text).and_then(|p| p.resolve(&Overrides::default()));
            assert!(matches!(res, Err(Error::Spec(_))), "accepted: {text}");
        }
    }
}

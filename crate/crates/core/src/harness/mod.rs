//! Experiment orchestration: sweeps over stored-pattern counts, scaffold
//! capacity tables, the invariant suite and information bounds.

mod report;
mod spec;
mod sweep;
mod verify;

use std::io::Write;

use serde::Serialize;

pub use report::{csv_string, summarize, write_csv, write_outputs, write_timings, Aggregate, CellSummary, Summary, CSV_COLUMNS, RESULTS_CSV, SUMMARY_JSON, TIMINGS_CSV};
pub use spec::{default_theta_grid, Dims, ModelKind, Overrides, Sizes, SweepEntry, SweepPlan, SweepSpec, DEFAULT_MAX_SWEEPS, DEFAULT_THETA_CANDIDATES};
pub use sweep::{cell_patterns, cell_seed, run_sweep, run_sweeps, scaffold_seed, SweepResult, SweepRow};
pub use verify::{run_verify, Check, Fault, VerifyConfig, VerifyReport};

use crate::error::Result;
use crate::metrics::{count_synapses, mi_bound_perinbit, ModelDescriptor};
use crate::scaffold::{scaffold_capacity, CapacityRow, CapacitySettings};

/// Capacity of every `(n_label, k, n_hidden)` scaffold in `dims`.
pub fn run_scaffold_capacity(dims: &[(usize, usize, usize)], settings: &CapacitySettings) -> Result<Vec<CapacityRow>> {
    scaffold_capacity(dims, settings)
}

/// One line per scaffold: dimensions, state count and capacity.
pub fn write_capacity_csv<W: Write>(rows: &[CapacityRow], out: W) -> Result<()> {
    #[derive(Serialize)]
    struct Line {
        n_label: usize,
        k: usize,
        n_hidden: usize,
        n_states: usize,
        capacity: usize,
    }
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(Line { n_label: r.n_label, k: r.k, n_hidden: r.n_hidden, n_states: r.n_states, capacity: r.capacity })?;
    }
    w.flush()?;
    Ok(())
}

/// Synapse budget and per-bit information bound of a MESH network.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub n_label: usize,
    pub n_hidden: usize,
    pub n_feature: usize,
    pub learnable_synapses: u64,
    pub fixed_synapses: u64,
    /// `(n_patts, bound per input bit)`.
    pub per_input_bit: Vec<(usize, f64)>,
}

pub fn bound_report(n_label: usize, n_hidden: usize, n_feature: usize, n_patts: &[usize]) -> BoundReport {
    let synapses = count_synapses(ModelDescriptor::Mesh { n_label, n_hidden, n_feature });
    BoundReport {
        n_label,
        n_hidden,
        n_feature,
        learnable_synapses: synapses.learnable,
        fixed_synapses: synapses.fixed,
        per_input_bit: n_patts.iter().map(|&n| (n, mi_bound_perinbit(n_hidden, n_feature, n_label, n))).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_report_values() {
        let r = bound_report(32, 200, 4960, &[200, 800]);
        assert_eq!(r.learnable_synapses, 1_990_400);
        assert_eq!(r.fixed_synapses, 6_400);
        assert_eq!(r.per_input_bit[0].1, 1.0);
        assert!((r.per_input_bit[1].1 - 0.5016129032258065).abs() < 1e-15);
    }

    #[test]
    fn capacity_csv() {
        let settings = CapacitySettings { trials: 1, grid_points: 6, ..CapacitySettings::default() };
        let rows = run_scaffold_capacity(&[(8, 2, 40)], &settings).unwrap();
        let mut buf = Vec::new();
        write_capacity_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n_label,k,n_hidden,n_states,capacity\n8,2,40,28,"));
    }
}

//! CSV rows, wall-time sidecar and the JSON summary of a sweep.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::spec::{ModelKind, SweepSpec};
use crate::harness::sweep::{SweepResult, SweepRow};
use crate::metrics::MiValue;

pub const RESULTS_CSV: &str = "results.csv";
pub const TIMINGS_CSV: &str = "timings.csv";
pub const SUMMARY_JSON: &str = "summary.json";

/// Column names of the results CSV, in order.
pub const CSV_COLUMNS: [&str; 17] = [
    "model",
    "dims",
    "n_patts",
    "noise_frac",
    "trial",
    "presign_overlap",
    "postsign_overlap",
    "mi_per_input_bit",
    "mi_per_synapse",
    "bound_per_input_bit",
    "feature_error",
    "label_error",
    "hidden_error",
    "voronoi_correct_fraction",
    "nonconverged",
    "theta",
    "error",
];

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[SweepRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::InvalidParameter(e.to_string()))
}

#[derive(Debug, Serialize)]
struct TimingRow<'a> {
    model: ModelKind,
    dims: &'a str,
    n_patts: usize,
    trial: usize,
    wall_time: f64,
}

pub fn write_timings<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (row, &wall_time) in result.rows.iter().zip(&result.wall_times) {
        w.serialize(TimingRow { model: row.model, dims: &row.dims, n_patts: row.n_patts, trial: row.trial, wall_time })?;
    }
    w.flush()?;
    Ok(())
}

/// Mean and sample standard deviation over the finite values of one metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    /// Trials contributing a finite value.
    pub count: usize,
    /// Trials reporting infinite MI.
    #[serde(skip_serializing_if = "is_zero")]
    pub infinite: usize,
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

impl Aggregate {
    pub fn of(values: impl IntoIterator<Item = Option<f64>>) -> Aggregate {
        let mut finite = Vec::new();
        let mut infinite = 0;
        for v in values.into_iter().flatten() {
            if v.is_finite() {
                finite.push(v);
            } else {
                infinite += 1;
            }
        }
        let n = finite.len();
        let mean = (n > 0).then(|| finite.iter().sum::<f64>() / n as f64);
        let std = mean.filter(|_| n > 1).map(|m| (finite.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt());
        Aggregate { mean, std, count: n, infinite }
    }
}

fn mi_as_f64(v: Option<MiValue>) -> Option<f64> {
    v.map(|m| m.finite().unwrap_or(f64::INFINITY))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub model: ModelKind,
    pub dims: String,
    pub n_patts: usize,
    pub noise_frac: f64,
    pub trials: usize,
    pub failed_trials: usize,
    pub presign_overlap: Aggregate,
    pub postsign_overlap: Aggregate,
    pub mi_per_input_bit: Aggregate,
    pub mi_per_synapse: Aggregate,
    pub bound_per_input_bit: Aggregate,
    pub feature_error: Aggregate,
    pub label_error: Aggregate,
    pub hidden_error: Aggregate,
    pub voronoi_correct_fraction: Aggregate,
    pub nonconverged: Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub library_version: &'static str,
    /// Master seed of each sweep, in order.
    pub master_seeds: Vec<u64>,
    pub specs: Vec<SweepSpec>,
    pub cells: Vec<CellSummary>,
}

/// Groups rows by (spec, stored count) and aggregates over trials. `rows`
/// must come from running `specs` in order.
pub fn summarize(specs: &[SweepSpec], rows: &[SweepRow]) -> Result<Summary> {
    let expected: usize = specs.iter().map(|s| s.n_patts_grid.len() * s.trials).sum();
    if expected != rows.len() {
        return Err(Error::Dimension { expected, got: rows.len(), context: "sweep rows" });
    }
    let mut cells = Vec::new();
    let mut at = 0;
    for spec in specs {
        for _ in &spec.n_patts_grid {
            let group = &rows[at..at + spec.trials];
            at += spec.trials;
            let agg = |f: &dyn Fn(&SweepRow) -> Option<f64>| Aggregate::of(group.iter().map(f));
            cells.push(CellSummary {
                model: group[0].model,
                dims: group[0].dims.clone(),
                n_patts: group[0].n_patts,
                noise_frac: group[0].noise_frac,
                trials: group.len(),
                failed_trials: group.iter().filter(|r| r.error.is_some()).count(),
                presign_overlap: agg(&|r| r.presign_overlap),
                postsign_overlap: agg(&|r| r.postsign_overlap),
                mi_per_input_bit: agg(&|r| mi_as_f64(r.mi_per_input_bit)),
                mi_per_synapse: agg(&|r| mi_as_f64(r.mi_per_synapse)),
                bound_per_input_bit: agg(&|r| r.bound_per_input_bit),
                feature_error: agg(&|r| r.feature_error),
                label_error: agg(&|r| r.label_error),
                hidden_error: agg(&|r| r.hidden_error),
                voronoi_correct_fraction: agg(&|r| r.voronoi_correct_fraction),
                nonconverged: agg(&|r| r.nonconverged.map(|n| n as f64)),
            });
        }
    }
    Ok(Summary {
        library_version: env!("CARGO_PKG_VERSION"),
        master_seeds: specs.iter().map(|s| s.master_seed).collect(),
        specs: specs.to_vec(),
        cells,
    })
}

/// Writes `results.csv`, `timings.csv` and `summary.json` into `dir`.
pub fn write_outputs(dir: &Path, specs: &[SweepSpec], result: &SweepResult) -> Result<Summary> {
    std::fs::create_dir_all(dir)?;
    write_csv(&result.rows, std::fs::File::create(dir.join(RESULTS_CSV))?)?;
    write_timings(result, std::fs::File::create(dir.join(TIMINGS_CSV))?)?;
    let summary = summarize(specs, &result.rows)?;
    let mut f = std::fs::File::create(dir.join(SUMMARY_JSON))?;
    serde_json::to_writer_pretty(&mut f, &summary)?;
    f.write_all(b"\n")?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::spec::Sizes;
    use crate::harness::sweep::run_sweep;

    fn small() -> SweepSpec {
        SweepSpec {
            model: ModelKind::MeshContinuous,
            sizes: Sizes { n_label: Some(8), k: Some(2), n_hidden: Some(40), n_feature: Some(60), ..Sizes::default() },
            n_patts_grid: vec![10, 28],
            noise_frac: 0.0,
            trials: 3,
            master_seed: 9,
            max_steps: 5,
            max_sweeps: 20,
        }
    }

    #[test]
    fn header_matches_row_fields() {
        let res = run_sweep(&small()).unwrap();
        let text = csv_string(&res.rows).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
        let with_header = {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.serialize(&res.rows[0]).unwrap();
            String::from_utf8(w.into_inner().unwrap()).unwrap()
        };
        assert_eq!(with_header.lines().next().unwrap(), CSV_COLUMNS.join(","));
        assert_eq!(lines.count(), 6);
        assert!(text.contains("infinite"));
    }

    #[test]
    fn aggregates() {
        let a = Aggregate::of([Some(1.0), Some(3.0), None, Some(f64::INFINITY)]);
        assert_eq!((a.mean, a.count, a.infinite), (Some(2.0), 2, 1));
        assert!((a.std.unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(Aggregate::of([Some(1.0)]).std, None);
    }

    #[test]
    fn summary_groups_trials() {
        let spec = small();
        let res = run_sweep(&spec).unwrap();
        let s = summarize(&[spec.clone()], &res.rows).unwrap();
        assert_eq!(s.cells.len(), 2);
        assert_eq!(s.cells[0].trials, 3);
        assert_eq!(s.cells[0].mi_per_input_bit.infinite, 3);
        assert_eq!(s.master_seeds, vec![9]);
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"library_version\""));
        assert!(summarize(&[spec], &res.rows[1..]).is_err());
    }

    #[test]
    fn writes_three_files() {
        let dir = std::env::temp_dir().join(format!("mesh-cam-report-{}", std::process::id()));
        let spec = small();
        let res = run_sweep(&spec).unwrap();
        write_outputs(&dir, &[spec], &res).unwrap();
        for name in [RESULTS_CSV, TIMINGS_CSV, SUMMARY_JSON] {
            assert!(dir.join(name).metadata().unwrap().len() > 0);
        }
        std::fs::remove_dir_all(&dir).unwrap();
    }
}

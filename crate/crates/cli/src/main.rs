use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use mesh_cam::harness::{
    bound_report, run_scaffold_capacity, run_sweeps, run_verify, write_capacity_csv, write_outputs, Fault, Overrides, SweepPlan, VerifyConfig, RESULTS_CSV,
};
use mesh_cam::numerics::DEFAULT_RCOND;
use mesh_cam::scaffold::CapacitySettings;

const EXIT_SPEC: u8 = 1;
const EXIT_VERIFY: u8 = 2;

/// MESH content-addressable memory experiments.
#[derive(Parser)]
#[command(name = "meshcam", version)]
struct Cli {
    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweeps in a TOML spec file and write CSV and JSON results.
    Sweep(SweepArgs),
    /// Measure scaffold capacity under hidden-layer noise.
    ScaffoldCapacity(CapacityArgs),
    /// Run the invariant suite and print a pass/fail table.
    Verify(VerifyArgs),
    /// Print synapse counts and the per-bit information bound.
    Bound(BoundArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep specification file.
    spec: PathBuf,
    /// Master seed, replacing the file's.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Cue noise fraction.
    #[arg(long)]
    noise: Option<f64>,
    /// Scaffold iterations per MESH recall.
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct CapacityArgs {
    /// Scaffold dimensions as N_L,k,N_H; repeatable.
    #[arg(long = "dims", value_parser = parse_dims, required = true)]
    dims: Vec<(usize, usize, usize)>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    trials: usize,
    /// Fraction of hidden bits flipped.
    #[arg(long, default_value_t = 0.2)]
    noise: f64,
    /// Largest mean relative error still counted as recovered.
    #[arg(long, default_value_t = 0.03)]
    threshold: f64,
    /// Stored counts probed per scaffold; 0 probes every count.
    #[arg(long, default_value_t = 0)]
    grid_points: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Scaffold seeds per structural check.
    #[arg(long, default_value_t = 5)]
    trials: usize,
    /// Relative singular-value cutoff of the pseudoinverse.
    #[arg(long, default_value_t = DEFAULT_RCOND)]
    rcond: f64,
    /// Replace the scaffold return weights with noise before checking.
    #[arg(long)]
    corrupt_scaffold: bool,
    /// Also write the report as JSON into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    n_label: usize,
    #[arg(long)]
    n_hidden: usize,
    #[arg(long)]
    n_feature: usize,
    /// Stored counts; repeatable or comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    n_patts: Vec<usize>,
}

fn parse_dims(text: &str) -> std::result::Result<(usize, usize, usize), String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [a, b, c] = parts.as_slice() else {
        return Err(format!("expected N_L,k,N_H, got {text:?}"));
    };
    let num = |s: &str| s.parse::<usize>().map_err(|e| format!("{s:?}: {e}"));
    Ok((num(a)?, num(b)?, num(c)?))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_SPEC } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_SPEC);
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_SPEC)
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Sweep(args) => sweep(args),
        Command::ScaffoldCapacity(args) => capacity(args),
        Command::Verify(args) => verify(args),
        Command::Bound(args) => bound(args),
    }
}

fn sweep(args: SweepArgs) -> Result<ExitCode> {
    let plan = SweepPlan::load(&args.spec)?;
    let overrides = Overrides { master_seed: args.seed, trials: args.trials, noise_frac: args.noise, max_steps: args.max_steps };
    let specs = plan.resolve(&overrides)?;
    info!("{} sweeps from {}", specs.len(), args.spec.display());
    let result = run_sweeps(&specs)?;
    let summary = write_outputs(&args.out, &specs, &result).with_context(|| format!("writing results to {}", args.out.display()))?;
    let failed: usize = summary.cells.iter().map(|c| c.failed_trials).sum();
    println!("{} rows, {} cells, {failed} failed trials -> {}", result.rows.len(), summary.cells.len(), args.out.join(RESULTS_CSV).display());
    Ok(ExitCode::SUCCESS)
}

fn capacity(args: CapacityArgs) -> Result<ExitCode> {
    let settings = CapacitySettings {
        noise_frac: args.noise,
        error_threshold: args.threshold,
        trials: args.trials,
        seed: args.seed,
        grid_points: args.grid_points,
    };
    let rows = run_scaffold_capacity(&args.dims, &settings)?;
    std::fs::create_dir_all(&args.out)?;
    write_capacity_csv(&rows, File::create(args.out.join("capacity.csv"))?)?;
    let mut json = File::create(args.out.join("capacity.json"))?;
    serde_json::to_writer_pretty(&mut json, &serde_json::json!({ "settings": settings, "rows": rows }))?;
    json.write_all(b"\n")?;
    println!("{:>4} {:>3} {:>5} {:>8} {:>8}", "N_L", "k", "N_H", "states", "capacity");
    for r in &rows {
        println!("{:>4} {:>3} {:>5} {:>8} {:>8}", r.n_label, r.k, r.n_hidden, r.n_states, r.capacity);
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(args: VerifyArgs) -> Result<ExitCode> {
    let config = VerifyConfig {
        seed: args.seed,
        rcond: args.rcond,
        seeds: args.trials,
        fault: args.corrupt_scaffold.then_some(Fault::CorruptReturnWeights),
    };
    let report = run_verify(&config)?;
    println!("{report}");
    if let Some(dir) = args.out {
        std::fs::create_dir_all(&dir)?;
        let mut f = File::create(dir.join("verify.json"))?;
        serde_json::to_writer_pretty(&mut f, &serde_json::json!({ "config": config, "checks": report.checks }))?;
        f.write_all(b"\n")?;
    }
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_VERIFY) })
}

fn bound(args: BoundArgs) -> Result<ExitCode> {
    let r = bound_report(args.n_label, args.n_hidden, args.n_feature, &args.n_patts);
    println!("learnable synapses {}", r.learnable_synapses);
    println!("fixed synapses     {}", r.fixed_synapses);
    println!("{:>10} {:>22}", "n_patts", "bound per input bit");
    for (n, b) in &r.per_input_bit {
        println!("{n:>10} {b:>22.6}");
    }
    Ok(ExitCode::SUCCESS)
}

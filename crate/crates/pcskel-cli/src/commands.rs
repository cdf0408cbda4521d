//! Subcommand implementations and their argument structs.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use serde::Deserialize;

use pcskel::ci::{population_correlation, sample_correlation};
use pcskel::metrics::{run_benchmark_with_workers, write_benchmark_csv};
use pcskel::sim::simulate as run_simulation;
use pcskel::{
    pc_skeleton, BenchConfig, CiDecider, CiError, MetricsError, PcConfig, PcError, SimConfig,
    SimError,
};

use crate::input;
use crate::manifest::RunManifest;
use crate::CliError;

#[derive(Args)]
pub struct EstimateArgs {
    /// Dataset CSV: one row per observation, optional header
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Significance level for the independence tests, in (0, 1)
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Cap on the conditioning-set size (default: min(p - 2, n - 5))
    #[arg(long, value_name = "INT")]
    pub m_max: Option<usize>,
    /// Output path for the edge list (tab-separated, 1-indexed, i < j)
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
    /// Optional path for a JSON run manifest
    #[arg(long, value_name = "FILE")]
    pub json: Option<PathBuf>,
}

pub fn estimate(args: &EstimateArgs) -> Result<(), CliError> {
    let start = Instant::now();
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(CliError::Param(format!(
            "alpha must lie strictly between 0 and 1, got {}",
            args.alpha
        )));
    }
    let dataset = input::read_dataset_csv(&args.input)?;
    if dataset.p() < 2 {
        return Err(CliError::Input(format!(
            "{}: need at least 2 columns, got {}",
            args.input.display(),
            dataset.p()
        )));
    }
    if dataset.n() < 5 {
        return Err(CliError::Input(format!(
            "{}: need at least 5 observations, got {}",
            args.input.display(),
            dataset.n()
        )));
    }
    let corr = sample_correlation(&dataset).map_err(ci_error)?;
    let decider = CiDecider::sample_test(corr, dataset.n(), args.alpha).map_err(ci_error)?;
    let config = PcConfig { m_max: args.m_max };
    let result = pc_skeleton(dataset.p(), &decider, &config).map_err(pc_error)?;
    input::write_file(&args.output, &result.skeleton.to_edge_list())?;
    if let Some(path) = &args.json {
        let mut manifest = RunManifest::new("estimate", start.elapsed().as_secs_f64());
        manifest.input = Some(args.input.display().to_string());
        manifest.output = Some(args.output.display().to_string());
        manifest.alpha = Some(args.alpha);
        manifest.m_max = args.m_max;
        manifest.effective_m_max = result.effective_m_max;
        manifest.m_reach = Some(result.m_reach);
        manifest.tests_total = Some(result.log.tests_performed());
        manifest.tests_per_level = Some(result.log.per_level().to_vec());
        input::write_file(path, &manifest.to_json())?;
    }
    Ok(())
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Number of vertices
    #[arg(long)]
    pub p: usize,
    /// Number of observations
    #[arg(long)]
    pub n: usize,
    /// Edge probability in (0, 1); the expected degree is s(p - 1)
    #[arg(long, allow_negative_numbers = true)]
    pub s: f64,
    /// Master RNG seed
    #[arg(long)]
    pub seed: u64,
    /// Output CSV for the sampled observations (no header)
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
    /// Output edge list for the true skeleton
    #[arg(long, value_name = "FILE")]
    pub truth: PathBuf,
    /// Optional output for the weight matrix (p lines of p reals)
    #[arg(long, value_name = "FILE")]
    pub weights: Option<PathBuf>,
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let config = SimConfig {
        p: args.p,
        s: args.s,
        n: args.n,
        seed: args.seed,
    };
    let (dag, dataset) = run_simulation(&config).map_err(sim_error)?;
    let mut csv = Vec::new();
    dataset
        .write_csv(&mut csv, false)
        .expect("writing to memory cannot fail");
    let csv = String::from_utf8(csv).expect("csv output is ascii");
    input::write_file(&args.data, &csv)?;
    input::write_file(&args.truth, &dag.skeleton().to_edge_list())?;
    if let Some(path) = &args.weights {
        input::write_file(path, &input::format_weights(&dag))?;
    }
    Ok(())
}

#[derive(Args)]
pub struct BenchmarkArgs {
    /// Grid JSON file: an array of {"p", "n", "s", "alpha"} objects
    #[arg(long, value_name = "FILE")]
    pub grid: PathBuf,
    /// Replicates per grid cell (at least 2, so standard errors exist)
    #[arg(long, default_value_t = 50)]
    pub replicates: usize,
    /// Master RNG seed
    #[arg(long)]
    pub seed: u64,
    /// Output CSV path
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Worker threads for the replicate pool (default: one per core)
    #[arg(long, value_name = "INT")]
    pub workers: Option<usize>,
}

/// One grid cell as it appears in the JSON file.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridEntry {
    p: usize,
    n: usize,
    s: f64,
    alpha: f64,
}

pub fn benchmark(args: &BenchmarkArgs) -> Result<(), CliError> {
    let text = input::read_file(&args.grid)?;
    let entries: Vec<GridEntry> = serde_json::from_str(&text)
        .map_err(|err| CliError::Param(format!("invalid grid {}: {err}", args.grid.display())))?;
    let grid: Vec<BenchConfig> = entries
        .iter()
        .map(|e| BenchConfig {
            p: e.p,
            n: e.n,
            s: e.s,
            alpha: e.alpha,
        })
        .collect();
    let rows = run_benchmark_with_workers(&grid, args.replicates, args.seed, args.workers)
        .map_err(metrics_error)?;
    let mut csv = Vec::new();
    write_benchmark_csv(&rows, &mut csv).expect("writing to memory cannot fail");
    input::write_file(
        &args.out,
        &String::from_utf8(csv).expect("csv output is ascii"),
    )?;
    Ok(())
}

#[derive(Args)]
pub struct OracleArgs {
    /// Weight-matrix file: p lines of p space-separated reals
    #[arg(long, value_name = "FILE")]
    pub truth: PathBuf,
    /// Cap on the conditioning-set size (default: unbounded)
    #[arg(long, value_name = "INT")]
    pub m_max: Option<usize>,
    /// Output path for the edge list
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
}

pub fn oracle(args: &OracleArgs) -> Result<(), CliError> {
    let dag = input::read_weights_file(&args.truth)?;
    if dag.p() < 2 {
        // A single vertex admits no edges; skip the search.
        return input::write_file(&args.output, &dag.skeleton().to_edge_list());
    }
    let corr = population_correlation(&dag);
    let decider = CiDecider::population_oracle(corr);
    let config = PcConfig { m_max: args.m_max };
    let result = pc_skeleton(dag.p(), &decider, &config).map_err(pc_error)?;
    input::write_file(&args.output, &result.skeleton.to_edge_list())
}

/// Exit taxonomy for test-stage failures: zero variance is a data problem,
/// range violations are parameter problems, everything else an input problem.
fn ci_error(err: CiError) -> CliError {
    match err {
        CiError::ZeroVariance { .. } => CliError::Data(err.to_string()),
        CiError::BadAlpha { .. } | CiError::QuantileOutOfRange { .. } => {
            CliError::Param(err.to_string())
        }
        _ => CliError::Input(err.to_string()),
    }
}

fn pc_error(err: PcError) -> CliError {
    match err {
        PcError::MMaxTooLarge { .. } => CliError::Param(err.to_string()),
        PcError::Ci(inner) => ci_error(inner),
        _ => CliError::Input(err.to_string()),
    }
}

fn sim_error(err: SimError) -> CliError {
    CliError::Param(err.to_string())
}

fn metrics_error(err: MetricsError) -> CliError {
    match err {
        MetricsError::EmptyGrid
        | MetricsError::BadGridEntry { .. }
        | MetricsError::TooFewReplicates { .. } => CliError::Param(err.to_string()),
        MetricsError::Replicate { .. } => CliError::Data(err.to_string()),
        _ => CliError::Input(err.to_string()),
    }
}
